#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <stdexcept>

#include "acisim/queueing.hpp"

using namespace acisim;

TEST_CASE("service is min(Q, mu) when eligible, else zero") {
    CHECK(service_amount(100, 30, true) == 30);
    CHECK(service_amount(20, 30, true) == 20);
    CHECK(service_amount(100, 30, false) == 0);
    CHECK(service_amount(0, 30, true) == 0);
}

TEST_CASE("queue update is (Q - D)+ + A and departures never exceed the backlog") {
    QueueState q(1.0);
    q.advance(0, PacketBatch{0, 100, 3}, 0);
    CHECK(q.backlog() == 300);
    q.advance(120, PacketBatch{1, 100, 1}, 1);
    CHECK(q.backlog() == 280);
    CHECK(q.head_consumed() == 20);
    CHECK_THROWS_AS(q.advance(281, PacketBatch{}, 2), std::logic_error);
    CHECK(q.arrived_total() == q.departed_total() + q.backlog());
}

TEST_CASE("ledger delay: packet arriving in slot 2 and leaving in slot 10 waits 8 slots") {
    DelayHistogram h;
    const DelaySink sink{&h, 0};
    QueueState q(1.0);
    q.advance(0, PacketBatch{2, 100, 1}, 2, sink);
    CHECK(q.hol_age(5) == 3);
    q.advance(60, PacketBatch{}, 9, sink);  // partial service: no departure yet
    CHECK(h.empty());
    q.advance(40, PacketBatch{}, 10, sink);
    REQUIRE(h.count() == 1);
    CHECK(h.max() == 8);
    CHECK(q.backlog() == 0);
    CHECK(q.hol_age(11) == 0);
}

TEST_CASE("warm-up arrivals depart but are not recorded") {
    DelayHistogram h;
    const DelaySink sink{&h, 5};
    QueueState q(1.0);
    q.advance(0, PacketBatch{3, 10, 1}, 3, sink);
    q.advance(0, PacketBatch{6, 10, 1}, 6, sink);
    q.advance(20, PacketBatch{}, 7, sink);
    CHECK(h.count() == 1);
    CHECK(h.max() == 1);
    CHECK(q.packets_departed() == 2);
}

TEST_CASE("delay histogram order statistics") {
    DelayHistogram h;
    for (Slot d : {1, 2, 3, 4}) h.record(d);
    CHECK(h.quantile(0.5) == doctest::Approx(2.5));  // median of {1,2,3,4}
    CHECK(h.quantile(0.0) == doctest::Approx(1.0));
    CHECK(h.quantile(1.0) == doctest::Approx(4.0));
    CHECK(h.mean() == doctest::Approx(2.5));
    CHECK(h.cdf(2) == doctest::Approx(0.5));
    DelayHistogram g;
    g.record(10, 4);
    h.merge(g);
    CHECK(h.count() == 8);
    CHECK(h.max() == 10);
    CHECK(h.quantile(0.5) == doctest::Approx(7.0));  // between 4 and 10
}

TEST_CASE("Poisson arrivals have mean lambda dt / packet size") {
    // lambda dt / size = 1e6 * 0.01 / 1000 = 10 packets per slot.
    double sum = 0.0;
    const int n = 20000;
    for (int t = 0; t < n; ++t) {
        StreamRng rng(9, StreamPurpose::Arrivals, 0, static_cast<std::uint64_t>(t));
        const auto b = sample_arrivals(1e6, 0.01, 1000, t, rng);
        CHECK(b.arrival_slot == t);
        CHECK(b.size_bits == 1000);
        sum += static_cast<double>(b.count);
    }
    // SE = sqrt(10 / n) ~ 0.022; allow 4 SE.
    CHECK(std::abs(sum / n - 10.0) < 0.09);
}
