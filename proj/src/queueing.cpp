#include "acisim/queueing.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace acisim {

PacketBatch sample_arrivals(double lambda_bps, double slot_len_s, Bits packet_size, Slot now, StreamRng& rng) {
    PacketBatch batch{now, packet_size, 0};
    const double mean = lambda_bps * slot_len_s / static_cast<double>(packet_size);
    if (mean <= 0.0) return batch;
    std::poisson_distribution<std::int64_t> dist(mean);
    batch.count = dist(rng);
    return batch;
}

Bits service_amount(Bits backlog, Bits mu_slot, bool eligible) {
    if (!eligible) return 0;
    return std::min(backlog, mu_slot);
}

void DelayHistogram::record(Slot delay, std::int64_t count) {
    if (delay < 0) throw std::logic_error("negative packet delay");
    if (count <= 0) return;
    const auto idx = static_cast<std::size_t>(delay);
    if (idx >= counts_.size()) counts_.resize(idx + 1, 0);
    counts_[idx] += count;
    total_ += count;
    sum_ += static_cast<long double>(delay) * count;
}

void DelayHistogram::merge(const DelayHistogram& other) {
    if (other.counts_.size() > counts_.size()) counts_.resize(other.counts_.size(), 0);
    for (std::size_t i = 0; i < other.counts_.size(); ++i) counts_[i] += other.counts_[i];
    total_ += other.total_;
    sum_ += other.sum_;
}

double DelayHistogram::mean() const {
    if (total_ == 0) throw std::domain_error("delay histogram is empty");
    return static_cast<double>(sum_ / total_);
}

Slot DelayHistogram::max() const {
    if (total_ == 0) throw std::domain_error("delay histogram is empty");
    return static_cast<Slot>(counts_.size()) - 1;
}

Slot DelayHistogram::order_statistic(std::int64_t k) const {
    std::int64_t seen = 0;
    for (std::size_t d = 0; d < counts_.size(); ++d) {
        seen += counts_[d];
        if (seen > k) return static_cast<Slot>(d);
    }
    return static_cast<Slot>(counts_.size()) - 1;
}

double DelayHistogram::quantile(double q) const {
    if (total_ == 0) throw std::domain_error("delay histogram is empty");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile must lie in [0, 1]");
    const double h = static_cast<double>(total_ - 1) * q;
    const auto lo = static_cast<std::int64_t>(std::floor(h));
    const auto hi = static_cast<std::int64_t>(std::ceil(h));
    const double a = static_cast<double>(order_statistic(lo));
    if (hi == lo) return a;
    const double b = static_cast<double>(order_statistic(hi));
    return a + (h - static_cast<double>(lo)) * (b - a);
}

double DelayHistogram::cdf(Slot d) const {
    if (total_ == 0) throw std::domain_error("delay histogram is empty");
    if (d < 0) return 0.0;
    std::int64_t seen = 0;
    const auto last = std::min(static_cast<std::size_t>(d) + 1, counts_.size());
    for (std::size_t i = 0; i < last; ++i) seen += counts_[i];
    return static_cast<double>(seen) / static_cast<double>(total_);
}

void QueueState::advance(Bits departed, const PacketBatch& arrived, Slot now, const DelaySink& sink) {
    if (departed < 0 || departed > backlog_) {
        throw std::logic_error("departed bits exceed backlog");
    }
    Bits remaining = departed;
    while (remaining > 0) {
        PacketBatch& head = ledger_.front();
        const Bits head_left = head.size_bits - head_consumed_;
        if (remaining < head_left) {
            head_consumed_ += remaining;
            remaining = 0;
            break;
        }
        // Head packet completes; then as many whole packets of the batch as fit.
        remaining -= head_left;
        std::int64_t done = 1;
        const std::int64_t more = std::min(head.count - 1, remaining / head.size_bits);
        done += more;
        remaining -= more * head.size_bits;
        sink.record(head.arrival_slot, now, done);
        packets_departed_ += done;
        head.count -= done;
        head_consumed_ = 0;
        if (head.count == 0) ledger_.pop_front();
    }
    backlog_ -= departed;
    departed_total_ += departed;

    if (arrived.count > 0) {
        if (!ledger_.empty() && ledger_.back().arrival_slot > arrived.arrival_slot) {
            throw std::logic_error("arrival slots must be nondecreasing");
        }
        if (!ledger_.empty() && ledger_.back().arrival_slot == arrived.arrival_slot &&
            ledger_.back().size_bits == arrived.size_bits) {
            ledger_.back().count += arrived.count;
        } else {
            ledger_.push_back(arrived);
        }
        backlog_ += arrived.total_bits();
        arrived_total_ += arrived.total_bits();
    }
}

Slot QueueState::hol_age(Slot now) const {
    if (ledger_.empty()) return 0;
    return now - ledger_.front().arrival_slot;
}

} // namespace acisim
