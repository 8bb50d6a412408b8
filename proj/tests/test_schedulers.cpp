#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <optional>
#include <vector>

#include "acisim/rng.hpp"
#include "acisim/schedulers.hpp"

using namespace acisim;

namespace {

constexpr double kDt = 0.01;

/// Owns the arrays a Snapshot points into.
struct Scene {
    std::vector<Bits> q;
    std::vector<double> r;
    std::vector<double> age;
    std::vector<std::optional<double>> tau;
    std::vector<double> chi;
    std::optional<int> current;

    Snapshot snap() const { return Snapshot{q, r, age, tau, chi, current, kDt}; }
};

Scene two_queue(Bits q0, Bits q1) {
    // Server on queue 0; queue 1 is 3 slots away with affinity 0.5.
    return Scene{{q0, q1}, {1e9, 1e9}, {5.0, 9.0}, {0.0, 3.0}, {1.0, 0.5}, 0};
}

} // namespace

TEST_CASE("MaxWeight picks argmax Q mu with lowest-index ties") {
    const std::vector<Bits> q = {10, 30, 30, 5};
    const std::vector<double> mu = {1.0, 1.0, 1.0, 5.0};
    const Decision d = mw_select(q, mu, kDt, 0);
    CHECK(d.action == Decision::Action::Switch);
    CHECK(d.target == 1);
    CHECK(d.dwell == 1);
    CHECK(mw_select(q, mu, kDt, 1).action == Decision::Action::Stay);
    const std::vector<Bits> empty = {0, 0, 0, 0};
    CHECK(mw_select(empty, mu, kDt, 2).action == Decision::Action::Stay);
    CHECK(mw_select(empty, mu, kDt, 2).target == 2);
    CHECK(mw_select(empty, mu, kDt, std::nullopt).action == Decision::Action::Idle);
}

TEST_CASE("ACI score pieces") {
    CHECK(estimated_frame_bits(1e9, 3, kDt, 0.002) == doctest::Approx(3 * 1e9 * 0.008));
    CHECK(amortized_goodput(3e7, 3.0, 3, kDt) == doctest::Approx(3e7 / 0.06));
    CHECK(switching_modulator(3.0, 0.5, 1.0, 1.0) == doctest::Approx(1.5 / 4.0));
    CHECK(switching_modulator(0.0, 1.0, 1.0, 1.0) == doctest::Approx(2.0));
}

TEST_CASE("ACI stays below the switching threshold and switches above it") {
    PolicyConfig cfg;
    // f_ii = 2, f_ij = 1.5 / 4, equal rates, tau = 3, L = 3:
    // Theta = 100 * 2 / 0.375 * (1 + 3/3) = 1066.67.
    const double theta = starvation_threshold(100, 1e9, 1e9, 2.0, 0.375, 3.0, 3);
    CHECK(theta == doctest::Approx(3200.0 / 3.0));
    const auto below = two_queue(100, 1060);
    const auto above = two_queue(100, 1070);
    CHECK(aci_select(below.snap(), cfg).action == Decision::Action::Stay);
    const Decision d = aci_select(above.snap(), cfg);
    CHECK(d.action == Decision::Action::Switch);
    CHECK(d.target == 1);
    CHECK(d.dwell == 3);
    // Score of the switch candidate: Q * goodput * modulator.
    CHECK(d.scores[1] == doctest::Approx(1070.0 * (3e9 * kDt / (6 * kDt)) * 0.375));
}

TEST_CASE("beta = 0 and gamma = 0 lower the switching threshold") {
    // Full ACI: Theta = 3200/3 (see above). beta = 0: f_ij = 1.5, Theta = 100 * 2 / 1.5 * 2 = 266.67.
    // gamma = 0: f_ii = 1, f_ij = 1 / 4, Theta = 100 * 1 / 0.25 * 2 = 800.
    PolicyConfig full;
    PolicyConfig no_penalty;
    no_penalty.beta = 0.0;
    PolicyConfig no_affinity;
    no_affinity.gamma = 0.0;
    const auto s300 = two_queue(100, 300);
    CHECK(aci_select(s300.snap(), full).action == Decision::Action::Stay);
    CHECK(aci_select(s300.snap(), no_penalty).action == Decision::Action::Switch);
    CHECK(aci_select(two_queue(100, 260).snap(), no_penalty).action == Decision::Action::Stay);
    const auto s900 = two_queue(100, 900);
    CHECK(aci_select(s900.snap(), full).action == Decision::Action::Stay);
    CHECK(aci_select(s900.snap(), no_affinity).action == Decision::Action::Switch);
    CHECK(aci_select(two_queue(100, 790).snap(), no_affinity).action == Decision::Action::Stay);
}

TEST_CASE("starvation threshold oracle and limits") {
    CHECK(starvation_threshold(100, 1.0, 1.0, 2.0, 1.0, 3.0, 3) == doctest::Approx(400.0));
    CHECK(std::isinf(starvation_threshold(100, 1.0, 0.0, 2.0, 1.0, 3.0, 3)));
}

TEST_CASE("unavailable targets are never chosen") {
    PolicyConfig cfg;
    auto s = two_queue(0, 1'000'000);
    s.tau[1] = std::nullopt;
    CHECK(aci_select(s.snap(), cfg).action == Decision::Action::Idle);
    CHECK(aci_pa_select(s.snap(), cfg).target == 0);
}

TEST_CASE("ACI-A uses head-of-line age; ACI-PA ignores channel and switching") {
    PolicyConfig cfg;
    auto s = two_queue(1000, 1000);
    s.age = {10.0, 10.0};
    CHECK(aci_a_select(s.snap(), cfg).target == 0);  // equal ages: the cheaper stay wins
    s.age = {10.0, 11.0};
    CHECK(aci_pa_select(s.snap(), cfg).target == 1);
    CHECK(aci_pa_select(s.snap(), cfg).action == Decision::Action::Switch);
    s.r[1] = 0.0;
    CHECK(aci_pa_select(s.snap(), cfg).target == 1);
    CHECK(select(PolicyKind::ACIAge, s.snap(), cfg).target == 0);
}

TEST_CASE("early halt triggers") {
    const EarlyHaltThresholds t;
    std::vector<double> rates = {1.0, 0.0, 0.0};
    FrameProgress p{100, rates, 1.0, 1.0, 0.0};
    CHECK(early_halt_check(p, t));  // two outage slots in a row
    rates = {1.0, 0.0};
    p.realized_rates = rates;
    CHECK_FALSE(early_halt_check(p, t));  // mean 0.5 is not below 0.5 * forecast
    p.forecast_rate = 1.2;
    CHECK(early_halt_check(p, t));  // shortfall
    p.forecast_rate = 1.0;
    p.best_other_score = 2.5;
    CHECK(early_halt_check(p, t));  // dominated
    p.best_other_score = 0.0;
    p.backlog = 0;
    CHECK(early_halt_check(p, t));  // drained
}

TEST_CASE("zeta bound") {
    CHECK(zeta_bound(1.0, 1.0, 10.0) == doctest::Approx(1.0 / 22.0));
    CHECK(zeta_bound(0.0, 0.0, 10.0) == 1.0);
    CHECK_THROWS(zeta_bound(1.0, 1.0, -1.0));
}

TEST_CASE("ACI choices satisfy the zeta guarantee on random epochs") {
    PolicyConfig cfg;
    const double tau_max = 400.0;
    const double zeta = zeta_bound(cfg.beta, cfg.gamma, tau_max);
    StreamRng rng(2024, StreamPurpose::MonteCarlo);
    for (int trial = 0; trial < 5000; ++trial) {
        Scene s;
        const int n = 6;
        s.current = static_cast<int>(rng() % n);
        for (int i = 0; i < n; ++i) {
            s.q.push_back(static_cast<Bits>(rng() % 1'000'000));
            s.r.push_back(rng.uniform() < 0.1 ? 0.0 : 2.5e9 * rng.uniform());
            s.age.push_back(static_cast<double>(rng() % 500));
            s.tau.push_back(i == *s.current ? std::optional<double>(0.0)
                                            : (rng.uniform() < 0.1 ? std::nullopt
                                                                   : std::optional<double>(1.0 + std::floor(tau_max * rng.uniform()))));
            s.chi.push_back(i == *s.current ? 1.0 : rng.uniform());
        }
        const Snapshot snap = s.snap();
        const Decision d = aci_select(snap, cfg);
        std::vector<double> u(s.q.begin(), s.q.end());
        const auto cands = aci_candidates(snap, cfg, u);
        CHECK(zeta_audit(cands, d.target, zeta).ok);
    }
}

TEST_CASE("zeta audit flags a bad choice") {
    std::vector<CandidateScore> c(2);
    c[0] = {1.0, 1.0, 1.0, true};
    c[1] = {100.0, 1.0, 1.0, true};
    const ZetaAudit a = zeta_audit(c, 0, 0.5);
    CHECK_FALSE(a.ok);
    CHECK(a.best_unscaled == doctest::Approx(100.0));
    CHECK(a.margin == doctest::Approx(1.0 - 50.0));
    CHECK(zeta_audit(c, -1, 0.5).ok);
}

TEST_CASE("policy names round-trip") {
    for (auto p : {PolicyKind::MaxWeight, PolicyKind::ACI, PolicyKind::ACIAge, PolicyKind::ACIPureAge})
        CHECK(parse_policy(to_string(p)) == p);
    CHECK_THROWS(parse_policy("MWX"));
}
