#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numeric>

#include "madm/errors.hpp"
#include "madm/simulator.hpp"
#include "oracles.hpp"

using namespace madm;
using namespace madm::sim;

namespace {

double total_rate(const std::vector<Event>& ev) {
    double s = 0;
    for (const auto& e : ev) s += e.rate;
    return s;
}

double mean(const std::vector<long>& xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

TEST_SUITE("simulator") {

TEST_CASE("enabled events examples") {
    const auto mp = ModelParams::make(2.0 / 3.0, 0.6);
    const auto one = enabled_events(Configuration::from_positions({0}), mp, 5);
    REQUIRE(one.size() == 2);
    CHECK(one[0] == Event{0, Direction::Right, 1, 0.6});
    CHECK(one[1].dir == Direction::Left);
    CHECK(one[1].rate == doctest::Approx(0.4));

    // p = 0.6, q = 0.4, tau = 0.5
    const auto two = enabled_events(Configuration::from_positions({0, 0}), mp, 5);
    CHECK(two.size() == 4);
    CHECK(total_rate(two) == doctest::Approx(0.6 + 0.4 + 0.4 + 0.4 / 3));

    const auto pile = enabled_events(Configuration::pile_at(0), mp, 1);
    REQUIRE(pile.size() == 2);
    CHECK(pile[0].n == kAll);
    CHECK(pile[0].rate == doctest::Approx(0.3));
    CHECK(pile[1].n == 1);
    CHECK(pile[1].rate == doctest::Approx(0.4));
}

TEST_CASE("apply event examples") {
    const auto r = apply_event(Configuration::from_positions({0}), {0, Direction::Right, 1, 0});
    CHECK(r.positions() == std::vector<long>{1});
    const auto l = apply_event(Configuration::from_positions({0, 0, 0}), {0, Direction::Left, 2, 0});
    CHECK(l.sites.at(-1).count == 2);
    CHECK(l.sites.at(0).count == 1);
    auto c = Configuration::pile_at(0);
    c.sites[-3] = Occupancy::finite(2);
    const auto moved = apply_event(c, {0, Direction::Right, kAll, 0});
    CHECK(moved.sites.at(1).infinite);
    CHECK(moved.sites.count(0) == 0);
    CHECK(moved.sites.at(-3).count == 2);
    auto merge = Configuration::pile_at(1);
    merge.sites[0] = Occupancy::finite(3);
    const auto merged = apply_event(merge, {0, Direction::Right, 2, 0});
    CHECK(merged.sites.at(1).infinite);
    CHECK(merged.sites.at(0).count == 1);
    CHECK_THROWS_AS(apply_event(Configuration::from_positions({0}), {0, Direction::Left, 2, 0}), ValidationError);
}

TEST_CASE("step rejects an empty system") {
    ReplicaRng rng(1, 0);
    CHECK_THROWS_AS(step(Configuration{}, ModelParams::one_param(0.6), rng, 5), ValidationError);
}

TEST_CASE("finite mode conserves particles and pile mode keeps the infinite site") {
    const auto mp = ModelParams::one_param(0.6);
    ReplicaRng rng(3, 0);
    auto c = Configuration::from_positions({0, 0, 1, 3});
    for (int k = 0; k < 2000; ++k) {
        c = step(c, mp, rng, 5).first;
        REQUIRE(c.particle_total() == 4);
        REQUIRE(c.valid());
    }
    auto p = Configuration::pile_at(0);
    const int peel = peel_depth(mp);
    for (int k = 0; k < 2000; ++k) {
        p = step(p, mp, rng, peel).first;
        REQUIRE(p.valid());
        REQUIRE(p.has_pile());
    }
}

TEST_CASE("run_replica at t = 0 returns the initial positions") {
    const auto cfg = SimConfig::finite(ModelParams::one_param(0.6), {2, -1, 0}, 0.0);
    CHECK(run_replica(cfg, 0) == std::vector<long>{-1, 0, 2});
    const auto st = SimConfig::step_initial(ModelParams::one_param(0.6), 0.0, 16);
    CHECK(run_replica(st, 5) == std::vector<long>(16, 0));
}

TEST_CASE("replicas are deterministic and independent of scheduling") {
    auto cfg = SimConfig::finite(ModelParams::one_param(0.6), {0, 0, 0}, 3.0);
    cfg.replicas = 64;
    cfg.seed = 99;
    cfg.threads = 1;
    const auto a = sample_xm(cfg, 2);
    cfg.threads = 4;
    const auto b = sample_xm(cfg, 2);
    CHECK(a == b);
    CHECK(run_replica(cfg, 17) == run_replica(cfg, 17));
    cfg.seed = 100;
    CHECK(sample_xm(cfg, 2) != a);
}

TEST_CASE("single particle mean drift") {
    const auto mp = ModelParams::make(2.0 / 3.0, 0.6);
    auto cfg = SimConfig::finite(mp, {0}, 10.0);
    cfg.replicas = 100000;
    cfg.threads = 4;
    const auto xs = sample_xm(cfg, 1);
    const double mu = mean(xs);
    double var = 0;
    for (long x : xs) var += (x - mu) * (x - mu);
    const double se = std::sqrt(var / (xs.size() - 1) / xs.size());
    CHECK(std::fabs(mu - 2.0) < 3 * se);
}

TEST_CASE("single particle law is Skellam (chi-square at the 1% level)") {
    const auto mp = ModelParams::make(2.0 / 3.0, 0.6);
    auto cfg = SimConfig::finite(mp, {0}, 1.0);
    cfg.replicas = 100000;
    cfg.threads = 4;
    const auto xs = sample_xm(cfg, 1);
    // bins: (-inf, -3], -2, ..., 3, [4, inf)
    std::vector<double> obs(8, 0), expect(8, 0);
    for (long x : xs) obs[std::clamp<long>(x, -3, 4) + 3] += 1;
    for (int b = 0; b < 8; ++b) {
        const long x = b - 3;
        const double hi = b == 7 ? 1.0 : oracle::skellam_cdf(x, 0.6, 0.4);
        const double lo = b == 0 ? 0.0 : oracle::skellam_cdf(x - 1, 0.6, 0.4);
        expect[b] = (hi - lo) * xs.size();
    }
    double chi2 = 0;
    for (int b = 0; b < 8; ++b) chi2 += (obs[b] - expect[b]) * (obs[b] - expect[b]) / expect[b];
    const double crit = boost::math::quantile(boost::math::chi_squared(7), 0.99);
    CHECK(chi2 < crit);
}

TEST_CASE("empirical CDF: Skellam agreement and the right edge") {
    const auto mp = ModelParams::make(2.0 / 3.0, 0.6);
    auto cfg = SimConfig::finite(mp, {0}, 2.0);
    cfg.replicas = 40000;
    cfg.threads = 4;
    const std::vector<long> grid{-4, -2, 0, 1, 3, 12};
    const auto e = empirical_cdf(cfg, 1, grid);
    for (size_t i = 0; i < grid.size(); ++i) {
        const double ref = oracle::skellam_cdf(grid[i], 1.2, 0.8);
        CHECK(std::fabs(e.values[i] - ref) <= 3 * e.stderrs[i] + 1.0 / cfg.replicas);
    }
    CHECK(e.values.back() == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("step mode: stable under n_big") {
    const auto mp = ModelParams::one_param(2.0 / 3.0);
    const std::vector<long> grid{-3, -2, -1, 0, 1, 2};
    auto a = SimConfig::step_initial(mp, 1.0, 32);
    auto b = SimConfig::step_initial(mp, 1.0, 64);
    a.replicas = b.replicas = 40000;
    a.threads = b.threads = 4;
    b.seed = 2;
    const auto ea = empirical_cdf(a, 1, grid), eb = empirical_cdf(b, 1, grid);
    for (size_t i = 0; i < grid.size(); ++i) {
        const double joint = std::hypot(ea.stderrs[i], eb.stderrs[i]);
        CHECK(std::fabs(ea.values[i] - eb.values[i]) <= 3 * joint + 1e-4);
    }
}

TEST_CASE("Fenwick engine agrees with the reference engine in law") {
    const auto mp = ModelParams::one_param(0.6);
    const std::vector<long> grid{-2, -1, 0, 1, 2, 3};
    auto fast = SimConfig::finite(mp, {0, 0, 1}, 2.0);
    fast.replicas = 20000;
    fast.threads = 4;
    auto ref = fast;
    ref.reference_engine = true;
    ref.seed = 5;
    const auto ef = empirical_cdf(fast, 2, grid), er = empirical_cdf(ref, 2, grid);
    for (size_t i = 0; i < grid.size(); ++i)
        CHECK(std::fabs(ef.values[i] - er.values[i]) <= 3 * std::hypot(ef.stderrs[i], er.stderrs[i]) + 1e-4);
}

TEST_CASE("configuration validation") {
    const auto mp = ModelParams::one_param(0.6);
    auto cfg = SimConfig::step_initial(mp, 1.0, 16);
    CHECK_NOTHROW(cfg.validate());
    cfg.replicas = 10;
    CHECK_THROWS_AS(sample_xm(cfg, 5), ValidationError);  // n_big below max(4m, 16)
    auto neg = SimConfig::finite(mp, {0}, -1.0);
    CHECK_THROWS_AS(neg.validate(), ValidationError);
    const auto j = SimConfig::step_initial(mp, 1.0, 16).to_json();
    CHECK(j.contains("seed"));
}

TEST_CASE("cdf_from_samples") {
    const auto e = cdf_from_samples({0, 1, 1, 3}, {-1, 1, 5});
    CHECK(e.values == std::vector<double>{0.0, 0.75, 1.0});
    CHECK(e.stderrs[1] == doctest::Approx(std::sqrt(0.75 * 0.25 / 4)));
}

}
