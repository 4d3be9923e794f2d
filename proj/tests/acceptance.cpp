#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "madm/asymptotics.hpp"
#include "madm/exact.hpp"
#include "madm/fredholm.hpp"
#include "madm/model.hpp"
#include "madm/parallel.hpp"
#include "madm/simulator.hpp"
#include "oracles.hpp"

using namespace madm;

namespace {

// Tolerances, pinned.
constexpr double kCombinatoricsRel = 1e-12;
constexpr double kContourVsSkellam = 1e-8;
constexpr double kMasterVsSkellam = 1e-9;
constexpr double kStderrMultiple = 3.0;
constexpr double kFiniteOracle = 1e-6;
constexpr double kProductIdentity = 1e-8;
constexpr double kEquivalence = 1e-8;
constexpr double kCrossFormula = 1e-6;
constexpr double kNodeDoubling = 1e-8;
constexpr double kF2SelfConvergence = 1e-10;
constexpr double kF2Tail = 1e-8;
constexpr double kAiryResidual = 1e-10;
constexpr double kKSBound = 0.1;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

struct Context {
    int threads = 1;
    // largest change of any determinant value of criteria 4-7 under node doubling
    std::map<int, double> doubling;
};

// Change of det(I - lambda K) (two-parameter) and det(I - mu J) (one-parameter)
// under M -> 2M at three points of the outer contour.
const double kOuterAngles[] = {0.0, M_PI / 2, M_PI};

double two_param_det_change(const QueryPoint& qp, const ModelParams& mp) {
    fred::KernelParams kp;
    kp.x = qp.x;
    kp.t = qp.t;
    kp.m = qp.m;
    kp.params = mp;
    const fred::TwoParamQuad q;
    const auto a = fred::two_param_matrix(kp, fred::two_param_contour(mp, q, q.kernel_nodes));
    const auto b = fred::two_param_matrix(kp, fred::two_param_contour(mp, q, 2 * q.kernel_nodes));
    double change = 0;
    for (double ang : kOuterAngles) {
        const cplx lam = std::polar(q.lambda_radius_factor * std::pow(mp.tau, -qp.m), ang);
        change = std::max(change, std::abs(fred::det_i_minus(a, lam) - fred::det_i_minus(b, lam)));
    }
    return change;
}

double one_param_det_change(const QueryPoint& qp, const ModelParams& mp) {
    fred::KernelParams kp;
    kp.x = qp.x;
    kp.t = qp.t;
    kp.m = qp.m;
    kp.params = mp;
    auto c = fred::OneParamContours::defaults(mp.tau);
    c.mu_nodes = fred::OneParamContours::auto_mu_nodes(c.mu_radius);
    const fred::OneParamOperator a(kp, c);
    c.nodes *= 2;
    const fred::OneParamOperator b(kp, c);
    double change = 0;
    for (double ang : kOuterAngles) {
        const cplx mu = std::polar(c.mu_radius, ang);
        change = std::max(change, std::abs(fred::det_i_minus(a.matrix(mu), mu) - fred::det_i_minus(b.matrix(mu), mu)));
    }
    return change;
}

// 1: q-combinatorics
Outcome criterion1(Context&) {
    std::mt19937_64 gen(20261);
    std::uniform_real_distribution<double> ud(0.5 + 1e-9, 1.0 - 1e-9), pd(0.05, 0.95);
    std::uniform_int_distribution<int> nd(1, 20);
    double worst = 0;
    for (int draw = 0; draw < 200; ++draw) {
        const ModelParams mp = ModelParams::make(ud(gen), pd(gen));
        const int N = nd(gen);
        const auto rel = [&](double a, double b) { worst = std::max(worst, std::fabs(a - b) / std::fabs(b)); };
        rel(uv_bracket(N, mp), std::pow(mp.u, N - 1) * q_bracket(N, mp.tau));
        for (int m = 0; m <= N; ++m) {
            rel(uv_bracket_binomial(N, m, mp), std::pow(mp.u, m * (N - m)) * gaussian_binomial(N, m, mp.tau));
            if (m >= 1 && m < N)
                rel(gaussian_binomial(N, m, mp.tau),
                    gaussian_binomial(N - 1, m - 1, mp.tau) + std::pow(mp.tau, m) * gaussian_binomial(N - 1, m, mp.tau));
        }
    }
    return {worst < kCombinatoricsRel, fmt("max relative deviation %.2e over 200 draws (tol %.0e)", worst, kCombinatoricsRel)};
}

// 2: Skellam anchor
Outcome criterion2(Context& ctx) {
    const ModelParams mp = ModelParams::one_param(0.6);
    const double t = 1.0, mu1 = mp.p * t, mu2 = mp.q * t;
    std::vector<long> xs;
    for (long x = -5; x <= 5; ++x) xs.push_back(x);
    double dc = 0, dm = 0, z = 0;
    const auto master = exact::master_equation_cdf({0}, 1, xs, t, mp);
    auto cfg = sim::SimConfig::finite(mp, {0}, t);
    cfg.replicas = 100000;
    cfg.seed = 2;
    cfg.threads = ctx.threads;
    const auto mc = sim::empirical_cdf(cfg, 1, xs);
    for (size_t i = 0; i < xs.size(); ++i) {
        const double ref = oracle::skellam_cdf(xs[i], mu1, mu2);
        dc = std::max(dc, std::fabs(exact::contour_prob_finite({0}, 1, xs[i], t, mp).prob - ref));
        dm = std::max(dm, std::fabs(master.cdf[i] - ref));
        const double se = std::max(mc.stderrs[i], 1.0 / cfg.replicas);
        z = std::max(z, std::fabs(mc.values[i] - ref) / se);
    }
    const bool ok = dc < kContourVsSkellam && dm < kMasterVsSkellam && z < kStderrMultiple;
    return {ok, fmt("contour %.2e (tol %.0e), master %.2e (tol %.0e), Monte Carlo %.2f stderr (tol %.0f)", dc,
                    kContourVsSkellam, dm, kMasterVsSkellam, z, kStderrMultiple)};
}

// 3: contour formula vs master equation
Outcome criterion3(Context&) {
    const ModelParams mp = ModelParams::one_param(0.6);
    double worst = 0;
    for (int N : {2, 3}) {
        const std::vector<long> Y(N, 0);
        std::vector<long> xs;
        for (long x = -4; x <= 4; ++x) xs.push_back(x);
        for (int m : {1, 2}) {
            const auto master = exact::master_equation_cdf(Y, m, xs, 0.5, mp);
            for (size_t i = 0; i < xs.size(); ++i)
                worst = std::max(worst, std::fabs(exact::contour_prob_finite(Y, m, xs[i], 0.5, mp).prob - master.cdf[i]));
        }
    }
    return {worst < kFiniteOracle, fmt("max |contour - master| %.2e (tol %.0e)", worst, kFiniteOracle)};
}

// 4: product identity
Outcome criterion4(Context& ctx) {
    const ModelParams mp = ModelParams::one_param(2.0 / 3.0);
    fred::KernelParams kp;
    kp.x = 2;
    kp.t = 1.0;
    kp.params = mp;
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0, change = 0;
    for (int k = 0; k < 20; ++k) {
        const cplx lam = std::polar(std::sqrt(unit(gen)), 2 * M_PI * unit(gen));
        const auto r = fred::product_identity(kp, lam, 64);
        const cplx product = fred::finite_product(lam, mp.tau, 60);
        worst = std::max(worst, std::abs(r.lhs - product));
        change = std::max(change, std::abs(fred::product_identity(kp, lam, 128).lhs - r.lhs));
    }
    ctx.doubling[4] = change;
    return {worst < kProductIdentity,
            fmt("max |det(I - lambda K1) - prod_{k<=60}| %.2e at M = 64 (tol %.0e)", worst, kProductIdentity)};
}

// 5: contour equivalence
Outcome criterion5(Context& ctx) {
    const ModelParams mp = ModelParams::one_param(2.0 / 3.0);
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<long> xd(-3, 3);
    double worst = 0, diff_form = 0, change = 0;
    for (int k = 0; k < 10; ++k) {
        fred::KernelParams kp;
        kp.x = xd(gen);
        kp.t = 0.5 + 1.5 * unit(gen);
        kp.params = mp;
        const cplx lam = std::polar(std::sqrt(unit(gen)), 2 * M_PI * unit(gen));
        const auto r = fred::contour_equivalence(kp, lam);
        worst = std::max(worst, r.deviation);
        diff_form = std::max(diff_form, r.difference_deviation);
        fred::IdentityQuad q2;
        q2.xi_nodes *= 2;
        q2.eta_nodes *= 2;
        const auto r2 = fred::contour_equivalence(kp, lam, q2);
        change = std::max({change, std::abs(r2.lhs - r.lhs), std::abs(r2.rhs - r.rhs)});
    }
    ctx.doubling[5] = change;
    return {worst < kEquivalence,
            fmt("max |det(I - lambda K) - det(I - lambda K2)| %.2e (tol %.0e); the stated K2 - K1 form deviates by up to %.2e",
                worst, kEquivalence, diff_form)};
}

// 6: two-parameter formula at p = u vs one-parameter formula
Outcome criterion6(Context& ctx) {
    const ModelParams mp = ModelParams::one_param(1.0 / 1.6);  // tau = 0.6
    double worst = 0, change = 0, resid = 0;
    for (int m : {1, 2, 3})
        for (long x = -3; x <= 5; ++x) {
            const QueryPoint qp{m, 2.0, x};
            fred::TwoParamQuad tq;
            tq.threads = ctx.threads;
            fred::OneParamQuad oq;
            oq.threads = ctx.threads;
            oq.refine = false;  // doubling is checked on the determinants below
            const auto two = fred::prob_two_param(qp, mp, tq);
            const auto one = fred::prob_one_param(qp, mp, oq);
            worst = std::max(worst, std::fabs(two.prob - one.prob));
            change = std::max({change, two.refine_delta, two_param_det_change(qp, mp),
                               one_param_det_change(qp, mp)});
            resid = std::max({resid, two.imag_residual, one.imag_residual});
        }
    ctx.doubling[6] = change;
    return {worst < kCrossFormula,
            fmt("max |two-param - one-param| %.2e over 27 points (tol %.0e); max imaginary residual %.1e", worst,
                kCrossFormula, resid)};
}

// 7: one-parameter formula vs step-initial Monte Carlo
Outcome criterion7(Context& ctx) {
    const ModelParams mp = ModelParams::one_param(2.0 / 3.0);  // tau = 0.5
    const int m = 2;
    const double t = 2.0;
    std::vector<long> xs;
    for (long x = -3; x <= 5; ++x) xs.push_back(x);
    auto cfg = sim::SimConfig::step_initial(mp, t / mp.gamma, 40);
    cfg.replicas = 100000;
    cfg.seed = 7;
    cfg.threads = ctx.threads;
    const auto mc = sim::empirical_cdf(cfg, m, xs);
    double z = 0, change = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        fred::OneParamQuad oq;
        oq.threads = ctx.threads;
        const auto r = fred::prob_one_param({m, t, xs[i]}, mp, oq);
        change = std::max({change, r.refine_delta, one_param_det_change({m, t, xs[i]}, mp)});
        const double se = std::max(mc.stderrs[i], 1.0 / cfg.replicas);
        z = std::max(z, std::fabs(r.prob - mc.values[i]) / se);
    }
    ctx.doubling[7] = change;
    return {z < kStderrMultiple, fmt("max |formula - Monte Carlo| = %.2f stderr over x in -3..5 (tol %.0f)", z, kStderrMultiple)};
}

// 8: node doubling over the determinant values of 4-7
Outcome criterion8(Context& ctx) {
    for (int c = 4; c <= 7; ++c)
        if (!ctx.doubling.count(c)) return {false, fmt("criterion %d was not evaluated", c)};
    double worst = 0;
    std::string parts;
    for (const auto& [c, d] : ctx.doubling) {
        worst = std::max(worst, d);
        parts += fmt("%s%d: %.1e", parts.empty() ? "" : ", ", c, d);
    }
    return {worst < kNodeDoubling, fmt("max change under M -> 2M %.2e (tol %.0e) [%s]", worst, kNodeDoubling, parts.c_str())};
}

// 9: F2 engine
Outcome criterion9(Context&) {
    double self = 0;
    for (double s = -5; s <= 2.0 + 1e-9; s += 0.05) self = std::max(self, std::fabs(asym::f2(s, 40) - asym::f2(s, 80)));
    bool monotone = true;
    double prev = 0;
    for (double s = -8; s <= 6.0 + 1e-9; s += 0.1) {
        const double v = asym::f2(s);
        monotone = monotone && v >= prev - 1e-14 && v >= 0 && v <= 1;
        prev = v;
    }
    const double tail = asym::f2(6.0);
    double resid = 0;
    const double h = 1e-3;
    for (double x = -10; x <= 10 + 1e-9; x += 0.01) {
        const double second = (-asym::airy_ai_prime(x + 2 * h) + 8 * asym::airy_ai_prime(x + h) -
                               8 * asym::airy_ai_prime(x - h) + asym::airy_ai_prime(x - 2 * h)) /
                              (12 * h);
        resid = std::max(resid, std::fabs(second - x * asym::airy_ai(x)));
    }
    const bool ok = self < kF2SelfConvergence && monotone && tail > 1 - kF2Tail && resid < kAiryResidual;
    return {ok, fmt("|f2(s,40) - f2(s,80)| %.2e (tol %.0e), monotone %s, 1 - F2(6) = %.1e (tol %.0e), Airy ODE residual %.2e "
                    "(tol %.0e)",
                    self, kF2SelfConvergence, monotone ? "yes" : "no", 1 - tail, kF2Tail, resid, kAiryResidual)};
}

// 10: Tracy-Widom rendering. One sample set per t serves both conventions.
std::pair<Outcome, Outcome> criterion10(Context& ctx) {
    asym::TWOptions opt;
    opt.sigma = 0.25;
    opt.params = ModelParams::one_param(2.0 / 3.0);
    opt.replicas = 20000;
    opt.seed = 10;
    opt.threads = ctx.threads;
    std::map<double, std::vector<long>> samples;
    for (double t : {50.0, 200.0}) {
        opt.t = t;
        samples[t] = asym::tw_samples(opt);
    }
    const auto ks = [&](asym::Constants c, double t) {
        opt.t = t;
        opt.constants = c;
        return asym::tw_compare(samples[t], opt);
    };
    const auto stated50 = ks(asym::Constants::Stated, 50), stated200 = ks(asym::Constants::Stated, 200);
    const auto corr50 = ks(asym::Constants::Corrected, 50), corr200 = ks(asym::Constants::Corrected, 200);
    const auto line = [](const asym::TWComparison& a, const asym::TWComparison& b, const char* what) {
        const bool ok = b.ks_distance < kKSBound && b.ks_distance < a.ks_distance;
        return Outcome{ok, fmt("%s: KS %.4f at t = 50, %.4f at t = 200 (need < %.1f and decreasing); mean rescaled %.2f, %.2f",
                               what, a.ks_distance, b.ks_distance, kKSBound, a.mean_rescaled, b.mean_rescaled)};
    };
    return {line(stated50, stated200, "stated constants, limit 1 - F2(-s)"),
            line(corr50, corr200, "corrected constants, limit F2(s)")};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::vector<std::string> only;
    std::set<std::string> expect_fail;
    Context ctx;
    ctx.threads = default_threads();
    app.add_option("--criterion", only, "criteria to run (1..10); default all")->delimiter(',');
    app.add_option("--expect-fail", expect_fail, "criteria whose failure is the documented outcome")->delimiter(',');
    app.add_option("--threads", ctx.threads);
    CLI11_PARSE(app, argc, argv);

    std::set<int> want;
    for (const auto& s : only) want.insert(std::stoi(s));
    if (want.empty())
        for (int c = 1; c <= 10; ++c) want.insert(c);
    std::set<int> compute = want;
    if (want.count(8))
        for (int c = 4; c <= 7; ++c) compute.insert(c);

    const std::map<int, std::function<Outcome(Context&)>> table = {
        {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
        {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}};

    int unexpected = 0;
    const auto report = [&](const std::string& id, const Outcome& o, double secs) {
        const bool expected_failure = expect_fail.count(id) > 0;
        std::printf("criterion %-3s %s  %s (%.1f s)%s\n", id.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs,
                    expected_failure ? (o.pass ? " [expected to fail]" : " [expected failure]") : "");
        std::fflush(stdout);
        if (o.pass == expected_failure) ++unexpected;
    };
    for (int c : compute) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
        try {
            if (c == 10) {
                const auto [stated, corrected] = criterion10(ctx);
                const double secs = elapsed();
                report("10", stated, secs);
                report("10c", corrected, secs);
                continue;
            }
            const Outcome o = table.at(c)(ctx);
            if (want.count(c)) report(std::to_string(c), o, elapsed());
        } catch (const std::exception& e) {
            report(std::to_string(c), {false, std::string("threw: ") + e.what()}, elapsed());
        }
    }
    return unexpected == 0 ? 0 : 1;
}
