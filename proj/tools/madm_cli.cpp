#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "madm/asymptotics.hpp"
#include "madm/errors.hpp"
#include "madm/exact.hpp"
#include "madm/fredholm.hpp"
#include "madm/parallel.hpp"
#include "madm/simulator.hpp"

using namespace madm;
using nlohmann::json;

namespace {

// "a..b" or a single integer
std::vector<long> parse_range(const std::string& s) {
    const auto dots = s.find("..");
    long lo = 0, hi = 0;
    try {
        size_t used = 0;
        if (dots == std::string::npos) {
            lo = hi = std::stol(s, &used);
            require(used == s.size(), "");
        } else {
            const std::string a = s.substr(0, dots), b = s.substr(dots + 2);
            lo = std::stol(a, &used);
            require(used == a.size(), "");
            hi = std::stol(b, &used);
            require(used == b.size(), "");
        }
    } catch (const std::exception&) {
        throw ValidationError("cannot parse range '" + s + "' (expected a..b)");
    }
    require(lo <= hi, "empty x-range '" + s + "'");
    require(hi - lo <= 100000, "x-range too long");
    std::vector<long> xs;
    for (long x = lo; x <= hi; ++x) xs.push_back(x);
    return xs;
}

std::vector<long> parse_list(const std::string& s) {
    std::vector<long> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            size_t used = 0;
            out.push_back(std::stol(item, &used));
            require(used == item.size(), "");
        } catch (const std::exception&) {
            throw ValidationError("cannot parse position list '" + s + "'");
        }
    }
    require(!out.empty(), "empty position list");
    return out;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// CSV to `path` (stdout for "-") plus `path`.json when writing a file.
class Output {
public:
    Output(const std::string& path, const std::string& header) : path_(path) {
        if (path_ != "-") {
            file_.open(path_);
            require(file_.good(), "cannot open output file " + path_);
        }
        os() << header << '\n';
    }
    std::ostream& os() { return path_ == "-" ? std::cout : file_; }
    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) os() << (i ? "," : "") << cells[i];
        os() << '\n';
    }
    void finish(json meta) {
        meta["version"] = MADM_VERSION;
        if (path_ == "-") return;
        std::ofstream side(path_ + ".json");
        side << meta.dump(2) << '\n';
    }

private:
    std::string path_;
    std::ofstream file_;
};

struct Common {
    double u = -1;  // < 0 selects u = 1/(1 + tau)
    double tau = 0.5;
    double p = -1;  // < 0 selects p = u
    std::string out = "-";
    int threads = default_threads();

    ModelParams params() const {
        require(tau > 0 && tau < 1, "--tau must lie in (0, 1)");
        const double uu = u < 0 ? 1.0 / (1.0 + tau) : u;
        return ModelParams::make(uu, p < 0 ? uu : p);
    }
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--u", c.u, "right-jump weight u in (1/2, 1); overrides --tau");
    app->add_option("--tau", c.tau, "asymmetry v/u, giving u = 1/(1 + tau)");
    app->add_option("--p", c.p, "two-parameter weight p in (0, 1); default p = u");
    app->add_option("--out", c.out, "CSV path ('-' for stdout); a JSON sidecar goes to <out>.json");
    app->add_option("--threads", c.threads, "worker threads");
}

// ---- simulate ----
struct SimulateArgs {
    Common c;
    std::string init = "0";
    std::string step;  // stack | pile
    long n_big = 64;
    int n_max_peel = 0;
    double t = 1, t_formula = -1;
    int m = 1;
    std::string x = "-5..5";
    long replicas = 10000;
    uint64_t seed = 1;
    bool reference = false;
};

int run_simulate(const SimulateArgs& a) {
    const ModelParams mp = a.c.params();
    const double t_phys = a.t_formula > 0 ? a.t_formula / mp.gamma : a.t;
    sim::SimConfig cfg;
    if (a.step.empty()) {
        cfg = sim::SimConfig::finite(mp, parse_list(a.init), t_phys);
    } else {
        require(a.step == "stack" || a.step == "pile", "--step must be 'stack' or 'pile'");
        cfg = sim::SimConfig::step_initial(mp, t_phys, a.n_big,
                                           a.step == "stack" ? sim::InitKind::Stack : sim::InitKind::Pile);
    }
    cfg.replicas = a.replicas;
    cfg.seed = a.seed;
    cfg.threads = a.c.threads;
    cfg.n_max_peel = a.n_max_peel;
    cfg.reference_engine = a.reference;
    const auto xs = parse_range(a.x);
    const auto e = sim::empirical_cdf(cfg, a.m, xs);
    Output out(a.c.out, "x,cdf,stderr");
    for (size_t i = 0; i < xs.size(); ++i) out.row({std::to_string(xs[i]), fmt(e.values[i]), fmt(e.stderrs[i])});
    out.finish({{"subcommand", "simulate"}, {"m", a.m}, {"config", cfg.to_json()}});
    return 0;
}

// ---- exact ----
struct ExactArgs {
    Common c;
    std::string method = "contour";  // contour | master
    std::string init = "0,0";
    int m = 1;
    double t = 0.5;
    std::string x = "-4..4";
    int nodes = 0;
    long lo = -30, hi = 30;
};

int run_exact(const ExactArgs& a) {
    const ModelParams mp = a.c.params();
    const auto Y = parse_list(a.init);
    const auto xs = parse_range(a.x);
    Output out(a.c.out, "x,prob,err");
    json meta = {{"subcommand", "exact"}, {"method", a.method}, {"params", mp.to_json()}, {"init", Y},
                 {"m", a.m}, {"t_physical", a.t}};
    if (a.method == "master") {
        exact::MasterOptions o;
        o.window = {a.lo, a.hi};
        const auto r = exact::master_equation_cdf(Y, a.m, xs, a.t, mp, o);
        for (size_t i = 0; i < xs.size(); ++i) out.row({std::to_string(xs[i]), fmt(r.cdf[i]), fmt(r.leak)});
        meta["window"] = {a.lo, a.hi};
        meta["states"] = r.states;
        meta["leak"] = r.leak;
        meta["ode_steps"] = r.steps;
    } else {
        require(a.method == "contour", "--method must be 'contour' or 'master'");
        exact::ContourOptions o;
        o.nodes = a.nodes;
        std::vector<exact::ContourResult> rs(xs.size());
        parallel_for(xs.size(), a.c.threads,
                     [&](size_t i) { rs[i] = exact::contour_prob_finite(Y, a.m, xs[i], a.t, mp, o); });
        double min_den = INFINITY;
        for (size_t i = 0; i < xs.size(); ++i) {
            out.row({std::to_string(xs[i]), fmt(rs[i].prob), fmt(rs[i].imag_residual)});
            min_den = std::min(min_den, rs[i].min_denominator);
        }
        meta["nodes_per_contour"] = rs.front().nodes;
        meta["radii"] = exact::default_radii(static_cast<int>(Y.size()), mp.tau);
        meta["min_denominator"] = min_den;
    }
    out.finish(meta);
    return 0;
}

// ---- fredholm ----
struct FredholmArgs {
    Common c;
    std::string formula = "one-param";
    int m = 1;
    double t = 1;
    std::string x = "-3..5";
    int nodes = 0;
    int lambda_nodes = 64;
    int mu_nodes = 0;
    bool no_refine = false;
    double refine_tol = 1e-6;
};

int run_fredholm(const FredholmArgs& a) {
    const ModelParams mp = a.c.params();
    const auto xs = parse_range(a.x);
    Output out(a.c.out, "x,prob,imag_residual,refine_delta");
    json meta = {{"subcommand", "fredholm"}, {"formula", a.formula}, {"params", mp.to_json()}, {"m", a.m},
                 {"t_formula", a.t}};
    std::vector<fred::ProbResult> rs;
    for (long x : xs) {
        const QueryPoint qp{a.m, a.t, x};
        if (a.formula == "two-param") {
            fred::TwoParamQuad q;
            if (a.nodes > 0) q.kernel_nodes = a.nodes;
            q.lambda_nodes = a.lambda_nodes;
            q.refine = !a.no_refine;
            q.threads = a.c.threads;
            rs.push_back(fred::prob_two_param(qp, mp, q));
        } else {
            require(a.formula == "one-param", "--formula must be 'one-param' or 'two-param'");
            fred::OneParamQuad q;
            if (a.nodes > 0) q.contours.nodes = a.nodes;
            q.contours.mu_nodes = a.mu_nodes;
            q.refine = !a.no_refine;
            q.threads = a.c.threads;
            rs.push_back(fred::prob_one_param(qp, mp, q));
        }
        const auto& r = rs.back();
        out.row({std::to_string(x), fmt(r.prob), fmt(r.imag_residual), fmt(r.refine_delta)});
    }
    meta["quadrature"] = rs.front().meta;
    out.finish(meta);
    double worst = 0;
    for (const auto& r : rs) worst = std::max(worst, r.refine_delta);
    if (worst > a.refine_tol) {
        std::fprintf(stderr, "refinement delta %.3g exceeds --refine-tol %.3g; raise --nodes\n", worst, a.refine_tol);
        return 3;
    }
    return 0;
}

// ---- identities ----
struct IdentityArgs {
    Common c;
    std::string which = "all";
    int draws = 20;
    uint64_t seed = 7;
    int nodes = 256;
    double tol = 1e-8;
};

int run_identities(const IdentityArgs& a) {
    require(a.draws >= 1, "--draws must be >= 1");
    const bool equiv = a.which == "all" || a.which == "equivalence" || a.which == "prop13";
    const bool prod = a.which == "all" || a.which == "product" || a.which == "prop14";
    require(equiv || prod, "--which must be equivalence|product|prop13|prop14|all");
    const ModelParams mp = ModelParams::one_param(a.c.params().u);
    std::mt19937_64 gen(a.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<long> xdist(-3, 3);

    struct Row {
        std::string which;
        cplx lambda;
        long x;
        double t;
        fred::IdentityResult r;
        double extra = NAN;
    };
    std::vector<Row> rows;
    if (prod)
        for (int k = 0; k < a.draws; ++k) {
            const cplx lam = std::polar(std::sqrt(unit(gen)), 2 * M_PI * unit(gen));
            rows.push_back({"product", lam, xdist(gen), 0.5 + 1.5 * unit(gen), {}});
        }
    if (equiv)
        for (int k = 0; k < a.draws; ++k) {
            const cplx lam = std::polar(0.5 * std::sqrt(unit(gen)), 2 * M_PI * unit(gen));
            rows.push_back({"equivalence", lam, xdist(gen), 0.5 + 1.5 * unit(gen), {}});
        }
    parallel_for(rows.size(), a.c.threads, [&](size_t i) {
        Row& row = rows[i];
        const fred::KernelParams kp{row.x, row.t, 1, mp};
        if (row.which == "product") {
            row.r = fred::product_identity(kp, row.lambda, a.nodes);
        } else {
            fred::IdentityQuad q;
            q.eta_nodes = a.nodes;
            const auto e = fred::contour_equivalence(kp, row.lambda, q);
            row.r = e;
            row.extra = e.difference_deviation;
        }
    });

    Output out(a.c.out,
               "identity,lambda_re,lambda_im,x,t,lhs_re,lhs_im,rhs_re,rhs_im,deviation,difference_form_deviation,pass");
    bool ok = true;
    for (const Row& r : rows) {
        const bool pass = r.r.deviation < a.tol;
        ok = ok && pass;
        out.row({r.which, fmt(r.lambda.real()), fmt(r.lambda.imag()), std::to_string(r.x), fmt(r.t),
                 fmt(r.r.lhs.real()), fmt(r.r.lhs.imag()), fmt(r.r.rhs.real()), fmt(r.r.rhs.imag()),
                 fmt(r.r.deviation), std::isnan(r.extra) ? "" : fmt(r.extra), pass ? "pass" : "FAIL"});
    }
    out.finish({{"subcommand", "identities"}, {"which", a.which}, {"draws", a.draws},
                {"seed", a.seed}, {"nodes", a.nodes}, {"tolerance", a.tol}, {"params", mp.to_json()}});
    return ok ? 0 : 3;
}

// ---- tw ----
struct TWArgs {
    Common c;
    double sigma = 0.25;
    double t = 50;
    long replicas = 20000;
    uint64_t seed = 1;
    long n_big = 0;
    std::string constants = "stated";
    double s_lo = -6, s_hi = 4, s_step = 0.25;
};

int run_tw(const TWArgs& a) {
    asym::TWOptions o;
    o.sigma = a.sigma;
    o.t = a.t;
    o.params = a.c.params();
    o.replicas = a.replicas;
    o.seed = a.seed;
    o.n_big = a.n_big;
    o.threads = a.c.threads;
    require(a.constants == "stated" || a.constants == "corrected", "--constants must be 'stated' or 'corrected'");
    o.constants = a.constants == "stated" ? asym::Constants::Stated : asym::Constants::Corrected;
    require(a.s_step > 0 && a.s_lo <= a.s_hi, "empty s-grid");
    for (double s = a.s_lo; s <= a.s_hi + 1e-12; s += a.s_step) o.s_grid.push_back(s);
    const auto r = asym::tw_experiment(o);
    Output out(a.c.out, "s,empirical,limit,stderr");
    for (size_t i = 0; i < r.s_grid.size(); ++i)
        out.row({fmt(r.s_grid[i]), fmt(r.empirical[i]), fmt(r.limit[i]), fmt(r.stderrs[i])});
    json meta = r.meta;
    meta["subcommand"] = "tw";
    std::cerr << "KS distance " << r.ks_distance << " (m = " << r.m << ", constants " << a.constants << ")\n";
    out.finish(meta);
    return 0;
}

// ---- cross-validate ----
struct CrossArgs {
    Common c;
    long replicas = 100000;
    uint64_t seed = 11;
};

int run_cross(const CrossArgs& a) {
    const ModelParams mp = a.c.params();
    const std::vector<long> Y{0, 0};
    const double t = 0.5;
    const std::vector<long> xs{-2, -1, 0, 1, 2};
    struct Check {
        std::string pair;
        double deviation, tolerance;
        std::string unit;
    };
    std::vector<Check> checks;

    // finite system, N = 2
    const auto me = exact::master_equation_cdf(Y, 1, xs, t, mp);
    double d = 0;
    for (size_t i = 0; i < xs.size(); ++i)
        d = std::max(d, std::fabs(exact::contour_prob_finite(Y, 1, xs[i], t, mp).prob - me.cdf[i]));
    checks.push_back({"master-equation vs contour (N=2, m=1)", d, std::max(1e-6, 10 * me.leak), "abs"});

    sim::SimConfig cfg = sim::SimConfig::finite(mp, Y, t);
    cfg.replicas = a.replicas;
    cfg.seed = a.seed;
    cfg.threads = a.c.threads;
    auto e = sim::empirical_cdf(cfg, 1, xs);
    double z = 0;
    for (size_t i = 0; i < xs.size(); ++i)
        if (e.stderrs[i] > 0) z = std::max(z, std::fabs(e.values[i] - me.cdf[i]) / e.stderrs[i]);
    checks.push_back({"simulator vs master-equation (N=2, m=1)", z, 3.0, "stderr"});

    // step initial condition, formula time 1, m = 2
    const int m = 2;
    const double tf = 1.0;
    const std::vector<long> xf{-2, -1, 0, 1, 2, 3};
    std::vector<double> two, one;
    for (long x : xf) {
        fred::TwoParamQuad q2;
        q2.threads = a.c.threads;
        q2.refine = false;
        two.push_back(fred::prob_two_param({m, tf, x}, mp, q2).prob);
        if (mp.one_param_mode()) {
            fred::OneParamQuad q1;
            q1.threads = a.c.threads;
            q1.refine = false;
            one.push_back(fred::prob_one_param({m, tf, x}, mp, q1).prob);
        }
    }
    if (!one.empty()) {
        double dd = 0;
        for (size_t i = 0; i < xf.size(); ++i) dd = std::max(dd, std::fabs(two[i] - one[i]));
        checks.push_back({"two-param vs one-param Fredholm (m=2)", dd, 1e-6, "abs"});
    }
    sim::SimConfig sc = sim::SimConfig::step_initial(mp, tf / mp.gamma, 40);
    sc.replicas = a.replicas;
    sc.seed = a.seed + 1;
    sc.threads = a.c.threads;
    e = sim::empirical_cdf(sc, m, xf);
    z = 0;
    for (size_t i = 0; i < xf.size(); ++i)
        if (e.stderrs[i] > 0) z = std::max(z, std::fabs(e.values[i] - two[i]) / e.stderrs[i]);
    checks.push_back({"simulator (stack, n_big=40) vs two-param Fredholm (m=2)", z, 3.0, "stderr"});

    Output out(a.c.out, "pair,deviation,tolerance,unit,pass");
    bool ok = true;
    for (const auto& c : checks) {
        const bool pass = c.deviation < c.tolerance;
        ok = ok && pass;
        out.row({"\"" + c.pair + "\"", fmt(c.deviation), fmt(c.tolerance), c.unit, pass ? "pass" : "FAIL"});
    }
    out.finish({{"subcommand", "cross-validate"}, {"params", mp.to_json()}, {"replicas", a.replicas},
                {"seed", a.seed}});
    return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MADM numerical laboratory"};
    app.set_version_flag("--version", std::string(MADM_VERSION));
    app.require_subcommand(1);

    SimulateArgs sa;
    auto* s = app.add_subcommand("simulate", "Monte Carlo law of x_m");
    add_common(s, sa.c);
    s->add_option("--init", sa.init, "finite initial positions, comma separated");
    s->add_option("--step", sa.step, "step initial condition: 'stack' (n_big at 0) or 'pile' (infinite site)");
    s->add_option("--n-big", sa.n_big, "particles in the stack / tracked in pile mode");
    s->add_option("--n-max-peel", sa.n_max_peel, "left-peel truncation of the infinite site (0: tail < 1e-10)");
    s->add_option("--t", sa.t, "physical time");
    s->add_option("--t-formula", sa.t_formula, "formula time (physical time is t/gamma)");
    s->add_option("--m", sa.m, "particle index");
    s->add_option("--x", sa.x, "x-range a..b");
    s->add_option("--replicas", sa.replicas);
    s->add_option("--seed", sa.seed);
    s->add_flag("--reference-engine", sa.reference, "use the explicit event-list engine");

    ExactArgs ea;
    auto* e = app.add_subcommand("exact", "finite-system probabilities");
    add_common(e, ea.c);
    e->add_option("--method", ea.method, "contour | master");
    e->add_option("--init", ea.init, "initial positions, comma separated (N <= 4)");
    e->add_option("--m", ea.m);
    e->add_option("--t", ea.t, "physical time");
    e->add_option("--x", ea.x, "x-range a..b");
    e->add_option("--nodes", ea.nodes, "nodes per contour (0: automatic)");
    e->add_option("--window-lo", ea.lo);
    e->add_option("--window-hi", ea.hi);

    FredholmArgs fa;
    auto* f = app.add_subcommand("fredholm", "step-initial probabilities from the Fredholm formulas");
    add_common(f, fa.c);
    f->add_option("--formula", fa.formula, "one-param | two-param");
    f->add_option("--m", fa.m);
    f->add_option("--t", fa.t, "formula time");
    f->add_option("--x", fa.x, "x-range a..b");
    f->add_option("--nodes", fa.nodes, "Nystrom nodes (per circle for one-param)");
    f->add_option("--lambda-nodes", fa.lambda_nodes);
    f->add_option("--mu-nodes", fa.mu_nodes, "0: automatic");
    f->add_flag("--no-refine", fa.no_refine, "skip the doubled-node refinement pass");
    f->add_option("--refine-tol", fa.refine_tol, "largest accepted refinement delta");

    IdentityArgs ia;
    auto* i = app.add_subcommand("identities", "kernel identity checks");
    add_common(i, ia.c);
    i->add_option("--which", ia.which, "equivalence | product | all (prop13/prop14 accepted)");
    i->add_option("--draws", ia.draws);
    i->add_option("--seed", ia.seed);
    i->add_option("--nodes", ia.nodes);
    i->add_option("--tol", ia.tol);

    TWArgs ta;
    auto* w = app.add_subcommand("tw", "Tracy-Widom comparison of rescaled x_m");
    add_common(w, ta.c);
    w->add_option("--sigma", ta.sigma);
    w->add_option("--t", ta.t, "formula time");
    w->add_option("--replicas", ta.replicas);
    w->add_option("--seed", ta.seed);
    w->add_option("--n-big", ta.n_big, "0: max(4m, 64)");
    w->add_option("--constants", ta.constants, "stated | corrected");
    w->add_option("--s-lo", ta.s_lo);
    w->add_option("--s-hi", ta.s_hi);
    w->add_option("--s-step", ta.s_step);

    CrossArgs ca;
    auto* c = app.add_subcommand("cross-validate", "oracle chain pass/fail matrix");
    add_common(c, ca.c);
    c->add_option("--replicas", ca.replicas);
    c->add_option("--seed", ca.seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::CallForVersion& ex) {
        return app.exit(ex);
    } catch (const CLI::ParseError& ex) {
        app.exit(ex);
        return 2;
    }
    try {
        if (*s) return run_simulate(sa);
        if (*e) return run_exact(ea);
        if (*f) return run_fredholm(fa);
        if (*i) return run_identities(ia);
        if (*w) return run_tw(ta);
        if (*c) return run_cross(ca);
    } catch (const ValidationError& ex) {
        std::cerr << "validation error: " << ex.what() << '\n';
        return 2;
    } catch (const ToleranceError& ex) {
        std::cerr << "tolerance failure: " << ex.what() << '\n';
        return 3;
    }
    return 2;
}
