#include "madm/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <Eigen/Dense>

#include "madm/errors.hpp"
#include "madm/simulator.hpp"

namespace madm::asym {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    require(n >= 1, "Gauss-Legendre order must be positive");
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1;
            dp = n * (x * p1 - p0) / (x * x - 1);
            const double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-16) break;
        }
        {
            double p0 = 1, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1);
        }
        const double w = 2.0 / ((1 - x * x) * dp * dp);
        // map [-1, 1] to (0, 1), ascending
        nodes[i] = 0.5 * (1 - x);
        nodes[n - 1 - i] = 0.5 * (1 + x);
        weights[i] = weights[n - 1 - i] = 0.5 * w;
    }
}

namespace {

constexpr double kAiryReach = 40.0;  // Ai beyond this is below 1e-70

}  // namespace

double f2(double s, int n) {
    require(s >= -10.0 && s <= 8.0, "f2 needs s in [-10, 8]");
    require(n >= 4, "f2 needs at least 4 nodes");
    std::vector<double> u, w;
    gauss_legendre(n, u, w);
    std::vector<double> xi(n), sw(n);
    for (int i = 0; i < n; ++i) {
        xi[i] = s + kF2MapScale * u[i] / (1 - u[i]);
        sw[i] = std::sqrt(kF2MapScale * w[i]) / (1 - u[i]);
    }
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i) {
        if (xi[i] > kAiryReach) continue;
        for (int j = 0; j <= i; ++j) {
            if (xi[j] > kAiryReach) continue;
            const double v = sw[i] * airy_kernel(xi[i], xi[j]) * sw[j];
            A(i, j) -= v;
            if (j != i) A(j, i) -= v;
        }
    }
    return Eigen::PartialPivLU<Eigen::MatrixXd>(A).determinant();
}

ScalingConstants scaling_constants(double sigma) {
    require(sigma > 0 && sigma < 1, "sigma must lie in (0, 1)");
    const double r = std::sqrt(sigma);
    return {sigma, -1.0 + 2.0 * r, std::pow(sigma, -1.0 / 6.0) * std::pow(1.0 - r, 2.0 / 3.0)};
}

Rescaling make_rescaling(double sigma, double t, Constants kind) {
    require(t > 0, "t must be positive");
    Rescaling r;
    r.kind = kind;
    r.t = t;
    if (kind == Constants::Stated) {
        r.c = scaling_constants(sigma);
    } else {
        require(sigma > 0 && sigma < 1, "sigma must lie in (0, 1)");
        const double q = std::sqrt(sigma);
        r.c = {sigma, -1.0 - 2.0 * q, std::pow(sigma, -1.0 / 6.0) * std::pow(1.0 + q, 2.0 / 3.0)};
    }
    return r;
}

// Both conventions read x_m ~ -c1 t.
double Rescaling::center() const { return -c.c1; }
double Rescaling::scale() const { return c.c2; }
double Rescaling::rescale(double x) const { return (x - center() * t) / (scale() * std::cbrt(t)); }

namespace {

double f2_clamped(double s) {
    if (s < -10.0) return 0.0;
    if (s > 8.0) return 1.0;
    return std::clamp(f2(s), 0.0, 1.0);
}

}  // namespace

double Rescaling::limit_cdf(double y) const {
    return kind == Constants::Stated ? 1.0 - f2_clamped(-y) : f2_clamped(y);
}

double ks_distance(const std::vector<long>& samples, const Rescaling& r, double* where) {
    require(!samples.empty(), "no samples");
    std::map<long, long> counts;
    for (long v : samples) ++counts[v];
    const double n = static_cast<double>(samples.size());
    double below = 0, ks = 0, at = 0;
    for (const auto& [v, c] : counts) {
        const double y = r.rescale(static_cast<double>(v));
        const double g = r.limit_cdf(y);
        const double above = below + c / n;
        const double d = std::max(std::fabs(below - g), std::fabs(above - g));
        if (d > ks) {
            ks = d;
            at = y;
        }
        below = above;
    }
    if (where) *where = at;
    return ks;
}

int tw_index(const TWOptions& opt) {
    require(opt.params.one_param_mode(), "the Tracy-Widom experiment needs the one-parameter model (p = u)");
    require(opt.sigma > 0 && opt.sigma < 1, "sigma must lie in (0, 1)");
    require(opt.t > 0, "t must be positive");
    const int m = static_cast<int>(std::lround(opt.sigma * opt.t));
    require(m >= 2, "sigma * t must round to m >= 2");
    return m;
}

namespace {

sim::SimConfig tw_config(const TWOptions& opt, int m) {
    const long n_big = opt.n_big > 0 ? opt.n_big : std::max<long>(4L * m, 64);
    require(n_big >= std::max<long>(4L * m, 16), "n_big must be at least max(4m, 16)");
    // the single formula-to-physical time conversion
    sim::SimConfig cfg = sim::SimConfig::step_initial(opt.params, opt.t / opt.params.gamma, n_big);
    cfg.replicas = opt.replicas;
    cfg.seed = opt.seed;
    cfg.threads = opt.threads;
    return cfg;
}

}  // namespace

std::vector<long> tw_samples(const TWOptions& opt) {
    const int m = tw_index(opt);
    return sim::sample_xm(tw_config(opt, m), m);
}

TWComparison tw_compare(const std::vector<long>& xs, const TWOptions& opt) {
    const int m = tw_index(opt);
    require(!xs.empty(), "no samples");
    TWComparison out;
    out.m = m;
    out.sigma_realized = m / opt.t;
    out.sigma_used = opt.constants == Constants::Stated ? out.sigma_realized : (m - 1) / opt.t;
    out.scaling = make_rescaling(out.sigma_used, opt.t, opt.constants);

    out.s_grid = opt.s_grid;
    if (out.s_grid.empty())
        for (int k = 0; k <= 40; ++k) out.s_grid.push_back(-6.0 + 0.25 * k);
    std::vector<double> ys(xs.size());
    double mean = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        ys[i] = out.scaling.rescale(static_cast<double>(xs[i]));
        mean += ys[i];
    }
    out.mean_rescaled = mean / static_cast<double>(ys.size());
    std::sort(ys.begin(), ys.end());
    const double n = static_cast<double>(ys.size());
    for (double y : out.s_grid) {
        const double p = static_cast<double>(std::upper_bound(ys.begin(), ys.end(), y) - ys.begin()) / n;
        out.empirical.push_back(p);
        out.stderrs.push_back(std::sqrt(p * (1 - p) / n));
        out.limit.push_back(out.scaling.limit_cdf(y));
    }
    out.ks_distance = ks_distance(xs, out.scaling, &out.ks_location);
    out.meta = {{"sigma", opt.sigma},
                {"sigma_realized", out.sigma_realized},
                {"sigma_used", out.sigma_used},
                {"m", m},
                {"t_formula", opt.t},
                {"t_physical", opt.t / opt.params.gamma},
                {"constants", opt.constants == Constants::Stated ? "stated" : "corrected"},
                {"c1", out.scaling.c.c1},
                {"c2", out.scaling.c.c2},
                {"ks_distance", out.ks_distance},
                {"ks_location", out.ks_location},
                {"mean_rescaled", out.mean_rescaled},
                {"replicas", static_cast<long>(xs.size())},
                {"simulation", tw_config(opt, m).to_json()}};
    return out;
}

TWComparison tw_experiment(const TWOptions& opt) { return tw_compare(tw_samples(opt), opt); }

}  // namespace madm::asym
