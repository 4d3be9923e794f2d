#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <unsupported/Eigen/FFT>

#include "madm/errors.hpp"
#include "madm/fredholm.hpp"
#include "madm/parallel.hpp"

namespace madm::fred {

FSumDepth f_sum_depth(cplx mu, cplx z, double tau, double tol) {
    const double az = std::abs(z), amu = std::abs(mu);
    require(az > 1.0 && az < 1.0 / tau, "f_sum needs 1 < |z| < 1/tau");
    require(amu > 0, "f_sum needs mu != 0");
    FSumDepth d;
    // k -> +inf: |term| <= |tau z|^k / (1 - |mu| tau^k), ratio |tau z|
    const double rp = tau * az;
    double tk = tau, pk = rp;
    for (int k = 1;; ++k, tk *= tau, pk *= rp) {
        if (amu * tk < 0.5 && 2.0 * pk / (1.0 - rp) < tol) break;
        d.pos = k;
        if (k > 100000) throw ToleranceError("f_sum depth runaway (k -> +inf)");
    }
    // k = -j -> -inf: |term| = |z|^{-j}/|tau^j - mu|, ratio 1/|z|
    const double rn = 1.0 / az;
    tk = tau;
    pk = rn;
    for (int j = 1;; ++j, tk *= tau, pk *= rn) {
        if (tk < 0.5 * amu && 2.0 * pk / ((1.0 - rn) * amu) < tol) break;
        d.neg = j;
        if (j > 100000) throw ToleranceError("f_sum depth runaway (k -> -inf)");
    }
    return d;
}

namespace {

void check_pole(cplx mu, double tau, const FSumDepth& d) {
    if (std::abs(1.0 - mu) < 1e-8) throw ValidationError("mu within 1e-8 of a pole of f");
    double tk = 1.0;
    for (int k = 1; k <= d.pos; ++k) {
        tk *= tau;
        if (std::abs(1.0 - tk * mu) < 1e-8) throw ValidationError("mu within 1e-8 of a pole of f");
    }
    tk = 1.0;
    for (int j = 1; j <= d.neg; ++j) {
        tk *= tau;
        if (std::abs(tk - mu) < 1e-8 * tk) throw ValidationError("mu within 1e-8 of a pole of f");
    }
}

cplx f_sum_with(cplx mu, cplx z, double tau, const FSumDepth& d) {
    cplx pos = 0.0, neg = 0.0;
    const cplx tz = tau * z, iz = 1.0 / z;
    cplx pw = 1.0;
    double tk = 1.0;
    for (int k = 1; k <= d.pos; ++k) {
        pw *= tz;
        tk *= tau;
        pos += pw / (1.0 - tk * mu);
    }
    pw = 1.0;
    tk = 1.0;
    for (int j = 1; j <= d.neg; ++j) {
        pw *= iz;
        tk *= tau;
        neg += pw / (tk - mu);
    }
    return 1.0 / (1.0 - mu) + pos + neg;
}

}  // namespace

cplx f_sum(cplx mu, cplx z, double tau, double tol) {
    const FSumDepth d = f_sum_depth(mu, z, tau, tol);
    check_pole(mu, tau, d);
    return f_sum_with(mu, z, tau, d);
}

cplx ipow(cplx z, long n) {
    if (n < 0) return 1.0 / ipow(z, -n);
    cplx r = 1.0;
    while (n > 0) {
        if (n & 1) r *= z;
        z *= z;
        n >>= 1;
    }
    return r;
}

cplx lambda_weight(cplx zeta, cplx etap, long x, double t, long power) {
    return ipow((1.0 - zeta) / (1.0 - etap), x) * std::exp((zeta / (1.0 - zeta) - etap / (1.0 - etap)) * t) *
           ipow(zeta / etap, power);
}

OneParamContours OneParamContours::defaults(double tau) {
    OneParamContours c;
    c.eta_radius = std::pow(tau, 0.7);
    c.inner_radius = std::pow(tau, 0.5);
    c.outer_radius = std::pow(tau, -0.15);
    c.mu_radius = 0.5 * (1.0 + 1.0 / tau);
    c.nodes = auto_nodes(tau);
    return c;
}

int OneParamContours::auto_nodes(double tau) {
    require(0.0 < tau && tau < 1.0, "tau must lie in (0, 1)");
    const double need = std::log(3e-12) / (0.15 * std::log(tau));
    return std::max(256, 64 * static_cast<int>(std::ceil(need / 64.0)));
}

int OneParamContours::auto_mu_nodes(double mu_radius) {
    require(mu_radius > 1.0, "mu radius must exceed 1");
    const double need = std::log(1e14) / std::log(mu_radius);
    return std::max(64, 8 * static_cast<int>(std::ceil(need / 8.0)));
}

void OneParamContours::validate(double tau) const {
    require(tau < eta_radius && eta_radius < 1.0, "eta radius must lie in (tau, 1)");
    require(eta_radius < inner_radius && inner_radius < 1.0, "inner zeta radius must lie in (eta radius, 1)");
    require(1.0 < outer_radius && outer_radius < eta_radius / tau, "outer zeta radius must lie in (1, r/tau)");
    require(1.0 < mu_radius && mu_radius < 1.0 / tau, "mu radius must lie in (1, 1/tau)");
    require(nodes >= 8 && (mu_nodes == 0 || mu_nodes >= 8), "node counts must be >= 8");
}

Quadrature zeta_ring(const OneParamContours& c) {
    Quadrature q = trapezoid({0.0, c.outer_radius, c.nodes, +1});
    return q.append(trapezoid({0.0, c.inner_radius, c.nodes, -1}));
}

namespace {

// (1-z)^x e^{z t/(1-z)} z^power
cplx edge_weight(cplx z, long x, double t, long power) {
    return ipow(1.0 - z, x) * std::exp(z * t / (1.0 - z)) * ipow(z, power);
}

}  // namespace

cplx kernel_J(cplx eta, cplx etap, cplx mu, const KernelParams& kp, const Quadrature& zeta_quad) {
    const double tau = kp.params.tau;
    const long power = kp.m - 1;
    const cplx q_eta = shifted_pochhammer(eta, tau, kp.tail * 1e-2);
    cplx s = 0.0;
    for (size_t l = 0; l < zeta_quad.size(); ++l) {
        const cplx z = zeta_quad.nodes[l];
        s += zeta_quad.weights[l] * lambda_weight(z, etap, kp.x, kp.t, power) * q_eta /
             shifted_pochhammer(z, tau, kp.tail * 1e-2) * f_sum(mu, z / etap, tau, kp.tail * 1e-2) /
             (etap * (z - eta));
    }
    return s;
}

OneParamOperator::OneParamOperator(const KernelParams& kp, const OneParamContours& c) : kp_(kp), c_(c) {
    const double tau = kp.params.tau;
    c.validate(tau);
    const int M = c.nodes;
    const long power = kp.m - 1;
    const double ptol = kp.tail * 1e-2;
    eta_ = trapezoid({0.0, c.eta_radius, M, +1});
    const Quadrature outer = trapezoid({0.0, c.outer_radius, M, +1});
    const Quadrature inner = trapezoid({0.0, c.inner_radius, M, -1});

    inv_weight_.resize(M);
    std::vector<cplx> q_eta(M);
    for (int k = 0; k < M; ++k) {
        inv_weight_[k] = 1.0 / (double(M) * edge_weight(eta_.nodes[k], kp.x, kp.t, power));
        q_eta[k] = shifted_pochhammer(eta_.nodes[k], tau, ptol);
    }

    Eigen::FFT<double> fft;
    const auto build = [&](const Quadrature& zq, Matrix& out) {
        std::vector<cplx> col(M);
        for (int l = 0; l < M; ++l) {
            const cplx z = zq.nodes[l];
            col[l] = zq.weights[l] * edge_weight(z, kp.x, kp.t, power) / shifted_pochhammer(z, tau, ptol);
        }
        out.resize(M, M);
        std::vector<cplx> row(M), hat(M);
        for (int i = 0; i < M; ++i) {
            for (int l = 0; l < M; ++l) row[l] = q_eta[i] * col[l] / (zq.nodes[l] - eta_.nodes[i]);
            fft.fwd(hat, row);
            for (int n = 0; n < M; ++n) out(i, n) = hat[n];
        }
    };
    build(outer, g_hat_outer_);
    build(inner, g_hat_inner_);
}

Matrix OneParamOperator::matrix(cplx mu) const {
    const double tau = kp_.params.tau;
    const int M = c_.nodes;
    const double tol = kp_.tail * 1e-2;
    Eigen::FFT<double> fft;

    // f(mu, zeta_l/eta_k) depends on l - k only: the circles share one angle grid.
    const auto symbol = [&](double ratio) {
        std::vector<cplx> phi(M), check(M);
        const FSumDepth d = f_sum_depth(mu, ratio, tau, tol);
        check_pole(mu, tau, d);
        for (int j = 0; j < M; ++j)
            phi[j] = f_sum_with(mu, std::polar(ratio, 2.0 * std::numbers::pi * j / M), tau, d);
        fft.inv(check, phi);  // (1/M) sum_j phi_j e^{+2 pi i j n/M}
        for (auto& v : check) v *= double(M);
        return check;
    };
    const std::vector<cplx> s_out = symbol(c_.outer_radius / c_.eta_radius);
    const std::vector<cplx> s_in = symbol(c_.inner_radius / c_.eta_radius);

    Matrix A(M, M);
    std::vector<cplx> hat(M), row(M);
    for (int i = 0; i < M; ++i) {
        for (int n = 0; n < M; ++n) hat[n] = g_hat_outer_(i, n) * s_out[n] + g_hat_inner_(i, n) * s_in[n];
        fft.inv(row, hat);
        for (int k = 0; k < M; ++k) A(i, k) = row[k] * inv_weight_[k];
    }
    return A;
}

ProbResult prob_one_param(const QueryPoint& qp, const ModelParams& mp, const OneParamQuad& q) {
    qp.validate();
    require(mp.one_param_mode(), "the one-parameter formula needs p = u");
    OneParamContours c = q.contours;
    if (c.eta_radius <= 0 || c.inner_radius <= 0 || c.outer_radius <= 0 || c.mu_radius <= 0) {
        OneParamContours d = OneParamContours::defaults(mp.tau);
        if (c.nodes > 0) d.nodes = c.nodes;
        d.mu_nodes = c.mu_nodes;
        c = d;
    }
    if (c.nodes == 0) c.nodes = OneParamContours::auto_nodes(mp.tau);
    if (c.mu_nodes == 0) c.mu_nodes = OneParamContours::auto_mu_nodes(c.mu_radius);
    c.validate(mp.tau);
    const KernelParams kp{qp.x, qp.t, qp.m, mp};
    const Quadrature muq = trapezoid({0.0, c.mu_radius, c.mu_nodes, +1});
    const double ptol = 1e-14;

    // All node sets are closed under conjugation and the kernel has real
    // coefficients, so the mu-integrand at conj(mu) is the conjugate of its
    // value at mu. The primary pass evaluates every node to keep the imaginary
    // residual an honest diagnostic; the refinement pass uses the symmetry.
    const auto eval = [&](int nodes, bool half) {
        OneParamContours cc = c;
        cc.nodes = nodes;
        const OneParamOperator op(kp, cc);
        const size_t L = muq.size();
        const size_t count = half ? L / 2 + 1 : L;
        std::vector<cplx> terms(count);
        parallel_for(count, q.threads, [&](size_t j) {
            const cplx mu = muq.nodes[j];
            const cplx pref = finite_product(mu, mp.tau, product_depth(mu, mp.tau, ptol));
            terms[j] = pref * det_i_minus(op.matrix(mu), mu) * (muq.weights[j] / mu);
        });
        cplx s = 0.0;
        if (!half) {
            for (const cplx& v : terms) s += v;
            return s;
        }
        for (size_t j = 0; j < count; ++j) {
            const bool self_conjugate = j == 0 || (L % 2 == 0 && j == L / 2);
            s += self_conjugate ? terms[j].real() : 2.0 * terms[j].real();
        }
        return s;
    };

    const cplx v = eval(c.nodes, false);
    ProbResult r;
    r.prob = v.real();
    r.imag_residual = std::abs(v.imag());
    if (q.refine) r.refine_delta = std::abs(eval(2 * c.nodes, true).real() - v.real());
    const cplx mu0 = c.mu_radius;
    const FSumDepth d_out = f_sum_depth(mu0, c.outer_radius / c.eta_radius, mp.tau, kp.tail * 1e-2);
    const FSumDepth d_in = f_sum_depth(mu0, c.inner_radius / c.eta_radius, mp.tau, kp.tail * 1e-2);
    r.meta = {{"formula", "one-param"},
              {"nodes_per_circle", c.nodes},
              {"mu_nodes", c.mu_nodes},
              {"eta_radius", c.eta_radius},
              {"zeta_inner_radius", c.inner_radius},
              {"zeta_outer_radius", c.outer_radius},
              {"mu_radius", c.mu_radius},
              {"f_sum_depth_outer", {d_out.neg, d_out.pos}},
              {"f_sum_depth_inner", {d_in.neg, d_in.pos}},
              {"prefactor_depth", product_depth(mu0, mp.tau, ptol)}};
    if (r.imag_residual > 1e-7)
        throw ToleranceError("one-parameter formula: imaginary residual " + num(r.imag_residual));
    return r;
}

}  // namespace madm::fred
