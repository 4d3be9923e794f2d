#include "madm/fredholm.hpp"

#include <cmath>
#include <string>

#include "madm/errors.hpp"
#include "madm/parallel.hpp"

namespace madm::fred {

DiscretizedOperator discretize(const Kernel& k, const Quadrature& quad) {
    const Eigen::Index n = static_cast<Eigen::Index>(quad.size());
    DiscretizedOperator op{quad, Matrix(n, n)};
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index l = 0; l < n; ++l) {
            const cplx v = k(quad.nodes[j], quad.nodes[l]) * quad.weights[l];
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw ToleranceError("non-finite kernel value in Nystrom matrix");
            op.matrix(j, l) = v;
        }
    return op;
}

cplx det_i_minus(const Matrix& A, cplx lambda) {
    Matrix B = -lambda * A;
    B.diagonal().array() += 1.0;
    return Eigen::PartialPivLU<Matrix>(B).determinant();
}

cplx nystrom_det(const DiscretizedOperator& op, cplx lambda) { return det_i_minus(op.matrix, lambda); }

cplx nystrom_det(const Kernel& k, const Quadrature& quad, cplx lambda) {
    return det_i_minus(discretize(k, quad).matrix, lambda);
}

cplx fredholm_series_det(const Kernel& k, const Quadrature& quad, cplx lambda, int k_max, double tail_tol) {
    require(k_max >= 0 && k_max <= 3, "fredholm_series_det supports 0 <= k_max <= 3");
    const size_t n = quad.size();
    std::vector<std::vector<cplx>> K(n, std::vector<cplx>(n));
    for (size_t a = 0; a < n; ++a)
        for (size_t b = 0; b < n; ++b) K[a][b] = k(quad.nodes[a], quad.nodes[b]);
    const auto& w = quad.weights;

    std::vector<cplx> sums(k_max + 1, 0.0);
    sums[0] = 1.0;
    if (k_max >= 1)
        for (size_t a = 0; a < n; ++a) sums[1] += K[a][a] * w[a];
    if (k_max >= 2)
        for (size_t a = 0; a < n; ++a)
            for (size_t b = 0; b < n; ++b)
                sums[2] += (K[a][a] * K[b][b] - K[a][b] * K[b][a]) * w[a] * w[b];
    if (k_max >= 3)
        for (size_t a = 0; a < n; ++a)
            for (size_t b = 0; b < n; ++b)
                for (size_t c = 0; c < n; ++c) {
                    const cplx d = K[a][a] * (K[b][b] * K[c][c] - K[b][c] * K[c][b]) -
                                   K[a][b] * (K[b][a] * K[c][c] - K[b][c] * K[c][a]) +
                                   K[a][c] * (K[b][a] * K[c][b] - K[b][b] * K[c][a]);
                    sums[3] += d * w[a] * w[b] * w[c];
                }

    cplx total = 0.0;
    std::vector<double> mags;
    double fact = 1.0;
    for (int j = 0; j <= k_max; ++j) {
        if (j > 0) fact *= j;
        const cplx term = std::pow(-lambda, j) * sums[j] / fact;
        total += term;
        mags.push_back(std::abs(term));
    }
    if (k_max >= 1) {
        const double last = mags[k_max], prev = mags[k_max - 1];
        const double ratio = prev > 0 ? last / prev : 0.0;
        const double tail = ratio < 1 ? last * ratio / (1 - ratio) : INFINITY;
        if (!(tail <= tail_tol))
            throw ToleranceError("series truncation tail estimate " + num(tail) + " exceeds " + num(tail_tol));
    }
    return total;
}

cplx finite_product(cplx lambda, double tau, int n) {
    cplx r = 1.0;
    double tk = 1.0;
    for (int k = 1; k <= n; ++k) {
        tk *= tau;
        r *= 1.0 - lambda * tk;
    }
    return r;
}

int product_depth(cplx lambda, double tau, double tol) {
    const double a = std::abs(lambda);
    int n = 0;
    double tn1 = tau;  // tau^{n+1}
    while (a * tn1 / (1 - tau) >= tol) {
        ++n;
        tn1 *= tau;
        if (n > 100000) throw ToleranceError("product depth runaway");
    }
    return n;
}

cplx shifted_pochhammer(cplx z, double tau, double tol) {
    return finite_product(z, tau, product_depth(z, tau, tol));
}

cplx energy(cplx xi, const ModelParams& mp) { return mp.p / xi + mp.q * xi - 1.0; }

cplx kernel_K(cplx xi, cplx xip, const KernelParams& kp) {
    const ModelParams& mp = kp.params;
    const cplx den = mp.u + mp.v * xi * xip - xi;
    if (std::abs(den) < 1e-12) throw ToleranceError("kernel_K evaluated on its pole surface");
    return mp.v * ipow(xip, kp.x) * std::exp(energy(xip, mp) * kp.t / mp.gamma) / den * (mp.tau * xip - 1.0) /
           (1.0 - mp.tau);
}

Quadrature two_param_contour(const ModelParams& mp, const TwoParamQuad& q, int nodes) {
    const double R = q.xi_radius > 0 ? q.xi_radius : 0.5 * (1.0 + 1.0 / mp.tau);
    require(R > 1.0 && R < 1.0 / mp.tau, "xi contour radius must lie in (1, 1/tau)");
    return clustered_trapezoid({0.0, R, nodes, +1}, q.clustering);
}

Matrix two_param_matrix(const KernelParams& kp, const Quadrature& quad) {
    const auto k = [&](cplx a, cplx b) { return kernel_K(a, b, kp); };
    return discretize(k, quad).matrix;
}

namespace {

constexpr double kMaxLambdaScale = 64.0;  // tau^{-m} bound, i.e. m <= 6 at tau = 1/2

cplx lambda_integral(const Matrix& A, int m, double tau, const TwoParamQuad& q) {
    const double rad = q.lambda_radius_factor * std::pow(tau, -m);
    const Quadrature lq = trapezoid({0.0, rad, q.lambda_nodes, +1});
    std::vector<cplx> terms(lq.size());
    parallel_for(lq.size(), q.threads, [&](size_t j) {
        const cplx lam = lq.nodes[j];
        // w/lambda = 1/L with the folded 1/(2 pi i)
        terms[j] = det_i_minus(A, lam) / finite_product(lam, tau, m) * (lq.weights[j] / lam);
    });
    cplx s = 0.0;
    for (const cplx& v : terms) s += v;
    return s;
}

}  // namespace

ProbResult prob_two_param(const QueryPoint& qp, const ModelParams& mp, const TwoParamQuad& q) {
    qp.validate();
    require(std::pow(mp.tau, -qp.m) <= kMaxLambdaScale,
            "m too large for the lambda-contour formula (need tau^{-m} <= 64); use the one-parameter formula");
    require(q.kernel_nodes >= 8 && q.lambda_nodes >= 8, "node counts must be >= 8");
    require(q.lambda_radius_factor > 1.0, "lambda radius factor must exceed 1");
    const KernelParams kp{qp.x, qp.t, qp.m, mp};

    const auto eval = [&](int nodes) {
        const Matrix A = two_param_matrix(kp, two_param_contour(mp, q, nodes));
        return lambda_integral(A, qp.m, mp.tau, q);
    };
    const cplx v = eval(q.kernel_nodes);
    ProbResult r;
    r.prob = v.real();
    r.imag_residual = std::abs(v.imag());
    if (q.refine) r.refine_delta = std::abs(eval(2 * q.kernel_nodes).real() - v.real());
    r.meta = {{"formula", "two-param"},
              {"kernel_nodes", q.kernel_nodes},
              {"lambda_nodes", q.lambda_nodes},
              {"lambda_radius", q.lambda_radius_factor * std::pow(mp.tau, -qp.m)},
              {"xi_radius", q.xi_radius > 0 ? q.xi_radius : 0.5 * (1.0 + 1.0 / mp.tau)},
              {"clustering", q.clustering}};
    if (r.imag_residual > 1e-7)
        throw ToleranceError("two-parameter formula: imaginary residual " + num(r.imag_residual));
    return r;
}

}  // namespace madm::fred
