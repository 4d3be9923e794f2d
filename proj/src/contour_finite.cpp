#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "madm/contour.hpp"
#include "madm/errors.hpp"
#include "madm/exact.hpp"
#include "madm/fredholm.hpp"

namespace madm::exact {

std::vector<double> default_radii(int N, double tau) {
    std::vector<double> r(N);
    for (int i = 1; i <= N; ++i) r[i - 1] = 1.0 + i * (1.0 / tau - 1.0) / (N + 2);
    return r;
}

int auto_contour_nodes(double inner_radius) {
    require(inner_radius > 1.0, "innermost radius must exceed 1");
    const int n = static_cast<int>(std::ceil(std::log(1e11) / std::log(inner_radius) / 8.0)) * 8;
    return std::max(64, n);
}

namespace {

// Sum over the k-fold node grid of prod_{i<j} pair_ij(a_i, a_j) prod_i single_i(a_i),
// with every pair factor tabulated once.
struct NestedSum {
    size_t k = 0, M = 0;
    std::vector<std::vector<cplx>> single;  // per variable, weight folded in
    std::vector<std::vector<cplx>> pair;    // pair[i * k + j][a * M + b], i < j
    double min_den = INFINITY;

    NestedSum(const std::vector<const Quadrature*>& q, const std::vector<std::vector<cplx>>& s,
              const ModelParams& mp)
        : k(q.size()), M(q.front()->size()), single(s), pair(k * k) {
        for (size_t i = 0; i < k; ++i)
            for (size_t j = i + 1; j < k; ++j) {
                auto& tab = pair[i * k + j];
                tab.resize(M * M);
                for (size_t a = 0; a < M; ++a)
                    for (size_t b = 0; b < M; ++b) {
                        const cplx xi = q[i]->nodes[a], xj = q[j]->nodes[b];
                        const cplx den = mp.u + mp.v * xi * xj - xj;
                        min_den = std::min(min_den, std::abs(den));
                        tab[a * M + b] = (xi - xj) / den;
                    }
            }
    }

    cplx run(size_t i, std::vector<size_t>& chosen, cplx acc) const {
        if (i == k) return acc;
        cplx s = 0.0;
        for (size_t b = 0; b < M; ++b) {
            cplx f = single[i][b];
            for (size_t p = 0; p < i; ++p) f *= pair[p * k + i][chosen[p] * M + b];
            chosen[i] = b;
            s += run(i + 1, chosen, acc * f);
        }
        return s;
    }
};

}  // namespace

ContourResult contour_prob_finite(const std::vector<long>& Y, int m, long x, double t, const ModelParams& mp,
                                  const ContourOptions& opt) {
    const int N = static_cast<int>(Y.size());
    require(N >= 1 && N <= 4, "contour formula supports 1 <= N <= 4 particles");
    require(m >= 1 && m <= N, "m must lie in 1..N");
    require(opt.nodes == 0 || opt.nodes >= 4, "need at least 4 nodes per contour");
    std::vector<long> ys = Y;
    std::sort(ys.begin(), ys.end());
    const std::vector<double> R = opt.radii.empty() ? default_radii(N, mp.tau) : opt.radii;
    require(static_cast<int>(R.size()) == N, "need one radius per particle");
    for (int i = 0; i < N; ++i) {
        require(R[i] > 1.0 && R[i] < 1.0 / mp.tau, "contour radii must lie in (1, 1/tau)");
        if (i > 0) require(R[i] > R[i - 1], "contour radii must increase");
    }

    const int M = opt.nodes > 0 ? opt.nodes : auto_contour_nodes(R.front());
    // Per-particle node tables with the single-variable factor folded in.
    std::vector<Quadrature> quad(N);
    std::vector<std::vector<cplx>> single(N);
    for (int i = 0; i < N; ++i) {
        quad[i] = trapezoid({0.0, R[i], M, +1});
        single[i].resize(M);
        for (int a = 0; a < M; ++a) {
            const cplx z = quad[i].nodes[a];
            single[i][a] = fred::ipow(z, x - ys[i]) * std::exp(fred::energy(z, mp) * t) / (1.0 - z) *
                           quad[i].weights[a];
        }
    }

    ContourResult res;
    res.nodes = M;
    res.min_denominator = INFINITY;
    cplx total = 0.0;
    for (unsigned mask = 1; mask < (1u << N); ++mask) {
        const int k = std::popcount(mask);
        if (k < m) continue;
        int sigma = 0;
        std::vector<const Quadrature*> qs;
        std::vector<std::vector<cplx>> sing;
        for (int i = 0; i < N; ++i)
            if (mask & (1u << i)) {
                sigma += i + 1;
                qs.push_back(&quad[i]);
                sing.push_back(single[i]);
            }
        const double pref = (m % 2 ? -1.0 : 1.0) * std::pow(mp.u * mp.v, m * (m - 1) / 2.0) *
                            uv_bracket_binomial(k - 1, k - m, mp) * std::pow(mp.v, sigma - m * k) /
                            std::pow(mp.u, sigma - k * (k + 1) / 2);
        const NestedSum ns(qs, sing, mp);
        std::vector<size_t> chosen(k);
        total += pref * ns.run(0, chosen, 1.0);
        res.min_denominator = std::min(res.min_denominator, ns.min_den);
    }
    res.prob = total.real();
    res.imag_residual = std::abs(total.imag());
    if (res.imag_residual > opt.max_imag)
        throw ToleranceError("contour formula: imaginary residual " + num(res.imag_residual) +
                             " (check radii or node count)");
    return res;
}

SumCheck strict_partition_sum_check(int k, double tau, int n_cap) {
    require(k >= 1 && k <= 6, "strict partition check supports 1 <= k <= 6");
    require(n_cap >= k, "n_cap must be at least k");
    require(tau > 0 && tau < 1, "tau must lie in (0, 1)");
    // e[j] = elementary symmetric sum of degree j over tau^1..tau^z
    std::vector<double> e(k + 1, 0.0);
    e[0] = 1.0;
    for (int z = 1; z <= n_cap; ++z) {
        const double w = std::pow(tau, z);
        for (int j = std::min(k, z); j >= 1; --j) e[j] += w * e[j - 1];
    }
    double den = 1.0;
    for (int i = 1; i <= k; ++i) den *= 1.0 - std::pow(tau, i);
    return {e[k], std::pow(tau, k * (k + 1) / 2.0) / den};
}

double symmetrization_identity_check(int k, const ModelParams& mp, int samples, uint64_t seed) {
    require(k >= 1 && k <= 5, "symmetrization check supports 1 <= k <= 5");
    require(samples >= 1, "need at least one sample");
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> rad(0.5, 2.0), ang(0.0, 2.0 * M_PI);
    double rhs = std::pow(mp.u, k * (k - 1) / 2.0);
    for (int i = 1; i <= k; ++i) rhs *= q_bracket(i, mp.tau);

    double worst = 0.0;
    std::vector<cplx> xi(k);
    std::vector<int> perm(k);
    for (int s = 0; s < samples; ++s) {
        for (bool ok = false; !ok;) {
            for (auto& z : xi) z = std::polar(rad(gen), ang(gen));
            ok = true;
            for (int i = 0; i < k && ok; ++i)
                for (int j = i + 1; j < k && ok; ++j) ok = std::abs(xi[i] - xi[j]) >= 1e-6;
        }
        std::iota(perm.begin(), perm.end(), 0);
        cplx lhs = 0.0;
        do {
            cplx term = 1.0;
            for (int i = 0; i < k; ++i)
                for (int j = i + 1; j < k; ++j) {
                    const cplx a = xi[perm[i]], b = xi[perm[j]];
                    term *= (mp.u + mp.v * a * b - a) / (b - a);
                }
            lhs += term;
        } while (std::next_permutation(perm.begin(), perm.end()));
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

}  // namespace madm::exact
