#pragma once

#include <cstdint>
#include <vector>

#include "madm/model.hpp"

namespace madm::exact {

struct Window {
    long lo = -30;
    long hi = 30;
};

struct MasterResult {
    std::vector<double> cdf;  // P(x_m(t) <= x) for each requested x
    double leak = 0;          // 1 - retained mass
    size_t states = 0;
    size_t steps = 0;
};

struct MasterOptions {
    Window window;
    double tol = 1e-10;        // local error tolerance of the adaptive integrator
    double max_leak = 1e-9;
    size_t max_steps = 2000000;
};

// Forward equations of the finite system on the multiset states inside the
// window; t is physical time. Throws ToleranceError if the leak exceeds max_leak.
MasterResult master_equation_cdf(const std::vector<long>& Y, int m, const std::vector<long>& xs, double t,
                                 const ModelParams& mp, const MasterOptions& opt = {});
double master_equation_prob(const std::vector<long>& Y, int m, long x, double t, const ModelParams& mp,
                            const MasterOptions& opt = {}, double* leak = nullptr);

// Number of sorted N-tuples over W sites, C(W + N - 1, N).
uint64_t multiset_count(int W, int N);
// Rank of a sorted tuple a_0 <= ... <= a_{N-1} of offsets in [0, W).
uint64_t multiset_rank(const std::vector<int>& a);

struct ContourResult {
    double prob = 0;
    double imag_residual = 0;
    double min_denominator = 0;  // min |u + v xi_i xi_j - xi_j| over the grid
    int nodes = 0;
};

struct ContourOptions {
    int nodes = 0;              // 0 selects auto_contour_nodes(R_1)
    std::vector<double> radii;  // empty selects R_i = 1 + i (1/tau - 1)/(N + 2)
    double max_imag = 1e-8;
};

// Multi-contour formula for P^Y(x_m(t) <= x), N = |Y| <= 4; t is the time in
// the exponent e^{eps(xi) t}, i.e. physical time.
ContourResult contour_prob_finite(const std::vector<long>& Y, int m, long x, double t, const ModelParams& mp,
                                  const ContourOptions& opt = {});
std::vector<double> default_radii(int N, double tau);
// The pole of 1/(1 - xi) at 1 limits trapezoid convergence to R_1^{-M};
// M targets 1e-11 (at least 64, multiple of 8).
int auto_contour_nodes(double inner_radius);

struct SumCheck {
    double lhs = 0;
    double rhs = 0;
};

// Sum of tau^{z_1+...+z_k} over strict k-subsets of {1..n_cap} versus
// tau^{k(k+1)/2} / prod_{i<=k}(1 - tau^i).
SumCheck strict_partition_sum_check(int k, double tau, int n_cap);

// Max |lhs - rhs| of the symmetrization identity
// sum_{sigma in S_k} prod_{i<j} (u + v xs_i xs_j - xs_i)/(xs_j - xs_i) = u^{k(k-1)/2} prod_{i<=k} [i]_tau
// with xs = xi_sigma, over `samples` random complex point sets.
double symmetrization_identity_check(int k, const ModelParams& mp, int samples, uint64_t seed = 1);

}  // namespace madm::exact
