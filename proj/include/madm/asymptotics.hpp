#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "madm/model.hpp"

namespace madm::asym {

// Ai and Ai' for |x| <= 40: power series in long double on [-8, 6],
// large-argument expansions outside.
double airy_ai(double x);
double airy_ai_prime(double x);

double airy_kernel(double x, double y);

// Gauss-Legendre nodes and weights on (0, 1).
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

// F2(s) = det(I - K_Airy) on L^2(s, inf), Nystrom with n Gauss-Legendre nodes
// under xi = s + L u/(1 - u), L = kF2MapScale, and symmetrized weights.
inline constexpr double kF2MapScale = 4.0;
double f2(double s, int n = 60);

enum class Constants {
    Stated,     // c1 = -1 + 2 sqrt(sigma), c2 = sigma^{-1/6}(1 - sqrt(sigma))^{2/3}, limit 1 - F2(-y)
    Corrected,  // drift 1 + 2 sqrt(sigma), c2 = sigma^{-1/6}(1 + sqrt(sigma))^{2/3}, limit F2(y)
};

struct ScalingConstants {
    double sigma = 0;
    double c1 = 0;
    double c2 = 0;
};

// The stated constants.
ScalingConstants scaling_constants(double sigma);
// Rescaled variable y = (x - center t)/(scale t^{1/3}) and the limit CDF at y.
struct Rescaling {
    Constants kind = Constants::Stated;
    ScalingConstants c;
    double t = 0;
    double center() const;  // x ~ center * t
    double scale() const;   // c2
    double rescale(double x) const;
    double limit_cdf(double y) const;
};
Rescaling make_rescaling(double sigma, double t, Constants kind);

struct TWOptions {
    double sigma = 0.25;
    double t = 50;  // formula time; the simulator runs to t/gamma
    ModelParams params;
    long replicas = 20000;
    uint64_t seed = 1;
    long n_big = 0;  // 0 selects max(4m, 64)
    int threads = 1;
    Constants constants = Constants::Stated;
    std::vector<double> s_grid;  // empty selects -6..4 step 0.25
};

struct TWComparison {
    int m = 0;
    double sigma_realized = 0;  // m/t
    double sigma_used = 0;      // m/t (stated) or (m - 1)/t (corrected)
    Rescaling scaling;
    std::vector<double> s_grid;
    std::vector<double> empirical;
    std::vector<double> stderrs;
    std::vector<double> limit;
    double ks_distance = 0;  // exact sup over the lattice jump points
    double ks_location = 0;
    double mean_rescaled = 0;
    nlohmann::json meta;
};

// KS distance between the step CDF of rescaled lattice samples and the limit.
double ks_distance(const std::vector<long>& samples, const Rescaling& r, double* where = nullptr);

// m = round(sigma t) and x_m samples of the step-initial system at t/gamma.
int tw_index(const TWOptions& opt);
std::vector<long> tw_samples(const TWOptions& opt);
// Compares samples against the limit under opt.constants. The corrected
// centering uses (m - 1)/t, the exponent of zeta in the one-parameter kernel.
TWComparison tw_compare(const std::vector<long>& samples, const TWOptions& opt);
TWComparison tw_experiment(const TWOptions& opt);

}  // namespace madm::asym
