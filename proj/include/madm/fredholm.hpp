#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "madm/contour.hpp"
#include "madm/model.hpp"

namespace madm::fred {

using Matrix = Eigen::MatrixXcd;
using Kernel = std::function<cplx(cplx, cplx)>;

struct KernelParams {
    long x = 0;
    double t = 1.0;  // formula time
    int m = 1;
    ModelParams params;
    double tail = 1e-12;  // target for every truncated series or product
};

// A_{jk} = kernel(z_j, z_k) w_k
struct DiscretizedOperator {
    Quadrature quad;
    Matrix matrix;
};

DiscretizedOperator discretize(const Kernel& k, const Quadrature& quad);
// det(I - lambda A) by LU with partial pivoting
cplx det_i_minus(const Matrix& A, cplx lambda);
cplx nystrom_det(const DiscretizedOperator& op, cplx lambda);
cplx nystrom_det(const Kernel& k, const Quadrature& quad, cplx lambda);

// sum_{k <= k_max} (-lambda)^k/k! sum_{j_1..j_k} det[K(z_{j_a}, z_{j_b})] prod w.
// Throws ToleranceError when the term-ratio tail estimate exceeds tail_tol.
cplx fredholm_series_det(const Kernel& k, const Quadrature& quad, cplx lambda, int k_max,
                         double tail_tol = 1e-9);

// prod_{k=1}^{n} (1 - lambda tau^k)
cplx finite_product(cplx lambda, double tau, int n);
// Smallest n with |lambda| tau^{n+1}/(1 - tau) < tol, i.e. the tail of the
// infinite product prod_{k>=1}(1 - lambda tau^k) is below tol.
int product_depth(cplx lambda, double tau, double tol);
// prod_{k>=1}(1 - tau^k z), truncated by product_depth
cplx shifted_pochhammer(cplx z, double tau, double tol);

// ---- two-parameter representation ----

cplx energy(cplx xi, const ModelParams& mp);  // p/xi + q xi - 1
cplx kernel_K(cplx xi, cplx xip, const KernelParams& kp);

struct TwoParamQuad {
    int kernel_nodes = 128;
    int lambda_nodes = 64;
    double lambda_radius_factor = 1.5;  // lambda circle radius = factor * tau^{-m}
    double clustering = 0.8;
    double xi_radius = 0;  // 0 selects (1 + 1/tau)/2
    bool refine = true;    // also evaluate at doubled kernel_nodes
    int threads = 1;
};

struct ProbResult {
    double prob = 0;
    double imag_residual = 0;
    double refine_delta = 0;  // |P(2M) - P(M)|, 0 when refinement is off
    nlohmann::json meta;
};

Quadrature two_param_contour(const ModelParams& mp, const TwoParamQuad& q, int nodes);
Matrix two_param_matrix(const KernelParams& kp, const Quadrature& quad);
ProbResult prob_two_param(const QueryPoint& qp, const ModelParams& mp, const TwoParamQuad& q = {});

// ---- one-parameter representation ----

struct FSumDepth {
    int pos = 0;  // terms k = 1..pos
    int neg = 0;  // terms k = -1..-neg
};
FSumDepth f_sum_depth(cplx mu, cplx z, double tau, double tol);
// sum_{k in Z} tau^k z^k/(1 - tau^k mu) for 1 < |z| < 1/tau
cplx f_sum(cplx mu, cplx z, double tau, double tol = 1e-14);

cplx ipow(cplx z, long n);
// ((1-zeta)/(1-etap))^x exp((zeta/(1-zeta) - etap/(1-etap)) t) (zeta/etap)^power
cplx lambda_weight(cplx zeta, cplx etap, long x, double t, long power);

// Radii of the eta circle and of the zeta ring (outer circle counterclockwise
// minus inner circle), plus the mu circle.
struct OneParamContours {
    double eta_radius = 0;
    double inner_radius = 0;
    double outer_radius = 0;
    double mu_radius = 0;
    int nodes = 0;     // per circle; 0 selects auto_nodes(tau)
    int mu_nodes = 0;  // 0 selects auto_mu_nodes(mu_radius)

    static OneParamContours defaults(double tau);
    // The ring quadrature error decays like tau^{0.15 M}; M is the smallest
    // multiple of 64, at least 256, with tau^{0.15 M} <= 3e-12.
    static int auto_nodes(double tau);
    // Trapezoid aliasing on the mu circle decays like mu_radius^{-L} (the
    // integrand's singularities sit on |mu| <= 1); L targets 1e-14.
    static int auto_mu_nodes(double mu_radius);
    void validate(double tau) const;
};

// Ring quadrature: outer circle ccw plus inner circle cw, `nodes` each.
Quadrature zeta_ring(const OneParamContours& c);

// Kernel on the eta circle. The zeta integral runs over a contour enclosing
// zeta = 1 but neither 0 nor the eta circle; zeta_quad discretizes it.
cplx kernel_J(cplx eta, cplx etap, cplx mu, const KernelParams& kp, const Quadrature& zeta_quad);

// Assembles the Nystrom matrix of kernel_J on the eta circle for every mu of
// interest. Quantities that do not depend on mu are built once.
class OneParamOperator {
public:
    OneParamOperator(const KernelParams& kp, const OneParamContours& c);
    Matrix matrix(cplx mu) const;
    const Quadrature& eta_quad() const { return eta_; }

private:
    KernelParams kp_;
    OneParamContours c_;
    Quadrature eta_;
    std::vector<cplx> inv_weight_;       // 1/(M E(eta_k))
    Matrix g_hat_outer_, g_hat_inner_;   // row-wise DFT of the mu-free factors
};

struct OneParamQuad {
    OneParamContours contours;  // nodes/radii; zero radii select defaults
    bool refine = true;
    int threads = 1;
};

ProbResult prob_one_param(const QueryPoint& qp, const ModelParams& mp, const OneParamQuad& q = {});

// ---- kernels on the eta circle and identity checks ----

cplx phi(cplx eta, const KernelParams& kp);
cplx kernel_K1(cplx eta, cplx etap, const KernelParams& kp);
cplx kernel_K2(cplx eta, cplx etap, const KernelParams& kp);
// (1-eta)^x e^{eta t/(1-eta)} / prod_{n>=0}(1 - tau^{n+1} eta)
cplx phi_infinity(cplx eta, const KernelParams& kp);

struct IdentityResult {
    cplx lhs;
    cplx rhs;
    double deviation = 0;
};

struct EquivalenceResult : IdentityResult {
    cplx difference_form;  // det(I - lambda (K2 - K1)) on the same circle as rhs
    double difference_deviation = 0;
};

struct IdentityQuad {
    int xi_nodes = 128;
    int eta_nodes = 128;
    double eta_radius = 0;  // 0 selects tau^{-1/2}
};

// det(I - lambda K) on the xi circle versus det(I - lambda K2) on a circle
// around 0 of radius in (1, 1/tau).
EquivalenceResult contour_equivalence(const KernelParams& kp, cplx lambda, const IdentityQuad& q = {});
// det(I - lambda K1) on a circle around 0 versus prod_{k>=1}(1 - lambda tau^k);
// eta_radius = 0 selects 1 + (1/tau - 1)/20.
IdentityResult product_identity(const KernelParams& kp, cplx lambda, int nodes = 64, double eta_radius = 0);

}  // namespace madm::fred
