#include <cmath>

#include "madm/errors.hpp"
#include "madm/fredholm.hpp"

namespace madm::fred {

cplx phi(cplx eta, const KernelParams& kp) {
    const double tau = kp.params.tau;
    if (std::abs(1.0 - eta) < 1e-8 || std::abs(1.0 / tau - eta) < 1e-8)
        throw ValidationError("phi evaluated within 1e-8 of a singularity");
    const cplx a = 1.0 - eta, b = 1.0 - tau * eta;
    return ipow(a / b, kp.x) * std::exp((1.0 / a - 1.0 / b) * kp.t) / (1.0 / tau - eta);
}

cplx kernel_K1(cplx eta, cplx etap, const KernelParams& kp) {
    return phi(kp.params.tau * eta, kp) / (etap - kp.params.tau * eta);
}

cplx kernel_K2(cplx eta, cplx etap, const KernelParams& kp) {
    return phi(etap, kp) / (etap - kp.params.tau * eta);
}

cplx phi_infinity(cplx eta, const KernelParams& kp) {
    if (std::abs(1.0 - eta) < 1e-8) throw ValidationError("phi_infinity evaluated within 1e-8 of eta = 1");
    return ipow(1.0 - eta, kp.x) * std::exp(eta * kp.t / (1.0 - eta)) /
           shifted_pochhammer(eta, kp.params.tau, kp.tail * 1e-2);
}

namespace {

Quadrature eta_circle(double tau, int nodes, double radius) {
    const double r = radius > 0 ? radius : 1.0 / std::sqrt(tau);
    require(r > 1.0 && r < 1.0 / tau, "eta circle radius must lie in (1, 1/tau)");
    return trapezoid({0.0, r, nodes, +1});
}

}  // namespace

EquivalenceResult contour_equivalence(const KernelParams& kp, cplx lambda, const IdentityQuad& q) {
    TwoParamQuad tq;
    const Matrix A = two_param_matrix(kp, two_param_contour(kp.params, tq, q.xi_nodes));
    const Quadrature eq = eta_circle(kp.params.tau, q.eta_nodes, q.eta_radius);
    const auto k2 = [&](cplx a, cplx b) { return kernel_K2(a, b, kp); };
    const auto k21 = [&](cplx a, cplx b) { return kernel_K2(a, b, kp) - kernel_K1(a, b, kp); };
    EquivalenceResult r;
    r.lhs = det_i_minus(A, lambda);
    r.rhs = nystrom_det(k2, eq, lambda);
    r.deviation = std::abs(r.lhs - r.rhs);
    r.difference_form = nystrom_det(k21, eq, lambda);
    r.difference_deviation = std::abs(r.lhs - r.difference_form);
    return r;
}

IdentityResult product_identity(const KernelParams& kp, cplx lambda, int nodes, double eta_radius) {
    const double tau = kp.params.tau;
    // phi(tau eta) grows steeply toward its singularity at 1/tau, so the
    // circle hugs the unit circle from outside
    const double radius = eta_radius > 0 ? eta_radius : 1.0 + 0.05 * (1.0 / tau - 1.0);
    const Quadrature eq = eta_circle(tau, nodes, radius);
    const auto k1 = [&](cplx a, cplx b) { return kernel_K1(a, b, kp); };
    IdentityResult r;
    r.lhs = nystrom_det(k1, eq, lambda);
    r.rhs = finite_product(lambda, kp.params.tau, product_depth(lambda, kp.params.tau, kp.tail * 1e-2));
    r.deviation = std::abs(r.lhs - r.rhs);
    return r;
}

}  // namespace madm::fred
