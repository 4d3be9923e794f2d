#include <cmath>
#include <numbers>
#include <string>

#include "madm/asymptotics.hpp"
#include "madm/errors.hpp"

namespace madm::asym {

namespace {

// Series/expansion crossovers. Above 6 the decaying Ai is a small difference of
// large series terms; below -8 the oscillatory expansion is accurate enough.
constexpr double kPositiveSwitch = 6.0;
constexpr double kNegativeSwitch = -8.0;

struct AiryPair {
    double ai, aip;
};

AiryPair series(double xd) {
    using ld = long double;
    const ld x = xd, x3 = x * x * x;
    const ld c1 = 1.0L / (std::cbrt(9.0L) * std::tgamma(2.0L / 3.0L));  // Ai(0)
    const ld c2 = 1.0L / (std::cbrt(3.0L) * std::tgamma(1.0L / 3.0L));  // -Ai'(0)
    ld f = 1, g = x, fp = 0, gp = 1;
    ld tf = 1, tg = x, tfp = 1, tgp = 1;
    for (int k = 1; k < 400; ++k) {
        tf *= x3 / ((3 * k - 1) * (3 * k));
        tg *= x3 / ((3 * k) * (3 * k + 1));
        tfp = k == 1 ? x * x / 2 : tfp * x3 / ((3 * k - 3) * (3 * k - 1));
        tgp *= x3 / ((3 * k) * (3 * k - 2));
        f += tf;
        g += tg;
        fp += tfp;
        gp += tgp;
        const ld tiny = 1e-24L * (1 + std::fabs(f) + std::fabs(g) + std::fabs(fp) + std::fabs(gp));
        if (std::fabs(tf) + std::fabs(tg) + std::fabs(tfp) + std::fabs(tgp) < tiny) break;
    }
    return {static_cast<double>(c1 * f - c2 * g), static_cast<double>(c1 * fp - c2 * gp)};
}

// Coefficients u_k, v_k of the large-argument expansions.
struct AsymptoticCoefficients {
    double u[40], v[40];
    AsymptoticCoefficients() {
        u[0] = v[0] = 1;
        for (int k = 1; k < 40; ++k) {
            u[k] = u[k - 1] * (6.0 * k - 5) * (6.0 * k - 3) * (6.0 * k - 1) / ((2.0 * k - 1) * 216.0 * k);
            v[k] = -(6.0 * k + 1) / (6.0 * k - 1) * u[k];
        }
    }
};

const AsymptoticCoefficients& coeffs() {
    static const AsymptoticCoefficients c;
    return c;
}

// Sums sum_k sign_k c_k z^{-k} over k = first, first + step, ... until the
// terms stop decreasing.
double optimal_sum(const double* c, double z, int first, int step, bool alternate) {
    double s = 0, prev = INFINITY;
    int sign = 1;
    for (int k = first; k < 40; k += step) {
        const double term = c[k] * std::pow(z, -k);
        if (std::fabs(term) > prev) break;
        s += sign * term;
        prev = std::fabs(term);
        if (prev < 1e-18 * std::fabs(s)) break;
        if (alternate) sign = -sign;
    }
    return s;
}

AiryPair positive_tail(double x) {
    const auto& c = coeffs();
    const double z = 2.0 / 3.0 * x * std::sqrt(x);
    const double e = std::exp(-z) / (2.0 * std::sqrt(std::numbers::pi));
    const double q = std::sqrt(std::sqrt(x));
    double su = 0, sv = 0, prev = INFINITY;
    for (int k = 0; k < 40; ++k) {
        const double zk = std::pow(z, -k);
        const double tu = c.u[k] * zk, tv = c.v[k] * zk;
        if (std::fabs(tu) > prev) break;
        su += (k % 2 ? -tu : tu);
        sv += (k % 2 ? -tv : tv);
        prev = std::fabs(tu);
        if (prev < 1e-18) break;
    }
    return {e / q * su, -e * q * sv};
}

AiryPair negative_tail(double x) {
    const auto& c = coeffs();
    const double y = -x;
    const double z = 2.0 / 3.0 * y * std::sqrt(y);
    const double q = std::sqrt(std::sqrt(y));
    const double rp = 1.0 / std::sqrt(std::numbers::pi);
    const double ph = z - std::numbers::pi / 4;
    const double ue = optimal_sum(c.u, z, 0, 2, true), uo = optimal_sum(c.u, z, 1, 2, true);
    const double ve = optimal_sum(c.v, z, 0, 2, true), vo = optimal_sum(c.v, z, 1, 2, true);
    const double ai = rp / q * (std::cos(ph) * ue + std::sin(ph) * uo);
    const double aip = rp * q * (std::sin(ph) * ve - std::cos(ph) * vo);
    return {ai, aip};
}

AiryPair airy(double x) {
    if (!(std::fabs(x) <= 40.0)) throw ValidationError("airy functions need |x| <= 40, got " + num(x));
    if (x > kPositiveSwitch) return positive_tail(x);
    if (x < kNegativeSwitch) return negative_tail(x);
    return series(x);
}

}  // namespace

double airy_ai(double x) { return airy(x).ai; }
double airy_ai_prime(double x) { return airy(x).aip; }

double airy_kernel(double x, double y) {
    if (std::fabs(x - y) < 1e-6) {
        // diagonal limit at the midpoint; K is even in x - y, so the error is O((x - y)^2)
        const double c = 0.5 * (x + y);
        const AiryPair a = airy(c);
        return a.aip * a.aip - c * a.ai * a.ai;
    }
    const AiryPair a = airy(x), b = airy(y);
    return (a.ai * b.aip - a.aip * b.ai) / (x - y);
}

}  // namespace madm::asym
