#include "madm/model.hpp"

#include <cmath>
#include <string>

#include "madm/errors.hpp"

namespace madm {

ModelParams ModelParams::make(double u, double p) {
    require(std::isfinite(u) && u > 0.5 && u < 1.0, "u must lie in (1/2, 1), got " + std::to_string(u));
    require(std::isfinite(p) && p > 0.0 && p < 1.0, "p must lie in (0, 1), got " + std::to_string(p));
    ModelParams mp;
    mp.u = u;
    mp.v = 1.0 - u;
    mp.p = p;
    mp.q = 1.0 - p;
    mp.tau = mp.v / mp.u;
    mp.gamma = mp.u - mp.v;
    return mp;
}

ModelParams ModelParams::from_json(const nlohmann::json& j) {
    require(j.is_object() && j.contains("u") && j.contains("p"), "parameters need numeric fields \"u\" and \"p\"");
    require(j.at("u").is_number() && j.at("p").is_number(), "parameters \"u\" and \"p\" must be numbers");
    return make(j.at("u").get<double>(), j.at("p").get<double>());
}

nlohmann::json ModelParams::to_json() const { return {{"u", u}, {"p", p}}; }

void QueryPoint::validate() const {
    require(m >= 1, "particle index m must be >= 1");
    require(std::isfinite(t) && t > 0, "time t must be positive");
}

double q_bracket(long n, double tau) {
    require(n >= 1, "q_bracket needs n >= 1");
    require(tau > 0 && tau < 1, "tau must lie in (0, 1)");
    return (1.0 - std::pow(tau, static_cast<double>(n))) / (1.0 - tau);
}

double q_bracket(Infinity, double tau) {
    require(tau > 0 && tau < 1, "tau must lie in (0, 1)");
    return 1.0 / (1.0 - tau);
}

double rate_right(long n, const ModelParams& mp) { return mp.p / q_bracket(n, mp.tau); }

double rate_right(Infinity, const ModelParams& mp) { return mp.p * (1.0 - mp.tau); }

double rate_left(long n, const ModelParams& mp) {
    require(n >= 1, "rate_left needs n >= 1");
    const double tn = std::pow(mp.tau, static_cast<double>(n));
    return mp.q * (tn / mp.tau) * (1.0 - mp.tau) / (1.0 - tn);
}

double gaussian_binomial(int m, int r, double tau) {
    require(m >= 0 && r >= 0 && r <= m, "gaussian_binomial needs 0 <= r <= m");
    double num = 1.0, den = 1.0;
    for (int j = 0; j < r; ++j) num *= 1.0 - std::pow(tau, m - j);
    for (int j = 1; j <= r; ++j) den *= 1.0 - std::pow(tau, j);
    return num / den;
}

double uv_bracket(int k, const ModelParams& mp) {
    require(k >= 0, "bracket index must be non-negative");
    // sum_j u^{k-1-j} v^j: all terms positive, so no cancellation as u - v -> 0
    double s = 0.0, term = std::pow(mp.u, k - 1);
    for (int j = 0; j < k; ++j) {
        s += term;
        term *= mp.v / mp.u;
    }
    return s;
}

double uv_bracket_binomial(int N, int m, const ModelParams& mp) {
    require(N >= 0 && m >= 0 && m <= N, "uv_bracket_binomial needs 0 <= m <= N");
    require(N <= kUvBinomialCap, "uv_bracket_binomial is capped at N <= 64");
    double r = 1.0;
    const int lo = std::min(m, N - m);
    for (int j = 1; j <= lo; ++j) r *= uv_bracket(N - lo + j, mp) / uv_bracket(j, mp);
    return r;
}

Configuration Configuration::from_positions(const std::vector<long>& ys) {
    Configuration c;
    for (long y : ys) c.sites[y].count += 1;
    return c;
}

Configuration Configuration::pile_at(long x) {
    Configuration c;
    c.sites[x] = Occupancy::pile();
    return c;
}

long Configuration::particle_total() const {
    long n = 0;
    for (const auto& [x, o] : sites)
        if (!o.infinite) n += o.count;
    return n;
}

bool Configuration::has_pile() const {
    for (const auto& [x, o] : sites)
        if (o.infinite) return true;
    return false;
}

bool Configuration::valid() const {
    bool seen_pile = false;
    for (const auto& [x, o] : sites) {
        if (seen_pile) return false;
        if (o.infinite) {
            seen_pile = true;
        } else if (o.count <= 0) {
            return false;
        }
    }
    return true;
}

std::vector<long> Configuration::positions() const {
    std::vector<long> out;
    for (const auto& [x, o] : sites)
        if (!o.infinite) out.insert(out.end(), static_cast<size_t>(o.count), x);
    return out;
}

}  // namespace madm
