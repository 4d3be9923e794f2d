#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <vector>

#include <json.hpp>

namespace madm {

using cplx = std::complex<double>;

// Tag for the limiting stack size n = infinity.
struct Infinity {};
inline constexpr Infinity infinity{};

constexpr double kConstraintTol = 1e-14;

struct ModelParams {
    double u = 0, v = 0, p = 0, q = 0;
    double tau = 0;    // v/u, stored once
    double gamma = 0;  // u - v

    // Derives v, q, tau, gamma; requires 1/2 < u < 1 and 0 < p < 1.
    static ModelParams make(double u, double p);
    static ModelParams one_param(double u) { return make(u, u); }
    static ModelParams from_json(const nlohmann::json& j);

    nlohmann::json to_json() const;
    bool one_param_mode() const { return p == u; }
};

// m-th left-most particle at formula time t (physical time t/gamma), position x.
struct QueryPoint {
    int m = 1;
    double t = 1.0;
    long x = 0;

    void validate() const;
};

// (1 - tau^n)/(1 - tau)
double q_bracket(long n, double tau);
double q_bracket(Infinity, double tau);

double rate_right(long n, const ModelParams& mp);
double rate_right(Infinity, const ModelParams& mp);
double rate_left(long n, const ModelParams& mp);

double gaussian_binomial(int m, int r, double tau);

// [k] = (u^k - v^k)/(u - v)
double uv_bracket(int k, const ModelParams& mp);
constexpr int kUvBinomialCap = 64;
double uv_bracket_binomial(int N, int m, const ModelParams& mp);

// Site state: a finite count or the infinite pile.
struct Occupancy {
    long count = 0;
    bool infinite = false;

    static Occupancy finite(long n) { return {n, false}; }
    static Occupancy pile() { return {0, true}; }
    bool operator==(const Occupancy&) const = default;
};

struct Configuration {
    std::map<long, Occupancy> sites;  // occupied sites only

    static Configuration from_positions(const std::vector<long>& ys);
    static Configuration pile_at(long x);

    long particle_total() const;  // finite particles only
    bool has_pile() const;
    // At most one pile and nothing to its right; no zero entries.
    bool valid() const;
    // Positions of finite particles, sorted, each repeated by multiplicity.
    std::vector<long> positions() const;
};

}  // namespace madm
