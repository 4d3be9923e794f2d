#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include <json.hpp>

#include "madm/model.hpp"

namespace madm::sim {

// Per-replica generator seeded from (seed, stream) alone, so a replica never
// depends on what other replicas drew.
class ReplicaRng {
public:
    ReplicaRng(uint64_t seed, uint64_t stream);
    double uniform();  // [0, 1)
    double exponential(double rate);

private:
    std::mt19937_64 engine_;
};

enum class Direction { Right, Left };
inline constexpr long kAll = -1;  // right jump of the whole pile

struct Event {
    long site = 0;
    Direction dir = Direction::Right;
    long n = 1;  // stack size, or kAll
    double rate = 0;
    bool operator==(const Event&) const = default;
};

// Smallest n with sum_{k>n} L_k < tol, using L_k <= q tau^{k-1}.
int peel_depth(const ModelParams& mp, double tol = 1e-10);

std::vector<Event> enabled_events(const Configuration& c, const ModelParams& mp, int n_max_peel);
Configuration apply_event(const Configuration& c, const Event& e);
// Gillespie step over the explicit event list; rejects an empty system.
std::pair<Configuration, double> step(const Configuration& c, const ModelParams& mp, ReplicaRng& rng,
                                      int n_max_peel);

enum class InitKind { Finite, Stack, Pile };

struct SimConfig {
    ModelParams params;
    Configuration init;
    InitKind kind = InitKind::Finite;
    double t_end = 0;  // physical time
    long replicas = 1;
    uint64_t seed = 1;
    long n_big = 0;       // particles reported per replica in step modes
    int n_max_peel = 0;   // 0 selects peel_depth(params)
    int threads = 1;
    bool reference_engine = false;  // explicit event list instead of the Fenwick engine
    uint64_t max_events = 1000000000;

    static SimConfig finite(const ModelParams& mp, const std::vector<long>& ys, double t_end);
    // Stack: n_big particles at 0. Pile: the infinite site at 0, tracking n_big.
    static SimConfig step_initial(const ModelParams& mp, double t_end, long n_big, InitKind kind = InitKind::Stack);

    void validate() const;
    long tracked() const;  // particles reported by run_replica
    nlohmann::json to_json() const;
};

// Sorted positions at t_end: every particle (finite) or the tracked leftmost
// ones, the pile counting as infinitely many particles at its site.
std::vector<long> run_replica(const SimConfig& cfg, uint64_t replica);

// x_m for every replica, in replica order.
std::vector<long> sample_xm(const SimConfig& cfg, int m);

struct EmpiricalCDF {
    std::vector<long> xs;
    std::vector<double> values;
    std::vector<double> stderrs;
    long replicas = 0;
};

EmpiricalCDF cdf_from_samples(const std::vector<long>& samples, const std::vector<long>& xs);
EmpiricalCDF empirical_cdf(const SimConfig& cfg, int m, const std::vector<long>& xs);

}  // namespace madm::sim
