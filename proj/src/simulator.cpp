#include "madm/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "madm/errors.hpp"
#include "madm/parallel.hpp"

namespace madm::sim {

ReplicaRng::ReplicaRng(uint64_t seed, uint64_t stream) {
    std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32), static_cast<uint32_t>(stream),
                      static_cast<uint32_t>(stream >> 32)};
    engine_.seed(seq);
}

double ReplicaRng::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

double ReplicaRng::exponential(double rate) { return std::exponential_distribution<double>(rate)(engine_); }

int peel_depth(const ModelParams& mp, double tol) {
    int n = 1;
    while (mp.q * std::pow(mp.tau, n) / (1.0 - mp.tau) >= tol) ++n;
    return n;
}

std::vector<Event> enabled_events(const Configuration& c, const ModelParams& mp, int n_max_peel) {
    std::vector<Event> ev;
    for (const auto& [x, occ] : c.sites) {
        if (occ.infinite) {
            ev.push_back({x, Direction::Right, kAll, rate_right(infinity, mp)});
            for (long n = 1; n <= n_max_peel; ++n) ev.push_back({x, Direction::Left, n, rate_left(n, mp)});
            continue;
        }
        for (long n = 1; n <= occ.count; ++n) {
            ev.push_back({x, Direction::Right, n, rate_right(n, mp)});
            ev.push_back({x, Direction::Left, n, rate_left(n, mp)});
        }
    }
    return ev;
}

Configuration apply_event(const Configuration& c, const Event& e) {
    Configuration out = c;
    auto it = out.sites.find(e.site);
    require(it != out.sites.end(), "event at an empty site");
    Occupancy& src = it->second;
    const long dest = e.dir == Direction::Right ? e.site + 1 : e.site - 1;
    if (src.infinite) {
        if (e.n == kAll) {
            require(e.dir == Direction::Right, "only the right jump moves the whole pile");
            out.sites.erase(it);
            out.sites[dest] = Occupancy::pile();
        } else {
            out.sites[dest].count += e.n;
        }
        return out;
    }
    require(e.n >= 1 && e.n <= src.count, "stack size exceeds the site occupancy");
    src.count -= e.n;
    if (src.count == 0) out.sites.erase(it);
    Occupancy& d = out.sites[dest];
    if (!d.infinite) d.count += e.n;  // merging into the pile leaves it infinite
    return out;
}

std::pair<Configuration, double> step(const Configuration& c, const ModelParams& mp, ReplicaRng& rng,
                                      int n_max_peel) {
    const std::vector<Event> ev = enabled_events(c, mp, n_max_peel);
    require(!ev.empty(), "step on an empty system");
    double total = 0;
    for (const Event& e : ev) total += e.rate;
    const double dt = rng.exponential(total);
    double r = rng.uniform() * total;
    size_t k = 0;
    for (; k + 1 < ev.size(); ++k) {
        if (r < ev[k].rate) break;
        r -= ev[k].rate;
    }
    return {apply_event(c, ev[k]), dt};
}

SimConfig SimConfig::finite(const ModelParams& mp, const std::vector<long>& ys, double t_end) {
    SimConfig c;
    c.params = mp;
    c.init = Configuration::from_positions(ys);
    c.kind = InitKind::Finite;
    c.t_end = t_end;
    return c;
}

SimConfig SimConfig::step_initial(const ModelParams& mp, double t_end, long n_big, InitKind kind) {
    require(kind != InitKind::Finite, "step initial condition needs the stack or pile variant");
    SimConfig c;
    c.params = mp;
    c.kind = kind;
    c.t_end = t_end;
    c.n_big = n_big;
    c.init = kind == InitKind::Pile ? Configuration::pile_at(0) : Configuration::from_positions(std::vector<long>(n_big, 0));
    return c;
}

void SimConfig::validate() const {
    require(replicas >= 1, "replicas must be >= 1");
    require(t_end >= 0 && std::isfinite(t_end), "t_end must be finite and non-negative");
    require(init.valid(), "initial configuration violates the site rules");
    require(!init.sites.empty(), "empty initial configuration");
    require(n_max_peel >= 0, "n_max_peel must be non-negative");
    if (kind == InitKind::Finite) {
        require(!init.has_pile(), "finite mode cannot hold the infinite site");
    } else {
        require(n_big >= 16, "n_big must be at least 16");
        if (kind == InitKind::Stack) require(init.particle_total() == n_big, "stack mode needs n_big particles");
        if (kind == InitKind::Pile) require(init.has_pile(), "pile mode needs the infinite site");
    }
}

long SimConfig::tracked() const { return kind == InitKind::Finite ? init.particle_total() : n_big; }

nlohmann::json SimConfig::to_json() const {
    nlohmann::json sites = nlohmann::json::array();
    for (const auto& [x, o] : init.sites)
        sites.push_back({{"site", x}, {"count", o.infinite ? nlohmann::json("inf") : nlohmann::json(o.count)}});
    const char* k = kind == InitKind::Finite ? "finite" : kind == InitKind::Stack ? "stack" : "pile";
    return {{"params", params.to_json()},
            {"init", sites},
            {"mode", k},
            {"t_end_physical", t_end},
            {"replicas", replicas},
            {"seed", seed},
            {"n_big", n_big},
            {"n_max_peel", n_max_peel > 0 ? n_max_peel : peel_depth(params)},
            {"engine", reference_engine ? "reference" : "fenwick"}};
}

namespace {

// Fenwick tree over per-site total rates with a descent search.
class Fenwick {
public:
    explicit Fenwick(size_t n) : tree_(n + 1, 0.0), value_(n, 0.0) {
        for (top_ = 1; top_ * 2 <= n; top_ *= 2) {
        }
    }
    size_t size() const { return value_.size(); }
    double value(size_t i) const { return value_[i]; }
    void set(size_t i, double v) {
        const double d = v - value_[i];
        value_[i] = v;
        for (size_t j = i + 1; j < tree_.size(); j += j & (~j + 1)) tree_[j] += d;
    }
    double total() const {
        double s = 0;
        for (size_t j = value_.size(); j > 0; j -= j & (~j + 1)) s += tree_[j];
        return s;
    }
    // Smallest i with prefix(i + 1) > r, with r reduced by prefix(i); i == size() if none.
    std::pair<size_t, double> find(double r) const {
        size_t pos = 0;
        for (size_t b = top_; b > 0; b >>= 1) {
            if (pos + b < tree_.size() && tree_[pos + b] <= r) {
                pos += b;
                r -= tree_[pos];
            }
        }
        return {pos, r};
    }
    void rebuild() {
        std::fill(tree_.begin(), tree_.end(), 0.0);
        for (size_t i = 0; i < value_.size(); ++i) {
            const size_t j = i + 1;
            tree_[j] += value_[i];
            const size_t up = j + (j & (~j + 1));
            if (up < tree_.size()) tree_[up] += tree_[j];
        }
    }

private:
    std::vector<double> tree_, value_;
    size_t top_ = 1;
};

// Cumulative rates of a finite stack, ordered R_1, L_1, R_2, L_2, ...
class StackRates {
public:
    explicit StackRates(const ModelParams& mp) : mp_(mp), cum_{0.0} {}
    double total(long c) {
        grow(c);
        return cum_[2 * c];
    }
    // r in [0, total(c)); returns (direction, n)
    std::pair<Direction, long> pick(long c, double r) {
        const auto first = cum_.begin() + 1, last = cum_.begin() + 2 * c + 1;
        auto it = std::upper_bound(first, last, r);
        if (it == last) --it;
        const long idx = it - cum_.begin();
        return {idx % 2 ? Direction::Right : Direction::Left, (idx + 1) / 2};
    }

private:
    void grow(long c) {
        while (static_cast<long>(cum_.size()) <= 2 * c) {
            const long n = static_cast<long>(cum_.size() + 1) / 2;
            cum_.push_back(cum_.back() + rate_right(n, mp_));
            cum_.push_back(cum_.back() + rate_left(n, mp_));
        }
    }
    ModelParams mp_;
    std::vector<double> cum_;
};

class Lattice {
public:
    Lattice(const SimConfig& cfg, int peel) : cfg_(cfg), rates_(cfg.params), fen_(0) {
        const long lo = cfg.init.sites.begin()->first, hi = cfg.init.sites.rbegin()->first;
        const long span = hi - lo + 1;
        const size_t w = std::max<size_t>(256, 4 * static_cast<size_t>(span));
        origin_ = lo - static_cast<long>(w - span) / 2;
        count_.assign(w, 0);
        for (const auto& [x, o] : cfg.init.sites) {
            if (o.infinite)
                pile_ = x - origin_;
            else
                count_[x - origin_] = o.count;
        }
        pile_cum_.push_back(rate_right(infinity, cfg.params));
        for (long n = 1; n <= peel; ++n) pile_cum_.push_back(pile_cum_.back() + rate_left(n, cfg.params));
        reset_tree();
    }

    std::vector<long> run(ReplicaRng& rng) {
        double t = 0;
        uint64_t events = 0;
        for (;;) {
            const double total = fen_.total();
            if (!(total > 0)) break;
            t += rng.exponential(total);
            if (t > cfg_.t_end) break;
            if (++events > cfg_.max_events)
                throw ToleranceError("simulation exceeded " + std::to_string(cfg_.max_events) + " events");
            fire(rng.uniform() * total);
            if (events % (1u << 20) == 0) fen_.rebuild();  // bound floating drift
        }
        return readout();
    }

private:
    void reset_tree() {
        fen_ = Fenwick(count_.size());
        for (size_t i = 0; i < count_.size(); ++i) fen_.set(i, site_rate(i));
    }
    double site_rate(size_t i) {
        if (static_cast<long>(i) == pile_) return pile_cum_.back();
        return count_[i] > 0 ? rates_.total(count_[i]) : 0.0;
    }
    void refresh(long i) { fen_.set(static_cast<size_t>(i), site_rate(static_cast<size_t>(i))); }

    // Keeps both neighbours of site i inside the array; returns i after any shift.
    long ensure_room(long i) {
        if (i >= 1 && i + 1 < static_cast<long>(count_.size())) return i;
        const size_t w = count_.size();
        std::vector<long> wider(2 * w, 0);
        const long shift = static_cast<long>(w / 2);
        std::copy(count_.begin(), count_.end(), wider.begin() + shift);
        count_.swap(wider);
        origin_ -= shift;
        if (pile_ >= 0) pile_ += shift;
        reset_tree();
        return i + shift;
    }

    void fire(double r) {
        auto [i, rest] = fen_.find(r);
        if (i >= fen_.size() || fen_.value(i) <= 0) {
            // rounding at the top of the range: take the last active site
            fen_.rebuild();
            i = fen_.size();
            while (i > 0 && fen_.value(i - 1) <= 0) --i;
            --i;
            rest = fen_.value(i);
        }
        rest = std::clamp(rest, 0.0, fen_.value(i));
        const long s = ensure_room(static_cast<long>(i));
        if (s == pile_) {
            if (rest < pile_cum_.front()) {
                pile_ = s + 1;
                refresh(s);
                refresh(s + 1);
                return;
            }
            auto it = std::upper_bound(pile_cum_.begin() + 1, pile_cum_.end(), rest);
            if (it == pile_cum_.end()) --it;
            count_[s - 1] += it - pile_cum_.begin();
            refresh(s - 1);
            return;
        }
        const auto [dir, n] = rates_.pick(count_[s], rest);
        const long d = dir == Direction::Right ? s + 1 : s - 1;
        count_[s] -= n;
        if (d != pile_) count_[d] += n;  // merging into the pile leaves it infinite
        refresh(s);
        refresh(d);
    }

    std::vector<long> readout() const {
        std::vector<long> pos;
        const long want = cfg_.tracked();
        pos.reserve(want);
        for (size_t i = 0; i < count_.size() && static_cast<long>(pos.size()) < want; ++i) {
            if (static_cast<long>(i) == pile_) {
                while (static_cast<long>(pos.size()) < want) pos.push_back(static_cast<long>(i) + origin_);
                break;
            }
            for (long k = 0; k < count_[i] && static_cast<long>(pos.size()) < want; ++k)
                pos.push_back(static_cast<long>(i) + origin_);
        }
        return pos;
    }

    const SimConfig& cfg_;
    StackRates rates_;
    Fenwick fen_;
    std::vector<long> count_;
    std::vector<double> pile_cum_;  // R_inf, then cumulative L_1..L_peel
    long origin_ = 0;
    long pile_ = -1;
};

std::vector<long> run_reference(const SimConfig& cfg, int peel, ReplicaRng& rng) {
    Configuration c = cfg.init;
    double t = 0;
    uint64_t events = 0;
    for (;;) {
        auto [next, dt] = step(c, cfg.params, rng, peel);
        t += dt;
        if (t > cfg.t_end) break;
        if (++events > cfg.max_events)
            throw ToleranceError("simulation exceeded " + std::to_string(cfg.max_events) + " events");
        c = std::move(next);
    }
    std::vector<long> pos;
    const long want = cfg.tracked();
    for (const auto& [x, o] : c.sites) {
        const long k = o.infinite ? want : o.count;
        for (long j = 0; j < k && static_cast<long>(pos.size()) < want; ++j) pos.push_back(x);
    }
    return pos;
}

}  // namespace

std::vector<long> run_replica(const SimConfig& cfg, uint64_t replica) {
    cfg.validate();
    const int peel = cfg.n_max_peel > 0 ? cfg.n_max_peel : peel_depth(cfg.params);
    ReplicaRng rng(cfg.seed, replica);
    if (cfg.reference_engine) return run_reference(cfg, peel, rng);
    Lattice lat(cfg, peel);
    return lat.run(rng);
}

std::vector<long> sample_xm(const SimConfig& cfg, int m) {
    cfg.validate();
    require(m >= 1 && m <= cfg.tracked(), "m exceeds the number of tracked particles");
    if (cfg.kind != InitKind::Finite)
        require(cfg.n_big >= std::max<long>(4L * m, 16), "n_big must be at least max(4m, 16)");
    std::vector<long> out(static_cast<size_t>(cfg.replicas));
    parallel_for(out.size(), cfg.threads, [&](size_t r) { out[r] = run_replica(cfg, r)[m - 1]; });
    return out;
}

EmpiricalCDF cdf_from_samples(const std::vector<long>& samples, const std::vector<long>& xs) {
    require(!samples.empty(), "no samples");
    std::vector<long> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    EmpiricalCDF e;
    e.xs = xs;
    e.replicas = static_cast<long>(samples.size());
    const double n = static_cast<double>(samples.size());
    for (long x : xs) {
        const double p = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), x) - sorted.begin()) / n;
        e.values.push_back(p);
        e.stderrs.push_back(std::sqrt(p * (1 - p) / n));
    }
    return e;
}

EmpiricalCDF empirical_cdf(const SimConfig& cfg, int m, const std::vector<long>& xs) {
    return cdf_from_samples(sample_xm(cfg, m), xs);
}

}  // namespace madm::sim
