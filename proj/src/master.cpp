#include <algorithm>
#include <functional>
#include <string>

#include <boost/numeric/odeint.hpp>

#include "madm/errors.hpp"
#include "madm/exact.hpp"

namespace madm::exact {

namespace {

struct BinomialTable {
    std::vector<std::vector<uint64_t>> c;
    explicit BinomialTable(int n) : c(n + 1, std::vector<uint64_t>(n + 1, 0)) {
        for (int i = 0; i <= n; ++i) {
            c[i][0] = 1;
            for (int j = 1; j <= i; ++j) c[i][j] = c[i - 1][j - 1] + c[i - 1][j];
        }
    }
};

// Sparse forward generator over ranked multiset states. Each state lists
// the states its stack moves lead to; moves that leave the window are dropped
// and show up as leaked mass.
struct Generator {
    std::vector<double> exit_rate;
    std::vector<uint64_t> offset;  // CSR row starts, size states+1
    std::vector<uint32_t> target;
    std::vector<double> rate;

    void operator()(const std::vector<double>& p, std::vector<double>& dp, double /*t*/) const {
        const size_t n = exit_rate.size();
        for (size_t s = 0; s < n; ++s) dp[s] = -exit_rate[s] * p[s];
        for (size_t s = 0; s < n; ++s) {
            const double ps = p[s];
            if (ps == 0.0) continue;
            for (uint64_t e = offset[s]; e < offset[s + 1]; ++e) dp[target[e]] += rate[e] * ps;
        }
    }
};

void for_each_state(int W, int N, std::vector<int>& a, int i, int start,
                    const std::function<void(const std::vector<int>&)>& f) {
    if (i == N) {
        f(a);
        return;
    }
    for (int v = start; v < W; ++v) {
        a[i] = v;
        for_each_state(W, N, a, i + 1, v, f);
    }
}

}  // namespace

uint64_t multiset_count(int W, int N) {
    BinomialTable b(W + N);
    return b.c[W + N - 1][N];
}

uint64_t multiset_rank(const std::vector<int>& a) {
    const int N = static_cast<int>(a.size());
    const int top = N == 0 ? 0 : a.back() + N;
    BinomialTable b(top + 1);
    uint64_t r = 0;
    for (int i = 0; i < N; ++i) r += b.c[a[i] + i][i + 1];
    return r;
}

MasterResult master_equation_cdf(const std::vector<long>& Y, int m, const std::vector<long>& xs, double t,
                                 const ModelParams& mp, const MasterOptions& opt) {
    const int N = static_cast<int>(Y.size());
    require(N >= 1 && N <= 4, "master equation supports 1 <= N <= 4 particles");
    require(m >= 1 && m <= N, "m must lie in 1..N");
    require(t >= 0, "time must be non-negative");
    require(opt.window.lo < opt.window.hi, "empty master-equation window");
    std::vector<long> ys = Y;
    std::sort(ys.begin(), ys.end());
    require(ys.front() >= opt.window.lo && ys.back() <= opt.window.hi, "initial positions must lie in the window");

    const int W = static_cast<int>(opt.window.hi - opt.window.lo + 1);
    const BinomialTable bin(W + N);
    const uint64_t count = bin.c[W + N - 1][N];
    require(count < (uint64_t(1) << 32), "master-equation state space too large");
    const auto rank = [&](const std::vector<int>& a) {
        uint64_t r = 0;
        for (int i = 0; i < N; ++i) r += bin.c[a[i] + i][i + 1];
        return r;
    };

    std::vector<double> Rn(N + 1), Ln(N + 1);
    for (int n = 1; n <= N; ++n) {
        Rn[n] = rate_right(n, mp);
        Ln[n] = rate_left(n, mp);
    }

    Generator gen;
    gen.exit_rate.assign(count, 0.0);
    std::vector<std::vector<std::pair<uint32_t, double>>> rows(count);
    std::vector<int> mth(count);  // offset of the m-th particle in each state
    std::vector<int> a(N), b(N);
    for_each_state(W, N, a, 0, 0, [&](const std::vector<int>& st) {
        const uint64_t s = rank(st);
        mth[s] = st[m - 1];
        auto& row = rows[s];
        for (int j = 0; j < N;) {
            int e = j;
            while (e < N && st[e] == st[j]) ++e;
            const int c = e - j;  // stack st[j..e-1]
            for (int n = 1; n <= c; ++n) {
                gen.exit_rate[s] += Rn[n] + Ln[n];
                if (st[j] + 1 < W) {  // top n move right
                    b = st;
                    for (int i = e - n; i < e; ++i) b[i] += 1;
                    row.emplace_back(static_cast<uint32_t>(rank(b)), Rn[n]);
                }
                if (st[j] - 1 >= 0) {  // bottom n move left
                    b = st;
                    for (int i = j; i < j + n; ++i) b[i] -= 1;
                    row.emplace_back(static_cast<uint32_t>(rank(b)), Ln[n]);
                }
            }
            j = e;
        }
    });
    gen.offset.assign(count + 1, 0);
    for (uint64_t s = 0; s < count; ++s) gen.offset[s + 1] = gen.offset[s] + rows[s].size();
    gen.target.reserve(gen.offset[count]);
    gen.rate.reserve(gen.offset[count]);
    for (auto& row : rows) {
        for (const auto& [tg, r] : row) {
            gen.target.push_back(tg);
            gen.rate.push_back(r);
        }
        std::vector<std::pair<uint32_t, double>>().swap(row);
    }

    std::vector<double> p(count, 0.0);
    std::vector<int> y0(N);
    for (int i = 0; i < N; ++i) y0[i] = static_cast<int>(ys[i] - opt.window.lo);
    p[rank(y0)] = 1.0;

    MasterResult res;
    res.states = count;
    if (t > 0) {
        namespace ode = boost::numeric::odeint;
        using Stepper = ode::runge_kutta_dopri5<std::vector<double>>;
        auto stepper = ode::make_controlled(opt.tol, opt.tol, Stepper());
        size_t steps = 0;
        const auto observe = [&](const std::vector<double>&, double) {
            if (++steps > opt.max_steps)
                throw ToleranceError("master equation: step budget exhausted (step size collapsed)");
        };
        const auto sys = [&gen](const std::vector<double>& x, std::vector<double>& dx, double tt) { gen(x, dx, tt); };
        ode::integrate_adaptive(stepper, sys, p, 0.0, t, std::min(0.01, t), observe);
        res.steps = steps;
    }

    double mass = 0.0;
    for (double v : p) mass += v;
    res.leak = std::max(0.0, 1.0 - mass);
    if (res.leak > opt.max_leak)
        throw ToleranceError("master equation: window leak " + num(res.leak) + " exceeds " +
                             num(opt.max_leak) + "; widen the window");

    res.cdf.assign(xs.size(), 0.0);
    for (size_t k = 0; k < xs.size(); ++k) {
        const long lim = xs[k] - opt.window.lo;
        double s = 0.0;
        for (uint64_t st = 0; st < count; ++st)
            if (mth[st] <= lim) s += p[st];
        res.cdf[k] = s;
    }
    return res;
}

double master_equation_prob(const std::vector<long>& Y, int m, long x, double t, const ModelParams& mp,
                            const MasterOptions& opt, double* leak) {
    const MasterResult r = master_equation_cdf(Y, m, {x}, t, mp, opt);
    if (leak) *leak = r.leak;
    return r.cdf[0];
}

}  // namespace madm::exact
