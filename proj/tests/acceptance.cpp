// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "tminimax/allocation.hpp"
#include "tminimax/estimators.hpp"
#include "tminimax/risk.hpp"
#include "tminimax/rng.hpp"
#include "tminimax/simulate.hpp"

using namespace tminimax;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

template <typename... Args>
std::string fmt(const char* f, Args... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

// Every composition of N into `parts` positive counts.
void for_each_composition(std::int64_t N, int parts, const std::function<void(const std::vector<std::int64_t>&)>& f) {
    std::vector<std::int64_t> c(static_cast<std::size_t>(parts), 1);
    std::function<void(int, std::int64_t)> rec = [&](int i, std::int64_t left) {
        if (i == parts - 1) {
            c[static_cast<std::size_t>(i)] = left;
            f(c);
            return;
        }
        for (std::int64_t v = 1; v <= left - (parts - 1 - i); ++v) {
            c[static_cast<std::size_t>(i)] = v;
            rec(i + 1, left - v);
        }
    };
    if (N >= parts) rec(0, N);
}

// Gradient of wt*sum_t 1/N1 + wp*sum_t 1/Ne_t + wc*sum_t 1/pool_t, written
// out per arm. Index 0 control, 1 treated, t pulse t.
std::vector<double> objective_gradient(const std::vector<double>& n, double wt, double wp, double wc, bool augmented) {
    const int T = static_cast<int>(n.size()) - 1;
    std::vector<double> g(n.size(), 0.0);
    if (wt > 0) g[1] = -wt * (T - 1) / (n[1] * n[1]);
    for (int t = 2; t <= T; ++t) {
        g[static_cast<std::size_t>(t)] -= wp / (n[static_cast<std::size_t>(t)] * n[static_cast<std::size_t>(t)]);
        if (wc == 0) continue;
        double pool = n[0];
        if (augmented)
            for (int s = t + 1; s <= T; ++s) pool += n[static_cast<std::size_t>(s)];
        const double d = wc / (pool * pool);
        g[0] -= d;
        if (augmented)
            for (int s = t + 1; s <= T; ++s) g[static_cast<std::size_t>(s)] -= d;
    }
    return g;
}

// Largest relative spread among gradient entries of active arms; zero at a
// stationary point of the Lagrangian with the sum constraint.
double stationarity_residual(const RealAllocation& a, double wt, double wp, double wc, bool augmented) {
    std::vector<double> n;
    for (int arm = 0; arm <= a.T(); ++arm) n.push_back(a[arm]);
    const auto g = objective_gradient(n, wt, wp, wc, augmented);
    double lo = 0, hi = -1e300, scale = 0;
    bool first = true;
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (n[i] == 0.0) continue;
        if (first) lo = hi = g[i], first = false;
        lo = std::min(lo, g[i]);
        hi = std::max(hi, g[i]);
        scale = std::max(scale, std::abs(g[i]));
    }
    return (hi - lo) / scale;
}

Outcome relaxed_reference() {
    Outcome o;
    const RealAllocation r = relaxed_basic(10000, 30);
    o.require(std::abs(r.n0() - 1040) <= 0.5 && std::abs(r.n1() - 1040) <= 0.5,
              fmt("N0=%.3f N1=%.3f", r.n0(), r.n1()));
    for (int t = 2; t <= 30; ++t) o.require(std::abs(r.ne(t) - 273) <= 0.5, fmt("Ne_%d=%.3f", t, r.ne(t)));
    const Allocation b = balanced(10000, 30);
    for (int arm = 0; arm <= 30; ++arm) {
        const std::int64_t c = b.count(ArmId::from_index(arm));
        o.require(c == 322 || c == 323, fmt("balanced arm %d", arm));
    }
    if (o.ok) o.detail = fmt("N0=N1=%.3f Ne=%.3f", r.n0(), r.ne(2));
    return o;
}

Outcome oracle_equivalence() {
    Outcome o;
    std::vector<ObjectiveMode> modes{ObjectiveMode::basic(), ObjectiveMode::augmented()};
    for (double rho : {0.0, 0.3, 0.5, 0.8, 1.0}) modes.push_back(ObjectiveMode::weighted(rho));
    for (int k : {1, 2}) modes.push_back(ObjectiveMode::recycling(k));
    int cases = 0;
    for (int T = 2; T <= 4; ++T)
        for (std::int64_t N = T + 1; N <= 30; ++N)
            for (const auto& mode : modes) {
                const double a = objective(integer_solve(N, T, mode), mode);
                const double b = objective(brute_force_opt(N, T, mode), mode);
                o.require(a == b, fmt("N=%lld T=%d %s: %.17g vs %.17g", static_cast<long long>(N), T, mode.name().c_str(), a, b));
                ++cases;
            }
    if (o.ok) o.detail = fmt("%d cases", cases);
    return o;
}

Outcome stationarity() {
    Outcome o;
    double worst = 0;
    const std::vector<std::pair<double, int>> sizes{{10000, 30}, {1000, 10}, {500, 5}, {57.5, 3}, {1e6, 50}};
    for (const auto& [N, T] : sizes) {
        worst = std::max(worst, stationarity_residual(relaxed_basic(N, T), 1, 2, 1, false));
        worst = std::max(worst, stationarity_residual(relaxed_augmented(N, T), 1, 2, 1, true));
        for (double rho : {0.05, 0.25, 0.5, 0.75, 0.95})
            worst = std::max(worst, stationarity_residual(relaxed_weighted(N, T, rho), rho, 1, 1 - rho, true));
        const RealAllocation h = relaxed_weighted(N, T, 0.5), a = relaxed_augmented(N, T);
        for (int arm = 0; arm <= T; ++arm)
            o.require(rel_err(h[arm], a[arm]) <= 1e-12, fmt("weighted(1/2) arm %d at N=%g T=%d", arm, N, T));
        o.require(relaxed_weighted(N, T, 0.0).n1() == 0.0, fmt("rho=0 N1 at N=%g T=%d", N, T));
        o.require(relaxed_weighted(N, T, 1.0).n0() == 0.0, fmt("rho=1 N0 at N=%g T=%d", N, T));
    }
    o.require(worst <= 1e-8, fmt("gradient spread %.3g", worst));
    if (o.ok) o.detail = fmt("max gradient spread %.2g", worst);
    return o;
}

Outcome worst_case_identity() {
    Outcome o;
    const LossSpec specs[] = {LossSpec::plugin(), LossSpec::augmented(), LossSpec::augmented(0.3),
                              LossSpec::plugin(0.8).unnormalized()};
    double worst = 0;
    int allocs = 0;
    for (int T = 2; T <= 3; ++T)
        for (std::int64_t N = T + 1; N <= 8; ++N) {
            const WorstCase w = worst_case_schedule(static_cast<std::size_t>(N), T, 0.0, 1.0);
            for_each_composition(N, T + 1, [&](const std::vector<std::int64_t>& c) {
                const Allocation a(c);
                for (const LossSpec& spec : specs) {
                    const double e = rel_err(exact_risk(a, w.schedule, spec), max_risk(a, w.vstar, spec));
                    worst = std::max(worst, e);
                    o.require(e <= 1e-12, fmt("N=%lld T=%d %s rel %.3g", static_cast<long long>(N), T, spec.name().c_str(), e));
                }
                ++allocs;
            });
        }
    const Allocation a = integer_solve(200, 5, ObjectiveMode::basic());
    const WorstCase w = worst_case_schedule(200, 5, 0.0, 1.0);
    const RiskReport r = mc_risk(a, w.schedule, LossSpec::plugin(), 100000, 20240601);
    const double bound = max_risk(a, w.vstar, LossSpec::plugin());
    const double z = std::abs(r.mc_risk - bound) / r.mc_se;
    o.require(z <= 3.0, fmt("mc %.6g vs %.6g, %.2f SE", r.mc_risk, bound, z));
    if (o.ok) o.detail = fmt("%d allocations, max rel %.2g; mc at N=200 %.2f SE off", allocs, worst, z);
    return o;
}

Outcome unbiasedness() {
    Outcome o;
    double worst = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(1000 + seed);
        const int T = 2 + static_cast<int>(seed % 2);
        const int k = 1 + static_cast<int>((seed / 2) % 2);
        const std::int64_t N = 6 + static_cast<std::int64_t>(seed % 3);
        std::vector<std::int64_t> counts(static_cast<std::size_t>(T) + 1, 1);
        for (std::int64_t extra = 0; extra < N - (T + 1); ++extra) ++counts[rng() % counts.size()];
        const auto s = oracle::random_schedule(static_cast<std::size_t>(N), T, k, rng());
        const Estimands truth = estimands(s);
        std::vector<double> l(static_cast<std::size_t>(T) + 1), d(l), g(l), b(l);
        std::uint64_t n = 0;
        for_each_assignment(Allocation(counts), ArmFamily::Pulse, [&](const AssignmentMatrix& Z) {
            const ObservedOutcomes obs = observe(Z, s);
            for (int t = 2; t <= T; ++t) {
                l[t] += lambda_hat(Z, obs, t);
                d[t] += delta_hat(Z, obs, t);
                g[t] += gamma_hat(Z, obs, t);
                b[t] += beta_hat(Z, obs, t, k);
            }
            ++n;
        });
        for (int t = 2; t <= T; ++t) {
            const double errs[] = {l[t] / n - truth.lambda.at(t), d[t] / n - truth.delta.at(t),
                                   g[t] / n - truth.delta.at(t), b[t] / n - truth.delta.at(t)};
            for (double e : errs) worst = std::max(worst, std::abs(e));
        }
    }
    o.require(worst <= 1e-12, fmt("bias %.3g", worst));
    if (o.ok) o.detail = fmt("20 schedules, max |bias| %.2g", worst);
    return o;
}

Outcome permutation_invariance() {
    Outcome o;
    const LossSpec specs[] = {LossSpec::plugin(), LossSpec::augmented(), LossSpec::recycling(1), LossSpec::recycling(2)};
    std::mt19937_64 rng(31337);
    for (const LossSpec& spec : specs)
        for (int rep = 0; rep < 100; ++rep) {
            const int T = 2 + static_cast<int>(rng() % 5);
            std::vector<std::int64_t> counts(static_cast<std::size_t>(T) + 1);
            for (auto& c : counts) c = 2 + static_cast<std::int64_t>(rng() % 4);
            const AssignmentMatrix Z = draw_assignment(Allocation(counts), ArmFamily::Pulse, rng());
            const auto s = oracle::random_schedule(Z.N(), T, 0, rng());
            Permutation p = identity_permutation(Z.N());
            std::shuffle(p.begin(), p.end(), rng);
            const double a = loss(Z, s, spec), b = loss(permute_units(Z, p), permute_units(s, p), spec);
            o.require(a == b, fmt("%s rep %d: %.17g vs %.17g", spec.name().c_str(), rep, a, b));
        }
    if (o.ok) o.detail = "400 triples, bitwise equal";
    return o;
}

Outcome figure2() {
    Outcome o;
    const std::vector<int> Ts{10, 20, 30, 40, 50};
    const Table t = maxrisk_table(1000, Ts);
    const auto col = [&](std::size_t r, const char* c) { return t.rows[r][t.column(c)]; };
    std::map<std::string, double> last;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const std::string key = std::get<std::string>(col(r, "panel")) + "/" + std::get<std::string>(col(r, "design"));
        const double ratio = std::get<double>(col(r, "ratio"));
        o.require(ratio <= 1.0, key + " ratio above 1");
        if (last.count(key) && key.find("bcrd") == std::string::npos)
            o.require(ratio < last[key], fmt("%s not decreasing (%.4f after %.4f)", key.c_str(), ratio, last[key]));
        last[key] = ratio;
    }
    const double left = last["plugin_baseline/augmented"];
    o.require(left <= 0.85, fmt("left augmented ratio %.4f at T=50", left));
    if (o.ok)
        o.detail = fmt("T=50 left: minimax %.3f augmented %.3f; right: minimax %.3f augmented %.3f",
                       last["plugin_baseline/minimax"], left, last["augmented_all/minimax"], last["augmented_all/augmented"]);
    return o;
}

Outcome figure3() {
    Outcome o;
    const std::vector<int> Ts{10, 15, 20, 25, 30};
    std::ostringstream summary;
    for (OutcomeModel model : {OutcomeModel::Standard, OutcomeModel::Habituation}) {
        const Table t = expected_risk_comparison({500}, Ts, model, 100, 20240601);
        std::map<std::string, std::map<std::int64_t, double>> mean;
        for (const auto& row : t.rows)
            mean[std::get<std::string>(row[t.column("design")])][std::get<std::int64_t>(row[t.column("T")])] =
                std::get<double>(row[t.column("mean")]);
        const std::string name = model_name(model);
        for (std::size_t i = 0; i < Ts.size(); ++i) {
            const int T = Ts[i];
            o.require(mean["minimax"][T] < mean["bcrd"][T],
                      fmt("%s T=%d minimax %.4g >= bcrd %.4g", name.c_str(), T, mean["minimax"][T], mean["bcrd"][T]));
            if (i > 0)
                for (const char* d : {"minimax", "bcrd"})
                    o.require(mean[d][T] > mean[d][Ts[i - 1]], fmt("%s %s not increasing at T=%d", name.c_str(), d, T));
        }
        summary << name << " T=30 " << mean["minimax"][30] / mean["bcrd"][30] << "x ";
    }
    if (o.ok) o.detail = "minimax/bcrd mean risk: " + summary.str();
    return o;
}

Outcome wedge_pulse() {
    Outcome o;
    std::mt19937_64 rng(4242);
    for (int rep = 0; rep < 50; ++rep) {
        const int T = 2 + static_cast<int>(rng() % 5);
        std::vector<std::int64_t> counts(static_cast<std::size_t>(T) + 1);
        for (auto& c : counts) c = 1 + static_cast<std::int64_t>(rng() % 4);
        const Allocation alloc(counts);
        const std::uint64_t zseed = rng(), sseed = rng();
        const AssignmentMatrix P = draw_assignment(alloc, ArmFamily::Pulse, zseed);
        const AssignmentMatrix W = draw_assignment(alloc, ArmFamily::Wedge, zseed);
        o.require(std::ranges::equal(P.labels(), W.labels()), "labels differ between families");
        const auto sp = oracle::history_schedule(P.N(), T, false, sseed);
        const auto sw = oracle::history_schedule(P.N(), T, true, sseed);
        const ObservedOutcomes op = observe(P, sp), ow = observe(W, sw);
        for (int t = 2; t <= T; ++t) {
            o.require(lambda_hat(P, op, t) == lambda_hat(W, ow, t), fmt("lambda rep %d t=%d", rep, t));
            o.require(delta_hat(P, op, t) == delta_hat(W, ow, t), fmt("delta rep %d t=%d", rep, t));
            o.require(gamma_hat(P, op, t) == gamma_hat(W, ow, t), fmt("gamma rep %d t=%d", rep, t));
        }
    }
    if (o.ok) o.detail = "50 cases, lambda/delta/gamma bitwise equal";
    return o;
}

Outcome ci_coverage() {
    Outcome o;
    constexpr int T = 5, reps = 2000;
    ModelParams p;
    p.shared_noise = false;
    const auto s = standard_model(p, 200, T, 99);
    const Estimands truth = estimands(s);
    const Allocation alloc = balanced(200, T);
    std::vector<int> hits(T + 1, 0);
    for (int r = 0; r < reps; ++r) {
        const AssignmentMatrix Z = draw_assignment(alloc, ArmFamily::Pulse, derive_seed(7, static_cast<std::uint64_t>(r)));
        const ObservedOutcomes obs = observe(Z, s);
        for (int t = 2; t <= T; ++t) {
            const ConfidenceInterval ci = conservative_ci(Z, obs, t, LossSpec::plugin(), 0.95);
            hits[t] += ci.lower() <= truth.delta.at(t) && truth.delta.at(t) <= ci.upper();
        }
    }
    double lowest = 1.0;
    for (int t = 2; t <= T; ++t) lowest = std::min(lowest, hits[t] / double(reps));
    o.require(lowest >= 0.94, fmt("coverage %.4f", lowest));
    if (o.ok) o.detail = fmt("lowest per-period coverage %.4f", lowest);
    return o;
}

struct Criterion {
    int id;
    const char* name;
    double limit_seconds;  // 0: no runtime bound
    Outcome (*run)();
};

}  // namespace

int main() {
    const Criterion criteria[] = {
        {1, "relaxed basic design and balanced counts at N=10000, T=30", 1e-3, relaxed_reference},
        {2, "integer_solve matches brute force", 60, oracle_equivalence},
        {3, "closed forms are stationary; weighted boundaries", 0, stationarity},
        {4, "worst-case exact risk equals max_risk; Monte Carlo agrees", 30, worst_case_identity},
        {5, "estimators unbiased by enumeration", 0, unbiasedness},
        {6, "loss invariant under unit permutation", 0, permutation_invariance},
        {7, "max-risk ratios at N=1000", 1, figure2},
        {8, "expected risk, minimax vs BCRD at N=500", 300, figure3},
        {9, "wedge and pulse estimates agree", 0, wedge_pulse},
        {10, "conservative CI coverage", 120, ci_coverage},
    };
    int failures = 0;
    for (const Criterion& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.ok = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (o.ok && c.limit_seconds > 0 && secs > c.limit_seconds) {
            o.ok = false;
            o.detail += fmt(" (over the %.3g s limit)", c.limit_seconds);
        }
        failures += !o.ok;
        std::printf("%s  %2d  %-58s %10.3f s  %s\n", o.ok ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures, std::size(criteria));
    return failures == 0 ? 0 : 1;
}
