#include "tminimax/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numeric>
#include <set>

#include <Eigen/Dense>

namespace tminimax {

ObjectiveMode ObjectiveMode::weighted(double rho) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("weight rho must lie in [0, 1]");
    return ObjectiveMode(Kind::Weighted, rho, 0);
}

ObjectiveMode ObjectiveMode::recycling(int k) {
    if (k < 1) throw DomainError("carryover order k must be at least 1");
    return ObjectiveMode(Kind::Recycling, 0.5, k);
}

ControlPool ObjectiveMode::pool() const noexcept {
    switch (kind_) {
    case Kind::Basic: return ControlPool::AlwaysControl;
    case Kind::Augmented:
    case Kind::Weighted: return ControlPool::Augmented;
    case Kind::Recycling: return ControlPool::Recycled;
    }
    return ControlPool::AlwaysControl;
}

ObjectiveWeights ObjectiveMode::weights() const noexcept {
    if (kind_ == Kind::Weighted) return {rho_, 1.0, 1.0 - rho_};
    return {1.0, 2.0, 1.0};
}

std::string ObjectiveMode::name() const {
    switch (kind_) {
    case Kind::Basic: return "basic";
    case Kind::Augmented: return "augmented";
    case Kind::Weighted: return "weighted";
    case Kind::Recycling: return "recycling";
    }
    return "?";
}

namespace {

template <typename Count>
double evaluate(std::span<const Count> x, const ObjectiveWeights& w, ControlPool pool, int k) {
    const int T = static_cast<int>(x.size()) - 1;
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0)) throw DomainError(std::string("objective undefined: ") + what + " is not positive");
        return v;
    };
    double f = 0.0;
    if (w.treated != 0.0) f += w.treated * (T - 1) / positive(static_cast<double>(x[1]), "N1");
    if (w.pulse != 0.0)
        for (int t = 2; t <= T; ++t) f += w.pulse / positive(static_cast<double>(x[t]), "pulse count");
    if (w.control != 0.0) {
        if (pool == ControlPool::AlwaysControl) {
            f += w.control * (T - 1) / positive(static_cast<double>(x[0]), "N0");
        } else {
            // prefix[t] = sum of pulse counts e_2..e_t.
            std::vector<double> prefix(static_cast<std::size_t>(T) + 1, 0.0);
            for (int t = 2; t <= T; ++t) prefix[t] = prefix[t - 1] + static_cast<double>(x[t]);
            for (int t = 2; t <= T; ++t) {
                double size = static_cast<double>(x[0]) + (prefix[T] - prefix[t]);
                if (pool == ControlPool::Recycled && t - k >= 2) size += prefix[t - k];
                f += w.control / positive(size, "control pool");
            }
        }
    }
    return f;
}

// f(x) = sum_j weight_j / sum_{a in arms_j} x_a
struct Term {
    double weight;
    std::vector<int> arms;
};

std::vector<Term> build_terms(int T, const ObjectiveWeights& w, ControlPool pool, int k) {
    std::vector<Term> terms;
    if (w.treated > 0.0) terms.push_back({w.treated * (T - 1), {1}});
    if (w.pulse > 0.0)
        for (int t = 2; t <= T; ++t) terms.push_back({w.pulse, {t}});
    if (w.control > 0.0) {
        if (pool == ControlPool::AlwaysControl) {
            terms.push_back({w.control * (T - 1), {0}});
        } else {
            for (int t = 2; t <= T; ++t) {
                Term term{w.control, {0}};
                for (int s = 2; s <= T; ++s) {
                    const bool later = s > t;
                    const bool recycled = pool == ControlPool::Recycled && s <= t - k;
                    if (later || recycled) term.arms.push_back(s);
                }
                terms.push_back(std::move(term));
            }
        }
    }
    return terms;
}

// Arms that appear in at least one term; the rest are optimally empty.
std::vector<bool> active_arms(int T, const ObjectiveMode& mode) {
    std::vector<bool> active(static_cast<std::size_t>(T) + 1, false);
    for (const Term& term : build_terms(T, mode.weights(), mode.pool(), mode.k()))
        for (int a : term.arms) active[static_cast<std::size_t>(a)] = true;
    return active;
}

void check_horizon(int T) {
    if (T < 2) throw DomainError("horizon T must be at least 2");
}

}  // namespace

double weighted_objective(const RealAllocation& alloc, const ObjectiveWeights& w, ControlPool pool, int k) {
    return evaluate(alloc.counts(), w, pool, k);
}

double objective(const RealAllocation& alloc, const ObjectiveMode& mode) {
    return evaluate(alloc.counts(), mode.weights(), mode.pool(), mode.k());
}

double objective(const Allocation& alloc, const ObjectiveMode& mode) {
    return evaluate(alloc.counts(), mode.weights(), mode.pool(), mode.k());
}

CSequence c_sequence(int T, double ell) {
    check_horizon(T);
    if (!(ell > 0.0)) throw DomainError("ell must be positive");
    CSequence c;
    c.ell = ell;
    c.values.assign(static_cast<std::size_t>(T - 1), 1.0);
    double later_sum = 0.0;  // sum_{t' > t} c_{t'}
    for (int t = T - 1; t >= 2; --t) {
        const double next = c.values[static_cast<std::size_t>(t - 1)];
        later_sum += next;
        const double pool = 1.0 + ell * later_sum;
        c.values[static_cast<std::size_t>(t - 2)] = 1.0 / std::sqrt(1.0 / (next * next) + 1.0 / (pool * pool));
    }
    return c;
}

RealAllocation relaxed_basic(double N, int T) {
    check_horizon(T);
    if (!(N > 0.0)) throw DomainError("N must be positive");
    const double always = N / (2.0 + std::sqrt(2.0 * (T - 1)));
    const double pulse = std::sqrt(2.0 / (T - 1)) * always;
    return RealAllocation(always, always, std::vector<double>(static_cast<std::size_t>(T - 1), pulse));
}

RealAllocation relaxed_augmented(double N, int T) {
    check_horizon(T);
    if (!(N > 0.0)) throw DomainError("N must be positive");
    const double sqrt2 = std::sqrt(2.0);
    const CSequence c = c_sequence(T, sqrt2);
    double tail = 0.0;  // sum_{t>=3} c_t
    for (int t = 3; t <= T; ++t) tail += c.at(t);
    const double c_sum = c.at(2) + tail;
    const double n0 = N / (1.0 + (std::sqrt(T - 1.0) + sqrt2) * c.at(2) + sqrt2 * tail);
    std::vector<double> ne;
    for (int t = 2; t <= T; ++t) ne.push_back(n0 * sqrt2 * c.at(t));
    const double n1 = N - n0 * (1.0 + sqrt2 * c_sum);
    return RealAllocation(n0, n1, std::move(ne));
}

RealAllocation relaxed_weighted(double N, int T, double rho) {
    check_horizon(T);
    if (!(N > 0.0)) throw DomainError("N must be positive");
    if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("weight rho must lie in [0, 1]");
    if (rho == 1.0) {
        // Only habituation terms remain: (T-1)/N1 + sum 1/N_e, N0 unused.
        const double pulse = N / (std::sqrt(T - 1.0) + (T - 1.0));
        return RealAllocation(0.0, std::sqrt(T - 1.0) * pulse,
                              std::vector<double>(static_cast<std::size_t>(T - 1), pulse));
    }
    const double ell = 1.0 / std::sqrt(1.0 - rho);
    const CSequence c = c_sequence(T, ell);
    double tail = 0.0;
    for (int t = 3; t <= T; ++t) tail += c.at(t);
    const double c_sum = c.at(2) + tail;
    const double n0 = N / (1.0 + ell * (1.0 + std::sqrt(rho * (T - 1))) * c.at(2) + ell * tail);
    std::vector<double> ne;
    for (int t = 2; t <= T; ++t) ne.push_back(n0 * ell * c.at(t));
    const double n1 = rho == 0.0 ? 0.0 : N - n0 * (1.0 + ell * c_sum);
    return RealAllocation(n0, n1, std::move(ne));
}

RealAllocation relaxed_recycling(double N, int T, int k) {
    return minimize_relaxed(N, T, ObjectiveMode::recycling(k));
}

RealAllocation relaxed(double N, int T, const ObjectiveMode& mode) {
    switch (mode.kind()) {
    case ObjectiveMode::Kind::Basic: return relaxed_basic(N, T);
    case ObjectiveMode::Kind::Augmented: return relaxed_augmented(N, T);
    case ObjectiveMode::Kind::Weighted: return relaxed_weighted(N, T, mode.rho());
    case ObjectiveMode::Kind::Recycling: return relaxed_recycling(N, T, mode.k());
    }
    throw DomainError("unknown objective mode");
}

RealAllocation minimize_relaxed(double N, int T, const ObjectiveMode& mode, const SolverOptions& options) {
    check_horizon(T);
    if (!(N > 0.0)) throw DomainError("N must be positive");
    const auto terms = build_terms(T, mode.weights(), mode.pool(), mode.k());
    const auto active = active_arms(T, mode);

    std::vector<int> arms;  // active arm indices; solver coordinates follow this order
    std::vector<int> coord(static_cast<std::size_t>(T) + 1, -1);
    for (int a = 0; a <= T; ++a)
        if (active[static_cast<std::size_t>(a)]) {
            coord[static_cast<std::size_t>(a)] = static_cast<int>(arms.size());
            arms.push_back(a);
        }
    const auto m = static_cast<Eigen::Index>(arms.size());

    auto value = [&](const Eigen::VectorXd& x) {
        double f = 0.0;
        for (const Term& term : terms) {
            double s = 0.0;
            for (int a : term.arms) s += x[coord[static_cast<std::size_t>(a)]];
            f += term.weight / s;
        }
        return f;
    };
    auto to_allocation = [&](const Eigen::VectorXd& x) {
        std::vector<double> counts(static_cast<std::size_t>(T) + 1, 0.0);
        for (Eigen::Index i = 0; i < m; ++i) counts[static_cast<std::size_t>(arms[static_cast<std::size_t>(i)])] = x[i];
        return RealAllocation(std::move(counts));
    };

    Eigen::VectorXd x = Eigen::VectorXd::Constant(m, N / static_cast<double>(m));
    Eigen::VectorXd g(m);
    Eigen::MatrixXd H(m, m);
    double f = value(x);
    // Coordinates pinned at zero; the optimum can sit on the boundary (the
    // always-control arm is redundant once recycled pulses fill every pool).
    std::vector<bool> pinned(static_cast<std::size_t>(m), false);

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        g.setZero();
        H.setZero();
        for (const Term& term : terms) {
            double s = 0.0;
            for (int a : term.arms) s += x[coord[static_cast<std::size_t>(a)]];
            const double g_term = -term.weight / (s * s);
            const double h_term = 2.0 * term.weight / (s * s * s);
            for (int a : term.arms) {
                const int i = coord[static_cast<std::size_t>(a)];
                g[i] += g_term;
                for (int b : term.arms) H(i, coord[static_cast<std::size_t>(b)]) += h_term;
            }
        }
        std::vector<Eigen::Index> free;
        for (Eigen::Index i = 0; i < m; ++i)
            if (!pinned[static_cast<std::size_t>(i)]) free.push_back(i);
        const auto n = static_cast<Eigen::Index>(free.size());
        Eigen::VectorXd gf(n);
        Eigen::MatrixXd Hf(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            gf[i] = g[free[static_cast<std::size_t>(i)]];
            for (Eigen::Index j = 0; j < n; ++j) Hf(i, j) = H(free[static_cast<std::size_t>(i)], free[static_cast<std::size_t>(j)]);
        }
        // Newton step on the free coordinates, restricted to sum(dx) = 0.
        const Eigen::LLT<Eigen::MatrixXd> llt(Hf);
        if (llt.info() != Eigen::Success) throw SolverError("Hessian is not positive definite", to_allocation(x));
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
        const Eigen::VectorXd hg = llt.solve(gf);
        const Eigen::VectorXd h1 = llt.solve(ones);
        const double mu = ones.dot(hg) / ones.dot(h1);
        Eigen::VectorXd dx = Eigen::VectorXd::Zero(m);
        const Eigen::VectorXd dxf = -hg + h1 * mu;
        for (Eigen::Index i = 0; i < n; ++i) dx[free[static_cast<std::size_t>(i)]] = dxf[i];
        const double slope = g.dot(dx);

        if (-slope / 2.0 <= options.relative_tolerance * f) {
            // Release the pinned coordinate that most wants mass back, if any.
            const double level = gf.mean();
            Eigen::Index release = -1;
            for (Eigen::Index i = 0; i < m; ++i)
                if (pinned[static_cast<std::size_t>(i)] && g[i] < level - 1e-12 * std::abs(level) &&
                    (release < 0 || g[i] < g[release]))
                    release = i;
            if (release < 0) return to_allocation(x);
            Eigen::Index donor = free.front();
            for (Eigen::Index i : free)
                if (x[i] > x[donor]) donor = i;
            const double amount = 1e-6 * x[donor];
            pinned[static_cast<std::size_t>(release)] = false;
            x[release] += amount;
            x[donor] -= amount;
            f = value(x);
            continue;
        }

        // Largest step keeping every coordinate non-negative.
        double limit = 1.0;
        Eigen::Index blocking = -1;
        for (Eigen::Index i = 0; i < m; ++i)
            if (dx[i] < 0.0 && -x[i] / dx[i] < limit) limit = -x[i] / dx[i], blocking = i;
        double step = limit;
        Eigen::VectorXd trial = x + step * dx;
        if (blocking >= 0) trial[blocking] = 0.0;
        double f_trial = value(trial);
        while (!(f_trial <= f + 0.25 * step * slope) && step > 1e-20) {
            step *= 0.5;
            blocking = -1;
            trial = x + step * dx;
            f_trial = value(trial);
        }
        if (!(f_trial < f)) return to_allocation(x);  // no representable progress left
        if (blocking >= 0) pinned[static_cast<std::size_t>(blocking)] = true;
        x = trial;
        f = f_trial;
    }
    throw SolverError("relaxed solver did not converge within " + std::to_string(options.max_iterations) +
                          " iterations",
                      to_allocation(x));
}

Allocation balanced(std::int64_t N, int T) {
    check_horizon(T);
    if (N < T + 1) throw DomainError("need N >= T + 1 units for a balanced design");
    const std::int64_t arms = T + 1;
    std::vector<std::int64_t> counts(static_cast<std::size_t>(arms), N / arms);
    for (std::int64_t a = 0; a < N % arms; ++a) ++counts[static_cast<std::size_t>(a)];
    return Allocation(std::move(counts));
}

namespace {

void check_integer_instance(std::int64_t N, int T) {
    check_horizon(T);
    if (N < T + 1) throw DomainError("infeasible: need N >= T + 1, got N = " + std::to_string(N));
}

// Largest-remainder rounding of a relaxed solution to a feasible integer point
// with every active arm >= 1 and inactive arms at 0.
std::vector<std::int64_t> round_relaxed(const RealAllocation& x, std::int64_t N, const std::vector<bool>& active) {
    const std::size_t arms = active.size();
    std::vector<std::int64_t> counts(arms, 0);
    std::vector<double> remainder(arms, -1.0);
    std::int64_t used = 0;
    for (std::size_t a = 0; a < arms; ++a) {
        if (!active[a]) continue;
        const double v = std::max(0.0, x[a]);
        counts[a] = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(v)));
        remainder[a] = v - std::floor(v);
        used += counts[a];
    }
    std::vector<std::size_t> order(arms);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; used < N; i = (i + 1) % arms) {
        if (!active[order[i]]) continue;
        ++counts[order[i]];
        ++used;
    }
    while (used > N) {
        std::size_t largest = 0;
        for (std::size_t a = 1; a < arms; ++a)
            if (counts[a] > counts[largest]) largest = a;
        --counts[largest];
        --used;
    }
    return counts;
}

}  // namespace

Allocation integer_solve(std::int64_t N, int T, const ObjectiveMode& mode) {
    check_integer_instance(N, T);
    const auto active = active_arms(T, mode);
    const auto w = mode.weights();
    const auto pool = mode.pool();
    const int k = mode.k();
    using Counts = std::vector<std::int64_t>;
    auto f_of = [&](const Counts& c) { return evaluate<std::int64_t>(c, w, pool, k); };

    Counts current = round_relaxed(relaxed(static_cast<double>(N), T, mode), N, active);
    double f_current = f_of(current);

    // Steepest descent over single-unit transfers. For Basic, Augmented and
    // Weighted the pool sets are nested (laminar), so the objective is
    // M-convex and a transfer-local minimum is global. Recycling pools are not
    // laminar; there the result is checked against brute_force_opt in tests.
    auto for_each_transfer = [&](const Counts& c, auto&& visit) {
        Counts next = c;
        for (std::size_t from = 0; from < c.size(); ++from) {
            if (!active[from] || c[from] < 2) continue;
            for (std::size_t to = 0; to < c.size(); ++to) {
                if (to == from || !active[to]) continue;
                --next[from];
                ++next[to];
                visit(next);
                ++next[from];
                --next[to];
            }
        }
    };
    for (;;) {
        Counts best;
        double f_best = f_current;
        for_each_transfer(current, [&](const Counts& c) {
            const double f = f_of(c);
            if (f < f_best) {
                f_best = f;
                best = c;
            }
        });
        if (best.empty()) break;
        current = std::move(best);
        f_current = f_best;
    }

    // Walk the plateau of (numerically) tied neighbours so the tie-break
    // matches exhaustive search: minimal computed value, then lexicographic.
    const double plateau = f_current * (1.0 + 1e-12);
    std::set<Counts> seen{current};
    std::deque<Counts> queue{current};
    Counts chosen = current;
    double f_chosen = f_current;
    while (!queue.empty() && seen.size() < 20000) {
        const Counts node = std::move(queue.front());
        queue.pop_front();
        for_each_transfer(node, [&](const Counts& c) {
            const double f = f_of(c);
            if (f > plateau || seen.count(c)) return;
            seen.insert(c);
            queue.push_back(c);
            if (f < f_chosen || (f == f_chosen && c < chosen)) {
                chosen = c;
                f_chosen = f;
            }
        });
    }
    return Allocation(std::move(chosen));
}

Allocation brute_force_opt(std::int64_t N, int T, const ObjectiveMode& mode) {
    check_integer_instance(N, T);
    if (N > 60 || T > 5) throw DomainError("instance too large for exhaustive search (N <= 60, T <= 5)");
    const auto active = active_arms(T, mode);
    const auto w = mode.weights();
    const auto pool = mode.pool();
    const int k = mode.k();

    std::vector<std::int64_t> counts(static_cast<std::size_t>(T) + 1, 0);
    std::vector<std::int64_t> best;
    double f_best = 0.0;
    // Remaining active arms after position a, each needing at least one unit.
    std::vector<std::int64_t> needed_after(counts.size() + 1, 0);
    for (std::size_t a = counts.size(); a-- > 0;)
        needed_after[a] = needed_after[a + 1] + (active[a] ? 1 : 0);

    // Compositions are visited in lexicographic order, so keeping only strict
    // improvements yields the lexicographically smallest minimizer.
    std::function<void(std::size_t, std::int64_t)> visit = [&](std::size_t a, std::int64_t left) {
        if (a == counts.size()) {
            if (left != 0) return;
            const double f = evaluate<std::int64_t>(counts, w, pool, k);
            if (best.empty() || f < f_best) {
                best = counts;
                f_best = f;
            }
            return;
        }
        if (!active[a]) {
            counts[a] = 0;
            visit(a + 1, left);
            return;
        }
        const std::int64_t rest = needed_after[a + 1];
        const bool last_active = rest == 0;
        for (std::int64_t c = last_active ? left : 1; c <= left - rest; ++c) {
            counts[a] = c;
            visit(a + 1, left - c);
        }
    };
    visit(0, N);
    return Allocation(std::move(best));
}

}  // namespace tminimax
