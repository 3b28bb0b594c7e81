#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tminimax/types.hpp"

namespace tminimax {

// Which units serve as controls for the instantaneous-effect contrast at t.
enum class ControlPool {
    AlwaysControl,  // always-control units only (plug-in estimator)
    Augmented,      // plus pulses that start after t
    Recycled,       // plus pulses that started at or before t - k
};

// Coefficients of the worst-case risk
//   treated * (T-1)/N1 + pulse * sum_t 1/N_{e_t} + control * sum_t 1/|pool_t|.
struct ObjectiveWeights {
    double treated = 1.0;
    double pulse = 2.0;
    double control = 1.0;
};

class ObjectiveMode {
public:
    enum class Kind { Basic, Augmented, Weighted, Recycling };

    static ObjectiveMode basic() { return ObjectiveMode(Kind::Basic, 0.5, 0); }
    static ObjectiveMode augmented() { return ObjectiveMode(Kind::Augmented, 0.5, 0); }
    static ObjectiveMode weighted(double rho);
    static ObjectiveMode recycling(int k);

    Kind kind() const noexcept { return kind_; }
    double rho() const noexcept { return rho_; }
    int k() const noexcept { return k_; }

    ControlPool pool() const noexcept;
    ObjectiveWeights weights() const noexcept;
    std::string name() const;

private:
    ObjectiveMode(Kind kind, double rho, int k) : kind_(kind), rho_(rho), k_(k) {}

    Kind kind_;
    double rho_;
    int k_;
};

// Number of units in the control pool at period t for the given counts.
template <typename Count>
Count control_pool_size(const BasicAllocation<Count>& alloc, int t, ControlPool pool, int k) {
    Count size = alloc.n0();
    if (pool == ControlPool::AlwaysControl) return size;
    for (int s = t + 1; s <= alloc.T(); ++s) size += alloc.ne(s);
    if (pool == ControlPool::Recycled)
        for (int s = 2; s <= t - k; ++s) size += alloc.ne(s);
    return size;
}

// Generic worst-case risk coefficient. Terms with zero weight are skipped, so
// the arms they would involve may be empty. Throws DomainError if an active
// term has a non-positive denominator.
double weighted_objective(const RealAllocation& alloc, const ObjectiveWeights& w, ControlPool pool, int k = 1);

double objective(const RealAllocation& alloc, const ObjectiveMode& mode);
double objective(const Allocation& alloc, const ObjectiveMode& mode);

// c_T = 1 and c_t = [1/c_{t+1}^2 + 1/(1 + ell * sum_{t'>t} c_{t'})^2]^{-1/2}.
struct CSequence {
    std::vector<double> values;  // c_2, ..., c_T
    double ell = 0.0;

    int T() const noexcept { return static_cast<int>(values.size()) + 1; }
    double at(int t) const { return values.at(static_cast<std::size_t>(t - 2)); }
};

CSequence c_sequence(int T, double ell);

// Closed-form continuous relaxations.
RealAllocation relaxed_basic(double N, int T);
RealAllocation relaxed_augmented(double N, int T);
RealAllocation relaxed_weighted(double N, int T, double rho);
// No closed form; solved numerically (see minimize_relaxed).
RealAllocation relaxed_recycling(double N, int T, int k);
RealAllocation relaxed(double N, int T, const ObjectiveMode& mode);

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, RealAllocation best)
        : std::runtime_error(what), best_(std::move(best)) {}
    const RealAllocation& best_iterate() const noexcept { return best_; }

private:
    RealAllocation best_;
};

struct SolverOptions {
    int max_iterations = 500;
    // Stop once the predicted decrease (half the squared Newton decrement)
    // falls below this fraction of the objective.
    double relative_tolerance = 1e-15;
};

// Equality-constrained damped Newton on {x >= 0, sum x = N}. Arms that enter
// no term with positive weight are pinned to zero. Works for every mode; the
// closed forms above are preferred where they exist.
RealAllocation minimize_relaxed(double N, int T, const ObjectiveMode& mode, const SolverOptions& options = {});

// Exact minimizer of the integer program (every count >= 1, except that
// Weighted(0) pins N1 = 0 and Weighted(1) pins N0 = 0). Ties resolve to the
// lexicographically smallest allocation among those with the minimal
// computed objective.
Allocation integer_solve(std::int64_t N, int T, const ObjectiveMode& mode);

// Exhaustive search over all compositions; N <= 60 and T <= 5 only. Same
// tie-break as integer_solve.
Allocation brute_force_opt(std::int64_t N, int T, const ObjectiveMode& mode);

// floor(N / (T+1)) per arm; leftover units go one each to arms 0, 1, e_2, ...
Allocation balanced(std::int64_t N, int T);

}  // namespace tminimax
