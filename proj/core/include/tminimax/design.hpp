#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tminimax/types.hpp"

namespace tminimax {

// A bijection on unit indices: perm[i] is the new position of unit i.
using Permutation = std::vector<std::size_t>;

Permutation identity_permutation(std::size_t n);
Permutation inverse(const Permutation& perm);
// Throws DomainError unless perm is a bijection on 0..n-1.
void check_permutation(const Permutation& perm, std::size_t n);

// One realized randomization: an arm label per unit plus the family used to
// expand labels into 0/1 rows.
class AssignmentMatrix {
public:
    AssignmentMatrix(std::vector<ArmId> labels, int T, ArmFamily family = ArmFamily::Pulse);

    std::size_t N() const noexcept { return labels_.size(); }
    int T() const noexcept { return T_; }
    ArmFamily family() const noexcept { return family_; }

    std::span<const ArmId> labels() const noexcept { return labels_; }
    ArmId label(std::size_t unit) const noexcept { return labels_[unit]; }

    AssignmentVector row(std::size_t unit) const;
    // Treatment indicator of `unit` at period t (1-based).
    bool treated_at(std::size_t unit, int t) const noexcept;

    Allocation counts() const;

    friend bool operator==(const AssignmentMatrix&, const AssignmentMatrix&) = default;

private:
    std::vector<ArmId> labels_;
    int T_;
    ArmFamily family_;
};

// Potential outcomes for every arm: T + 1 matrices of size N x T, stored in
// dense arm order (control, treated, pulse 2..T).
class PotentialOutcomeSchedule {
public:
    PotentialOutcomeSchedule(std::size_t N, int T);
    explicit PotentialOutcomeSchedule(std::vector<Matrix> arms);

    std::size_t N() const noexcept { return N_; }
    int T() const noexcept { return T_; }

    const Matrix& operator[](ArmId arm) const { return arms_.at(static_cast<std::size_t>(arm.index())); }
    Matrix& operator[](ArmId arm) { return arms_.at(static_cast<std::size_t>(arm.index())); }

    // Y_{it}(arm) with 0-based unit and 1-based period.
    double at(ArmId arm, std::size_t unit, int t) const {
        return (*this)[arm](unit, static_cast<std::size_t>(t - 1));
    }

    std::span<const Matrix> arms() const noexcept { return arms_; }

    friend bool operator==(const PotentialOutcomeSchedule&, const PotentialOutcomeSchedule&) = default;

private:
    std::size_t N_;
    int T_;
    std::vector<Matrix> arms_;
};

// Realized N x T outcomes of one experiment.
struct ObservedOutcomes {
    Matrix values;

    double at(std::size_t unit, int t) const { return values(unit, static_cast<std::size_t>(t - 1)); }
    friend bool operator==(const ObservedOutcomes&, const ObservedOutcomes&) = default;
};

// Arm labels in dense arm order, one per allocated unit (the unshuffled
// multiset that complete randomization permutes).
std::vector<ArmId> label_multiset(const Allocation& alloc);

// Complete randomization: uniform over all label arrangements with exactly the
// allocated counts. Deterministic in `seed`.
AssignmentMatrix draw_assignment(const Allocation& alloc, ArmFamily family, std::uint64_t seed);

// Calls `visit` once for every distinct label arrangement with the allocated
// counts, in lexicographic order of arm indices. Count is the multinomial
// coefficient N! / prod(n_a!), so this is only practical for small N.
void for_each_assignment(const Allocation& alloc, ArmFamily family,
                         const std::function<void(const AssignmentMatrix&)>& visit);

std::uint64_t assignment_count(const Allocation& alloc);

// Units usable as controls at period t. Without k: always-control units and
// pulses starting after t. With k: additionally pulses that started at or
// before t - k (recycled after their carryover has worn off; pulse designs
// only).
std::vector<std::size_t> augmented_controls(const AssignmentMatrix& Z, int t,
                                            std::optional<int> k = std::nullopt);

// Whether a unit with this label belongs to the augmented control pool at t.
bool in_control_pool(ArmId arm, int t, std::optional<int> k) noexcept;

ObservedOutcomes observe(const AssignmentMatrix& Z, const PotentialOutcomeSchedule& sched);

struct ScheduleViolation {
    enum class Rule { NonAnticipation, Carryover };

    ArmId arm;
    std::size_t unit;  // 0-based
    int t;             // 1-based
    Rule rule;

    friend bool operator==(const ScheduleViolation&, const ScheduleViolation&) = default;
};

struct ValidationReport {
    std::vector<ScheduleViolation> violations;
    bool ok() const noexcept { return violations.empty(); }
};

// Checks that every pulse arm matches the control arm before the pulse, and,
// when k is given, from period t' + k onward. Cells are compared exactly.
ValidationReport validate_schedule(const PotentialOutcomeSchedule& sched,
                                   std::optional<int> k = std::nullopt);

AssignmentMatrix permute_units(const AssignmentMatrix& Z, const Permutation& perm);
PotentialOutcomeSchedule permute_units(const PotentialOutcomeSchedule& sched, const Permutation& perm);
ObservedOutcomes permute_units(const ObservedOutcomes& obs, const Permutation& perm);

}  // namespace tminimax
