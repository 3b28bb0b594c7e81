#include "tminimax/design.hpp"

#include <algorithm>
#include <numeric>

#include "tminimax/rng.hpp"

namespace tminimax {

Permutation identity_permutation(std::size_t n) {
    Permutation p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    return p;
}

void check_permutation(const Permutation& perm, std::size_t n) {
    if (perm.size() != n)
        throw DomainError("permutation has " + std::to_string(perm.size()) + " entries, expected " +
                          std::to_string(n));
    std::vector<bool> seen(n, false);
    for (std::size_t p : perm) {
        if (p >= n || seen[p]) throw DomainError("permutation is not a bijection");
        seen[p] = true;
    }
}

Permutation inverse(const Permutation& perm) {
    check_permutation(perm, perm.size());
    Permutation inv(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
    return inv;
}

AssignmentMatrix::AssignmentMatrix(std::vector<ArmId> labels, int T, ArmFamily family)
    : labels_(std::move(labels)), T_(T), family_(family) {
    if (T_ < 2) throw DomainError("horizon T must be at least 2");
    for (ArmId a : labels_)
        if (!a.valid_for(T_))
            throw InvalidArm("label " + a.key() + " invalid for T = " + std::to_string(T_));
}

AssignmentVector AssignmentMatrix::row(std::size_t unit) const {
    return make_arm_vector(labels_.at(unit), T_, family_);
}

bool AssignmentMatrix::treated_at(std::size_t unit, int t) const noexcept {
    const ArmId a = labels_[unit];
    switch (a.kind()) {
    case ArmId::Kind::AlwaysControl: return false;
    case ArmId::Kind::AlwaysTreated: return true;
    case ArmId::Kind::Pulse: break;
    }
    return family_ == ArmFamily::Pulse ? t == a.time() : t >= a.time();
}

Allocation AssignmentMatrix::counts() const {
    std::vector<std::int64_t> c(static_cast<std::size_t>(T_) + 1, 0);
    for (ArmId a : labels_) ++c[static_cast<std::size_t>(a.index())];
    return Allocation(std::move(c));
}

PotentialOutcomeSchedule::PotentialOutcomeSchedule(std::size_t N, int T)
    : N_(N), T_(T), arms_(static_cast<std::size_t>(T) + 1, Matrix(N, static_cast<std::size_t>(T))) {
    if (T < 2) throw DomainError("horizon T must be at least 2");
    if (N == 0) throw DomainError("schedule needs at least one unit");
}

PotentialOutcomeSchedule::PotentialOutcomeSchedule(std::vector<Matrix> arms) : arms_(std::move(arms)) {
    if (arms_.size() < 3) throw DomainError("schedule needs T + 1 >= 3 arm matrices");
    T_ = static_cast<int>(arms_.size()) - 1;
    N_ = arms_.front().rows();
    if (N_ == 0) throw DomainError("schedule needs at least one unit");
    for (const Matrix& m : arms_)
        if (m.rows() != N_ || m.cols() != static_cast<std::size_t>(T_))
            throw DomainError("every arm matrix must be N x T");
}

std::vector<ArmId> label_multiset(const Allocation& alloc) {
    std::vector<ArmId> labels;
    labels.reserve(static_cast<std::size_t>(alloc.total()));
    for (int a = 0; a <= alloc.T(); ++a)
        labels.insert(labels.end(), static_cast<std::size_t>(alloc[static_cast<std::size_t>(a)]),
                      ArmId::from_index(a));
    return labels;
}

AssignmentMatrix draw_assignment(const Allocation& alloc, ArmFamily family, std::uint64_t seed) {
    auto labels = label_multiset(alloc);
    Rng rng = make_rng(seed);
    fisher_yates(std::span<ArmId>(labels), rng);
    return AssignmentMatrix(std::move(labels), alloc.T(), family);
}

void for_each_assignment(const Allocation& alloc, ArmFamily family,
                         const std::function<void(const AssignmentMatrix&)>& visit) {
    std::vector<int> idx;
    for (ArmId a : label_multiset(alloc)) idx.push_back(a.index());
    std::vector<ArmId> labels(idx.size(), ArmId::control());
    do {
        for (std::size_t i = 0; i < idx.size(); ++i) labels[i] = ArmId::from_index(idx[i]);
        visit(AssignmentMatrix(labels, alloc.T(), family));
    } while (std::next_permutation(idx.begin(), idx.end()));
}

std::uint64_t assignment_count(const Allocation& alloc) {
    // Multinomial coefficient built as a product of binomials; each partial
    // product is an integer.
    std::uint64_t result = 1;
    std::int64_t placed = 0;
    for (std::int64_t c : alloc.counts()) {
        for (std::int64_t j = 1; j <= c; ++j) {
            result = result * static_cast<std::uint64_t>(placed + j) / static_cast<std::uint64_t>(j);
        }
        placed += c;
    }
    return result;
}

bool in_control_pool(ArmId arm, int t, std::optional<int> k) noexcept {
    if (arm.is_control()) return true;
    if (!arm.is_pulse()) return false;
    if (arm.time() > t) return true;
    return k.has_value() && arm.time() <= t - *k;
}

std::vector<std::size_t> augmented_controls(const AssignmentMatrix& Z, int t, std::optional<int> k) {
    if (t < 2 || t > Z.T())
        throw DomainError("period " + std::to_string(t) + " outside 2.." + std::to_string(Z.T()));
    if (k && *k < 1) throw DomainError("carryover order k must be at least 1");
    if (k && Z.family() == ArmFamily::Wedge)
        throw DomainError("recycled controls are only defined for pulse designs");
    std::vector<std::size_t> units;
    for (std::size_t i = 0; i < Z.N(); ++i)
        if (in_control_pool(Z.label(i), t, k)) units.push_back(i);
    return units;
}

ObservedOutcomes observe(const AssignmentMatrix& Z, const PotentialOutcomeSchedule& sched) {
    if (Z.N() != sched.N() || Z.T() != sched.T())
        throw DomainError("assignment and schedule disagree on N or T");
    ObservedOutcomes obs{Matrix(Z.N(), static_cast<std::size_t>(Z.T()))};
    for (std::size_t i = 0; i < Z.N(); ++i) {
        const auto src = sched[Z.label(i)].row(i);
        std::copy(src.begin(), src.end(), obs.values.row(i).begin());
    }
    return obs;
}

ValidationReport validate_schedule(const PotentialOutcomeSchedule& sched, std::optional<int> k) {
    if (k && *k < 1) throw DomainError("carryover order k must be at least 1");
    ValidationReport report;
    const Matrix& control = sched[ArmId::control()];
    for (int start = 2; start <= sched.T(); ++start) {
        const ArmId arm = ArmId::pulse(start);
        const Matrix& m = sched[arm];
        for (std::size_t i = 0; i < sched.N(); ++i) {
            for (int t = 1; t <= sched.T(); ++t) {
                const auto col = static_cast<std::size_t>(t - 1);
                if (m(i, col) == control(i, col)) continue;
                if (t < start)
                    report.violations.push_back({arm, i, t, ScheduleViolation::Rule::NonAnticipation});
                else if (k && start <= t - *k)
                    report.violations.push_back({arm, i, t, ScheduleViolation::Rule::Carryover});
            }
        }
    }
    return report;
}

AssignmentMatrix permute_units(const AssignmentMatrix& Z, const Permutation& perm) {
    check_permutation(perm, Z.N());
    std::vector<ArmId> labels(Z.N(), ArmId::control());
    for (std::size_t i = 0; i < Z.N(); ++i) labels[perm[i]] = Z.label(i);
    return AssignmentMatrix(std::move(labels), Z.T(), Z.family());
}

namespace {

Matrix permute_rows(const Matrix& m, const Permutation& perm) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto src = m.row(i);
        std::copy(src.begin(), src.end(), out.row(perm[i]).begin());
    }
    return out;
}

}  // namespace

PotentialOutcomeSchedule permute_units(const PotentialOutcomeSchedule& sched, const Permutation& perm) {
    check_permutation(perm, sched.N());
    std::vector<Matrix> arms;
    arms.reserve(sched.arms().size());
    for (const Matrix& m : sched.arms()) arms.push_back(permute_rows(m, perm));
    return PotentialOutcomeSchedule(std::move(arms));
}

ObservedOutcomes permute_units(const ObservedOutcomes& obs, const Permutation& perm) {
    check_permutation(perm, obs.values.rows());
    return ObservedOutcomes{permute_rows(obs.values, perm)};
}

}  // namespace tminimax
