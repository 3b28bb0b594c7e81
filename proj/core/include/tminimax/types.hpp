#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tminimax/errors.hpp"

namespace tminimax {

// Time periods are 1-based throughout the public API (t = 1..T); matrix
// columns are 0-based, so period t lives in column t - 1.

enum class ArmFamily { Pulse, Wedge };

// One of the T + 1 design arms: always-control (0), always-treated (1), or the
// pulse / wedge arm starting at period t (2 <= t <= T). The family is not part
// of the identity; it only matters when expanding to an assignment vector.
class ArmId {
public:
    enum class Kind { AlwaysControl, AlwaysTreated, Pulse };

    static constexpr ArmId control() noexcept { return ArmId(Kind::AlwaysControl, 0); }
    static constexpr ArmId treated() noexcept { return ArmId(Kind::AlwaysTreated, 1); }
    static ArmId pulse(int t);

    // Dense arm index in [0, T]: 0 = control, 1 = treated, t = pulse t.
    static ArmId from_index(int index);

    constexpr Kind kind() const noexcept { return kind_; }
    constexpr int index() const noexcept { return index_; }
    // Pulse start period; only meaningful for Kind::Pulse.
    constexpr int time() const noexcept { return index_; }

    constexpr bool is_control() const noexcept { return kind_ == Kind::AlwaysControl; }
    constexpr bool is_treated() const noexcept { return kind_ == Kind::AlwaysTreated; }
    constexpr bool is_pulse() const noexcept { return kind_ == Kind::Pulse; }

    bool valid_for(int T) const noexcept;

    // "always0", "always1", "pulse_<t>"
    std::string key() const;
    static ArmId from_key(std::string_view key);

    friend constexpr bool operator==(ArmId a, ArmId b) noexcept { return a.index_ == b.index_; }
    friend constexpr auto operator<=>(ArmId a, ArmId b) noexcept { return a.index_ <=> b.index_; }

private:
    constexpr ArmId(Kind kind, int index) noexcept : kind_(kind), index_(index) {}

    Kind kind_;
    int index_;
};

using AssignmentVector = std::vector<std::uint8_t>;

// Canonical 0/1 expansion of an arm over T periods.
AssignmentVector make_arm_vector(ArmId arm, int T, ArmFamily family = ArmFamily::Pulse);

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Per-arm unit counts in dense arm order (n0, n1, n_e2, ..., n_eT).
template <typename Count>
class BasicAllocation {
public:
    BasicAllocation() = default;

    // counts.size() must be T + 1 with T >= 2; counts must be non-negative.
    explicit BasicAllocation(std::vector<Count> counts) : counts_(std::move(counts)) {
        if (counts_.size() < 3)
            throw DomainError("allocation needs at least 3 arms (T >= 2)");
        for (Count c : counts_)
            if (!(c >= Count{0})) throw DomainError("allocation counts must be non-negative");
    }

    BasicAllocation(Count n0, Count n1, std::vector<Count> ne)
        : BasicAllocation(concat(n0, n1, std::move(ne))) {}

    int T() const noexcept { return static_cast<int>(counts_.size()) - 1; }
    Count n0() const noexcept { return counts_[0]; }
    Count n1() const noexcept { return counts_[1]; }
    // Pulse count for 2 <= t <= T.
    Count ne(int t) const noexcept { return counts_[static_cast<std::size_t>(t)]; }
    Count count(ArmId arm) const noexcept { return counts_[static_cast<std::size_t>(arm.index())]; }

    std::span<const Count> counts() const noexcept { return counts_; }
    Count& operator[](std::size_t arm_index) noexcept { return counts_[arm_index]; }
    Count operator[](std::size_t arm_index) const noexcept { return counts_[arm_index]; }

    Count total() const noexcept {
        Count s{0};
        for (Count c : counts_) s += c;
        return s;
    }

    bool all_positive() const noexcept {
        for (Count c : counts_)
            if (!(c > Count{0})) return false;
        return true;
    }

    friend bool operator==(const BasicAllocation&, const BasicAllocation&) = default;
    friend auto operator<=>(const BasicAllocation&, const BasicAllocation&) = default;

private:
    static std::vector<Count> concat(Count n0, Count n1, std::vector<Count> ne) {
        std::vector<Count> v;
        v.reserve(ne.size() + 2);
        v.push_back(n0);
        v.push_back(n1);
        v.insert(v.end(), ne.begin(), ne.end());
        return v;
    }

    std::vector<Count> counts_;
};

using Allocation = BasicAllocation<std::int64_t>;
using RealAllocation = BasicAllocation<double>;

RealAllocation to_real(const Allocation& alloc);

}  // namespace tminimax
