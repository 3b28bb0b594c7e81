#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "tminimax/allocation.hpp"

using namespace tminimax;

namespace {

std::vector<double> counts_of(const RealAllocation& a) { return {a.counts().begin(), a.counts().end()}; }

std::vector<double> counts_of(const Allocation& a) {
    std::vector<double> v;
    for (auto c : a.counts()) v.push_back(static_cast<double>(c));
    return v;
}

// Objective of `mode` through the oracle's direct formula.
double oracle_objective(const std::vector<double>& n, const ObjectiveMode& mode) {
    using oracle::Pool;
    switch (mode.kind()) {
    case ObjectiveMode::Kind::Basic: return oracle::objective(n, 1, 2, 1, Pool::Control);
    case ObjectiveMode::Kind::Augmented: return oracle::objective(n, 1, 2, 1, Pool::Augmented);
    case ObjectiveMode::Kind::Weighted:
        return oracle::objective(n, mode.rho(), 1, 1 - mode.rho(), Pool::Augmented);
    case ObjectiveMode::Kind::Recycling: return oracle::objective(n, 1, 2, 1, Pool::Recycled, mode.k());
    }
    return 0;
}

// Gradient of the oracle objective by central differences in each coordinate.
std::vector<double> numeric_gradient(std::vector<double> n, const ObjectiveMode& mode) {
    std::vector<double> g(n.size());
    for (std::size_t a = 0; a < n.size(); ++a) {
        const double h = 1e-6 * n[a];
        const double x = n[a];
        n[a] = x + h;
        const double up = oracle_objective(n, mode);
        n[a] = x - h;
        const double dn = oracle_objective(n, mode);
        n[a] = x;
        g[a] = (up - dn) / (2 * h);
    }
    return g;
}

}  // namespace

TEST(Objective, BasicExample) {
    EXPECT_DOUBLE_EQ(objective(Allocation(2, 2, {2}), ObjectiveMode::basic()), 2.0);
}

TEST(Objective, AugmentedExample) {
    EXPECT_DOUBLE_EQ(objective(Allocation(1, 1, {1, 1}), ObjectiveMode::augmented()), 7.5);
}

TEST(Objective, WeightedHalfIsHalfAugmented) {
    const RealAllocation a(3.5, 2.25, {1.5, 4.0, 7.0});
    EXPECT_NEAR(objective(a, ObjectiveMode::weighted(0.5)), 0.5 * objective(a, ObjectiveMode::augmented()), 1e-14);
}

TEST(Objective, MatchesOracleOnRandomPoints) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.5, 20.0);
    const ObjectiveMode modes[] = {ObjectiveMode::basic(), ObjectiveMode::augmented(), ObjectiveMode::weighted(0.3),
                                   ObjectiveMode::recycling(1), ObjectiveMode::recycling(3)};
    for (int rep = 0; rep < 100; ++rep) {
        const int T = 2 + static_cast<int>(rng() % 8);
        std::vector<double> n(static_cast<std::size_t>(T) + 1);
        for (double& v : n) v = u(rng);
        for (const auto& mode : modes)
            EXPECT_TRUE(oracle::rel_close(objective(RealAllocation(n), mode), oracle_objective(n, mode), 1e-13));
    }
}

TEST(Objective, NonPositiveCountThrows) {
    EXPECT_THROW(objective(Allocation(0, 2, {2}), ObjectiveMode::basic()), DomainError);
    EXPECT_THROW(objective(RealAllocation(1.0, -1.0, {2.0}), ObjectiveMode::basic()), DomainError);
    // Zero-weight terms do not need their arm.
    EXPECT_NO_THROW(objective(Allocation(2, 0, {2}), ObjectiveMode::weighted(0.0)));
    EXPECT_NO_THROW(objective(Allocation(0, 2, {2}), ObjectiveMode::weighted(1.0)));
}

TEST(ObjectiveMode, Validation) {
    EXPECT_THROW(ObjectiveMode::weighted(-0.1), DomainError);
    EXPECT_THROW(ObjectiveMode::weighted(1.5), DomainError);
    EXPECT_THROW(ObjectiveMode::recycling(0), DomainError);
}

TEST(RelaxedBasic, ReferenceNumbers) {
    const RealAllocation a = relaxed_basic(10000, 30);
    EXPECT_NEAR(a.n1(), 1040, 0.5);
    EXPECT_NEAR(a.n0(), 1040, 0.5);
    for (int t = 2; t <= 30; ++t) EXPECT_NEAR(a.ne(t), 273, 0.5);
}

TEST(RelaxedBasic, SmallExample) {
    const RealAllocation a = relaxed_basic(4, 2);
    EXPECT_NEAR(a.n1(), 4 / (2 + std::sqrt(2.0)), 1e-12);
    EXPECT_NEAR(a.n1(), 1.17157, 1e-5);
    EXPECT_NEAR(a.ne(2), 1.65685, 1e-5);
    EXPECT_NEAR(a.total(), 4.0, 1e-12);
}

TEST(CSequence, Examples) {
    EXPECT_EQ(c_sequence(2, std::sqrt(2.0)).values, std::vector<double>{1.0});
    const double c2 = 1 / std::sqrt(1 + 1 / std::pow(1 + std::sqrt(2.0), 2));
    EXPECT_NEAR(c_sequence(3, std::sqrt(2.0)).at(2), c2, 1e-15);
    EXPECT_NEAR(c2, 0.92388, 1e-5);
}

TEST(CSequence, RecursionResiduals) {
    const double ell = std::sqrt(2.0);
    const CSequence c = c_sequence(10, ell);
    EXPECT_EQ(c.at(10), 1.0);
    for (int t = 2; t <= 10; ++t) {
        EXPECT_GT(c.at(t), 0.0);
        EXPECT_LE(c.at(t), 1.0);
    }
    for (int t = 2; t < 10; ++t) {
        double tail = 0;
        for (int s = t + 1; s <= 10; ++s) tail += c.at(s);
        const double rhs = 1 / std::sqrt(1 / (c.at(t + 1) * c.at(t + 1)) + 1 / std::pow(1 + ell * tail, 2));
        EXPECT_LT(std::abs(c.at(t) - rhs), 1e-12);
    }
}

TEST(RelaxedAugmented, SmallExample) {
    const RealAllocation a = relaxed_augmented(100, 3);
    EXPECT_NEAR(a.n0(), 19.891, 1e-3);
    EXPECT_NEAR(a.ne(2), 25.989, 1e-3);
    EXPECT_NEAR(a.ne(3), 28.130, 1e-3);
    // N1 equals N_{e_2} at the optimum (both see the same marginal price).
    EXPECT_NEAR(a.n1(), 25.989, 1e-3);
    EXPECT_NEAR(a.total(), 100.0, 1e-12);
}

TEST(RelaxedAugmented, PulseCountsIncreaseInT) {
    for (int T = 2; T <= 50; ++T) {
        const RealAllocation a = relaxed_augmented(1000, T);
        for (int t = 2; t < T; ++t) EXPECT_LE(a.ne(t), a.ne(t + 1));
        EXPECT_NEAR(a.total(), 1000, 1e-9 * 1000);
    }
}

TEST(RelaxedWeighted, HalfMatchesAugmented) {
    for (int T : {2, 3, 7, 30}) {
        const RealAllocation w = relaxed_weighted(500, T, 0.5);
        const RealAllocation a = relaxed_augmented(500, T);
        for (int i = 0; i <= T; ++i) EXPECT_TRUE(oracle::rel_close(w[i], a[i], 1e-12));
    }
}

TEST(RelaxedWeighted, Boundaries) {
    for (int T : {2, 5, 20}) {
        EXPECT_EQ(relaxed_weighted(100, T, 0.0).n1(), 0.0);
        EXPECT_EQ(relaxed_weighted(100, T, 1.0).n0(), 0.0);
        EXPECT_NEAR(relaxed_weighted(100, T, 1.0).total(), 100, 1e-10);
    }
}

TEST(RelaxedWeighted, StationaryAgainstOracleGradient) {
    for (double rho : {0.0, 0.2, 0.5, 0.9, 1.0})
        for (int T : {2, 4, 12}) {
            const ObjectiveMode mode = ObjectiveMode::weighted(rho);
            const auto n = counts_of(relaxed(1000, T, mode));
            const auto g = numeric_gradient(n, mode);
            double ref = 0;
            int active = 0;
            for (std::size_t a = 0; a < n.size(); ++a)
                if (n[a] > 0) ref += g[a], ++active;
            ref /= active;
            for (std::size_t a = 0; a < n.size(); ++a)
                if (n[a] > 0) EXPECT_NEAR(g[a] / ref, 1.0, 1e-6) << "rho=" << rho << " T=" << T << " arm " << a;
        }
}

TEST(RelaxedRecycling, LargeKMatchesAugmented) {
    for (int T : {2, 3, 6}) {
        const RealAllocation r = relaxed_recycling(200, T, T - 1);
        const RealAllocation a = relaxed_augmented(200, T);
        for (int i = 0; i <= T; ++i) EXPECT_TRUE(oracle::rel_close(r[i], a[i], 1e-6)) << "T=" << T << " arm " << i;
    }
}

TEST(RelaxedRecycling, DominatesAugmented) {
    const RealAllocation r = relaxed_recycling(60, 4, 1);
    const ObjectiveMode mode = ObjectiveMode::recycling(1);
    EXPECT_LE(objective(r, mode), objective(relaxed_augmented(60, 4), mode));
    for (double c : r.counts()) EXPECT_GE(c, 0.0);
    EXPECT_EQ(r.n0(), 0.0);  // recycled pulses fill every pool
    EXPECT_NEAR(r.total(), 60, 1e-9 * 60);
}

TEST(RelaxedRecycling, Stationary) {
    for (int k : {1, 2, 3})
        for (int T : {3, 6, 15}) {
            const ObjectiveMode mode = ObjectiveMode::recycling(k);
            const auto n = counts_of(relaxed(5000, T, mode));
            const auto g = numeric_gradient(n, mode);
            // KKT: equal gradients on active arms; moving mass into an arm at
            // the zero boundary must not help.
            std::size_t ref = 1;
            for (std::size_t a = 1; a < n.size(); ++a) {
                if (n[a] < 1e-6) continue;
                EXPECT_NEAR(g[a] / g[ref], 1.0, 1e-5) << "k=" << k << " T=" << T << " arm " << a;
            }
            if (n[0] < 1e-6) {
                auto moved = n;
                moved[0] += 1.0;
                moved[1] -= 1.0;
                EXPECT_GE(oracle_objective(moved, mode), oracle_objective(n, mode));
            } else {
                EXPECT_NEAR(g[0] / g[ref], 1.0, 1e-5);
            }
        }
}

TEST(MinimizeRelaxed, AgreesWithClosedForms) {
    const ObjectiveMode modes[] = {ObjectiveMode::basic(), ObjectiveMode::augmented(), ObjectiveMode::weighted(0.3),
                                   ObjectiveMode::weighted(0.0), ObjectiveMode::weighted(1.0)};
    for (const auto& mode : modes)
        for (int T : {2, 5, 30}) {
            const RealAllocation closed = relaxed(1000, T, mode);
            const RealAllocation numeric = minimize_relaxed(1000, T, mode);
            for (int i = 0; i <= T; ++i) EXPECT_NEAR(closed[i], numeric[i], 1e-6 * 1000) << mode.name() << " T=" << T;
        }
}

TEST(IntegerSolve, SmallExample) {
    const Allocation a = integer_solve(7, 2, ObjectiveMode::basic());
    EXPECT_EQ(a, Allocation(2, 2, {3}));
    EXPECT_DOUBLE_EQ(objective(a, ObjectiveMode::basic()), 5.0 / 3.0);
    EXPECT_EQ(brute_force_opt(7, 2, ObjectiveMode::basic()), Allocation(2, 2, {3}));
}

TEST(IntegerSolve, MatchesIndependentBruteForce) {
    const ObjectiveMode modes[] = {ObjectiveMode::basic(),        ObjectiveMode::augmented(),
                                   ObjectiveMode::weighted(0.0),  ObjectiveMode::weighted(0.3),
                                   ObjectiveMode::weighted(1.0),  ObjectiveMode::recycling(1),
                                   ObjectiveMode::recycling(2)};
    for (const auto& mode : modes)
        for (int T : {2, 3, 4})
            for (std::int64_t N = T + 1; N <= 22; N += 3) {
                std::vector<int> lo(static_cast<std::size_t>(T) + 1, 1);
                if (mode.kind() == ObjectiveMode::Kind::Weighted && mode.rho() == 0.0) lo[1] = 0;
                if (mode.kind() == ObjectiveMode::Kind::Weighted && mode.rho() == 1.0) lo[0] = 0;
                const double best = oracle::brute_min(N, lo, [&](const std::vector<double>& n) {
                    for (std::size_t a = 0; a < n.size(); ++a)
                        if (lo[a] == 0 && n[a] != 0) return std::numeric_limits<double>::infinity();
                    return oracle_objective(n, mode);
                });
                const Allocation got = integer_solve(N, T, mode);
                EXPECT_EQ(got.total(), N);
                EXPECT_TRUE(oracle::rel_close(oracle_objective(counts_of(got), mode), best, 1e-12))
                    << mode.name() << " N=" << N << " T=" << T;
            }
}

TEST(IntegerSolve, NearRoundedRelaxation) {
    for (std::int64_t N : {20, 33, 40, 500, 10000})
        for (int T : {2, 3, 10}) {
            if (N < T + 1) continue;
            const Allocation a = integer_solve(N, T, ObjectiveMode::basic());
            const RealAllocation r = relaxed_basic(static_cast<double>(N), T);
            for (int i = 0; i <= T; ++i) EXPECT_LE(std::abs(static_cast<double>(a[i]) - std::round(r[i])), 1.0);
        }
}

TEST(IntegerSolve, Infeasible) {
    EXPECT_THROW(integer_solve(3, 3, ObjectiveMode::basic()), DomainError);
    EXPECT_THROW(brute_force_opt(2, 2, ObjectiveMode::basic()), DomainError);
}

TEST(BruteForce, SinglePointAndBalancedBound) {
    EXPECT_EQ(brute_force_opt(4, 3, ObjectiveMode::augmented()), Allocation(1, 1, {1, 1}));
    for (std::int64_t N = 5; N <= 20; ++N)
        EXPECT_LE(objective(brute_force_opt(N, 4, ObjectiveMode::basic()), ObjectiveMode::basic()),
                  objective(balanced(N, 4), ObjectiveMode::basic()));
    EXPECT_THROW(brute_force_opt(61, 2, ObjectiveMode::basic()), DomainError);
    EXPECT_THROW(brute_force_opt(20, 6, ObjectiveMode::basic()), DomainError);
}

TEST(IntegerSolve, SameTieBreakAsBruteForce) {
    const ObjectiveMode modes[] = {ObjectiveMode::basic(), ObjectiveMode::augmented(), ObjectiveMode::weighted(0.8),
                                   ObjectiveMode::recycling(1)};
    for (const auto& mode : modes)
        for (int T : {2, 3, 4})
            for (std::int64_t N = T + 1; N <= 24; ++N)
                EXPECT_EQ(integer_solve(N, T, mode), brute_force_opt(N, T, mode)) << mode.name() << " N=" << N << " T=" << T;
}

TEST(Balanced, Examples) {
    const Allocation a = balanced(10000, 30);
    int big = 0;
    for (auto c : a.counts()) {
        EXPECT_TRUE(c == 322 || c == 323);
        big += c == 323;
    }
    EXPECT_EQ(big, 18);
    EXPECT_EQ(balanced(6, 2), Allocation(2, 2, {2}));
    EXPECT_EQ(balanced(7, 2), Allocation(3, 2, {2}));
    EXPECT_THROW(balanced(2, 2), DomainError);
}
