#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tminimax/allocation.hpp"
#include "tminimax/design.hpp"
#include "tminimax/estimators.hpp"

namespace tminimax {

// Weighted squared-error loss
//   rho * sum_t (lambda_hat_t - lambda_t)^2 + (1 - rho) * sum_t (est_t - delta_t)^2
// where est is the plug-in, augmented or recycling instantaneous estimator.
// With doubled_weights both weights are doubled, so rho = 1/2 gives the
// unweighted sum of the two squared-error series.
struct LossSpec {
    InstantaneousEstimator estimator = InstantaneousEstimator::PlugIn;
    double rho = 0.5;
    int k = 1;
    bool doubled_weights = false;

    static LossSpec plugin(double rho = 0.5) { return {InstantaneousEstimator::PlugIn, rho, 1, false}; }
    static LossSpec augmented(double rho = 0.5) { return {InstantaneousEstimator::Augmented, rho, 1, false}; }
    static LossSpec recycling(int k, double rho = 0.5) { return {InstantaneousEstimator::Recycling, rho, k, false}; }
    LossSpec unnormalized() const {
        LossSpec s = *this;
        s.doubled_weights = true;
        return s;
    }

    double lambda_weight() const noexcept { return rho * scale(); }
    double instantaneous_weight() const noexcept { return (1.0 - rho) * scale(); }
    ControlPool pool() const noexcept;
    // Coefficients of the matching worst-case risk objective.
    ObjectiveWeights objective_weights() const noexcept;
    void validate() const;
    std::string name() const;

private:
    double scale() const noexcept { return doubled_weights ? 2.0 : 1.0; }
};

double loss(const AssignmentMatrix& Z, const PotentialOutcomeSchedule& sched, const LossSpec& spec);
// Same, with the schedule's estimands precomputed.
double loss(const AssignmentMatrix& Z, const PotentialOutcomeSchedule& sched, const LossSpec& spec,
            const Estimands& truth);

struct RiskReport {
    std::string design;
    std::optional<double> max_risk;  // analytical worst case, when known
    double mc_risk = 0.0;
    double mc_se = 0.0;
    std::int64_t draws = 0;
};

// Mean loss over `draws` complete randomizations; replicate r uses
// derive_seed(seed, r), so the result does not depend on the thread count.
RiskReport mc_risk(const Allocation& alloc, const PotentialOutcomeSchedule& sched, const LossSpec& spec,
                   std::int64_t draws, std::uint64_t seed, ArmFamily family = ArmFamily::Pulse);

// Exact randomization expectation of the loss by enumerating every
// assignment with the allocated counts. Small N only.
double exact_risk(const Allocation& alloc, const PotentialOutcomeSchedule& sched, const LossSpec& spec,
                  ArmFamily family = ArmFamily::Pulse);

struct WorstCase {
    PotentialOutcomeSchedule schedule;
    std::vector<double> column;  // shared by every column of every arm
    double vstar;                // sample variance of `column`
};

// Schedule attaining the maximum risk over the box [lower, upper]^N: every arm
// and period equal to ceil(N/2) entries at `upper` followed by floor(N/2) at
// `lower`.
WorstCase worst_case_schedule(std::size_t N, int T, double lower, double upper);

// Closed-form maximum risk of the completely randomized design with these
// counts: vstar times the matching objective.
double max_risk(const RealAllocation& alloc, double vstar, const LossSpec& spec);
double max_risk(const Allocation& alloc, double vstar, const LossSpec& spec);

// Finite-population variances at period t (divisor N - 1). v1e and v0e are the
// variances of the unit-level contrasts Y(1) - Y(e_t) and Y(e_t) - Y(0).
struct VarianceComponents {
    double v1 = 0.0;
    double v0 = 0.0;
    double ve = 0.0;
    double v1e = 0.0;
    double v0e = 0.0;
};

VarianceComponents variance_components(const PotentialOutcomeSchedule& sched, int t);

struct EstimatorVariances {
    double lambda = 0.0;
    double instantaneous = 0.0;
};

// Randomization variances of lambda_hat_t and of the LossSpec's instantaneous
// estimator under complete randomization with these counts. For the augmented
// and recycling estimators the always-control count is replaced by the control
// pool size, which is exact when the schedule satisfies the estimator's
// assumptions.
EstimatorVariances true_variances(const Allocation& alloc, const PotentialOutcomeSchedule& sched, int t,
                                  const LossSpec& spec);

// Expected loss under complete randomization: sum over t of the weighted
// variances (the estimators are unbiased).
double analytic_risk(const Allocation& alloc, const PotentialOutcomeSchedule& sched, const LossSpec& spec);

struct ConfidenceInterval {
    double estimate = 0.0;
    double half_width = 0.0;
    double lower() const noexcept { return estimate - half_width; }
    double upper() const noexcept { return estimate + half_width; }
};

double normal_quantile(double p);

// Normal-approximation interval with the conservative variance estimate
// s_a^2/n_a + s_b^2/n_b (the unidentifiable contrast term is dropped).
// `target` selects the habituation or the instantaneous contrast.
ConfidenceInterval conservative_ci(const AssignmentMatrix& Z, const ObservedOutcomes& obs, int t,
                                   const LossSpec& spec, double level,
                                   EffectKind target = EffectKind::Instantaneous);

}  // namespace tminimax
