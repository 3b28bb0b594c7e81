#pragma once

#include <optional>
#include <span>
#include <vector>

#include "tminimax/design.hpp"

namespace tminimax {

enum class EffectKind { Habituation, Instantaneous, ATE };

// Values for periods t = 2..T.
struct EffectSeries {
    EffectKind kind;
    std::vector<double> values;

    int T() const noexcept { return static_cast<int>(values.size()) + 1; }
    double at(int t) const { return values.at(static_cast<std::size_t>(t - 2)); }
};

struct Estimands {
    EffectSeries lambda;  // habituation: Y(1) - Y(e_t) at t
    EffectSeries delta;   // instantaneous: Y(e_t) - Y(0) at t
    EffectSeries ate;     // Y(1) - Y(0) at t; equals lambda + delta
};

Estimands estimands(const PotentialOutcomeSchedule& sched);

// Which contrast group estimates the control mean for the instantaneous effect.
enum class InstantaneousEstimator { PlugIn, Augmented, Recycling };

// Always-treated mean minus pulse-t mean at period t.
double lambda_hat(const AssignmentMatrix& Z, const ObservedOutcomes& obs, int t);
// Pulse-t mean minus always-control mean at period t.
double delta_hat(const AssignmentMatrix& Z, const ObservedOutcomes& obs, int t);
// Pulse-t mean minus the mean over always-control units and pulses starting
// after t. Unbiased only when the schedule is non-anticipating.
double gamma_hat(const AssignmentMatrix& Z, const ObservedOutcomes& obs, int t);
// As gamma_hat, additionally reusing pulses that started at or before t - k.
// Requires a pulse design and k-order carryover.
double beta_hat(const AssignmentMatrix& Z, const ObservedOutcomes& obs, int t, int k);

double instantaneous_hat(const AssignmentMatrix& Z, const ObservedOutcomes& obs, int t,
                         InstantaneousEstimator estimator, int k = 1);

struct EffectEstimates {
    std::vector<double> lambda;         // t = 2..T, empty when not requested
    std::vector<double> instantaneous;  // t = 2..T, empty when not requested
};

// All periods at once; same values as the per-period functions.
EffectEstimates estimate_all(const AssignmentMatrix& Z, const ObservedOutcomes& obs,
                             InstantaneousEstimator estimator, int k, bool want_lambda = true,
                             bool want_instantaneous = true);

// Order-independent sum: the result depends only on the multiset of values,
// which keeps every estimator exactly invariant under relabelling units.
double multiset_sum(std::span<double> values);

}  // namespace tminimax
