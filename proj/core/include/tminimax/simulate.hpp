#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "tminimax/allocation.hpp"
#include "tminimax/design.hpp"
#include "tminimax/risk.hpp"

namespace tminimax {

// Two-way fixed-effects outcome model parameters. Empty alpha/beta select the
// default effects alpha_i = log(i) and beta_t = log(t) (1-based i and t);
// otherwise alpha must hold N values and beta T values.
struct ModelParams {
    double mu = 0.0;
    std::vector<double> alpha;
    std::vector<double> beta;
    double delta = 1.0;
    double gamma = -1.0;      // carryover, standard model
    double rho_decay = 0.5;   // efficacy decay, habituation model
    double noise_sd = 4.0;    // 0 disables noise
    // One draw per (unit, period) shared by every arm. When false each arm
    // gets its own draws from its first treated period onwards and shares the
    // control draws before that.
    bool shared_noise = true;

    void validate(std::size_t N, int T) const;
    double alpha_at(std::size_t unit) const;  // 0-based unit
    double beta_at(int t) const;              // 1-based period
};

enum class OutcomeModel { Standard, Habituation };

std::string model_name(OutcomeModel model);
OutcomeModel parse_model(const std::string& name);

// Y_it(z) = mu + alpha_i + beta_t + z_t delta + gamma z_{t-1} + eps_it, z_0 = 0.
PotentialOutcomeSchedule standard_model(const ModelParams& params, std::size_t N, int T, std::uint64_t seed);
// Y_it(z) = mu + alpha_i + beta_t + z_t delta - z_t z_{t-1} rho_decay delta + eps_it.
PotentialOutcomeSchedule habituation_model(const ModelParams& params, std::size_t N, int T, std::uint64_t seed);
PotentialOutcomeSchedule generate(OutcomeModel model, const ModelParams& params, std::size_t N, int T,
                                  std::uint64_t seed);

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row);
    std::size_t column(const std::string& name) const;
};

// Rows (design, T, arm, count) for balanced, relaxed basic minimax and
// relaxed augmented minimax allocations.
Table allocation_table(std::int64_t N, const std::vector<int>& T_list);

// Rows (T, panel, design, max_risk, ratio). Panel "plugin_baseline": BCRD and
// the basic minimax design use the plug-in estimator while the augmented
// design uses augmented controls. Panel "augmented_all": every design uses
// augmented controls. Ratios are relative to BCRD within the panel. Integer
// designs unless `relaxed`.
Table maxrisk_table(std::int64_t N, const std::vector<int>& T_list, bool relaxed = false);

struct ComparisonOptions {
    ModelParams params;
    // false: plug-in loss for both designs, minimax = basic design.
    // true: augmented-controls loss for both designs, minimax = augmented design.
    bool augmented_loss = false;
    // false: per-replicate risk is the exact randomization expectation of the
    // loss given the drawn schedule. true: the loss of one drawn assignment.
    bool sampled = false;
};

// Rows (N, T, model, loss, design, reps, mean, sd, q05, q25, median, q75, q95)
// for designs "minimax" and "bcrd". Replicate r of cell (N, T) draws one
// schedule shared by both designs.
Table expected_risk_comparison(const std::vector<std::int64_t>& N_list, const std::vector<int>& T_list,
                               OutcomeModel model, int reps, std::uint64_t seed,
                               const ComparisonOptions& options = {});

}  // namespace tminimax
