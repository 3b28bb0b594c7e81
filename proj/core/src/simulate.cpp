#include "tminimax/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tminimax/parallel.hpp"
#include "tminimax/rng.hpp"

namespace tminimax {

void ModelParams::validate(std::size_t N, int T) const {
    if (N < 1) throw DomainError("need at least one unit");
    if (T < 2) throw DomainError("need T >= 2");
    if (!(rho_decay >= 0.0 && rho_decay < 1.0)) throw DomainError("rho_decay must lie in [0, 1)");
    if (!(noise_sd >= 0.0)) throw DomainError("noise_sd must be non-negative");
    if (!alpha.empty() && alpha.size() != N) throw DomainError("alpha override must have N entries");
    if (!beta.empty() && beta.size() != static_cast<std::size_t>(T)) throw DomainError("beta override must have T entries");
}

double ModelParams::alpha_at(std::size_t unit) const {
    return alpha.empty() ? std::log(static_cast<double>(unit + 1)) : alpha[unit];
}

double ModelParams::beta_at(int t) const {
    return beta.empty() ? std::log(static_cast<double>(t)) : beta[static_cast<std::size_t>(t - 1)];
}

std::string model_name(OutcomeModel model) {
    return model == OutcomeModel::Standard ? "standard" : "habituation";
}

OutcomeModel parse_model(const std::string& name) {
    if (name == "standard") return OutcomeModel::Standard;
    if (name == "habituation") return OutcomeModel::Habituation;
    throw DomainError("unknown model '" + name + "'");
}

namespace {

// Noise matrices per arm. Shared: one N x T matrix reused. Otherwise arm a
// copies the control draws before its first treated period.
std::vector<Matrix> draw_noise(const ModelParams& p, std::size_t N, int T, std::uint64_t seed) {
    const auto cols = static_cast<std::size_t>(T);
    const std::size_t arms = p.shared_noise ? 1 : cols + 1;
    std::vector<Matrix> noise(arms, Matrix(N, cols));
    if (p.noise_sd == 0.0) return noise;
    for (std::size_t a = 0; a < arms; ++a) {
        Rng rng = make_rng(derive_seed(seed, a));
        std::normal_distribution<double> eps(0.0, p.noise_sd);
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < cols; ++j) noise[a](i, j) = eps(rng);
    }
    for (std::size_t a = 1; a < arms; ++a) {
        const std::size_t first = a == 1 ? 0 : a - 1;  // column of the first treated period
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < first; ++j) noise[a](i, j) = noise[0](i, j);
    }
    return noise;
}

template <typename Effect>
PotentialOutcomeSchedule build(const ModelParams& p, std::size_t N, int T, std::uint64_t seed, Effect effect) {
    p.validate(N, T);
    const std::vector<Matrix> noise = draw_noise(p, N, T, seed);
    PotentialOutcomeSchedule sched(N, T);
    for (int a = 0; a <= T; ++a) {
        const ArmId arm = ArmId::from_index(a);
        const AssignmentVector z = make_arm_vector(arm, T);
        const Matrix& eps = noise[p.shared_noise ? 0 : static_cast<std::size_t>(a)];
        Matrix& y = sched[arm];
        for (std::size_t i = 0; i < N; ++i) {
            const double base = p.mu + p.alpha_at(i);
            for (int t = 1; t <= T; ++t) {
                const auto j = static_cast<std::size_t>(t - 1);
                const int zt = z[j];
                const int zprev = t > 1 ? z[j - 1] : 0;
                y(i, j) = base + p.beta_at(t) + effect(zt, zprev) + eps(i, j);
            }
        }
    }
    return sched;
}

}  // namespace

PotentialOutcomeSchedule standard_model(const ModelParams& p, std::size_t N, int T, std::uint64_t seed) {
    return build(p, N, T, seed, [&](int zt, int zprev) { return zt * p.delta + p.gamma * zprev; });
}

PotentialOutcomeSchedule habituation_model(const ModelParams& p, std::size_t N, int T, std::uint64_t seed) {
    return build(p, N, T, seed,
                 [&](int zt, int zprev) { return zt * p.delta - zt * zprev * p.rho_decay * p.delta; });
}

PotentialOutcomeSchedule generate(OutcomeModel model, const ModelParams& params, std::size_t N, int T,
                                  std::uint64_t seed) {
    return model == OutcomeModel::Standard ? standard_model(params, N, T, seed)
                                           : habituation_model(params, N, T, seed);
}

void Table::add(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw DomainError("table row has the wrong number of cells");
    rows.push_back(std::move(row));
}

std::size_t Table::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw DomainError("no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

namespace {

void check_feasible(std::int64_t N, int T) {
    if (T < 2) throw DomainError("need T >= 2");
    if (N < T + 1) throw DomainError("infeasible: N = " + std::to_string(N) + " < T + 1 = " + std::to_string(T + 1));
}

}  // namespace

Table allocation_table(std::int64_t N, const std::vector<int>& T_list) {
    Table table{{"design", "T", "arm", "count"}, {}};
    for (int T : T_list) check_feasible(N, T);
    for (int T : T_list) {
        const RealAllocation designs[] = {to_real(balanced(N, T)), relaxed_basic(static_cast<double>(N), T),
                                          relaxed_augmented(static_cast<double>(N), T)};
        const char* names[] = {"balanced", "minimax", "augmented"};
        for (int d = 0; d < 3; ++d)
            for (int a = 0; a <= T; ++a)
                table.add({names[d], std::int64_t{T}, ArmId::from_index(a).key(),
                           designs[d][static_cast<std::size_t>(a)]});
    }
    return table;
}

Table maxrisk_table(std::int64_t N, const std::vector<int>& T_list, bool relaxed_designs) {
    Table table{{"T", "panel", "design", "max_risk", "ratio"}, {}};
    for (int T : T_list) check_feasible(N, T);
    const LossSpec plug = LossSpec::plugin().unnormalized();
    const LossSpec aug = LossSpec::augmented().unnormalized();
    for (int T : T_list) {
        auto design = [&](const ObjectiveMode& mode) {
            return relaxed_designs ? relaxed(static_cast<double>(N), T, mode)
                                   : to_real(integer_solve(N, T, mode));
        };
        const RealAllocation bcrd = to_real(balanced(N, T));
        const RealAllocation minimax = design(ObjectiveMode::basic());
        const RealAllocation augmented = design(ObjectiveMode::augmented());
        struct Entry {
            const char* panel;
            const char* name;
            const RealAllocation* alloc;
            const LossSpec* spec;
        };
        const Entry entries[] = {
            {"plugin_baseline", "bcrd", &bcrd, &plug},
            {"plugin_baseline", "minimax", &minimax, &plug},
            {"plugin_baseline", "augmented", &augmented, &aug},
            {"augmented_all", "bcrd", &bcrd, &aug},
            {"augmented_all", "minimax", &minimax, &aug},
            {"augmented_all", "augmented", &augmented, &aug},
        };
        double baseline = 0.0;
        for (const Entry& e : entries) {
            const double r = max_risk(*e.alloc, 1.0, *e.spec);
            if (std::string(e.name) == "bcrd") baseline = r;
            table.add({std::int64_t{T}, e.panel, e.name, r, r / baseline});
        }
    }
    return table;
}

namespace {

// Linear interpolation between order statistics (type 7).
double quantile_sorted(const std::vector<double>& x, double q) {
    const double h = q * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

}  // namespace

Table expected_risk_comparison(const std::vector<std::int64_t>& N_list, const std::vector<int>& T_list,
                               OutcomeModel model, int reps, std::uint64_t seed, const ComparisonOptions& options) {
    if (reps < 1) throw DomainError("reps must be at least 1");
    for (std::int64_t N : N_list)
        for (int T : T_list) check_feasible(N, T);
    Table table{{"N", "T", "model", "loss", "design", "reps", "mean", "sd", "q05", "q25", "median", "q75", "q95"}, {}};
    const LossSpec spec = (options.augmented_loss ? LossSpec::augmented() : LossSpec::plugin()).unnormalized();
    const std::string loss_name = options.augmented_loss ? "augmented" : "plugin";
    std::uint64_t cell = 0;
    for (std::int64_t N : N_list) {
        for (int T : T_list) {
            const Allocation minimax =
                integer_solve(N, T, options.augmented_loss ? ObjectiveMode::augmented() : ObjectiveMode::basic());
            const Allocation bcrd = balanced(N, T);
            const Allocation* designs[] = {&minimax, &bcrd};
            const std::uint64_t cell_seed = derive_seed(seed, cell++);
            std::vector<double> risk[2] = {std::vector<double>(static_cast<std::size_t>(reps)),
                                           std::vector<double>(static_cast<std::size_t>(reps))};
            parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
                const std::uint64_t rep_seed = derive_seed(cell_seed, r);
                const PotentialOutcomeSchedule sched =
                    generate(model, options.params, static_cast<std::size_t>(N), T, derive_seed(rep_seed, 0));
                for (std::size_t d = 0; d < 2; ++d) {
                    if (options.sampled) {
                        const AssignmentMatrix Z = draw_assignment(*designs[d], ArmFamily::Pulse, derive_seed(rep_seed, 1 + d));
                        risk[d][r] = loss(Z, sched, spec);
                    } else {
                        risk[d][r] = analytic_risk(*designs[d], sched, spec);
                    }
                }
            });
            const char* names[] = {"minimax", "bcrd"};
            for (std::size_t d = 0; d < 2; ++d) {
                std::vector<double>& x = risk[d];
                double sum = 0.0;
                for (double v : x) sum += v;
                const double mean = sum / static_cast<double>(reps);
                double ss = 0.0;
                for (double v : x) ss += (v - mean) * (v - mean);
                const double sd = reps > 1 ? std::sqrt(ss / static_cast<double>(reps - 1)) : 0.0;
                std::sort(x.begin(), x.end());
                table.add({N, std::int64_t{T}, model_name(model), loss_name, names[d], std::int64_t{reps}, mean, sd,
                           quantile_sorted(x, 0.05), quantile_sorted(x, 0.25), quantile_sorted(x, 0.5),
                           quantile_sorted(x, 0.75), quantile_sorted(x, 0.95)});
            }
        }
    }
    return table;
}

}  // namespace tminimax
