#include "tminimax/risk.hpp"

#include <cmath>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "tminimax/parallel.hpp"
#include "tminimax/rng.hpp"

namespace tminimax {

ControlPool LossSpec::pool() const noexcept {
    switch (estimator) {
    case InstantaneousEstimator::PlugIn: return ControlPool::AlwaysControl;
    case InstantaneousEstimator::Augmented: return ControlPool::Augmented;
    case InstantaneousEstimator::Recycling: return ControlPool::Recycled;
    }
    return ControlPool::AlwaysControl;
}

ObjectiveWeights LossSpec::objective_weights() const noexcept {
    return {lambda_weight(), lambda_weight() + instantaneous_weight(), instantaneous_weight()};
}

void LossSpec::validate() const {
    if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("loss weight rho must lie in [0, 1]");
    if (estimator == InstantaneousEstimator::Recycling && k < 1)
        throw DomainError("carryover order k must be at least 1");
}

std::string LossSpec::name() const {
    switch (estimator) {
    case InstantaneousEstimator::PlugIn: return "plugin";
    case InstantaneousEstimator::Augmented: return "augmented";
    case InstantaneousEstimator::Recycling: return "recycling";
    }
    return "?";
}

double loss(const AssignmentMatrix& Z, const PotentialOutcomeSchedule& sched, const LossSpec& spec) {
    return loss(Z, sched, spec, estimands(sched));
}

double loss(const AssignmentMatrix& Z, const PotentialOutcomeSchedule& sched, const LossSpec& spec,
            const Estimands& truth) {
    spec.validate();
    const double wl = spec.lambda_weight();
    const double wi = spec.instantaneous_weight();
    const ObservedOutcomes obs = observe(Z, sched);
    const EffectEstimates est = estimate_all(Z, obs, spec.estimator, spec.k, wl != 0.0, wi != 0.0);
    double lambda_sq = 0.0;
    double inst_sq = 0.0;
    for (int t = 2; t <= Z.T(); ++t) {
        const auto j = static_cast<std::size_t>(t - 2);
        if (wl != 0.0) {
            const double e = est.lambda[j] - truth.lambda.values[j];
            lambda_sq += e * e;
        }
        if (wi != 0.0) {
            const double e = est.instantaneous[j] - truth.delta.values[j];
            inst_sq += e * e;
        }
    }
    return wl * lambda_sq + wi * inst_sq;
}

RiskReport mc_risk(const Allocation& alloc, const PotentialOutcomeSchedule& sched, const LossSpec& spec,
                   std::int64_t draws, std::uint64_t seed, ArmFamily family) {
    if (draws < 1) throw DomainError("draws must be at least 1");
    if (alloc.total() != static_cast<std::int64_t>(sched.N()) || alloc.T() != sched.T())
        throw DomainError("allocation does not match the schedule's N and T");
    spec.validate();
    const Estimands truth = estimands(sched);
    std::vector<double> losses(static_cast<std::size_t>(draws));
    parallel_for(losses.size(), [&](std::size_t r) {
        const AssignmentMatrix Z = draw_assignment(alloc, family, derive_seed(seed, r));
        losses[r] = loss(Z, sched, spec, truth);
    });
    double sum = 0.0;
    for (double l : losses) sum += l;
    const double mean = sum / static_cast<double>(draws);
    double ss = 0.0;
    for (double l : losses) ss += (l - mean) * (l - mean);
    RiskReport report;
    report.mc_risk = mean;
    report.mc_se = draws > 1 ? std::sqrt(ss / static_cast<double>(draws - 1) / static_cast<double>(draws)) : 0.0;
    report.draws = draws;
    return report;
}

double exact_risk(const Allocation& alloc, const PotentialOutcomeSchedule& sched, const LossSpec& spec,
                  ArmFamily family) {
    if (alloc.total() != static_cast<std::int64_t>(sched.N()) || alloc.T() != sched.T())
        throw DomainError("allocation does not match the schedule's N and T");
    if (assignment_count(alloc) > 5'000'000) throw DomainError("too many assignments to enumerate");
    const Estimands truth = estimands(sched);
    double sum = 0.0;
    std::uint64_t count = 0;
    for_each_assignment(alloc, family, [&](const AssignmentMatrix& Z) {
        sum += loss(Z, sched, spec, truth);
        ++count;
    });
    return sum / static_cast<double>(count);
}

namespace {

double sample_variance(const std::vector<double>& x) {
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return ss / (n - 1.0);
}

}  // namespace

WorstCase worst_case_schedule(std::size_t N, int T, double lower, double upper) {
    if (!(lower < upper)) throw DomainError("degenerate box: need lower < upper");
    if (N < 2) throw DomainError("need at least two units");
    std::vector<double> column(N, lower);
    std::fill(column.begin(), column.begin() + static_cast<std::ptrdiff_t>((N + 1) / 2), upper);
    PotentialOutcomeSchedule sched(N, T);
    for (int a = 0; a <= T; ++a) {
        Matrix& m = sched[ArmId::from_index(a)];
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < static_cast<std::size_t>(T); ++j) m(i, j) = column[i];
    }
    const double vstar = sample_variance(column);
    return {std::move(sched), std::move(column), vstar};
}

double max_risk(const RealAllocation& alloc, double vstar, const LossSpec& spec) {
    spec.validate();
    return vstar * weighted_objective(alloc, spec.objective_weights(), spec.pool(), spec.k);
}

double max_risk(const Allocation& alloc, double vstar, const LossSpec& spec) {
    return max_risk(to_real(alloc), vstar, spec);
}

VarianceComponents variance_components(const PotentialOutcomeSchedule& sched, int t) {
    if (sched.N() < 2) throw DomainError("variance components need N >= 2");
    if (t < 2 || t > sched.T()) throw DomainError("period outside 2..T");
    const auto col = static_cast<std::size_t>(t - 1);
    const Matrix& y0 = sched[ArmId::control()];
    const Matrix& y1 = sched[ArmId::treated()];
    const Matrix& ye = sched[ArmId::pulse(t)];
    const std::size_t N = sched.N();
    std::vector<double> a(N), b(N), c(N), d(N), e(N);
    for (std::size_t i = 0; i < N; ++i) {
        a[i] = y1(i, col);
        b[i] = y0(i, col);
        c[i] = ye(i, col);
        d[i] = y1(i, col) - ye(i, col);
        e[i] = ye(i, col) - y0(i, col);
    }
    return {sample_variance(a), sample_variance(b), sample_variance(c), sample_variance(d), sample_variance(e)};
}

EstimatorVariances true_variances(const Allocation& alloc, const PotentialOutcomeSchedule& sched, int t,
                                  const LossSpec& spec) {
    if (alloc.total() != static_cast<std::int64_t>(sched.N()) || alloc.T() != sched.T())
        throw DomainError("allocation does not match the schedule's N and T");
    spec.validate();
    const VarianceComponents v = variance_components(sched, t);
    const double N = static_cast<double>(sched.N());
    auto positive = [](std::int64_t n, const char* what) {
        if (n <= 0) throw DomainError(std::string("variance undefined: empty ") + what);
        return static_cast<double>(n);
    };
    EstimatorVariances out;
    const double ne = positive(alloc.ne(t), "pulse arm");
    if (spec.lambda_weight() != 0.0) out.lambda = v.v1 / positive(alloc.n1(), "always-treated arm") + v.ve / ne - v.v1e / N;
    if (spec.instantaneous_weight() != 0.0) {
        const double pool = positive(control_pool_size(alloc, t, spec.pool(), spec.k), "control pool");
        out.instantaneous = v.v0 / pool + v.ve / ne - v.v0e / N;
    }
    return out;
}

double analytic_risk(const Allocation& alloc, const PotentialOutcomeSchedule& sched, const LossSpec& spec) {
    double r = 0.0;
    for (int t = 2; t <= sched.T(); ++t) {
        const EstimatorVariances v = true_variances(alloc, sched, t, spec);
        r += spec.lambda_weight() * v.lambda + spec.instantaneous_weight() * v.instantaneous;
    }
    return r;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile probability must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

ConfidenceInterval conservative_ci(const AssignmentMatrix& Z, const ObservedOutcomes& obs, int t,
                                   const LossSpec& spec, double level, EffectKind target) {
    if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must lie in (0, 1)");
    if (target == EffectKind::ATE) throw DomainError("intervals are provided for habituation and instantaneous effects");
    spec.validate();
    if (t < 2 || t > Z.T()) throw DomainError("period outside 2..T");
    if (spec.estimator == InstantaneousEstimator::Recycling && Z.family() == ArmFamily::Wedge)
        throw DomainError("the recycling estimator is only defined for pulse designs");

    std::vector<double> first, second;  // estimate = mean(first) - mean(second)
    const std::optional<int> k =
        spec.estimator == InstantaneousEstimator::Recycling ? std::optional<int>(spec.k) : std::nullopt;
    for (std::size_t i = 0; i < Z.N(); ++i) {
        const ArmId arm = Z.label(i);
        const double y = obs.at(i, t);
        if (target == EffectKind::Habituation) {
            if (arm.is_treated()) first.push_back(y);
            else if (arm.is_pulse() && arm.time() == t) second.push_back(y);
        } else {
            if (arm.is_pulse() && arm.time() == t) first.push_back(y);
            else if (spec.estimator == InstantaneousEstimator::PlugIn ? arm.is_control() : in_control_pool(arm, t, k))
                second.push_back(y);
        }
    }
    if (first.size() < 2 || second.size() < 2)
        throw UndefinedEstimator("variance undefined: each contrast group needs at least 2 units at period " +
                                 std::to_string(t));
    const double estimate = target == EffectKind::Habituation
                                ? lambda_hat(Z, obs, t)
                                : instantaneous_hat(Z, obs, t, spec.estimator, spec.k);
    const double var = sample_variance(first) / static_cast<double>(first.size()) +
                       sample_variance(second) / static_cast<double>(second.size());
    const double z = normal_quantile(0.5 + level / 2.0);
    return {estimate, z * std::sqrt(var)};
}

}  // namespace tminimax
