#include "tminimax/estimators.hpp"

#include <algorithm>
#include <string>

namespace tminimax {

double multiset_sum(std::span<double> values) {
    std::sort(values.begin(), values.end());
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

namespace {

double mean_of_differences(const Matrix& a, const Matrix& b, std::size_t col, std::vector<double>& buf) {
    buf.resize(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) buf[i] = a(i, col) - b(i, col);
    return multiset_sum(buf) / static_cast<double>(a.rows());
}

void check_inputs(const AssignmentMatrix& Z, const ObservedOutcomes& obs) {
    if (obs.values.rows() != Z.N() || obs.values.cols() != static_cast<std::size_t>(Z.T()))
        throw DomainError("observed outcomes must be N x T for the assignment");
}

void check_period(const AssignmentMatrix& Z, int t) {
    if (t < 2 || t > Z.T())
        throw DomainError("period " + std::to_string(t) + " outside 2.." + std::to_string(Z.T()));
}

// Per-arm sums and counts of one observed column.
struct ColumnSums {
    std::vector<double> sum;
    std::vector<std::int64_t> count;
};

ColumnSums column_sums(const AssignmentMatrix& Z, const ObservedOutcomes& obs, int t,
                       std::vector<std::vector<double>>& buckets) {
    const auto arms = static_cast<std::size_t>(Z.T()) + 1;
    buckets.resize(arms);
    for (auto& b : buckets) b.clear();
    const auto col = static_cast<std::size_t>(t - 1);
    for (std::size_t i = 0; i < Z.N(); ++i)
        buckets[static_cast<std::size_t>(Z.label(i).index())].push_back(obs.values(i, col));
    ColumnSums cs{std::vector<double>(arms, 0.0), std::vector<std::int64_t>(arms, 0)};
    for (std::size_t a = 0; a < arms; ++a) {
        cs.count[a] = static_cast<std::int64_t>(buckets[a].size());
        cs.sum[a] = multiset_sum(buckets[a]);
    }
    return cs;
}

double arm_mean(const ColumnSums& cs, ArmId arm, int t) {
    const auto a = static_cast<std::size_t>(arm.index());
    if (cs.count[a] == 0)
        throw UndefinedEstimator("no units in arm " + arm.key() + " (needed at period " + std::to_string(t) + ")");
    return cs.sum[a] / static_cast<double>(cs.count[a]);
}

double pool_mean(const ColumnSums& cs, int t, std::optional<int> k) {
    double sum = 0.0;
    std::int64_t n = 0;
    for (std::size_t a = 0; a < cs.sum.size(); ++a) {
        if (!in_control_pool(ArmId::from_index(static_cast<int>(a)), t, k)) continue;
        sum += cs.sum[a];
        n += cs.count[a];
    }
    if (n == 0) throw UndefinedEstimator("empty control pool at period " + std::to_string(t));
    return sum / static_cast<double>(n);
}

double lambda_from(const ColumnSums& cs, int t) {
    return arm_mean(cs, ArmId::treated(), t) - arm_mean(cs, ArmId::pulse(t), t);
}

double instantaneous_from(const ColumnSums& cs, int t, InstantaneousEstimator estimator, int k) {
    const double pulse = arm_mean(cs, ArmId::pulse(t), t);
    switch (estimator) {
    case InstantaneousEstimator::PlugIn: return pulse - arm_mean(cs, ArmId::control(), t);
    case InstantaneousEstimator::Augmented: return pulse - pool_mean(cs, t, std::nullopt);
    case InstantaneousEstimator::Recycling: return pulse - pool_mean(cs, t, k);
    }
    throw DomainError("unknown estimator");
}

void check_recycling(const AssignmentMatrix& Z, InstantaneousEstimator estimator, int k) {
    if (estimator != InstantaneousEstimator::Recycling) return;
    if (k < 1) throw DomainError("carryover order k must be at least 1");
    if (Z.family() == ArmFamily::Wedge)
        throw DomainError("the recycling estimator is only defined for pulse designs");
}

}  // namespace

Estimands estimands(const PotentialOutcomeSchedule& sched) {
    Estimands e{{EffectKind::Habituation, {}}, {EffectKind::Instantaneous, {}}, {EffectKind::ATE, {}}};
    std::vector<double> buf;
    const Matrix& y0 = sched[ArmId::control()];
    const Matrix& y1 = sched[ArmId::treated()];
    for (int t = 2; t <= sched.T(); ++t) {
        const Matrix& ye = sched[ArmId::pulse(t)];
        const auto col = static_cast<std::size_t>(t - 1);
        e.lambda.values.push_back(mean_of_differences(y1, ye, col, buf));
        e.delta.values.push_back(mean_of_differences(ye, y0, col, buf));
        e.ate.values.push_back(mean_of_differences(y1, y0, col, buf));
    }
    return e;
}

double lambda_hat(const AssignmentMatrix& Z, const ObservedOutcomes& obs, int t) {
    check_inputs(Z, obs);
    check_period(Z, t);
    std::vector<std::vector<double>> buckets;
    return lambda_from(column_sums(Z, obs, t, buckets), t);
}

double instantaneous_hat(const AssignmentMatrix& Z, const ObservedOutcomes& obs, int t,
                         InstantaneousEstimator estimator, int k) {
    check_inputs(Z, obs);
    check_period(Z, t);
    check_recycling(Z, estimator, k);
    std::vector<std::vector<double>> buckets;
    return instantaneous_from(column_sums(Z, obs, t, buckets), t, estimator, k);
}

double delta_hat(const AssignmentMatrix& Z, const ObservedOutcomes& obs, int t) {
    return instantaneous_hat(Z, obs, t, InstantaneousEstimator::PlugIn);
}

double gamma_hat(const AssignmentMatrix& Z, const ObservedOutcomes& obs, int t) {
    return instantaneous_hat(Z, obs, t, InstantaneousEstimator::Augmented);
}

double beta_hat(const AssignmentMatrix& Z, const ObservedOutcomes& obs, int t, int k) {
    return instantaneous_hat(Z, obs, t, InstantaneousEstimator::Recycling, k);
}

EffectEstimates estimate_all(const AssignmentMatrix& Z, const ObservedOutcomes& obs,
                             InstantaneousEstimator estimator, int k, bool want_lambda,
                             bool want_instantaneous) {
    check_inputs(Z, obs);
    if (want_instantaneous) check_recycling(Z, estimator, k);
    EffectEstimates out;
    std::vector<std::vector<double>> buckets;
    for (int t = 2; t <= Z.T(); ++t) {
        const ColumnSums cs = column_sums(Z, obs, t, buckets);
        if (want_lambda) out.lambda.push_back(lambda_from(cs, t));
        if (want_instantaneous) out.instantaneous.push_back(instantaneous_from(cs, t, estimator, k));
    }
    return out;
}

}  // namespace tminimax
