#include "fvein/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fvein/error.hpp"

namespace fvein {

void ThresholdStrategy::validate() const {
    if (target == ThresholdTarget::FixedFar)
        require(fixed_far_value > 0.0 && fixed_far_value < 1.0,
                "threshold: fixed_far_value must lie in (0,1)");
}

GaussianModel fit_gaussian(const std::string& user_id, std::span<const PooledFeatureVector> targets,
                           const ShrinkageConfig& shrinkage) {
    require(targets.size() >= 2,
            "fit_gaussian: user '" + user_id + "' needs at least 2 samples, got " +
                std::to_string(targets.size()));
    require(shrinkage.alpha >= 0.0 && shrinkage.alpha <= 1.0, "fit_gaussian: alpha must be in [0,1]");
    require(shrinkage.regularizer > 0.0, "fit_gaussian: regularizer must be positive");
    const Eigen::Index dim = targets.front().size();
    require(dim >= 1, "fit_gaussian: empty feature vectors");
    for (const auto& t : targets) {
        require(t.size() == dim, "fit_gaussian: feature vectors differ in dimension");
        if (!t.allFinite()) fail(ErrorKind::Numeric, "fit_gaussian: non-finite feature vector");
    }

    const double n = static_cast<double>(targets.size());
    Vector mean = Vector::Zero(dim);
    for (const auto& t : targets) mean += t;
    mean /= n;
    Vector var = Vector::Zero(dim);
    for (const auto& t : targets) var += (t - mean).cwiseAbs2();
    var /= (n - 1.0);

    const double target_var = var.mean();
    const Vector reg = ((1.0 - shrinkage.alpha) * var).array() +
                       shrinkage.alpha * target_var + shrinkage.regularizer;

    GaussianModel m;
    m.user_id = user_id;
    m.mean = std::move(mean);
    m.regularizer = shrinkage.regularizer;
    // Cholesky of a diagonal matrix: pivots are the square roots of the entries.
    for (Eigen::Index i = 0; i < dim; ++i)
        if (!(reg(i) > 0.0) || !std::isfinite(reg(i)))
            fail(ErrorKind::Numeric, "fit_gaussian: covariance not positive definite for user '" +
                                         user_id + "'");
    m.inverse_variance = reg.cwiseInverse();
    m.log_det = reg.array().log().sum();
    return m;
}

double score(const GaussianModel& model, const PooledFeatureVector& v) {
    require(v.size() == model.mean.size(),
            "score: vector dim " + std::to_string(v.size()) + " does not match model dim " +
                std::to_string(model.mean.size()));
    const double mahalanobis = (v - model.mean).cwiseAbs2().dot(model.inverse_variance);
    return -0.5 * mahalanobis - 0.5 * model.log_det;
}

double false_accept_rate(std::span<const double> impostor, double threshold) {
    const auto accepted = std::count_if(impostor.begin(), impostor.end(),
                                        [&](double s) { return s >= threshold; });
    return static_cast<double>(accepted) / static_cast<double>(impostor.size());
}

double false_reject_rate(std::span<const double> genuine, double threshold) {
    const auto rejected = std::count_if(genuine.begin(), genuine.end(),
                                        [&](double s) { return s < threshold; });
    return static_cast<double>(rejected) / static_cast<double>(genuine.size());
}

double select_threshold(std::span<const double> genuine, std::span<const double> impostor,
                        const ThresholdStrategy& strategy) {
    require(!genuine.empty() && !impostor.empty(), "select_threshold: empty score list");
    strategy.validate();

    std::vector<double> values(genuine.begin(), genuine.end());
    values.insert(values.end(), impostor.begin(), impostor.end());
    for (double v : values)
        if (std::isnan(v)) fail(ErrorKind::Numeric, "select_threshold: NaN score");
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());

    if (strategy.target == ThresholdTarget::FixedFar) {
        // FAR only drops just above an impostor score; scan upward.
        if (false_accept_rate(impostor, values.front()) <= strategy.fixed_far_value)
            return values.front();
        std::vector<double> imp(impostor.begin(), impostor.end());
        std::sort(imp.begin(), imp.end());
        for (double s : imp) {
            const double t = std::nextafter(s, std::numeric_limits<double>::infinity());
            if (false_accept_rate(impostor, t) <= strategy.fixed_far_value) return t;
        }
        return std::nextafter(imp.back(), std::numeric_limits<double>::infinity());
    }

    // Interval i covers thresholds in (values[i-1], values[i]]; the final one
    // (values.back(), +inf) rejects everything.
    double best_gap = std::numeric_limits<double>::infinity();
    double best_sum = std::numeric_limits<double>::infinity();
    double best_threshold = 0.0;
    for (std::size_t i = 0; i <= values.size(); ++i) {
        const double probe = i < values.size()
                                 ? values[i]
                                 : std::nextafter(values.back(), std::numeric_limits<double>::infinity());
        const double far = false_accept_rate(impostor, probe);
        const double frr = false_reject_rate(genuine, probe);
        const double gap = std::abs(far - frr);
        const double sum = far + frr;
        if (gap < best_gap || (gap == best_gap && sum < best_sum)) {
            best_gap = gap;
            best_sum = sum;
            if (i == 0)
                best_threshold = values.front() - 1.0;
            else if (i == values.size())
                best_threshold = values.back() + 1.0;
            else
                best_threshold = 0.5 * (values[i - 1] + values[i]);
        }
    }
    return best_threshold;
}

Verification verify(const GaussianModel& model, const PooledFeatureVector& v) {
    if (!model.threshold)
        fail(ErrorKind::State, "verify: model for user '" + model.user_id + "' has no threshold");
    Verification out;
    out.score = score(model, v);
    out.decision = out.score >= *model.threshold ? Decision::Accept : Decision::Reject;
    return out;
}

}  // namespace fvein
