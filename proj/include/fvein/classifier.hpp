#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fvein/features.hpp"

namespace fvein {

struct ShrinkageConfig {
    double alpha = 0.5;         // weight on the isotropic target
    double regularizer = 1e-6;  // ridge added to every variance
};

// One-class Gaussian over pooled features. The regularized covariance is
// diagonal, so its inverse is stored as a vector of reciprocal variances.
struct GaussianModel {
    std::string user_id;
    Vector mean;
    Vector inverse_variance;
    double log_det = 0.0;
    double regularizer = 0.0;
    std::optional<double> threshold;

    int dim() const { return static_cast<int>(mean.size()); }

    bool operator==(const GaussianModel& o) const {
        return user_id == o.user_id && same_values(mean, o.mean) &&
               same_values(inverse_variance, o.inverse_variance) && log_det == o.log_det &&
               regularizer == o.regularizer && threshold == o.threshold;
    }
};

enum class ThresholdKind { Global, PerUser };
enum class ThresholdTarget { EerPoint, FixedFar };

struct ThresholdStrategy {
    ThresholdKind kind = ThresholdKind::Global;
    ThresholdTarget target = ThresholdTarget::EerPoint;
    double fixed_far_value = 0.001;

    void validate() const;
};

enum class Decision { Accept, Reject };

struct Verification {
    Decision decision = Decision::Reject;
    double score = 0.0;
};

/// Fits a diagonal-plus-shrinkage Gaussian to enrollment vectors:
///   cov = (1 - alpha) diag(s^2) + alpha * mean(s^2) * I + regularizer * I
/// with s^2 the unbiased per-dimension sample variances.
GaussianModel fit_gaussian(const std::string& user_id, std::span<const PooledFeatureVector> targets,
                           const ShrinkageConfig& shrinkage = {});

// Gaussian log-density without the constant term.
double score(const GaussianModel& model, const PooledFeatureVector& v);

// Fraction of impostor scores >= threshold and of genuine scores < threshold.
double false_accept_rate(std::span<const double> impostor, double threshold);
double false_reject_rate(std::span<const double> genuine, double threshold);

/// EER target: FAR and FRR are constant between consecutive distinct score
/// values; the interval with the smallest |FAR - FRR| (ties broken by the
/// lower FAR + FRR, then the lower interval) is chosen and its midpoint
/// returned. The unbounded interval below the lowest score returns that
/// score minus one.
/// Fixed-FAR target: the smallest threshold whose FAR does not exceed the
/// requested value.
double select_threshold(std::span<const double> genuine, std::span<const double> impostor,
                        const ThresholdStrategy& strategy);

Verification verify(const GaussianModel& model, const PooledFeatureVector& v);

}  // namespace fvein
