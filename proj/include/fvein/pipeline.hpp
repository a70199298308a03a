#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fvein/bundle.hpp"
#include "fvein/dataset.hpp"
#include "fvein/evaluation.hpp"

namespace fvein {

// Progress sink for long-running stages; may be empty.
using Logger = std::function<void(const std::string&)>;

// resize -> optional remap -> zero mean.
GrayImage preprocess(const GrayImage& raw, const PipelineConfig& config,
                     const std::optional<RemapCurve>& enhancement);

struct FeatureLearningResult {
    ModelBundle bundle;
    TrainReport training;
    double enhancement_fitness = 0.0;
};

// Everything up to (but not including) autoencoder training: the
// enhancement curve, preprocessed feature-learning images, training
// patches already whitened, and the whitening transform.
struct PreparedFeatureData {
    std::optional<RemapCurve> enhancement;
    double enhancement_fitness = 0.0;
    WhiteningTransform whitening;
    Matrix whitened_patches;
};

PreparedFeatureData prepare_feature_data(const std::vector<SampleRecord>& records,
                                         const PipelineConfig& config, const Logger& log = {});

// Full feature-learning phase on the feature-learning split of `records`.
FeatureLearningResult learn_features(const std::vector<SampleRecord>& records,
                                     const PipelineConfig& config, const Logger& log = {});

// Pooled representation of each record, in order.
std::vector<PooledFeatureVector> represent_records(const ModelBundle& bundle, const FeatureBank& bank,
                                                   const std::vector<SampleRecord>& records,
                                                   std::span<const std::size_t> indices);

// Groups evaluation-set representations by subject, ordered by sample index.
std::vector<UserSamples> evaluation_users(const ModelBundle& bundle, const FeatureBank& bank,
                                          const std::vector<SampleRecord>& records);

ProtocolConfig protocol_config(const PipelineConfig& config);

struct EnrollOutcome {
    std::vector<std::string> enrolled;
    std::vector<std::string> replaced;
};

/// Fits models for `user_ids` on their first enroll_count evaluation-set
/// samples (by sample index) and calibrates thresholds. Genuine calibration
/// scores come from each user's remaining samples; impostor scores from all
/// other subjects' evaluation samples. With a global strategy every model in
/// the bundle present in the dataset contributes to one shared threshold.
EnrollOutcome enroll_users(ModelBundle& bundle, const std::vector<SampleRecord>& records,
                           const std::vector<std::string>& user_ids);

Verification verify_image(const ModelBundle& bundle, const std::string& user_id, const GrayImage& raw);

ProtocolReport evaluate_bundle(const ModelBundle& bundle, const std::vector<SampleRecord>& records);

// Grid sweep. Feature data is prepared once; for each hidden size the
// autoencoder is trained up to the largest iteration count and snapshotted
// at every requested count, which is equivalent to retraining from the same
// initialization because L-BFGS is deterministic.
std::vector<SweepRow> sweep(const std::vector<SampleRecord>& records, const PipelineConfig& config,
                            const std::vector<int>& hidden_sizes, const std::vector<int>& iteration_counts,
                            const Logger& log = {});

}  // namespace fvein
