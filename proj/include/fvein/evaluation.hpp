#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fvein/classifier.hpp"

namespace fvein {

struct ScoreSet {
    std::vector<double> genuine;
    std::vector<double> impostor;
};

struct RocPoint {
    double far = 0.0;
    double tar = 0.0;
    bool operator==(const RocPoint&) const = default;
};

// Ordered by increasing FAR; first point (0,0), last point (1,1).
struct RocCurve {
    std::vector<RocPoint> points;
};

// Thresholds sweep every distinct score plus +/-inf; a score counts as
// accepted when it is >= the threshold.
RocCurve roc(const ScoreSet& scores);

// FAR = FRR crossing, linearly interpolated between bracketing ROC points.
double eer(const RocCurve& curve);

// Trapezoidal area under the ROC.
double auc(const RocCurve& curve);

struct UserSamples {
    std::string user_id;
    std::vector<PooledFeatureVector> vectors;
};

struct ProtocolConfig {
    int folds = 10;
    int enroll_count = 3;
    int samples_required = 6;
    ShrinkageConfig shrinkage;
    std::uint64_t seed = 1;

    void validate() const;
};

struct ProtocolReport {
    std::vector<double> per_fold_eer;
    std::vector<double> per_fold_auc;
    double mean_eer = 0.0;
    double mean_auc = 0.0;
    std::vector<std::string> skipped_users;
    std::string config_echo;

    bool operator==(const ProtocolReport&) const = default;
};

/// Repeated random enroll/test splits. In each fold every user's samples are
/// shuffled with a fold-specific stream; the first enroll_count fit that
/// user's model and the remaining ones are probes. Genuine scores are probes
/// against their own model; impostor scores are probes against every other
/// user's model. EER and AUC are computed on the pooled scores of each fold.
ProtocolReport run_protocol(std::span<const UserSamples> users, const ProtocolConfig& config);

// Scores produced by one fold, exposed for threshold calibration and tests.
ScoreSet fold_scores(std::span<const UserSamples> users, const ProtocolConfig& config, int fold);

struct SweepRow {
    int hidden_size = 0;
    int iterations = 0;
    ProtocolReport report;
};

// CSV with header "hidden_size,iterations,fold,eer,auc"; one row per fold and
// a trailing row with fold "mean" per configuration.
void write_report_csv(std::ostream& out, std::span<const SweepRow> rows);

// Aligned EER (%) and AUC (%) tables: iterations down, hidden sizes across.
void write_report_tables(std::ostream& out, std::span<const SweepRow> rows);

// Plain-text score interchange: "label user_id score" per line, label is
// "genuine" or "impostor".
struct LabeledScore {
    bool genuine = false;
    std::string user_id;
    double score = 0.0;
};
void write_scores(std::ostream& out, std::span<const LabeledScore> scores);
std::vector<LabeledScore> read_scores(std::istream& in);

// One vector per line, space-separated decimals.
void write_feature_vectors(std::ostream& out, std::span<const PooledFeatureVector> vectors);
std::vector<PooledFeatureVector> read_feature_vectors(std::istream& in);

std::string format_double(double v);

}  // namespace fvein
