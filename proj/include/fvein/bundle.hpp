#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "fvein/autoencoder.hpp"
#include "fvein/classifier.hpp"
#include "fvein/config.hpp"
#include "fvein/enhancement.hpp"
#include "fvein/features.hpp"

namespace fvein {

inline constexpr std::uint32_t kBundleVersion = 1;

// Everything needed to enroll and verify: preprocessing curve, whitening,
// autoencoder, pooling geometry, and per-user models.
struct ModelBundle {
    std::uint32_t format_version = kBundleVersion;
    PipelineConfig config;
    std::optional<RemapCurve> enhancement;
    WhiteningTransform whitening;
    AutoencoderParams autoencoder;
    int patch_side = 0;
    int pool_rows = 0;
    int pool_cols = 0;
    std::map<std::string, GaussianModel> user_models;
    std::optional<double> global_threshold;

    FeatureBank feature_bank() const;
    void validate() const;

    bool operator==(const ModelBundle&) const = default;
};

/// Binary layout, little-endian throughout:
///   "FVAB" | u32 version | sections
/// Each section is a u64 byte length followed by its payload, in the fixed
/// order: config, enhancement, whitening, autoencoder, bank_meta,
/// user_models, global_threshold. Integers are i64, reals are IEEE-754
/// binary64, strings are u64 length + bytes, matrices are u64 rows, u64 cols
/// and row-major values. The file is written to a temporary sibling and
/// renamed into place.
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace fvein
