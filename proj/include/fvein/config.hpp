#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fvein/autoencoder.hpp"
#include "fvein/classifier.hpp"
#include "fvein/dataset.hpp"
#include "fvein/enhancement.hpp"

namespace fvein {

// Every tunable of the pipeline. Defaults reproduce the reference operating
// point: 4000 hidden units trained for 700 L-BFGS iterations.
struct PipelineConfig {
    // preprocessing
    int image_height = 64;
    int image_width = 96;
    std::string layout_pattern = kDefaultLayout;
    bool ga_enabled = true;
    int ga_sample_images = 8;
    GaConfig ga;
    double edge_threshold = 0.5;

    // patches + whitening
    int patch_side = 8;
    long patch_count = 100000;
    int retained_dim = 64;
    double whitening_epsilon = 0.1;

    // autoencoder
    int hidden_dim = 4000;
    int max_iterations = 700;
    int lbfgs_memory = 20;
    SparsityHyper sparsity;

    // features + classifier
    int pool_rows = 4;
    int pool_cols = 4;
    ShrinkageConfig shrinkage;
    ThresholdStrategy threshold;

    // protocol
    int folds = 10;
    int enroll_count = 3;
    std::vector<int> sweep_hidden = {1000, 2000, 3000, 4000};
    std::vector<int> sweep_iterations = {100, 200, 300, 400, 500, 600, 700};

    std::uint64_t seed = 1;

    // Throws a config error naming the offending key.
    void validate() const;

    // Seeds for each stage, derived from `seed`.
    std::uint64_t ga_seed() const;
    std::uint64_t patch_seed() const;
    std::uint64_t init_seed() const;
    std::uint64_t protocol_seed() const;

    bool operator==(const PipelineConfig& other) const;
};

// Flat "key = value" text; '#' starts a comment. Unknown keys and malformed
// values raise config errors naming the key.
PipelineConfig parse_pipeline_config(const std::string& text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
std::string serialize_pipeline_config(const PipelineConfig& config);

SynthConfig parse_synth_config(const std::string& text);
SynthConfig load_synth_config(const std::filesystem::path& path);
std::string serialize_synth_config(const SynthConfig& config);

}  // namespace fvein
