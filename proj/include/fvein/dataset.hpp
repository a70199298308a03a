#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fvein/numerics.hpp"

namespace fvein {

enum class Hand { Left, Right };
enum class Finger { Index, Middle, Ring };

std::string to_string(Hand h);
std::string to_string(Finger f);

struct SampleRecord {
    std::string subject_id;
    Hand hand = Hand::Right;
    Finger finger = Finger::Index;
    int sample_index = 1;
    GrayImage image;
    std::filesystem::path source;

    bool operator==(const SampleRecord&) const = default;
};

// Indices into the record sequence the plan was built from.
struct SplitPlan {
    std::vector<std::size_t> feature_learning;
    std::vector<std::size_t> enrollment_evaluation;
};

// Matches SDUMLA-HMT: <subject>/<left|right>/<index|middle|ring>_<n>.bmp
inline constexpr const char* kDefaultLayout = "{subject}/{hand}/{finger}_{sample}.bmp";

struct LoadReport {
    std::vector<std::string> problems;  // unreadable or out-of-range files
};

/// Walks root recursively and loads every file whose root-relative path
/// matches the layout pattern. Placeholders: {subject} (one path component),
/// {hand} (left|right), {finger} (index|middle|ring), {sample} (1..6).
/// Records come back sorted by (subject, hand, finger, sample). Files that
/// match but fail to decode are listed in `report` (or, without a report,
/// raise their decode error).
std::vector<SampleRecord> load_dataset(const std::filesystem::path& root,
                                       const std::string& layout_pattern = kDefaultLayout,
                                       LoadReport* report = nullptr);

// Right-hand index finger samples form the enrollment/evaluation set; every
// other record feeds feature learning.
SplitPlan split_protocol(const std::vector<SampleRecord>& records);

std::string render_layout(const std::string& layout_pattern, const SampleRecord& record);

struct SynthConfig {
    int subjects = 20;
    int samples_per_subject = 6;
    // Distinct fingers per subject, taken in the order right-index first, then
    // the remaining five SDUMLA fingers. 1 yields evaluation data only.
    int fingers = 1;
    int image_height = 64;
    int image_width = 96;
    int vein_count_min = 4;
    int vein_count_max = 8;
    double vein_width_min = 1.5;
    double vein_width_max = 3.5;
    double noise_sigma = 0.03;
    double deformation_sigma = 1.0;  // pixels of translation and degrees of rotation
    std::uint64_t seed = 1;

    void validate() const;
};

/// Synthetic vein-like images for desk-scale runs. Each (subject, finger)
/// owns a latent set of dark quadratic-Bezier ridges over a bright,
/// vertically shaded background; each sample re-renders that pattern under a
/// small random rigid jitter and adds Gaussian noise. Pixels are quantized to
/// 8-bit levels so an exported and re-loaded set is identical.
std::vector<SampleRecord> synthesize_dataset(const SynthConfig& config);

// Writes records under root following the layout pattern; the extension in
// the pattern selects BMP or PNG.
void export_dataset(const std::vector<SampleRecord>& records, const std::filesystem::path& root,
                    const std::string& layout_pattern = kDefaultLayout);

}  // namespace fvein
