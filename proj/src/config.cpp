#include "fvein/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "fvein/error.hpp"
#include "fvein/evaluation.hpp"
#include "fvein/rng.hpp"

namespace fvein {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
    fail(ErrorKind::Config, "config key '" + key + "': " + why + " (got '" + value + "')");
}

void check(bool ok, const std::string& key, const std::string& why) {
    if (!ok) fail(ErrorKind::Config, "config key '" + key + "': " + why);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const char* first = value.data();
    const char* last = value.data() + value.size();
    if constexpr (std::is_floating_point_v<T>) {
        // strtod: std::from_chars for doubles needs a newer libstdc++ than some targets ship
        char* end = nullptr;
        out = std::strtod(first, &end);
        if (value.empty() || end != last) bad_value(key, value, "expected a number");
    } else {
        const auto [ptr, ec] = std::from_chars(first, last, out);
        if (ec != std::errc() || ptr != last) bad_value(key, value, "expected an integer");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    bad_value(key, value, "expected true or false");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number<int>(key, trim(item)));
    if (out.empty()) bad_value(key, value, "expected a comma-separated list");
    return out;
}

std::string join(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out;
}

// Shortest text that parses back to the same double.
std::string shortest(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

// Binds each key to a setter and a getter so parsing and serialization share
// one table.
struct Field {
    std::string key;
    std::string comment;
    std::function<void(const std::string&)> set;
    std::function<std::string()> get;
};

template <typename T>
Field number(const std::string& key, T& slot, const std::string& comment) {
    return {key, comment, [key, &slot](const std::string& v) { slot = parse_number<T>(key, v); },
            [&slot] {
                if constexpr (std::is_floating_point_v<T>)
                    return shortest(slot);
                else
                    return std::to_string(slot);
            }};
}

std::vector<Field> pipeline_fields(PipelineConfig& c) {
    std::vector<Field> f;
    f.push_back(number("image_height", c.image_height, "working image height after area resize"));
    f.push_back(number("image_width", c.image_width, "working image width after area resize"));
    f.push_back({"layout_pattern", "dataset path pattern",
                 [&c](const std::string& v) { c.layout_pattern = v; }, [&c] { return c.layout_pattern; }});
    f.push_back({"ga_enabled", "run the contrast-enhancement search",
                 [&c](const std::string& v) { c.ga_enabled = parse_bool("ga_enabled", v); },
                 [&c] { return std::string(c.ga_enabled ? "true" : "false"); }});
    f.push_back(number("ga_sample_images", c.ga_sample_images, "images the GA fitness averages over"));
    f.push_back(number("ga_population", c.ga.population_size, ""));
    f.push_back(number("ga_generations", c.ga.generations, ""));
    f.push_back(number("ga_crossover_rate", c.ga.crossover_rate, ""));
    f.push_back(number("ga_mutation_rate", c.ga.mutation_rate, ""));
    f.push_back(number("ga_mutation_sigma", c.ga.mutation_sigma, ""));
    f.push_back(number("ga_elitism", c.ga.elitism_count, ""));
    f.push_back(number("ga_tournament_size", c.ga.tournament_size, ""));
    f.push_back(number("ga_control_points", c.ga.control_points, "remap curve control points"));
    f.push_back(number("edge_threshold", c.edge_threshold, "Sobel magnitude counted as an edge"));
    f.push_back(number("patch_side", c.patch_side, ""));
    f.push_back(number("patch_count", c.patch_count, "training patches for whitening + autoencoder"));
    f.push_back(number("retained_dim", c.retained_dim, "PCA components kept (<= patch_side^2)"));
    f.push_back(number("whitening_epsilon", c.whitening_epsilon, "eigenvalue regularizer"));
    f.push_back(number("hidden_dim", c.hidden_dim, ""));
    f.push_back(number("max_iterations", c.max_iterations, "L-BFGS iterations"));
    f.push_back(number("lbfgs_memory", c.lbfgs_memory, ""));
    f.push_back(number("lambda", c.sparsity.lambda, "weight decay"));
    f.push_back(number("beta", c.sparsity.beta, "sparsity penalty weight"));
    f.push_back(number("rho", c.sparsity.rho, "target mean activation"));
    f.push_back(number("pool_rows", c.pool_rows, ""));
    f.push_back(number("pool_cols", c.pool_cols, ""));
    f.push_back(number("shrinkage_alpha", c.shrinkage.alpha, "weight of the isotropic covariance target"));
    f.push_back(number("cov_regularizer", c.shrinkage.regularizer, "ridge added to every variance"));
    f.push_back({"threshold_kind", "global | per_user",
                 [&c](const std::string& v) {
                     if (v == "global")
                         c.threshold.kind = ThresholdKind::Global;
                     else if (v == "per_user")
                         c.threshold.kind = ThresholdKind::PerUser;
                     else
                         bad_value("threshold_kind", v, "expected global or per_user");
                 },
                 [&c] { return std::string(c.threshold.kind == ThresholdKind::Global ? "global" : "per_user"); }});
    f.push_back({"threshold_target", "eer_point | fixed_far",
                 [&c](const std::string& v) {
                     if (v == "eer_point")
                         c.threshold.target = ThresholdTarget::EerPoint;
                     else if (v == "fixed_far")
                         c.threshold.target = ThresholdTarget::FixedFar;
                     else
                         bad_value("threshold_target", v, "expected eer_point or fixed_far");
                 },
                 [&c] {
                     return std::string(c.threshold.target == ThresholdTarget::EerPoint ? "eer_point" : "fixed_far");
                 }});
    f.push_back(number("threshold_far", c.threshold.fixed_far_value, "used when threshold_target = fixed_far"));
    f.push_back(number("folds", c.folds, "repeated enroll/test splits"));
    f.push_back(number("enroll_count", c.enroll_count, "samples per user used for enrollment"));
    f.push_back({"sweep_hidden", "hidden sizes for the sweep command",
                 [&c](const std::string& v) { c.sweep_hidden = parse_int_list("sweep_hidden", v); },
                 [&c] { return join(c.sweep_hidden); }});
    f.push_back({"sweep_iterations", "iteration counts for the sweep command",
                 [&c](const std::string& v) { c.sweep_iterations = parse_int_list("sweep_iterations", v); },
                 [&c] { return join(c.sweep_iterations); }});
    f.push_back(number("seed", c.seed, "master seed; stage seeds derive from it"));
    return f;
}

std::vector<Field> synth_fields(SynthConfig& c) {
    return {
        number("subjects", c.subjects, ""),
        number("samples_per_subject", c.samples_per_subject, ""),
        number("fingers", c.fingers, "distinct fingers per subject (1 = right index only)"),
        number("image_height", c.image_height, ""),
        number("image_width", c.image_width, ""),
        number("vein_count_min", c.vein_count_min, ""),
        number("vein_count_max", c.vein_count_max, ""),
        number("vein_width_min", c.vein_width_min, "pixels"),
        number("vein_width_max", c.vein_width_max, "pixels"),
        number("noise_sigma", c.noise_sigma, ""),
        number("deformation_sigma", c.deformation_sigma, "pixels of shift, degrees of rotation"),
        number("seed", c.seed, ""),
    };
}

void parse_into(std::vector<Field>& fields, const std::string& text) {
    std::map<std::string, Field*> by_key;
    for (auto& f : fields) by_key[f.key] = &f;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::Config, "config line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = by_key.find(key);
        if (it == by_key.end()) fail(ErrorKind::Config, "config key '" + key + "': unknown key");
        it->second->set(value);
    }
}

std::string serialize(const std::vector<Field>& fields) {
    std::ostringstream out;
    for (const auto& f : fields) {
        if (!f.comment.empty()) out << "# " << f.comment << '\n';
        out << f.key << " = " << f.get() << '\n';
    }
    return out.str();
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot read config '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

void PipelineConfig::validate() const {
    check(image_height >= 1, "image_height", "must be positive");
    check(image_width >= 1, "image_width", "must be positive");
    check(ga_sample_images >= 1, "ga_sample_images", "must be positive");
    check(ga.population_size >= 1, "ga_population", "must be positive");
    check(ga.generations >= 0, "ga_generations", "must be non-negative");
    check(ga.crossover_rate >= 0 && ga.crossover_rate <= 1, "ga_crossover_rate", "must be in [0,1]");
    check(ga.mutation_rate >= 0 && ga.mutation_rate <= 1, "ga_mutation_rate", "must be in [0,1]");
    check(ga.mutation_sigma > 0, "ga_mutation_sigma", "must be positive");
    check(ga.elitism_count >= 0 && ga.elitism_count < ga.population_size, "ga_elitism",
          "must be in [0, ga_population)");
    check(ga.tournament_size >= 1, "ga_tournament_size", "must be positive");
    check(ga.control_points >= 2, "ga_control_points", "must be at least 2");
    check(edge_threshold > 0, "edge_threshold", "must be positive");
    check(patch_side >= 1, "patch_side", "must be positive");
    check(patch_side <= image_height && patch_side <= image_width, "patch_side",
          "must not exceed the working image size");
    check(patch_count >= 1, "patch_count", "must be positive");
    check(retained_dim >= 1 && retained_dim <= patch_side * patch_side, "retained_dim",
          "must be in [1, patch_side^2]");
    check(patch_count >= retained_dim, "patch_count", "must be at least retained_dim");
    check(whitening_epsilon > 0, "whitening_epsilon", "must be positive");
    check(hidden_dim >= 1, "hidden_dim", "must be positive");
    check(max_iterations >= 0, "max_iterations", "must be non-negative");
    check(lbfgs_memory >= 1, "lbfgs_memory", "must be positive");
    check(sparsity.lambda >= 0, "lambda", "must be non-negative");
    check(sparsity.beta >= 0, "beta", "must be non-negative");
    check(sparsity.rho > 0 && sparsity.rho < 1, "rho", "must lie strictly inside (0,1)");
    check(pool_rows >= 1 && pool_rows <= image_height - patch_side + 1, "pool_rows",
          "must be in [1, response map height]");
    check(pool_cols >= 1 && pool_cols <= image_width - patch_side + 1, "pool_cols",
          "must be in [1, response map width]");
    check(shrinkage.alpha >= 0 && shrinkage.alpha <= 1, "shrinkage_alpha", "must be in [0,1]");
    check(shrinkage.regularizer > 0, "cov_regularizer", "must be positive");
    check(threshold.fixed_far_value > 0 && threshold.fixed_far_value < 1, "threshold_far",
          "must lie in (0,1)");
    check(folds >= 1, "folds", "must be positive");
    check(enroll_count >= 2 && enroll_count <= 5, "enroll_count", "must be in [2,5]");
    for (int h : sweep_hidden) check(h >= 1, "sweep_hidden", "entries must be positive");
    for (int i : sweep_iterations) check(i >= 0, "sweep_iterations", "entries must be non-negative");
}

std::uint64_t PipelineConfig::ga_seed() const { return Rng::mix(seed, 1); }
std::uint64_t PipelineConfig::patch_seed() const { return Rng::mix(seed, 2); }
std::uint64_t PipelineConfig::init_seed() const { return Rng::mix(seed, 3); }
std::uint64_t PipelineConfig::protocol_seed() const { return Rng::mix(seed, 4); }

bool PipelineConfig::operator==(const PipelineConfig& other) const {
    return serialize_pipeline_config(*this) == serialize_pipeline_config(other);
}

PipelineConfig parse_pipeline_config(const std::string& text) {
    PipelineConfig c;
    auto fields = pipeline_fields(c);
    parse_into(fields, text);
    c.validate();
    return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    return parse_pipeline_config(read_text(path));
}

std::string serialize_pipeline_config(const PipelineConfig& config) {
    PipelineConfig copy = config;
    return serialize(pipeline_fields(copy));
}

SynthConfig parse_synth_config(const std::string& text) {
    SynthConfig c;
    auto fields = synth_fields(c);
    parse_into(fields, text);
    check(c.subjects >= 1, "subjects", "must be positive");
    check(c.samples_per_subject >= 1 && c.samples_per_subject <= 6, "samples_per_subject", "must be in 1..6");
    check(c.fingers >= 1 && c.fingers <= 6, "fingers", "must be in 1..6");
    check(c.image_height >= 8, "image_height", "must be at least 8");
    check(c.image_width >= 8, "image_width", "must be at least 8");
    check(c.vein_count_min >= 1, "vein_count_min", "must be positive");
    check(c.vein_count_max >= c.vein_count_min, "vein_count_max", "must be >= vein_count_min");
    check(c.vein_width_min > 0, "vein_width_min", "must be positive");
    check(c.vein_width_max >= c.vein_width_min, "vein_width_max", "must be >= vein_width_min");
    check(c.noise_sigma >= 0, "noise_sigma", "must be non-negative");
    check(c.deformation_sigma >= 0, "deformation_sigma", "must be non-negative");
    return c;
}

SynthConfig load_synth_config(const std::filesystem::path& path) { return parse_synth_config(read_text(path)); }

std::string serialize_synth_config(const SynthConfig& config) {
    SynthConfig copy = config;
    return serialize(synth_fields(copy));
}

}  // namespace fvein
