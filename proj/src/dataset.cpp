#include "fvein/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <regex>
#include <tuple>

#include "fvein/error.hpp"
#include "fvein/image_io.hpp"
#include "fvein/parallel.hpp"
#include "fvein/rng.hpp"

namespace fvein {

std::string to_string(Hand h) { return h == Hand::Left ? "left" : "right"; }

std::string to_string(Finger f) {
    switch (f) {
        case Finger::Index: return "index";
        case Finger::Middle: return "middle";
        case Finger::Ring: return "ring";
    }
    return "index";
}

namespace {

enum class Field { Subject, Hand, Finger, Sample };

struct CompiledLayout {
    std::regex regex;
    std::vector<Field> fields;
};

CompiledLayout compile_layout(const std::string& pattern) {
    static const std::string special = R"(\^$.|?*+()[]{})";
    CompiledLayout out;
    std::string re;
    std::size_t i = 0;
    while (i < pattern.size()) {
        if (pattern[i] == '{') {
            const auto close = pattern.find('}', i);
            require(close != std::string::npos, "layout pattern: unterminated placeholder");
            const std::string name = pattern.substr(i + 1, close - i - 1);
            if (name == "subject") {
                re += "([^/]+)";
                out.fields.push_back(Field::Subject);
            } else if (name == "hand") {
                re += "(left|right)";
                out.fields.push_back(Field::Hand);
            } else if (name == "finger") {
                re += "(index|middle|ring)";
                out.fields.push_back(Field::Finger);
            } else if (name == "sample") {
                re += "([0-9]+)";
                out.fields.push_back(Field::Sample);
            } else {
                fail(ErrorKind::InvalidInput, "layout pattern: unknown placeholder {" + name + "}");
            }
            i = close + 1;
            continue;
        }
        if (special.find(pattern[i]) != std::string::npos) re += '\\';
        re += pattern[i];
        ++i;
    }
    for (Field f : {Field::Subject, Field::Hand, Field::Finger, Field::Sample})
        require(std::count(out.fields.begin(), out.fields.end(), f) == 1,
                "layout pattern '" + pattern +
                    "' must contain each of {subject}, {hand}, {finger}, {sample} exactly once");
    out.regex = std::regex(re, std::regex::ECMAScript | std::regex::icase);
    return out;
}

bool record_less(const SampleRecord& a, const SampleRecord& b) {
    return std::forward_as_tuple(a.subject_id, a.hand, a.finger, a.sample_index) <
           std::forward_as_tuple(b.subject_id, b.hand, b.finger, b.sample_index);
}

}  // namespace

std::vector<SampleRecord> load_dataset(const std::filesystem::path& root,
                                       const std::string& layout_pattern, LoadReport* report) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) fail(ErrorKind::Io, "dataset root '" + root.string() + "' does not exist");
    const CompiledLayout layout = compile_layout(layout_pattern);

    std::vector<SampleRecord> records;
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        const std::string rel = fs::relative(entry.path(), root).generic_string();
        std::smatch m;
        if (!std::regex_match(rel, m, layout.regex)) continue;
        SampleRecord rec;
        rec.source = entry.path();
        bool ok = true;
        for (std::size_t k = 0; k < layout.fields.size(); ++k) {
            std::string v = m[static_cast<int>(k) + 1].str();
            std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
            switch (layout.fields[k]) {
                case Field::Subject: rec.subject_id = m[static_cast<int>(k) + 1].str(); break;
                case Field::Hand: rec.hand = v == "left" ? Hand::Left : Hand::Right; break;
                case Field::Finger:
                    rec.finger = v == "index" ? Finger::Index : v == "middle" ? Finger::Middle : Finger::Ring;
                    break;
                case Field::Sample:
                    rec.sample_index = v.size() > 3 ? 0 : std::stoi(v);
                    ok = rec.sample_index >= 1 && rec.sample_index <= 6;
                    break;
            }
        }
        if (!ok) {
            const std::string msg = "sample index outside 1..6: " + rel;
            if (!report) fail(ErrorKind::InvalidInput, msg);
            report->problems.push_back(msg);
            continue;
        }
        records.push_back(std::move(rec));
    }
    if (records.empty())
        fail(ErrorKind::EmptyDataset,
             "no files under '" + root.string() + "' match layout '" + layout_pattern + "'");

    std::sort(records.begin(), records.end(),
              record_less);

    std::vector<std::string> errors(records.size());
    parallel_for(records.size(), [&](std::size_t i) {
        try {
            records[i].image = read_image(records[i].source);
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    });
    std::vector<SampleRecord> loaded;
    loaded.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (errors[i].empty()) {
            loaded.push_back(std::move(records[i]));
            continue;
        }
        if (!report) fail(ErrorKind::Io, errors[i]);
        report->problems.push_back(errors[i]);
    }
    if (loaded.empty()) fail(ErrorKind::EmptyDataset, "no readable images under '" + root.string() + "'");
    return loaded;
}

SplitPlan split_protocol(const std::vector<SampleRecord>& records) {
    SplitPlan plan;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.hand == Hand::Right && r.finger == Finger::Index)
            plan.enrollment_evaluation.push_back(i);
        else
            plan.feature_learning.push_back(i);
    }
    return plan;
}

std::string render_layout(const std::string& layout_pattern, const SampleRecord& record) {
    std::string out = layout_pattern;
    auto replace = [&](const std::string& key, const std::string& value) {
        for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos + value.size()))
            out.replace(pos, key.size(), value);
    };
    replace("{subject}", record.subject_id);
    replace("{hand}", to_string(record.hand));
    replace("{finger}", to_string(record.finger));
    replace("{sample}", std::to_string(record.sample_index));
    return out;
}

void SynthConfig::validate() const {
    require(subjects >= 1, "synth: subjects must be positive");
    require(samples_per_subject >= 1 && samples_per_subject <= 6,
            "synth: samples_per_subject must be in 1..6");
    require(fingers >= 1 && fingers <= 6, "synth: fingers must be in 1..6");
    require(image_height >= 8 && image_width >= 8, "synth: image dimensions must be at least 8");
    require(vein_count_min >= 1 && vein_count_min <= vein_count_max,
            "synth: vein count range must be non-empty and positive");
    require(vein_width_min > 0.0 && vein_width_min <= vein_width_max,
            "synth: vein width range must be non-empty and positive");
    require(noise_sigma >= 0.0, "synth: noise_sigma must be non-negative");
    require(deformation_sigma >= 0.0, "synth: deformation_sigma must be non-negative");
}

namespace {

struct Point2 {
    double x;
    double y;
};

struct Vein {
    Point2 p0, p1, p2;
    double width;
    double depth;
};

struct LatentPattern {
    std::vector<Vein> veins;
    double brightness;
    double shading;
};

LatentPattern draw_pattern(const SynthConfig& c, Rng& rng) {
    const double h = c.image_height;
    const double w = c.image_width;
    LatentPattern p;
    p.brightness = rng.uniform(0.55, 0.7);
    p.shading = rng.uniform(0.15, 0.25);
    const auto n = c.vein_count_min +
                   static_cast<int>(rng.below(static_cast<std::uint64_t>(c.vein_count_max - c.vein_count_min + 1)));
    for (int i = 0; i < n; ++i) {
        Vein v;
        // Veins run roughly along the finger axis (image width); some are partial.
        const bool partial = rng.uniform() < 0.4;
        const double x0 = partial ? rng.uniform(-0.1 * w, 0.5 * w) : rng.uniform(-0.15 * w, 0.05 * w);
        const double x2 = partial ? x0 + rng.uniform(0.3 * w, 0.6 * w) : rng.uniform(0.95 * w, 1.15 * w);
        v.p0 = {x0, rng.uniform(0.15 * h, 0.85 * h)};
        v.p2 = {x2, rng.uniform(0.15 * h, 0.85 * h)};
        v.p1 = {0.5 * (x0 + x2) + rng.uniform(-0.1 * w, 0.1 * w),
                0.5 * (v.p0.y + v.p2.y) + rng.normal(0.0, 0.25 * h)};
        v.width = rng.uniform(c.vein_width_min, c.vein_width_max);
        v.depth = rng.uniform(0.25, 0.45);
        p.veins.push_back(v);
    }
    return p;
}

double segment_distance_sq(Point2 a, Point2 b, double px, double py) {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((px - a.x) * dx + (py - a.y) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double ex = a.x + t * dx - px;
    const double ey = a.y + t * dy - py;
    return ex * ex + ey * ey;
}

GrayImage render(const SynthConfig& c, const LatentPattern& pattern, Rng& rng) {
    const int h = c.image_height;
    const int w = c.image_width;
    const double dx = rng.normal(0.0, c.deformation_sigma);
    const double dy = rng.normal(0.0, c.deformation_sigma);
    const double theta = rng.normal(0.0, c.deformation_sigma) * std::numbers::pi / 180.0;
    const double cx = 0.5 * w;
    const double cy = 0.5 * h;
    auto jitter = [&](Point2 p) {
        const double x = p.x - cx;
        const double y = p.y - cy;
        return Point2{cx + std::cos(theta) * x - std::sin(theta) * y + dx,
                      cy + std::sin(theta) * x + std::cos(theta) * y + dy};
    };

    GrayImage img(h, w);
    for (int r = 0; r < h; ++r) {
        const double shade =
            pattern.brightness + pattern.shading * std::sin(std::numbers::pi * (r + 0.5) / h);
        img.pixels.row(r).setConstant(shade);
    }

    constexpr int kSegments = 48;
    std::vector<double> dist(static_cast<std::size_t>(h) * w);
    for (const Vein& v : pattern.veins) {
        const Point2 p0 = jitter(v.p0);
        const Point2 p1 = jitter(v.p1);
        const Point2 p2 = jitter(v.p2);
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        const double sigma = 0.5 * v.width;
        const double reach = 3.0 * sigma + 1.0;
        Point2 prev = p0;
        for (int s = 1; s <= kSegments; ++s) {
            const double t = static_cast<double>(s) / kSegments;
            const double u = 1.0 - t;
            const Point2 cur{u * u * p0.x + 2 * u * t * p1.x + t * t * p2.x,
                             u * u * p0.y + 2 * u * t * p1.y + t * t * p2.y};
            const int r0 = std::max(0, static_cast<int>(std::floor(std::min(prev.y, cur.y) - reach)));
            const int r1 = std::min(h - 1, static_cast<int>(std::ceil(std::max(prev.y, cur.y) + reach)));
            const int c0 = std::max(0, static_cast<int>(std::floor(std::min(prev.x, cur.x) - reach)));
            const int c1 = std::min(w - 1, static_cast<int>(std::ceil(std::max(prev.x, cur.x) + reach)));
            for (int r = r0; r <= r1; ++r)
                for (int col = c0; col <= c1; ++col) {
                    auto& d = dist[static_cast<std::size_t>(r) * w + col];
                    d = std::min(d, segment_distance_sq(prev, cur, col + 0.5, r + 0.5));
                }
            prev = cur;
        }
        for (int r = 0; r < h; ++r)
            for (int col = 0; col < w; ++col) {
                const double d2 = dist[static_cast<std::size_t>(r) * w + col];
                if (std::isfinite(d2)) img.pixels(r, col) -= v.depth * std::exp(-d2 / (2.0 * sigma * sigma));
            }
    }

    for (Eigen::Index i = 0; i < img.pixels.size(); ++i) {
        double& p = img.pixels.data()[i];
        if (c.noise_sigma > 0.0) p += rng.normal(0.0, c.noise_sigma);
        p = std::round(std::clamp(p, 0.0, 1.0) * 255.0) / 255.0;
    }
    return img;
}

constexpr std::pair<Hand, Finger> kFingerOrder[] = {
    {Hand::Right, Finger::Index}, {Hand::Left, Finger::Index},  {Hand::Left, Finger::Middle},
    {Hand::Left, Finger::Ring},   {Hand::Right, Finger::Middle}, {Hand::Right, Finger::Ring},
};

}  // namespace

std::vector<SampleRecord> synthesize_dataset(const SynthConfig& config) {
    config.validate();
    const auto per_subject = static_cast<std::size_t>(config.fingers * config.samples_per_subject);
    std::vector<SampleRecord> records(static_cast<std::size_t>(config.subjects) * per_subject);

    parallel_for(static_cast<std::size_t>(config.subjects) * config.fingers, [&](std::size_t job) {
        const auto subject = job / static_cast<std::size_t>(config.fingers);
        const auto finger = job % static_cast<std::size_t>(config.fingers);
        Rng latent_rng(config.seed, 2 * job);
        Rng sample_rng(config.seed, 2 * job + 1);
        const LatentPattern pattern = draw_pattern(config, latent_rng);
        char id[32];
        std::snprintf(id, sizeof id, "%03zu", subject + 1);
        for (int s = 0; s < config.samples_per_subject; ++s) {
            SampleRecord& rec =
                records[subject * per_subject + finger * static_cast<std::size_t>(config.samples_per_subject) +
                        static_cast<std::size_t>(s)];
            rec.subject_id = id;
            rec.hand = kFingerOrder[finger].first;
            rec.finger = kFingerOrder[finger].second;
            rec.sample_index = s + 1;
            rec.image = render(config, pattern, sample_rng);
        }
    });
    std::stable_sort(records.begin(), records.end(),
                     record_less);
    return records;
}

void export_dataset(const std::vector<SampleRecord>& records, const std::filesystem::path& root,
                    const std::string& layout_pattern) {
    namespace fs = std::filesystem;
    compile_layout(layout_pattern);
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec || !fs::is_directory(root))
        fail(ErrorKind::Io, "cannot create output directory '" + root.string() + "'");
    for (const auto& rec : records) {
        const fs::path path = root / render_layout(layout_pattern, rec);
        fs::create_directories(path.parent_path(), ec);
        if (ec) fail(ErrorKind::Io, "cannot create directory '" + path.parent_path().string() + "'");
        std::string ext = path.extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
        if (ext == ".png")
            write_png(path, rec.image);
        else if (ext == ".bmp")
            write_bmp(path, rec.image);
        else
            fail(ErrorKind::InvalidInput, "export: unsupported extension '" + ext + "'");
    }
}

}  // namespace fvein
