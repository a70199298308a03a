#include "fvein/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "fvein/error.hpp"
#include "fvein/rng.hpp"

namespace fvein {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

RocCurve roc(const ScoreSet& scores) {
    require(!scores.genuine.empty() && !scores.impostor.empty(), "roc: empty score list");
    std::vector<double> gen = scores.genuine;
    std::vector<double> imp = scores.impostor;
    std::sort(gen.begin(), gen.end());
    std::sort(imp.begin(), imp.end());
    std::vector<double> thresholds = gen;
    thresholds.insert(thresholds.end(), imp.begin(), imp.end());
    for (double t : thresholds)
        if (std::isnan(t)) fail(ErrorKind::Numeric, "roc: NaN score");
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    auto at_least = [](const std::vector<double>& sorted, double t) {
        return static_cast<double>(sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), t));
    };
    const double ng = static_cast<double>(gen.size());
    const double ni = static_cast<double>(imp.size());

    RocCurve curve;
    curve.points.push_back({0.0, 0.0});  // threshold +inf
    for (double t : thresholds) curve.points.push_back({at_least(imp, t) / ni, at_least(gen, t) / ng});
    if (curve.points.back() != RocPoint{1.0, 1.0}) curve.points.push_back({1.0, 1.0});  // -inf
    return curve;
}

double eer(const RocCurve& curve) {
    require(curve.points.size() >= 2, "eer: curve needs at least two points");
    // d = FAR - FRR rises from -1 at (0,0) to +1 at (1,1).
    for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
        const auto& a = curve.points[i];
        const auto& b = curve.points[i + 1];
        const double da = a.far - (1.0 - a.tar);
        const double db = b.far - (1.0 - b.tar);
        if (da == 0.0) return a.far;
        if (da < 0.0 && db >= 0.0) {
            if (db == 0.0) return b.far;
            const double f = -da / (db - da);
            return a.far + f * (b.far - a.far);
        }
    }
    return curve.points.back().far;
}

double auc(const RocCurve& curve) {
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
        const auto& a = curve.points[i];
        const auto& b = curve.points[i + 1];
        area += (b.far - a.far) * 0.5 * (a.tar + b.tar);
    }
    return area;
}

void ProtocolConfig::validate() const {
    require(folds >= 1, "protocol: folds must be positive");
    require(enroll_count >= 2, "protocol: enroll_count must be at least 2");
    require(samples_required > enroll_count,
            "protocol: samples_required must exceed enroll_count");
}

namespace {

struct FoldSplit {
    std::vector<std::vector<std::size_t>> enroll;
    std::vector<std::vector<std::size_t>> test;
};

std::vector<std::size_t> eligible_users(std::span<const UserSamples> users, const ProtocolConfig& c) {
    std::vector<std::size_t> out;
    for (std::size_t u = 0; u < users.size(); ++u)
        if (static_cast<int>(users[u].vectors.size()) >= c.samples_required) out.push_back(u);
    return out;
}

ScoreSet score_fold(std::span<const UserSamples> users, const std::vector<std::size_t>& eligible,
                    const ProtocolConfig& config, int fold) {
    Rng rng(config.seed, static_cast<std::uint64_t>(fold));
    std::vector<GaussianModel> models;
    std::vector<std::vector<std::size_t>> probes;
    for (std::size_t u : eligible) {
        const auto& samples = users[u].vectors;
        std::vector<std::size_t> order(samples.size());
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

        std::vector<PooledFeatureVector> enroll;
        for (int i = 0; i < config.enroll_count; ++i) enroll.push_back(samples[order[static_cast<std::size_t>(i)]]);
        models.push_back(fit_gaussian(users[u].user_id, enroll, config.shrinkage));
        probes.emplace_back(order.begin() + config.enroll_count, order.end());
    }

    ScoreSet s;
    for (std::size_t a = 0; a < eligible.size(); ++a) {
        for (std::size_t idx : probes[a]) {
            const auto& v = users[eligible[a]].vectors[idx];
            for (std::size_t b = 0; b < eligible.size(); ++b) {
                const double sc = score(models[b], v);
                (a == b ? s.genuine : s.impostor).push_back(sc);
            }
        }
    }
    return s;
}

std::string echo(const ProtocolConfig& c) {
    std::ostringstream os;
    os << "folds=" << c.folds << " enroll_count=" << c.enroll_count
       << " samples_required=" << c.samples_required
       << " shrinkage_alpha=" << format_double(c.shrinkage.alpha)
       << " cov_regularizer=" << format_double(c.shrinkage.regularizer) << " seed=" << c.seed;
    return os.str();
}

}  // namespace

ScoreSet fold_scores(std::span<const UserSamples> users, const ProtocolConfig& config, int fold) {
    config.validate();
    return score_fold(users, eligible_users(users, config), config, fold);
}

ProtocolReport run_protocol(std::span<const UserSamples> users, const ProtocolConfig& config) {
    config.validate();
    ProtocolReport report;
    report.config_echo = echo(config);
    const auto eligible = eligible_users(users, config);
    for (const auto& u : users)
        if (static_cast<int>(u.vectors.size()) < config.samples_required)
            report.skipped_users.push_back(u.user_id);
    require(eligible.size() >= 2, "run_protocol: need at least 2 users with " +
                                      std::to_string(config.samples_required) + " samples");

    for (int fold = 0; fold < config.folds; ++fold) {
        const RocCurve curve = roc(score_fold(users, eligible, config, fold));
        report.per_fold_eer.push_back(eer(curve));
        report.per_fold_auc.push_back(auc(curve));
    }
    const double n = static_cast<double>(config.folds);
    report.mean_eer = std::accumulate(report.per_fold_eer.begin(), report.per_fold_eer.end(), 0.0) / n;
    report.mean_auc = std::accumulate(report.per_fold_auc.begin(), report.per_fold_auc.end(), 0.0) / n;
    return report;
}

void write_report_csv(std::ostream& out, std::span<const SweepRow> rows) {
    out << "hidden_size,iterations,fold,eer,auc\n";
    for (const auto& row : rows) {
        const auto& r = row.report;
        for (std::size_t f = 0; f < r.per_fold_eer.size(); ++f)
            out << row.hidden_size << ',' << row.iterations << ',' << f << ','
                << format_double(r.per_fold_eer[f]) << ',' << format_double(r.per_fold_auc[f]) << '\n';
        out << row.hidden_size << ',' << row.iterations << ",mean," << format_double(r.mean_eer)
            << ',' << format_double(r.mean_auc) << '\n';
    }
}

void write_report_tables(std::ostream& out, std::span<const SweepRow> rows) {
    std::set<int> hidden;
    std::set<int> iterations;
    std::map<std::pair<int, int>, const ProtocolReport*> cell;
    for (const auto& r : rows) {
        hidden.insert(r.hidden_size);
        iterations.insert(r.iterations);
        cell[{r.iterations, r.hidden_size}] = &r.report;
    }
    auto table = [&](const char* title, auto metric) {
        out << title << '\n';
        char buf[64];
        std::snprintf(buf, sizeof buf, "%-16s", "Iteration/Hidden");
        out << buf;
        for (int h : hidden) {
            std::snprintf(buf, sizeof buf, "%10d", h);
            out << buf;
        }
        out << '\n';
        for (int it : iterations) {
            std::snprintf(buf, sizeof buf, "%-16d", it);
            out << buf;
            for (int h : hidden) {
                const auto found = cell.find({it, h});
                if (found == cell.end())
                    std::snprintf(buf, sizeof buf, "%10s", "-");
                else
                    std::snprintf(buf, sizeof buf, "%10.2f", 100.0 * metric(*found->second));
                out << buf;
            }
            out << '\n';
        }
    };
    table("EER (%)", [](const ProtocolReport& r) { return r.mean_eer; });
    out << '\n';
    table("AUC (%)", [](const ProtocolReport& r) { return r.mean_auc; });
}

void write_scores(std::ostream& out, std::span<const LabeledScore> scores) {
    for (const auto& s : scores)
        out << (s.genuine ? "genuine" : "impostor") << ' ' << s.user_id << ' '
            << format_double(s.score) << '\n';
}

std::vector<LabeledScore> read_scores(std::istream& in) {
    std::vector<LabeledScore> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string label;
        LabeledScore s;
        if (!(ls >> label >> s.user_id >> s.score) || (label != "genuine" && label != "impostor"))
            fail(ErrorKind::Corruption, "scores: malformed line " + std::to_string(lineno));
        s.genuine = label == "genuine";
        out.push_back(std::move(s));
    }
    return out;
}

void write_feature_vectors(std::ostream& out, std::span<const PooledFeatureVector> vectors) {
    for (const auto& v : vectors) {
        for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? " " : "") << format_double(v(i));
        out << '\n';
    }
}

std::vector<PooledFeatureVector> read_feature_vectors(std::istream& in) {
    std::vector<PooledFeatureVector> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<double> vals;
        double x;
        while (ls >> x) vals.push_back(x);
        if (!ls.eof()) fail(ErrorKind::Corruption, "features: malformed line");
        out.push_back(Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(vals.size())));
    }
    return out;
}

}  // namespace fvein
