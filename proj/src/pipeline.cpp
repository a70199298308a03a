#include "fvein/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "fvein/error.hpp"
#include "fvein/parallel.hpp"
#include "fvein/rng.hpp"

namespace fvein {

namespace {

void say(const Logger& log, const std::string& msg) {
    if (log) log(msg);
}

std::vector<GrayImage> resized(const std::vector<SampleRecord>& records, std::span<const std::size_t> idx,
                               const PipelineConfig& c) {
    std::vector<GrayImage> out(idx.size());
    parallel_for(idx.size(), [&](std::size_t i) {
        out[i] = resize_area(records[idx[i]].image, c.image_height, c.image_width);
    });
    return out;
}

}  // namespace

GrayImage preprocess(const GrayImage& raw, const PipelineConfig& config,
                     const std::optional<RemapCurve>& enhancement) {
    GrayImage img = resize_area(raw, config.image_height, config.image_width);
    if (enhancement) img = apply_remap(img, *enhancement);
    return normalize_zero_mean(img);
}

ProtocolConfig protocol_config(const PipelineConfig& config) {
    ProtocolConfig p;
    p.folds = config.folds;
    p.enroll_count = config.enroll_count;
    p.samples_required = 6;
    p.shrinkage = config.shrinkage;
    p.seed = config.protocol_seed();
    return p;
}

PreparedFeatureData prepare_feature_data(const std::vector<SampleRecord>& records,
                                         const PipelineConfig& config, const Logger& log) {
    config.validate();
    const SplitPlan plan = split_protocol(records);
    if (plan.feature_learning.empty())
        fail(ErrorKind::EmptyDataset, "no feature-learning images (every record is right-hand index)");
    say(log, "feature-learning images: " + std::to_string(plan.feature_learning.size()) +
                 ", evaluation images: " + std::to_string(plan.enrollment_evaluation.size()));

    std::vector<GrayImage> images = resized(records, plan.feature_learning, config);
    PreparedFeatureData out;

    if (config.ga_enabled) {
        // Seeded sample of distinct images for the fitness average.
        Rng rng(config.ga_seed(), 0);
        std::vector<std::size_t> order(images.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
        const std::size_t n = std::min<std::size_t>(order.size(), static_cast<std::size_t>(config.ga_sample_images));
        std::vector<GrayImage> sample;
        for (std::size_t i = 0; i < n; ++i) sample.push_back(images[order[i]]);
        GaConfig ga = config.ga;
        ga.seed = config.ga_seed();
        const GaResult res = evolve_detailed(sample, ga, config.edge_threshold);
        out.enhancement = res.best;
        out.enhancement_fitness = res.best_fitness;
        say(log, "enhancement curve fitness: " + format_double(res.best_fitness) + " (identity " +
                     format_double(mean_fitness(sample, RemapCurve::identity(), config.edge_threshold)) + ")");
    }

    parallel_for(images.size(), [&](std::size_t i) {
        if (out.enhancement) images[i] = apply_remap(images[i], *out.enhancement);
        images[i] = normalize_zero_mean(images[i]);
    });

    const PatchMatrix patches = extract_patches(images, config.patch_side, config.patch_count, config.patch_seed());
    out.whitening = fit_pca_whitening(patches, config.retained_dim, config.whitening_epsilon);
    out.whitened_patches = apply_whitening(out.whitening, patches.data);
    say(log, "patches: " + std::to_string(patches.count()) + " x " + std::to_string(patches.patch_dim()) +
                 ", whitened to " + std::to_string(config.retained_dim));
    return out;
}

FeatureLearningResult learn_features(const std::vector<SampleRecord>& records,
                                     const PipelineConfig& config, const Logger& log) {
    PreparedFeatureData data = prepare_feature_data(records, config, log);
    const AutoencoderParams init = init_params(config.retained_dim, config.hidden_dim, config.init_seed());
    TrainOptions opt;
    opt.max_iterations = config.max_iterations;
    opt.memory = config.lbfgs_memory;
    auto [params, report] = train_lbfgs(init, data.whitened_patches, config.sparsity, opt);

    FeatureLearningResult out;
    out.training = std::move(report);
    out.enhancement_fitness = data.enhancement_fitness;
    ModelBundle& b = out.bundle;
    b.config = config;
    b.enhancement = std::move(data.enhancement);
    b.whitening = std::move(data.whitening);
    b.autoencoder = std::move(params);
    b.patch_side = config.patch_side;
    b.pool_rows = config.pool_rows;
    b.pool_cols = config.pool_cols;
    return out;
}

std::vector<PooledFeatureVector> represent_records(const ModelBundle& bundle, const FeatureBank& bank,
                                                   const std::vector<SampleRecord>& records,
                                                   std::span<const std::size_t> indices) {
    std::vector<PooledFeatureVector> out(indices.size());
    // Parallelism lives across images; each representation is computed serially.
    parallel_for(indices.size(), [&](std::size_t i) {
        const GrayImage img = preprocess(records[indices[i]].image, bundle.config, bundle.enhancement);
        out[i] = mean_pool(convolve_features(img, bank), bundle.pool_rows, bundle.pool_cols);
    });
    return out;
}

std::vector<UserSamples> evaluation_users(const ModelBundle& bundle, const FeatureBank& bank,
                                          const std::vector<SampleRecord>& records) {
    const SplitPlan plan = split_protocol(records);
    if (plan.enrollment_evaluation.empty())
        fail(ErrorKind::EmptyDataset, "no right-hand index-finger images for enrollment/evaluation");
    const auto vectors = represent_records(bundle, bank, records, plan.enrollment_evaluation);
    std::vector<UserSamples> users;
    for (std::size_t i = 0; i < plan.enrollment_evaluation.size(); ++i) {
        const auto& rec = records[plan.enrollment_evaluation[i]];
        if (users.empty() || users.back().user_id != rec.subject_id) users.push_back({rec.subject_id, {}});
        users.back().vectors.push_back(vectors[i]);
    }
    return users;
}

EnrollOutcome enroll_users(ModelBundle& bundle, const std::vector<SampleRecord>& records,
                           const std::vector<std::string>& user_ids) {
    const FeatureBank bank = bundle.feature_bank();
    const auto users = evaluation_users(bundle, bank, records);
    std::map<std::string, const UserSamples*> by_id;
    for (const auto& u : users) by_id[u.user_id] = &u;

    for (const auto& id : user_ids) {
        if (by_id.count(id)) continue;
        std::string available;
        for (const auto& u : users) available += (available.empty() ? "" : ", ") + u.user_id;
        fail(ErrorKind::InvalidInput, "unknown user '" + id + "'; available: " + available);
    }

    const auto& cfg = bundle.config;
    EnrollOutcome outcome;
    for (const auto& id : user_ids) {
        const auto& samples = by_id.at(id)->vectors;
        const auto n = std::min<std::size_t>(samples.size(), static_cast<std::size_t>(cfg.enroll_count));
        std::vector<PooledFeatureVector> enroll(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(n));
        GaussianModel model;
        try {
            model = fit_gaussian(id, enroll, cfg.shrinkage);
        } catch (const Error& e) {
            throw Error(e.kind(), "enrolling user '" + id + "': " + e.what());
        }
        if (bundle.user_models.count(id)) outcome.replaced.push_back(id);
        bundle.user_models[id] = std::move(model);
        outcome.enrolled.push_back(id);
    }

    // Calibration scores per model present in this dataset.
    struct Calibration {
        std::vector<double> genuine;
        std::vector<double> impostor;
    };
    std::map<std::string, Calibration> calib;
    for (auto& [id, model] : bundle.user_models) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) continue;
        Calibration c;
        const auto& own = it->second->vectors;
        for (std::size_t i = static_cast<std::size_t>(cfg.enroll_count); i < own.size(); ++i)
            c.genuine.push_back(score(model, own[i]));
        for (const auto& u : users)
            if (u.user_id != id)
                for (const auto& v : u.vectors) c.impostor.push_back(score(model, v));
        calib[id] = std::move(c);
    }

    if (cfg.threshold.kind == ThresholdKind::Global) {
        std::vector<double> genuine;
        std::vector<double> impostor;
        for (const auto& [id, c] : calib) {
            genuine.insert(genuine.end(), c.genuine.begin(), c.genuine.end());
            impostor.insert(impostor.end(), c.impostor.begin(), c.impostor.end());
        }
        if (genuine.empty() || impostor.empty())
            fail(ErrorKind::InvalidInput, "threshold calibration needs held-out genuine samples and at least "
                                          "one other subject");
        const double t = select_threshold(genuine, impostor, cfg.threshold);
        bundle.global_threshold = t;
        for (auto& [id, model] : bundle.user_models) model.threshold = t;
    } else {
        for (const auto& id : user_ids) {
            const auto& c = calib.at(id);
            if (c.genuine.empty() || c.impostor.empty())
                fail(ErrorKind::InvalidInput, "threshold calibration for '" + id +
                                                  "' needs held-out genuine samples and another subject");
            bundle.user_models[id].threshold = select_threshold(c.genuine, c.impostor, cfg.threshold);
        }
        bundle.global_threshold.reset();
    }
    return outcome;
}

Verification verify_image(const ModelBundle& bundle, const std::string& user_id, const GrayImage& raw) {
    const auto it = bundle.user_models.find(user_id);
    if (it == bundle.user_models.end())
        fail(ErrorKind::InvalidInput, "user '" + user_id + "' is not enrolled");
    const FeatureBank bank = bundle.feature_bank();
    const GrayImage img = preprocess(raw, bundle.config, bundle.enhancement);
    return verify(it->second, represent(img, bank, bundle.pool_rows, bundle.pool_cols));
}

ProtocolReport evaluate_bundle(const ModelBundle& bundle, const std::vector<SampleRecord>& records) {
    const FeatureBank bank = bundle.feature_bank();
    return run_protocol(evaluation_users(bundle, bank, records), protocol_config(bundle.config));
}

std::vector<SweepRow> sweep(const std::vector<SampleRecord>& records, const PipelineConfig& config,
                            const std::vector<int>& hidden_sizes, const std::vector<int>& iteration_counts,
                            const Logger& log) {
    require(!hidden_sizes.empty() && !iteration_counts.empty(), "sweep: empty grid");
    for (int h : hidden_sizes) require(h >= 1, "sweep: hidden sizes must be positive");
    for (int i : iteration_counts) require(i >= 0, "sweep: iteration counts must be non-negative");

    const PreparedFeatureData data = prepare_feature_data(records, config, log);
    const std::set<int> wanted(iteration_counts.begin(), iteration_counts.end());
    const int max_iter = *wanted.rbegin();

    std::vector<SweepRow> rows;
    for (int hidden : hidden_sizes) {
        PipelineConfig cell_config = config;
        cell_config.hidden_dim = hidden;
        const AutoencoderParams init = init_params(config.retained_dim, hidden, config.init_seed());

        std::map<int, AutoencoderParams> snapshots;
        if (wanted.count(0)) snapshots.emplace(0, init);
        TrainOptions opt;
        opt.max_iterations = max_iter;
        opt.memory = config.lbfgs_memory;
        auto [final_params, report] =
            train_lbfgs(init, data.whitened_patches, config.sparsity, opt,
                        [&](int it, const AutoencoderParams& p) {
                            if (wanted.count(it)) snapshots.insert_or_assign(it, p);
                        });
        // Early convergence: later counts see the converged parameters.
        for (int it : wanted)
            if (!snapshots.count(it)) snapshots.emplace(it, final_params);

        for (int it : iteration_counts) {
            ModelBundle b;
            b.config = cell_config;
            b.config.max_iterations = it;
            b.enhancement = data.enhancement;
            b.whitening = data.whitening;
            b.autoencoder = snapshots.at(it);
            b.patch_side = config.patch_side;
            b.pool_rows = config.pool_rows;
            b.pool_cols = config.pool_cols;
            SweepRow row{hidden, it, evaluate_bundle(b, records)};
            say(log, "hidden " + std::to_string(hidden) + ", iterations " + std::to_string(it) +
                         ": EER " + format_double(row.report.mean_eer) + ", AUC " +
                         format_double(row.report.mean_auc));
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace fvein
