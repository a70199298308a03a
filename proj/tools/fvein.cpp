// fvein: finger-vein feature learning, enrollment, verification and evaluation.
//
// Exit status: 0 success / ACCEPT, 1 REJECT (verify only), 2 usage error,
// 3 I/O error, 4 data or validation error, 5 numeric error.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fvein/bundle.hpp"
#include "fvein/config.hpp"
#include "fvein/error.hpp"
#include "fvein/image_io.hpp"
#include "fvein/parallel.hpp"
#include "fvein/pipeline.hpp"

namespace {

enum ExitCode : int {
    kOk = 0,
    kReject = 1,
    kUsage = 2,
    kIo = 3,
    kData = 4,
    kNumeric = 5,
};

int exit_code_for(fvein::ErrorKind kind) {
    switch (kind) {
        case fvein::ErrorKind::Io: return kIo;
        case fvein::ErrorKind::Numeric: return kNumeric;
        default: return kData;
    }
}

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    bool quiet = false;
};

fvein::PipelineConfig effective_config(const Globals& g) {
    fvein::PipelineConfig c = g.config_path.empty() ? fvein::PipelineConfig{}
                                                    : fvein::load_pipeline_config(g.config_path);
    if (g.seed) c.seed = *g.seed;
    c.validate();
    return c;
}

fvein::Logger logger(const Globals& g) {
    if (g.quiet) return {};
    return [](const std::string& msg) { std::cerr << msg << '\n'; };
}

std::vector<fvein::SampleRecord> load(const std::string& root, const fvein::PipelineConfig& c, const Globals& g) {
    fvein::LoadReport report;
    auto records = fvein::load_dataset(root, c.layout_pattern, &report);
    if (!g.quiet)
        for (const auto& p : report.problems) std::cerr << "warning: " << p << '\n';
    return records;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fvein::fail(fvein::ErrorKind::Io, "cannot write '" + path + "'");
    out << text;
    if (!out) fvein::fail(fvein::ErrorKind::Io, "write failed for '" + path + "'");
}

void write_reports(const std::string& report_path, std::span<const fvein::SweepRow> rows) {
    std::ostringstream csv;
    fvein::write_report_csv(csv, rows);
    std::ostringstream tables;
    fvein::write_report_tables(tables, rows);
    write_text(report_path, csv.str());
    write_text(report_path + ".txt", tables.str());
    std::cout << tables.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finger-vein verification with sparse-autoencoder features"};
    app.fallthrough();
    app.require_subcommand(1);

    Globals g;
    app.add_option("--config", g.config_path, "Pipeline configuration file");
    app.add_option("--seed", g.seed, "Override the configuration seed");
    app.add_option("--threads", g.threads, "Cap worker threads (0 = all cores)");
    app.add_flag("--quiet", g.quiet, "Suppress progress output");

    std::string dataset_root;
    std::string bundle_path;
    std::string report_path;
    std::string user_id;
    std::string image_path;
    std::vector<std::string> user_ids;
    std::string synth_config_path;
    std::string out_dir;
    std::vector<int> hidden_sizes;
    std::vector<int> iteration_counts;
    bool synth_defaults = false;

    auto* learn = app.add_subcommand("learn-features", "Train the feature bank and write a model bundle");
    learn->add_option("dataset", dataset_root, "Dataset root")->required();
    learn->add_option("bundle", bundle_path, "Output bundle path")->required();

    auto* enroll = app.add_subcommand("enroll", "Fit per-user models and calibrate thresholds");
    enroll->add_option("bundle", bundle_path, "Model bundle")->required();
    enroll->add_option("dataset", dataset_root, "Dataset root")->required();
    enroll->add_option("users", user_ids, "Subject ids to enroll")->required();

    auto* verify = app.add_subcommand("verify", "Verify one image against an enrolled user");
    verify->add_option("bundle", bundle_path, "Model bundle")->required();
    verify->add_option("user", user_id, "Enrolled subject id")->required();
    verify->add_option("image", image_path, "Probe image (8-bit BMP or PNG)")->required();

    auto* evaluate = app.add_subcommand("evaluate", "Run the repeated enroll/test protocol");
    evaluate->add_option("bundle", bundle_path, "Model bundle")->required();
    evaluate->add_option("dataset", dataset_root, "Dataset root")->required();
    evaluate->add_option("report", report_path, "CSV report path (tables go to <report>.txt)")->required();

    auto* sweep = app.add_subcommand("sweep", "Hidden size x iteration grid");
    sweep->add_option("dataset", dataset_root, "Dataset root")->required();
    sweep->add_option("report", report_path, "CSV report path (tables go to <report>.txt)")->required();
    sweep->add_option("--hidden-sizes", hidden_sizes, "Hidden sizes (default from config)")->delimiter(',');
    sweep->add_option("--iterations", iteration_counts, "Iteration counts (default from config)")->delimiter(',');

    auto* synth = app.add_subcommand("synth", "Write a synthetic dataset in the loader layout");
    synth->add_option("synth_config", synth_config_path, "Synthetic dataset config ('-' for defaults)")->required();
    synth->add_option("out_dir", out_dir, "Output directory")->required();

    auto* print = app.add_subcommand("print-config", "Print the effective configuration");
    print->add_flag("--synth", synth_defaults, "Print the synthetic dataset defaults instead");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        fvein::set_thread_limit(g.threads);
        const auto log = logger(g);

        if (*print) {
            std::cout << (synth_defaults ? fvein::serialize_synth_config(fvein::SynthConfig{})
                                         : fvein::serialize_pipeline_config(effective_config(g)));
            return kOk;
        }

        if (*synth) {
            fvein::SynthConfig sc =
                synth_config_path == "-" ? fvein::SynthConfig{} : fvein::load_synth_config(synth_config_path);
            if (g.seed) sc.seed = *g.seed;
            const auto layout = g.config_path.empty() ? std::string(fvein::kDefaultLayout)
                                                      : effective_config(g).layout_pattern;
            const auto records = fvein::synthesize_dataset(sc);
            fvein::export_dataset(records, out_dir, layout);
            if (!g.quiet) std::cout << "wrote " << records.size() << " images to " << out_dir << '\n';
            return kOk;
        }

        if (*learn) {
            const auto config = effective_config(g);
            const auto records = load(dataset_root, config, g);
            const auto start = std::chrono::steady_clock::now();
            const auto result = fvein::learn_features(records, config, log);
            const double seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            fvein::save_bundle(result.bundle, bundle_path);
            if (!g.quiet) {
                std::printf("hidden_dim %d, iterations %d (ran %d)\n", config.hidden_dim, config.max_iterations,
                            result.training.iterations_run);
                std::printf("final cost %.10g, gradient norm %.6g, wall time %.2f s\n",
                            result.training.final_cost, result.training.final_gradient_norm, seconds);
                std::printf("bundle written to %s\n", bundle_path.c_str());
            }
            return kOk;
        }

        if (*enroll) {
            auto bundle = fvein::load_bundle(bundle_path);
            const auto records = load(dataset_root, bundle.config, g);
            const auto outcome = fvein::enroll_users(bundle, records, user_ids);
            for (const auto& id : outcome.replaced)
                std::cerr << "warning: user '" << id << "' was already enrolled; model replaced\n";
            fvein::save_bundle(bundle, bundle_path);
            if (!g.quiet)
                std::cout << "enrolled " << outcome.enrolled.size() << " user(s); bundle holds "
                          << bundle.user_models.size() << " model(s)\n";
            return kOk;
        }

        if (*verify) {
            const auto bundle = fvein::load_bundle(bundle_path);
            const auto image = fvein::read_image(image_path);
            const auto result = fvein::verify_image(bundle, user_id, image);
            const double threshold = *bundle.user_models.at(user_id).threshold;
            std::printf("%s score %.10g threshold %.10g\n",
                        result.decision == fvein::Decision::Accept ? "ACCEPT" : "REJECT", result.score,
                        threshold);
            return result.decision == fvein::Decision::Accept ? kOk : kReject;
        }

        if (*evaluate) {
            const auto bundle = fvein::load_bundle(bundle_path);
            const auto records = load(dataset_root, bundle.config, g);
            const fvein::SweepRow row{bundle.autoencoder.hidden_dim(), bundle.config.max_iterations,
                                      fvein::evaluate_bundle(bundle, records)};
            for (const auto& id : row.report.skipped_users)
                std::cerr << "warning: user '" << id << "' has fewer than 6 samples; skipped\n";
            write_reports(report_path, std::span(&row, 1));
            std::printf("mean EER %.6f AUC %.6f\n", row.report.mean_eer, row.report.mean_auc);
            return kOk;
        }

        if (*sweep) {
            const auto config = effective_config(g);
            const auto records = load(dataset_root, config, g);
            const auto rows = fvein::sweep(records, config, hidden_sizes.empty() ? config.sweep_hidden : hidden_sizes,
                                           iteration_counts.empty() ? config.sweep_iterations : iteration_counts, log);
            write_reports(report_path, rows);
            return kOk;
        }
    } catch (const fvein::Error& e) {
        std::cerr << "error[" << fvein::to_string(e.kind()) << "]: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << '\n';
        return kData;
    }
    return kUsage;
}
