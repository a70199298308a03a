#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "fvein/bundle.hpp"
#include "fvein/config.hpp"
#include "fvein/error.hpp"
#include "fvein/evaluation.hpp"
#include "fvein/image_io.hpp"
#include "fvein/pipeline.hpp"

namespace py = pybind11;
using namespace fvein;

namespace {

py::dict report_dict(const ProtocolReport& r) {
    py::dict d;
    d["per_fold_eer"] = r.per_fold_eer;
    d["per_fold_auc"] = r.per_fold_auc;
    d["mean_eer"] = r.mean_eer;
    d["mean_auc"] = r.mean_auc;
    d["skipped_users"] = r.skipped_users;
    return d;
}

ScoreSet score_set(std::vector<double> genuine, std::vector<double> impostor) {
    return ScoreSet{std::move(genuine), std::move(impostor)};
}

}  // namespace

PYBIND11_MODULE(_fvein, m) {
    m.doc() = "Finger-vein verification with sparse-autoencoder features";

    static py::exception<Error> error(m, "FveinError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = error;
            PyErr_SetObject(exc.ptr(), py::make_tuple(std::string(to_string(e.kind())), e.what()).ptr());
        }
    });

    py::class_<PipelineConfig>(m, "PipelineConfig")
        .def(py::init<>())
        .def_static("from_text", &parse_pipeline_config)
        .def_static("load", &load_pipeline_config)
        .def("to_text", &serialize_pipeline_config)
        .def("validate", &PipelineConfig::validate)
        .def_readwrite("image_height", &PipelineConfig::image_height)
        .def_readwrite("image_width", &PipelineConfig::image_width)
        .def_readwrite("ga_enabled", &PipelineConfig::ga_enabled)
        .def_readwrite("edge_threshold", &PipelineConfig::edge_threshold)
        .def_readwrite("patch_side", &PipelineConfig::patch_side)
        .def_readwrite("patch_count", &PipelineConfig::patch_count)
        .def_readwrite("retained_dim", &PipelineConfig::retained_dim)
        .def_readwrite("whitening_epsilon", &PipelineConfig::whitening_epsilon)
        .def_readwrite("hidden_dim", &PipelineConfig::hidden_dim)
        .def_readwrite("max_iterations", &PipelineConfig::max_iterations)
        .def_readwrite("pool_rows", &PipelineConfig::pool_rows)
        .def_readwrite("pool_cols", &PipelineConfig::pool_cols)
        .def_readwrite("folds", &PipelineConfig::folds)
        .def_readwrite("seed", &PipelineConfig::seed)
        .def_property(
            "ga_population", [](const PipelineConfig& c) { return c.ga.population_size; },
            [](PipelineConfig& c, int v) { c.ga.population_size = v; })
        .def_property(
            "ga_generations", [](const PipelineConfig& c) { return c.ga.generations; },
            [](PipelineConfig& c, int v) { c.ga.generations = v; })
        .def("__repr__", &serialize_pipeline_config);

    py::class_<SynthConfig>(m, "SynthConfig")
        .def(py::init<>())
        .def_readwrite("subjects", &SynthConfig::subjects)
        .def_readwrite("samples_per_subject", &SynthConfig::samples_per_subject)
        .def_readwrite("fingers", &SynthConfig::fingers)
        .def_readwrite("image_height", &SynthConfig::image_height)
        .def_readwrite("image_width", &SynthConfig::image_width)
        .def_readwrite("noise_sigma", &SynthConfig::noise_sigma)
        .def_readwrite("deformation_sigma", &SynthConfig::deformation_sigma)
        .def_readwrite("seed", &SynthConfig::seed);

    py::class_<SampleRecord>(m, "SampleRecord")
        .def_readonly("subject_id", &SampleRecord::subject_id)
        .def_property_readonly("hand", [](const SampleRecord& r) { return to_string(r.hand); })
        .def_property_readonly("finger", [](const SampleRecord& r) { return to_string(r.finger); })
        .def_readonly("sample_index", &SampleRecord::sample_index)
        .def_property_readonly("image", [](const SampleRecord& r) { return r.image.pixels; })
        .def_property_readonly("source", [](const SampleRecord& r) { return r.source.string(); });

    m.def("synthesize", &synthesize_dataset, py::arg("config") = SynthConfig{});
    m.def(
        "load_dataset",
        [](const std::filesystem::path& root, const std::string& layout) { return load_dataset(root, layout); },
        py::arg("root"), py::arg("layout") = std::string(kDefaultLayout));
    m.def("read_image", [](const std::filesystem::path& p) { return read_image(p).pixels; });

    py::class_<ModelBundle>(m, "Bundle")
        .def_static("load", &load_bundle)
        .def("save", [](const ModelBundle& b, const std::filesystem::path& p) { save_bundle(b, p); })
        .def_readonly("config", &ModelBundle::config)
        .def_readonly("patch_side", &ModelBundle::patch_side)
        .def_property_readonly("hidden_dim", [](const ModelBundle& b) { return b.autoencoder.hidden_dim(); })
        .def_property_readonly("users",
                               [](const ModelBundle& b) {
                                   std::vector<std::string> ids;
                                   for (const auto& [id, _] : b.user_models) ids.push_back(id);
                                   return ids;
                               })
        .def_property_readonly("kernels", [](const ModelBundle& b) { return b.feature_bank().kernels; })
        .def(
            "enroll",
            [](ModelBundle& b, const std::vector<SampleRecord>& records, const std::vector<std::string>& ids) {
                const auto out = enroll_users(b, records, ids);
                return py::make_tuple(out.enrolled, out.replaced);
            },
            py::arg("records"), py::arg("user_ids"))
        .def(
            "verify",
            [](const ModelBundle& b, const std::string& user, const RowMatrix& image) {
                const auto v = verify_image(b, user, GrayImage(image));
                return py::make_tuple(v.decision == Decision::Accept, v.score);
            },
            py::arg("user_id"), py::arg("image"))
        .def(
            "represent",
            [](const ModelBundle& b, const RowMatrix& image) {
                const std::vector<SampleRecord> one{SampleRecord{"", Hand::Right, Finger::Index, 1, GrayImage(image), {}}};
                const std::size_t idx = 0;
                return represent_records(b, b.feature_bank(), one, std::span(&idx, 1)).front();
            },
            py::arg("image"))
        .def("evaluate",
             [](const ModelBundle& b, const std::vector<SampleRecord>& records) {
                 return report_dict(evaluate_bundle(b, records));
             });

    m.def(
        "learn_features",
        [](const std::vector<SampleRecord>& records, const PipelineConfig& config, bool verbose) {
            Logger log;
            if (verbose) log = [](const std::string& s) { py::print(s); };
            return learn_features(records, config, log).bundle;
        },
        py::arg("records"), py::arg("config"), py::arg("verbose") = false);

    m.def(
        "sweep",
        [](const std::vector<SampleRecord>& records, const PipelineConfig& config, const std::vector<int>& hidden,
           const std::vector<int>& iterations) {
            const auto rows = sweep(records, config, hidden, iterations);
            std::ostringstream csv;
            write_report_csv(csv, rows);
            return csv.str();
        },
        py::arg("records"), py::arg("config"), py::arg("hidden_sizes"), py::arg("iterations"));

    // Lower-level pieces, mostly useful for checking the math from Python.
    m.def(
        "autoencoder_cost",
        [](const Matrix& w1, const Vector& b1, const Matrix& w2, const Vector& b2, const Matrix& batch, double lambda,
           double beta, double rho) {
            const AutoencoderParams p{w1, b1, w2, b2};
            const SparsityHyper h{lambda, beta, rho};
            return py::make_tuple(cost(p, batch, h), gradient(p, batch, h));
        },
        py::arg("w1"), py::arg("b1"), py::arg("w2"), py::arg("b2"), py::arg("batch"), py::arg("lam") = 1e-4,
        py::arg("beta") = 3.0, py::arg("rho") = 0.05);
    m.def("kl_divergence", &kl_divergence, py::arg("rho"), py::arg("rho_hat"));
    m.def(
        "fit_whitening",
        [](const Matrix& samples, int retained, double epsilon) {
            const auto w = fit_pca_whitening(samples, retained, epsilon);
            return py::make_tuple(w.mean, w.projection, w.eigenvalues);
        },
        py::arg("samples"), py::arg("retained_dim"), py::arg("epsilon"));
    m.def(
        "roc",
        [](std::vector<double> genuine, std::vector<double> impostor) {
            std::vector<std::pair<double, double>> pts;
            for (const auto& p : roc(score_set(std::move(genuine), std::move(impostor))).points)
                pts.emplace_back(p.far, p.tar);
            return pts;
        },
        py::arg("genuine"), py::arg("impostor"));
    m.def(
        "eer", [](std::vector<double> g, std::vector<double> i) { return eer(roc(score_set(std::move(g), std::move(i)))); },
        py::arg("genuine"), py::arg("impostor"));
    m.def(
        "auc", [](std::vector<double> g, std::vector<double> i) { return auc(roc(score_set(std::move(g), std::move(i)))); },
        py::arg("genuine"), py::arg("impostor"));
}
