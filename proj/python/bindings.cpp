#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "stsg/experiment.hpp"
#include "stsg/parallel.hpp"

namespace py = pybind11;
using namespace stsg;

namespace {

std::vector<double> column(const Eigen::Ref<const Vector>& x) { return {x.data(), x.data() + x.size()}; }

RfConfig forest_config(std::size_t n_trees, std::uint64_t seed, bool use_pca, bool standardize,
                       std::size_t pca_dim, std::size_t max_depth, std::size_t min_leaf,
                       std::size_t features_per_split, std::size_t threads) {
  RfConfig cfg;
  cfg.n_trees = n_trees;
  cfg.seed = seed;
  cfg.use_pca = use_pca;
  cfg.standardize = standardize;
  cfg.pca_dim = pca_dim;
  cfg.max_depth = max_depth;
  cfg.min_leaf = min_leaf;
  cfg.features_per_split = features_per_split;
  cfg.threads = threads;
  return cfg;
}

LearningSet learning_set(const Matrix& x, const py::object& y, std::size_t reducible) {
  const auto r = reducible == 0 ? SIZE_MAX : reducible;
  if (py::isinstance<py::list>(y) || py::isinstance<py::tuple>(y)) {
    return LearningSet::classification(x, y.cast<std::vector<std::size_t>>(), 0, r);
  }
  const py::array arr = py::array::ensure(y);
  if (arr && arr.dtype().kind() != 'f') {
    return LearningSet::classification(x, y.cast<std::vector<std::size_t>>(), 0, r);
  }
  Matrix t;
  if (arr.ndim() == 1) {
    const auto v = y.cast<Vector>();
    t = Eigen::Map<const Matrix>(v.data(), v.size(), 1);
  } else {
    t = y.cast<Matrix>();
  }
  return LearningSet::regression(x, t, r);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Scattering features on sensor graphs and random-forest learning";

  // Translators run newest first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<UnsupportedDecomposition>(m, "UnsupportedDecomposition", PyExc_ValueError);
  py::register_exception<IngestError>(m, "IngestError", PyExc_ValueError);

  // graphs and Haar channels
  py::class_<SensorGraph, std::shared_ptr<SensorGraph>>(m, "SensorGraph")
      .def(py::init([](const std::vector<std::pair<double, double>>& positions,
                       const std::vector<SensorGraph::Edge>& edges) {
             std::vector<Point2> p;
             for (auto [x, y] : positions) p.push_back({x, y});
             return std::make_shared<SensorGraph>(std::move(p), edges);
           }),
           py::arg("positions"), py::arg("edges"))
      .def_static("path", [](std::size_t n, double spacing) { return std::make_shared<SensorGraph>(SensorGraph::path(n, spacing)); },
                  py::arg("n"), py::arg("spacing") = 1.0)
      .def_property_readonly("size", &SensorGraph::size)
      .def_property_readonly("edges", &SensorGraph::edges)
      .def("__len__", &SensorGraph::size);
  m.def("board_graph", [] { return std::make_shared<SensorGraph>(*board_graph()); });
  m.def("column_graph", [] { return std::make_shared<SensorGraph>(*column_graph()); });

  py::class_<Folder>(m, "Folder")
      .def_readonly("level", &Folder::level)
      .def_readonly("members", &Folder::members)
      .def_readonly("children", &Folder::children)
      .def_property_readonly("paired", &Folder::paired);

  py::class_<FolderDecomposition, std::shared_ptr<FolderDecomposition>>(m, "FolderDecomposition")
      .def_property_readonly("vertex_count", &FolderDecomposition::vertex_count)
      .def_property_readonly("max_level", &FolderDecomposition::max_level)
      .def_property_readonly("overlapping", &FolderDecomposition::overlapping)
      .def_property_readonly("fallback_pairings", &FolderDecomposition::fallback_pairings)
      .def("level", &FolderDecomposition::level, py::arg("j"))
      .def("to_text", &FolderDecomposition::to_text)
      .def_static("from_text", [](const std::string& t) {
        return std::make_shared<FolderDecomposition>(FolderDecomposition::from_text(t));
      });

  m.def(
      "build_decomposition",
      [](const SensorGraph& g, int max_level, const std::string& overlap, int overlap_from_level, bool strict) {
        DecompositionOptions opt;
        opt.overlap = parse_overlap_policy(overlap);
        opt.overlap_from_level = overlap_from_level;
        opt.strict_adjacency = strict;
        return std::make_shared<FolderDecomposition>(build_decomposition(g, max_level, opt));
      },
      py::arg("graph"), py::arg("max_level"), py::arg("overlap") = "none", py::arg("overlap_from_level") = 1,
      py::arg("strict_adjacency") = false);
  m.def("max_decomposition_level", &max_decomposition_level);

  m.def(
      "haar_channels",
      [](const FolderDecomposition& dec) {
        std::vector<std::tuple<int, std::size_t, int>> out;
        for (const auto& c : haar_channel_layout(dec)) out.emplace_back(c.level, c.folder, c.coefficient);
        return out;
      },
      "(level, folder, coefficient) per channel; coefficient 0 = scaling, 1 = wavelet");
  m.def(
      "haar_analyze", [](const FolderDecomposition& dec, const Matrix& recording) {
        return haar_analyze_series(dec, recording).values;
      },
      py::arg("decomposition"), py::arg("recording"), "T x N recording to T x channel values");
  m.def(
      "haar_synthesize",
      [](const FolderDecomposition& dec, const Matrix& values) {
        return haar_synthesize(dec, HaarChannelSet{haar_channel_layout(dec), values});
      },
      py::arg("decomposition"), py::arg("values"));

  // time scattering
  py::class_<FilterBank, std::shared_ptr<FilterBank>>(m, "FilterBank")
      .def(py::init([](std::size_t length, int J, int q1, int q2, const std::string& rule) {
             return std::make_shared<FilterBank>(length, J, q1, q2, parse_second_order_rule(rule));
           }),
           py::arg("length"), py::arg("J") = 6, py::arg("q1") = 8, py::arg("q2") = 1, py::arg("rule") = "increasing")
      .def_property_readonly("length", &FilterBank::length)
      .def("scales", &FilterBank::scales, py::arg("layer"))
      .def("littlewood_paley_max", &FilterBank::littlewood_paley_max, py::arg("layer"))
      .def(
          "paths",
          [](const FilterBank& fb, int max_order) {
            std::vector<std::vector<double>> out;
            for (const auto& p : fb.paths(max_order)) out.push_back(p.scales);
            return out;
          },
          py::arg("max_order") = 2)
      .def("lowpass_time", &FilterBank::lowpass_time)
      .def("wavelet_time", &FilterBank::wavelet_time, py::arg("layer"), py::arg("index"));

  m.def(
      "scattering_moments",
      [](const Eigen::Ref<const Vector>& x, const FilterBank& fb, int max_order) {
        return scattering_moments(column(x), fb, max_order);
      },
      py::arg("x"), py::arg("bank"), py::arg("max_order") = 2);
  m.def(
      "windowed_scattering",
      [](const Eigen::Ref<const Vector>& x, const FilterBank& fb, int max_order) {
        return windowed_scattering(column(x), fb, max_order).series;
      },
      py::arg("x"), py::arg("bank"), py::arg("max_order") = 2);
  m.def(
      "propagate",
      [](const Eigen::Ref<const Vector>& x, const std::vector<double>& scales, const FilterBank& fb) {
        return propagate(column(x), ScatteringPath{scales}, fb);
      },
      py::arg("x"), py::arg("scales"), py::arg("bank"));

  // features
  m.def(
      "stsg_moments",
      [](const Matrix& recording, const FolderDecomposition& dec, int J, int q1, int q2, int max_order,
         const std::string& rule) {
        StsgConfig cfg;
        cfg.decomposition = std::make_shared<FolderDecomposition>(dec);
        cfg.max_log_scale = J;
        cfg.q1 = q1;
        cfg.q2 = q2;
        cfg.max_order = max_order;
        cfg.rule = parse_second_order_rule(rule);
        return stsg_moments(recording, cfg).values;
      },
      py::arg("recording"), py::arg("decomposition"), py::arg("J") = 6, py::arg("q1") = 8, py::arg("q2") = 1,
      py::arg("max_order") = 2, py::arg("rule") = "increasing");
  m.def(
      "stft_features",
      [](const Matrix& recording, std::size_t window, std::size_t hop) {
        auto cfg = StftConfig::hann(window);
        cfg.hop = hop;
        return stft_features(recording, cfg).values;
      },
      py::arg("recording"), py::arg("window") = 64, py::arg("hop") = 32);
  m.def("moment_features", [](const Matrix& r) { return moment_features(r).values; }, py::arg("recording"));

  // PCA
  py::class_<PcaModel>(m, "PcaModel")
      .def_readonly("mean", &PcaModel::mean)
      .def_readonly("scale", &PcaModel::scale)
      .def_readonly("components", &PcaModel::components)
      .def_readonly("variances", &PcaModel::variances)
      .def_readonly("degenerate", &PcaModel::degenerate)
      .def("project", &pca_project_rows, py::arg("samples"));
  m.def("pca_fit", &pca_fit, py::arg("samples"), py::arg("d"), py::arg("standardize") = false);

  // forest
  py::class_<Forest>(m, "Forest")
      .def_property_readonly("n_trees", [](const Forest& f) { return f.trees.size(); })
      .def_property_readonly("classification", [](const Forest& f) { return f.task == TaskKind::classification; })
      .def("predict",
           [](const Forest& f, const Matrix& x) {
             py::list out;
             for (Eigen::Index i = 0; i < x.rows(); ++i) {
               const Vector xi = x.row(i).transpose();
               if (f.task == TaskKind::classification) {
                 out.append(predict_class(f, xi));
               } else {
                 out.append(predict_value(f, xi));
               }
             }
             return out;
           },
           py::arg("x"))
      .def("predict_scores",
           [](const Forest& f, const Matrix& x) {
             Matrix out(x.rows(), static_cast<Eigen::Index>(f.output_dim));
             for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = predict_scores(f, x.row(i).transpose()).transpose();
             return out;
           },
           py::arg("x"))
      .def("error",
           [](const Forest& f, const Matrix& x, const py::object& y) {
             return evaluate_error(f, learning_set(x, y, f.reducible));
           },
           py::arg("x"), py::arg("y"))
      .def("oob_error",
           [](const Forest& f, const Matrix& x, const py::object& y) {
             return oob_error(f, learning_set(x, y, f.reducible)).error;
           },
           py::arg("x"), py::arg("y"))
      .def("to_json", &Forest::to_json)
      .def_static("from_json", &Forest::from_json);

  m.def(
      "train_forest",
      [](const Matrix& x, const py::object& y, std::size_t n_trees, std::uint64_t seed, bool use_pca,
         bool standardize, std::size_t pca_dim, std::size_t reducible, std::size_t max_depth, std::size_t min_leaf,
         std::size_t features_per_split, std::size_t threads) {
        const auto data = learning_set(x, y, reducible);
        const auto cfg = forest_config(n_trees, seed, use_pca, standardize, pca_dim, max_depth, min_leaf,
                                       features_per_split, threads);
        py::gil_scoped_release release;
        return train_rf(data, cfg);
      },
      py::arg("x"), py::arg("y"), py::arg("n_trees") = 200, py::arg("seed") = 1, py::arg("use_pca") = true,
      py::arg("standardize") = true, py::arg("pca_dim") = 0, py::arg("reducible") = 0, py::arg("max_depth") = 0,
      py::arg("min_leaf") = 0, py::arg("features_per_split") = 0, py::arg("threads") = 1,
      "Integer labels train a classifier, float targets a regressor.");

  m.def(
      "cross_validate",
      [](const Matrix& x, const py::object& y, std::size_t folds, std::size_t n_trees, std::uint64_t seed,
         bool use_pca, bool standardize, std::size_t threads) {
        const auto data = learning_set(x, y, 0);
        const auto cfg = forest_config(n_trees, seed, use_pca, standardize, 0, 0, 0, 0, threads);
        py::gil_scoped_release release;
        const auto r = cross_validate(data, cfg, folds);
        return std::make_tuple(r.mean, r.stddev, r.fold_errors);
      },
      py::arg("x"), py::arg("y"), py::arg("folds") = 5, py::arg("n_trees") = 200, py::arg("seed") = 1,
      py::arg("use_pca") = true, py::arg("standardize") = true, py::arg("threads") = 1,
      "Returns (mean error, std over folds, per-fold errors).");

  // data and experiments
  py::class_<Recording>(m, "Recording")
      .def_readonly("samples", &Recording::samples)
      .def_readonly("timestamps", &Recording::timestamps)
      .def_readonly("gas", &Recording::gas)
      .def_readonly("ppm", &Recording::ppm)
      .def_readonly("position_index", &Recording::position_index)
      .def_readonly("board_index", &Recording::board_index)
      .def_readonly("trial", &Recording::trial)
      .def_property_readonly("key", &Recording::key);

  m.def("load_dataset", &load_dataset, py::arg("manifest"), py::arg("threads") = 1);
  m.def("save_dataset", &save_dataset, py::arg("directory"), py::arg("recordings"));
  m.def("gas_vocabulary", &gas_vocabulary);

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_static(
          "from_json",
          [](const std::string& text, std::size_t threads) {
            auto cfg = ExperimentConfig::from_json(text);
            cfg.threads = threads == 0 ? default_threads() : threads;
            cfg.finalize();
            return cfg;
          },
          py::arg("text"), py::arg("threads") = 1)
      .def("to_json", &ExperimentConfig::to_json)
      .def("hash", &ExperimentConfig::hash);

  m.def(
      "synth_generate", [](const ExperimentConfig& cfg) { return synth_generate(cfg.synth); }, py::arg("config"));

  py::class_<FeatureMatrix>(m, "FeatureMatrix")
      .def_readonly("features", &FeatureMatrix::features)
      .def_readonly("targets", &FeatureMatrix::targets)
      .def_readonly("labels", &FeatureMatrix::labels)
      .def_readonly("classes", &FeatureMatrix::classes)
      .def_readonly("ids", &FeatureMatrix::ids)
      .def_readonly("config_hash", &FeatureMatrix::config_hash)
      .def_property_readonly("kind", [](const FeatureMatrix& f) { return to_string(f.kind); })
      .def_property_readonly("layout", [](const FeatureMatrix& f) { return f.layout.summary(); })
      .def("save", &FeatureMatrix::save)
      .def_static("load", &FeatureMatrix::load);

  m.def(
      "extract_features",
      [](const std::vector<Recording>& recordings, const ExperimentConfig& cfg, const std::string& kind) {
        py::gil_scoped_release release;
        const auto prepared = prepare_recordings(recordings, cfg.scenario);
        return extract_features(prepared, cfg, parse_feature_kind(kind));
      },
      py::arg("recordings"), py::arg("config"), py::arg("kind") = "stsg");

  m.def(
      "cross_validate_features",
      [](const std::vector<FeatureMatrix>& matrices, const ExperimentConfig& cfg) {
        py::gil_scoped_release release;
        const auto rep = cross_validate_features(matrices, cfg);
        return std::make_tuple(rep.table(), rep.to_json());
      },
      py::arg("matrices"), py::arg("config"), "Returns (table text, results JSON).");
  m.def("render_report", &render_report, py::arg("results_json"));
}
