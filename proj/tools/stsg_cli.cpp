#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "stsg/experiment.hpp"
#include "stsg/parallel.hpp"

using namespace stsg;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::size_t> trees;
  std::optional<std::size_t> folds;
  std::string task;
  std::string aggregation;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "experiment configuration (JSON)");
  cmd->add_option("--seed", c.seed, "master seed (overrides the configuration)");
  cmd->add_option("-j,--threads", c.threads, "worker threads (default: available cores)");
  cmd->add_option("--trees", c.trees, "number of trees");
  cmd->add_option("--folds", c.folds, "cross-validation folds");
  cmd->add_option("--task", c.task, "gas10 | co_binary | localize");
  cmd->add_option("--aggregation", c.aggregation, "board_column | single_board");
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spill(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot create " + path);
  out << text;
}

ExperimentConfig load_config(const Common& c) {
  ExperimentConfig cfg;
  if (!c.config.empty()) {
    cfg = ExperimentConfig::from_json(slurp(c.config), c.config);
  } else if (!c.seed) {
    throw InvalidArgument("a seed is required: pass --config or --seed");
  }
  if (c.seed) cfg.seed = *c.seed;
  cfg.threads = c.threads ? *c.threads : default_threads();
  if (c.trees) cfg.forest.n_trees = *c.trees;
  if (c.folds) cfg.folds = *c.folds;
  if (!c.task.empty()) cfg.scenario.task = parse_task(c.task);
  if (!c.aggregation.empty()) cfg.scenario.aggregation = parse_aggregation(c.aggregation);
  cfg.finalize();
  return cfg;
}

std::vector<GraphRecording> load_graph_recordings(const std::string& manifest, const ExperimentConfig& cfg) {
  const auto raw = load_dataset(manifest, cfg.threads);
  std::vector<std::string> warnings;
  auto out = prepare_recordings(raw, cfg.scenario, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scattering features on sensor graphs with random-forest learning"};
  app.require_subcommand(1);

  Common common;

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(synth, common);
  std::string synth_out;
  synth->add_option("-o,--out", synth_out, "output directory")->required();

  auto* ingest_cmd = app.add_subcommand("ingest", "validate recordings and print a dataset summary");
  std::string ingest_manifest;
  std::vector<std::string> ingest_files;
  ingest_cmd->add_option("-m,--manifest", ingest_manifest, "manifest file");
  ingest_cmd->add_option("files", ingest_files, "recording files");

  auto* features = app.add_subcommand("features", "extract a feature matrix");
  add_common(features, common);
  std::string feat_manifest, feat_kind = "stsg", feat_out;
  features->add_option("-m,--manifest", feat_manifest, "dataset manifest")->required();
  features->add_option("-k,--kind", feat_kind, "stsg | stft | moments");
  features->add_option("-o,--out", feat_out, "output feature file")->required();

  auto* train = app.add_subcommand("train", "train a forest on a held-in split");
  add_common(train, common);
  std::string train_features, train_model_path;
  train->add_option("-f,--features", train_features, "feature file")->required();
  train->add_option("-o,--model", train_model_path, "output model file")->required();

  auto* eval = app.add_subcommand("eval", "evaluate a model on its held-out rows");
  std::string eval_model, eval_features;
  bool eval_all = false;
  eval->add_option("--model", eval_model, "model file")->required();
  eval->add_option("-f,--features", eval_features, "feature file")->required();
  eval->add_flag("--all", eval_all, "evaluate on every row");

  auto* cv = app.add_subcommand("cv", "cross-validate every feature kind");
  add_common(cv, common);
  std::string cv_manifest, cv_out, cv_numeric;
  std::vector<std::string> cv_kinds, cv_feature_files;
  cv->add_option("-m,--manifest", cv_manifest, "dataset manifest");
  cv->add_option("-f,--features", cv_feature_files, "precomputed feature files (instead of a manifest)");
  cv->add_option("-k,--kinds", cv_kinds, "feature kinds (default: from the configuration)");
  cv->add_option("-o,--out", cv_out, "results document (JSON)");
  cv->add_option("--numeric", cv_numeric, "key=value result table");

  auto* curves = app.add_subcommand("curves", "validation and out-of-bag error versus tree count");
  add_common(curves, common);
  std::string curves_features, curves_out;
  curves->add_option("-f,--features", curves_features, "feature file")->required();
  curves->add_option("-o,--out", curves_out, "results document (JSON)");

  auto* report = app.add_subcommand("report", "render a plot-ready numeric table from a results document");
  std::string report_in, report_out;
  report->add_option("results", report_in, "results document from cv or curves")->required();
  report->add_option("-o,--out", report_out, "output file (default: stdout)");

  if (argc <= 1) {
    std::cerr << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    if (synth->parsed()) {
      const auto cfg = load_config(common);
      const auto recs = synth_generate(cfg.synth);
      const auto manifest = save_dataset(synth_out, recs);
      std::cout << dataset_summary(recs) << "manifest " << manifest.string() << '\n';
    } else if (ingest_cmd->parsed()) {
      std::vector<Recording> recs;
      if (!ingest_manifest.empty()) recs = load_dataset(ingest_manifest, default_threads());
      for (const auto& f : ingest_files) recs.push_back(ingest(f));
      if (recs.empty()) throw InvalidArgument("ingest: no recordings given");
      std::cout << dataset_summary(recs);
    } else if (features->parsed()) {
      const auto cfg = load_config(common);
      const auto recs = load_graph_recordings(feat_manifest, cfg);
      const auto m = extract_features(recs, cfg, parse_feature_kind(feat_kind));
      m.save(feat_out);
      std::cout << "features " << feat_kind << " rows " << m.rows() << " columns " << m.features.cols() << " ("
                << m.layout.summary() << ") config " << m.config_hash << '\n';
    } else if (train->parsed()) {
      const auto cfg = load_config(common);
      const auto m = FeatureMatrix::load(train_features);
      const auto model = train_model(m, cfg);
      spill(train_model_path, model.to_json());
      std::cout << "trained " << cfg.forest.n_trees << " trees on " << m.rows() - model.heldout_ids.size()
                << " rows; held-out rows " << model.heldout_ids.size() << " error " << model.heldout_error << '\n';
    } else if (eval->parsed()) {
      const auto model = TrainedModel::from_json(slurp(eval_model));
      const auto m = FeatureMatrix::load(eval_features);
      std::cout << "error " << evaluate_model(model, m, eval_all) << '\n';
    } else if (cv->parsed()) {
      auto cfg = load_config(common);
      if (!cv_kinds.empty()) {
        cfg.features.clear();
        for (const auto& k : cv_kinds) cfg.features.push_back(parse_feature_kind(k));
      }
      std::vector<FeatureMatrix> mats;
      if (!cv_feature_files.empty()) {
        for (const auto& f : cv_feature_files) mats.push_back(FeatureMatrix::load(f));
      } else {
        if (cv_manifest.empty()) throw InvalidArgument("cv: pass --manifest or --features");
        const auto recs = load_graph_recordings(cv_manifest, cfg);
        for (auto k : cfg.features) mats.push_back(extract_features(recs, cfg, k));
      }
      const auto rep = cross_validate_features(mats, cfg);
      std::cout << rep.table();
      if (!cv_out.empty()) spill(cv_out, rep.to_json());
      if (!cv_numeric.empty()) spill(cv_numeric, rep.numeric());
    } else if (curves->parsed()) {
      const auto cfg = load_config(common);
      const auto m = FeatureMatrix::load(curves_features);
      const auto c = learning_curves(m, cfg);
      std::cout << c.table();
      if (!curves_out.empty()) spill(curves_out, c.to_json());
    } else if (report->parsed()) {
      const auto text = render_report(slurp(report_in));
      if (report_out.empty()) {
        std::cout << text;
      } else {
        spill(report_out, text);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
