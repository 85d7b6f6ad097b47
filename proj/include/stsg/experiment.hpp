#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "stsg/baselines.hpp"
#include "stsg/dataset.hpp"
#include "stsg/forest.hpp"
#include "stsg/stsg.hpp"

namespace stsg {

enum class FeatureKind { stsg, stft, moments };

std::string to_string(FeatureKind k);
FeatureKind parse_feature_kind(const std::string& name);
/// Row label used in result tables.
std::string display_name(FeatureKind k);

struct StsgParams {
  int max_log_scale = 6;
  int q1 = 2;
  int q2 = 1;
  int max_order = 2;
  SecondOrderRule rule = SecondOrderRule::increasing;
  int haar_levels = -1;  // -1 = deepest level the graph allows
  OverlapPolicy overlap = OverlapPolicy::none;
};

struct StftParams {
  std::size_t window = 64;
  std::size_t hop = 32;
};

/// One experiment, read from a JSON document with command-line overrides.
/// `seed` is required in the document; it seeds the generator, the forests
/// and the folds.
struct ExperimentConfig {
  ScenarioSpec scenario;
  std::vector<FeatureKind> features{FeatureKind::stsg, FeatureKind::stft, FeatureKind::moments};
  StsgParams stsg;
  StftParams stft;
  RfConfig forest;
  std::size_t folds = 5;
  std::size_t holdout_folds = 5;  // train/eval split holds out fold 0 of this many
  SynthSpec synth;
  std::uint64_t seed = 1;
  std::size_t threads = 1;

  static ExperimentConfig from_json(const std::string& text, const std::string& source = "<config>");
  /// Canonical document; excludes `threads`, which never changes results.
  std::string to_json() const;
  /// FNV-1a of to_json().
  std::string hash() const;
  /// Propagates `seed` and `threads` and checks consistency.
  void finalize();
};

/// Aggregates raw board recordings for a scenario; co_binary keeps only
/// carbon monoxide at 1000 or 4000 ppm.
std::vector<GraphRecording> prepare_recordings(const std::vector<Recording>& recordings, const ScenarioSpec& spec,
                                               std::vector<std::string>* warnings = nullptr);

/// Feature rows plus targets for one feature kind.
struct FeatureMatrix {
  FeatureKind kind = FeatureKind::stsg;
  std::string config_hash;
  ScenarioSpec scenario;
  FeatureLayout layout;
  std::vector<std::string> classes;  // classification only
  std::vector<std::string> ids;
  std::vector<std::string> labels;   // classification only
  Matrix targets;                    // regression only
  Matrix features;

  std::size_t rows() const { return ids.size(); }
  bool classification() const { return scenario.task != Task::localize; }
  /// Columns that go through the per-bag PCA (everything before the static
  /// and location blocks).
  std::size_t reducible() const;
  LearningSet learning_set() const;
  FeatureMatrix subset(const std::vector<std::size_t>& rows) const;

  void write(std::ostream& out) const;
  static FeatureMatrix read(std::istream& in, const std::string& source = "<features>");
  void save(const std::string& path) const;
  static FeatureMatrix load(const std::string& path);
};

FeatureMatrix extract_features(const std::vector<GraphRecording>& recordings, const ExperimentConfig& cfg,
                               FeatureKind kind);

struct CvRow {
  FeatureKind kind = FeatureKind::stsg;
  std::size_t feature_count = 0;
  CvResult cv;
};

struct CvReport {
  std::string config_hash;
  ScenarioSpec scenario;
  std::size_t samples = 0;
  std::size_t folds = 0;
  std::size_t trees = 0;
  std::vector<CvRow> rows;

  /// Human-readable table: one row per feature kind, mean(+-std).
  std::string table() const;
  /// key=value numeric lines, one row per feature kind.
  std::string numeric() const;
  std::string to_json() const;
};

CvReport cross_validate_features(const std::vector<FeatureMatrix>& matrices, const ExperimentConfig& cfg);

/// Train/held-out split used by `train`, `eval` and `curves`.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> heldout;
};
Split holdout_split(const FeatureMatrix& m, const ExperimentConfig& cfg);

/// A trained forest together with what is needed to re-evaluate it.
struct TrainedModel {
  std::string config_hash;
  FeatureKind kind = FeatureKind::stsg;
  ScenarioSpec scenario;
  std::string layout;
  std::vector<std::string> classes;
  std::vector<std::string> heldout_ids;
  double heldout_error = 0.0;
  Forest forest;

  std::string to_json() const;
  static TrainedModel from_json(const std::string& text);
};

TrainedModel train_model(const FeatureMatrix& m, const ExperimentConfig& cfg);
/// Error of `model` on the rows of `m` listed in model.heldout_ids, or on
/// every row when `all_rows` is set.
double evaluate_model(const TrainedModel& model, const FeatureMatrix& m, bool all_rows = false);

struct LearningCurves {
  std::string config_hash;
  std::vector<double> validation;
  std::vector<double> oob;
  std::vector<std::size_t> oob_excluded;

  /// CSV: trees,validation_error,oob_error,oob_excluded.
  std::string table() const;
  std::string to_json() const;
};

LearningCurves learning_curves(const FeatureMatrix& m, const ExperimentConfig& cfg);

/// Plot-ready numeric table from a results document written by `cv` or
/// `curves`.
std::string render_report(const std::string& results_json);

}  // namespace stsg
