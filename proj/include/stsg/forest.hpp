#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stsg/common.hpp"
#include "stsg/pca.hpp"
#include "stsg/rng.hpp"

namespace stsg {

enum class TaskKind { classification, regression };

std::string to_string(TaskKind kind);
TaskKind parse_task_kind(const std::string& name);

/// Training or evaluation data for the forest. The first `reducible`
/// columns of `features` go through the per-bag standardization and PCA; the
/// remaining columns (static and location covariates) bypass it.
struct LearningSet {
  Matrix features;  // n x F
  std::size_t reducible = 0;
  TaskKind task = TaskKind::classification;
  std::vector<std::size_t> labels;  // classification: class ids in [0, class_count)
  std::size_t class_count = 0;
  Matrix targets;                   // regression: n x q

  std::size_t size() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t output_dim() const;
  /// Subset of rows, in the given order.
  LearningSet subset(std::span<const std::size_t> rows) const;
  void validate() const;

  static LearningSet classification(Matrix features, std::vector<std::size_t> labels,
                                    std::size_t class_count = 0, std::size_t reducible = SIZE_MAX);
  static LearningSet regression(Matrix features, Matrix targets, std::size_t reducible = SIZE_MAX);
};

struct RfConfig {
  std::size_t n_trees = 200;
  std::size_t max_depth = 0;           // 0 = unlimited
  std::size_t min_leaf = 0;            // 0 = 1 (classification) / 5 (regression)
  std::size_t features_per_split = 0;  // 0 = ceil(sqrt(p)) / ceil(p/3)
  std::size_t pca_dim = 0;             // 0 = min(64, reducible width)
  bool use_pca = true;
  bool standardize = true;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

/// Binary tree stored as flat node arrays. Samples with x[feature] <=
/// threshold go left. Leaves hold `leaf_width` values: class fractions or the
/// mean response vector.
class DecisionTree {
 public:
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::uint32_t leaf = 0;     // index of the leaf's value block
  };

  DecisionTree() = default;
  DecisionTree(std::vector<Node> nodes, std::vector<double> leaf_values, std::size_t leaf_width);

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<double>& leaf_values() const { return leaf_values_; }
  std::size_t leaf_width() const { return leaf_width_; }
  std::size_t depth() const;
  std::size_t leaf_count() const;

  std::span<const double> evaluate(std::span<const double> x) const;

 private:
  std::vector<Node> nodes_;
  std::vector<double> leaf_values_;
  std::size_t leaf_width_ = 0;
};

struct TreeParams {
  std::size_t max_depth = 0;
  std::size_t min_leaf = 1;
  std::size_t features_per_split = 1;
};

/// Best (feature, threshold) over `features` for the node holding `samples`
/// (row ids into `features_matrix`, duplicates allowed). Impurity is the
/// summed child impurity: n_L*Gini_L + n_R*Gini_R for classification, the
/// summed squared deviation for regression. Thresholds are midpoints between
/// consecutive distinct values; both children must keep at least `min_leaf`
/// samples. Ties go to the lower feature, then the lower threshold.
struct SplitChoice {
  bool valid = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity = 0.0;
};

SplitChoice best_split(const Matrix& features_matrix, const LearningSet& responses,
                       std::span<const std::size_t> samples, std::span<const std::size_t> features,
                       std::size_t min_leaf);

/// Node impurity in the same units as SplitChoice::impurity.
double node_impurity(const LearningSet& responses, std::span<const std::size_t> samples);

/// Grows one tree on rows `samples` of `features_matrix` with per-node
/// feature bagging drawn from `rng`.
DecisionTree grow_tree(const Matrix& features_matrix, const LearningSet& responses,
                       std::span<const std::size_t> samples, const TreeParams& params, Rng& rng);

struct ForestTree {
  DecisionTree tree;
  std::vector<std::uint32_t> bag;  // training row ids, in draw order
  PcaModel pca;                    // empty when PCA is disabled
  bool has_pca = false;
};

class Forest {
 public:
  RfConfig config;
  TaskKind task = TaskKind::classification;
  std::size_t class_count = 0;
  std::size_t output_dim = 0;
  std::size_t input_dim = 0;
  std::size_t reducible = 0;
  std::size_t pca_dim = 0;
  std::vector<ForestTree> trees;

  /// Input of tree k for raw feature vector x.
  Vector transform(std::size_t k, const Vector& x) const;
  Matrix transform_rows(std::size_t k, const Matrix& rows) const;

  /// Versioned JSON document.
  std::string to_json() const;
  static Forest from_json(const std::string& text);
};

/// Algorithm: for each tree k, draw n rows with replacement from stream
/// derive_seed(seed, k); fit standardization + PCA on the bag's reducible
/// columns; grow a tree on the projected bag with feature bagging. Trees are
/// independent and may train in parallel with identical results.
Forest train_rf(const LearningSet& data, const RfConfig& cfg);

/// Summed leaf outputs of the first `tree_count` trees (0 = all), divided by
/// the number of trees used.
Vector predict_scores(const Forest& forest, const Vector& x, std::size_t tree_count = 0);

/// Argmax of the averaged class fractions; ties go to the lowest class id.
std::size_t predict_class(const Forest& forest, const Vector& x);

/// Mean of the trees' leaf means.
Vector predict_value(const Forest& forest, const Vector& x);

/// Misclassification rate or mean Euclidean error over all rows.
double evaluate_error(const Forest& forest, const LearningSet& data, std::size_t tree_count = 0);

/// Held-out error of the sub-ensembles of the first m trees, m = 1..T.
std::vector<double> error_curve(const Forest& forest, const LearningSet& data);

struct OobCurve {
  std::vector<double> error;          // length T
  std::vector<std::size_t> excluded;  // rows not yet out-of-bag at m
};

/// For m = 1..T, the error of the first m trees on each training row using
/// only trees whose bag excludes that row. `data` must be the training set.
OobCurve oob_error(const Forest& forest, const LearningSet& data);

/// Fold id per row. Classification folds are stratified: every class is
/// shuffled and dealt round-robin, continuing the counter across classes.
/// Regression rows are shuffled and cut into contiguous near-equal chunks.
std::vector<std::size_t> assign_folds(const LearningSet& data, std::size_t k, std::uint64_t seed);

struct CvResult {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation over folds
  std::vector<double> fold_errors;
  std::vector<std::size_t> folds;
};

CvResult cross_validate(const LearningSet& data, const RfConfig& cfg, std::size_t k);

}  // namespace stsg
