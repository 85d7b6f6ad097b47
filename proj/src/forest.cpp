#include "stsg/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

#include "stsg/parallel.hpp"

namespace stsg {

using nlohmann::json;

namespace {

constexpr int kForestFormatVersion = 1;

// Tree k draws from derive_seed(seed, k); fold assignment uses a stream past
// any plausible tree index.
constexpr std::uint64_t kFoldStream = 0xF01D0000ULL;

bool is_leaf(const DecisionTree::Node& n) { return n.feature < 0; }

std::size_t default_min_leaf(TaskKind t) { return t == TaskKind::classification ? 1 : 5; }

std::size_t default_mtry(TaskKind t, std::size_t p) {
  if (p == 0) return 0;
  if (t == TaskKind::classification) {
    return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p))));
  }
  return (p + 2) / 3;
}

double sample_error(const Forest& f, const Vector& scores, const LearningSet& data, std::size_t row) {
  if (f.task == TaskKind::classification) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.size(); ++c) {
      if (scores(c) > scores(best)) best = c;
    }
    return static_cast<std::size_t>(best) == data.labels[row] ? 0.0 : 1.0;
  }
  return (scores - data.targets.row(static_cast<Eigen::Index>(row)).transpose()).norm();
}

void accumulate(Vector& acc, std::span<const double> leaf) {
  for (std::size_t i = 0; i < leaf.size(); ++i) acc(static_cast<Eigen::Index>(i)) += leaf[i];
}

}  // namespace

std::string to_string(TaskKind kind) {
  return kind == TaskKind::classification ? "classification" : "regression";
}

TaskKind parse_task_kind(const std::string& name) {
  if (name == "classification") return TaskKind::classification;
  if (name == "regression") return TaskKind::regression;
  throw InvalidArgument("unknown task kind '" + name + "'");
}

// ---------------------------------------------------------------------------
// LearningSet

std::size_t LearningSet::output_dim() const {
  return task == TaskKind::classification ? class_count : static_cast<std::size_t>(targets.cols());
}

LearningSet LearningSet::subset(std::span<const std::size_t> rows) const {
  LearningSet out;
  out.reducible = reducible;
  out.task = task;
  out.class_count = class_count;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  if (task == TaskKind::regression) {
    out.targets.resize(static_cast<Eigen::Index>(rows.size()), targets.cols());
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(r);
    if (task == TaskKind::classification) {
      out.labels.push_back(labels[rows[i]]);
    } else {
      out.targets.row(static_cast<Eigen::Index>(i)) = targets.row(r);
    }
  }
  return out;
}

void LearningSet::validate() const {
  if (features.rows() == 0) throw InvalidArgument("learning set is empty");
  if (reducible > static_cast<std::size_t>(features.cols())) {
    throw DimensionError("learning set: reducible width exceeds feature width");
  }
  if (!features.allFinite()) throw InvalidArgument("learning set: non-finite feature value");
  if (task == TaskKind::classification) {
    if (labels.size() != size()) throw DimensionError("learning set: label count != row count");
    if (class_count == 0) throw InvalidArgument("learning set: no classes");
    for (auto l : labels) {
      if (l >= class_count) throw InvalidArgument("learning set: label out of range");
    }
  } else {
    if (static_cast<std::size_t>(targets.rows()) != size() || targets.cols() == 0) {
      throw DimensionError("learning set: target rows != feature rows");
    }
    if (!targets.allFinite()) throw InvalidArgument("learning set: non-finite target");
  }
}

LearningSet LearningSet::classification(Matrix features, std::vector<std::size_t> labels,
                                        std::size_t class_count, std::size_t reducible) {
  LearningSet s;
  s.task = TaskKind::classification;
  s.reducible = std::min<std::size_t>(reducible, static_cast<std::size_t>(features.cols()));
  s.features = std::move(features);
  if (class_count == 0) {
    for (auto l : labels) class_count = std::max(class_count, l + 1);
  }
  s.class_count = class_count;
  s.labels = std::move(labels);
  return s;
}

LearningSet LearningSet::regression(Matrix features, Matrix targets, std::size_t reducible) {
  LearningSet s;
  s.task = TaskKind::regression;
  s.reducible = std::min<std::size_t>(reducible, static_cast<std::size_t>(features.cols()));
  s.features = std::move(features);
  s.targets = std::move(targets);
  return s;
}

// ---------------------------------------------------------------------------
// DecisionTree

DecisionTree::DecisionTree(std::vector<Node> nodes, std::vector<double> leaf_values,
                           std::size_t leaf_width)
    : nodes_(std::move(nodes)), leaf_values_(std::move(leaf_values)), leaf_width_(leaf_width) {
  if (nodes_.empty()) throw InvalidArgument("DecisionTree: no nodes");
  for (const auto& n : nodes_) {
    if (is_leaf(n)) {
      if ((static_cast<std::size_t>(n.leaf) + 1) * leaf_width_ > leaf_values_.size()) {
        throw InvalidArgument("DecisionTree: leaf index out of range");
      }
    } else if (n.left >= nodes_.size() || n.right >= nodes_.size() || !std::isfinite(n.threshold)) {
      throw InvalidArgument("DecisionTree: malformed internal node");
    }
  }
}

std::size_t DecisionTree::depth() const {
  std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 0}};
  std::size_t best = 0;
  while (!stack.empty()) {
    auto [id, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    const auto& n = nodes_[id];
    if (!is_leaf(n)) {
      stack.emplace_back(n.left, d + 1);
      stack.emplace_back(n.right, d + 1);
    }
  }
  return best;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return is_leaf(n); }));
}

std::span<const double> DecisionTree::evaluate(std::span<const double> x) const {
  std::uint32_t id = 0;
  while (!is_leaf(nodes_[id])) {
    const auto& n = nodes_[id];
    id = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return {leaf_values_.data() + static_cast<std::size_t>(nodes_[id].leaf) * leaf_width_, leaf_width_};
}

// ---------------------------------------------------------------------------
// Splitting

double node_impurity(const LearningSet& r, std::span<const std::size_t> samples) {
  const auto n = static_cast<double>(samples.size());
  if (samples.empty()) return 0.0;
  if (r.task == TaskKind::classification) {
    std::vector<double> counts(r.class_count, 0.0);
    for (auto s : samples) counts[r.labels[s]] += 1.0;
    double sq = 0.0;
    for (double c : counts) sq += c * c;
    return n - sq / n;
  }
  double total = 0.0;
  for (Eigen::Index q = 0; q < r.targets.cols(); ++q) {
    double sum = 0.0, sum2 = 0.0;
    for (auto s : samples) {
      const double y = r.targets(static_cast<Eigen::Index>(s), q);
      sum += y;
      sum2 += y * y;
    }
    total += std::max(0.0, sum2 - sum * sum / n);
  }
  return total;
}

SplitChoice best_split(const Matrix& X, const LearningSet& r, std::span<const std::size_t> samples,
                       std::span<const std::size_t> features, std::size_t min_leaf) {
  SplitChoice best;
  const std::size_t n = samples.size();
  if (n < 2 * std::max<std::size_t>(min_leaf, 1)) return best;
  const bool classify = r.task == TaskKind::classification;
  const std::size_t width = classify ? r.class_count : static_cast<std::size_t>(r.targets.cols());

  // Totals for the right side start at the node totals.
  std::vector<double> total(width, 0.0), total_sq(width, 0.0);
  for (auto s : samples) {
    if (classify) {
      total[r.labels[s]] += 1.0;
    } else {
      for (std::size_t q = 0; q < width; ++q) {
        const double y = r.targets(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(q));
        total[q] += y;
        total_sq[q] += y * y;
      }
    }
  }

  std::vector<std::pair<double, std::size_t>> order(n);
  std::vector<double> left(width), left_sq(width);
  for (std::size_t f : features) {
    for (std::size_t i = 0; i < n; ++i) {
      order[i] = {X(static_cast<Eigen::Index>(samples[i]), static_cast<Eigen::Index>(f)), samples[i]};
    }
    std::sort(order.begin(), order.end());
    std::fill(left.begin(), left.end(), 0.0);
    std::fill(left_sq.begin(), left_sq.end(), 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const std::size_t s = order[i].second;
      if (classify) {
        left[r.labels[s]] += 1.0;
      } else {
        for (std::size_t q = 0; q < width; ++q) {
          const double y = r.targets(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(q));
          left[q] += y;
          left_sq[q] += y * y;
        }
      }
      const double a = order[i].first;
      const double b = order[i + 1].first;
      if (!(a < b)) continue;
      const std::size_t nl = i + 1;
      const std::size_t nr = n - nl;
      if (nl < min_leaf || nr < min_leaf) continue;
      const auto dl = static_cast<double>(nl);
      const auto dr = static_cast<double>(nr);
      double imp = 0.0;
      if (classify) {
        double sl = 0.0, sr = 0.0;
        for (std::size_t c = 0; c < width; ++c) {
          sl += left[c] * left[c];
          const double rc = total[c] - left[c];
          sr += rc * rc;
        }
        imp = (dl - sl / dl) + (dr - sr / dr);
      } else {
        for (std::size_t q = 0; q < width; ++q) {
          const double rs = total[q] - left[q];
          const double rsq = total_sq[q] - left_sq[q];
          imp += std::max(0.0, left_sq[q] - left[q] * left[q] / dl) +
                 std::max(0.0, rsq - rs * rs / dr);
        }
      }
      if (!best.valid || imp < best.impurity) {
        double t = a + (b - a) / 2.0;
        if (!(t < b)) t = a;
        best = {true, f, t, imp};
      }
    }
  }
  return best;
}

DecisionTree grow_tree(const Matrix& X, const LearningSet& r, std::span<const std::size_t> samples,
                       const TreeParams& params, Rng& rng) {
  const bool classify = r.task == TaskKind::classification;
  const std::size_t width = classify ? r.class_count : static_cast<std::size_t>(r.targets.cols());
  const auto p = static_cast<std::size_t>(X.cols());
  const std::size_t mtry = std::clamp<std::size_t>(params.features_per_split, 1, std::max<std::size_t>(p, 1));
  const std::size_t min_leaf = std::max<std::size_t>(params.min_leaf, 1);

  std::vector<DecisionTree::Node> nodes;
  std::vector<double> leaves;
  std::vector<std::size_t> all_features(p);
  std::iota(all_features.begin(), all_features.end(), 0);

  auto make_leaf = [&](std::span<const std::size_t> s, std::size_t node) {
    nodes[node].feature = -1;
    nodes[node].leaf = static_cast<std::uint32_t>(leaves.size() / width);
    std::vector<double> v(width, 0.0);
    for (auto i : s) {
      if (classify) {
        v[r.labels[i]] += 1.0;
      } else {
        for (std::size_t q = 0; q < width; ++q) {
          v[q] += r.targets(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q));
        }
      }
    }
    const double n = static_cast<double>(s.size());
    for (auto& x : v) x /= n;
    leaves.insert(leaves.end(), v.begin(), v.end());
  };

  auto pure = [&](std::span<const std::size_t> s) {
    for (std::size_t i = 1; i < s.size(); ++i) {
      if (classify) {
        if (r.labels[s[i]] != r.labels[s[0]]) return false;
      } else {
        for (Eigen::Index q = 0; q < r.targets.cols(); ++q) {
          if (r.targets(static_cast<Eigen::Index>(s[i]), q) != r.targets(static_cast<Eigen::Index>(s[0]), q)) {
            return false;
          }
        }
      }
    }
    return true;
  };

  struct Work {
    std::size_t node;
    std::vector<std::size_t> samples;
    std::size_t depth;
  };
  nodes.emplace_back();
  std::vector<Work> stack;
  stack.push_back({0, std::vector<std::size_t>(samples.begin(), samples.end()), 0});
  std::vector<std::size_t> candidates;
  while (!stack.empty()) {
    Work w = std::move(stack.back());
    stack.pop_back();
    const bool depth_limited = params.max_depth > 0 && w.depth >= params.max_depth;
    if (depth_limited || w.samples.size() < 2 * min_leaf || pure(w.samples)) {
      make_leaf(w.samples, w.node);
      continue;
    }
    candidates = all_features;
    for (std::size_t i = 0; i < mtry; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(p - i));
      std::swap(candidates[i], candidates[j]);
    }
    candidates.resize(mtry);
    std::sort(candidates.begin(), candidates.end());

    const SplitChoice split = best_split(X, r, w.samples, candidates, min_leaf);
    const double parent = node_impurity(r, w.samples);
    if (!split.valid || !(split.impurity < parent - 1e-12 * std::max(parent, 1.0))) {
      make_leaf(w.samples, w.node);
      continue;
    }
    std::vector<std::size_t> left, right;
    for (auto s : w.samples) {
      (X(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(split.feature)) <= split.threshold ? left : right)
          .push_back(s);
    }
    const auto l = static_cast<std::uint32_t>(nodes.size());
    nodes.emplace_back();
    const auto rr = static_cast<std::uint32_t>(nodes.size());
    nodes.emplace_back();
    nodes[w.node].feature = static_cast<std::int32_t>(split.feature);
    nodes[w.node].threshold = split.threshold;
    nodes[w.node].left = l;
    nodes[w.node].right = rr;
    // Right pushed first so the left subtree is built first.
    stack.push_back({rr, std::move(right), w.depth + 1});
    stack.push_back({l, std::move(left), w.depth + 1});
  }
  return DecisionTree(std::move(nodes), std::move(leaves), width);
}

// ---------------------------------------------------------------------------
// Forest

Vector Forest::transform(std::size_t k, const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != input_dim) {
    throw DimensionError("forest: feature length " + std::to_string(x.size()) +
                         " != trained length " + std::to_string(input_dim));
  }
  const auto& t = trees.at(k);
  if (!t.has_pca) return x;
  const auto r = static_cast<Eigen::Index>(reducible);
  const auto rest = static_cast<Eigen::Index>(input_dim - reducible);
  Vector z(static_cast<Eigen::Index>(pca_dim) + rest);
  z.head(static_cast<Eigen::Index>(pca_dim)) = pca_project(t.pca, x.head(r));
  z.tail(rest) = x.tail(rest);
  return z;
}

Matrix Forest::transform_rows(std::size_t k, const Matrix& rows) const {
  if (static_cast<std::size_t>(rows.cols()) != input_dim) {
    throw DimensionError("forest: feature width does not match the trained forest");
  }
  const auto& t = trees.at(k);
  if (!t.has_pca) return rows;
  const auto r = static_cast<Eigen::Index>(reducible);
  const auto rest = static_cast<Eigen::Index>(input_dim - reducible);
  const auto d = static_cast<Eigen::Index>(pca_dim);
  Matrix z(rows.rows(), d + rest);
  z.leftCols(d) = pca_project_rows(t.pca, rows.leftCols(r));
  z.rightCols(rest) = rows.rightCols(rest);
  return z;
}

Forest train_rf(const LearningSet& data, const RfConfig& cfg) {
  data.validate();
  if (cfg.n_trees < 1) throw InvalidArgument("train_rf: n_trees must be >= 1");
  const std::size_t n = data.size();

  Forest forest;
  forest.config = cfg;
  forest.task = data.task;
  forest.class_count = data.class_count;
  forest.output_dim = data.output_dim();
  forest.input_dim = static_cast<std::size_t>(data.features.cols());
  forest.reducible = data.reducible;
  const bool use_pca = cfg.use_pca && data.reducible > 0 && n >= 2;
  if (use_pca) {
    std::size_t d = cfg.pca_dim == 0 ? std::min<std::size_t>(64, data.reducible) : cfg.pca_dim;
    forest.pca_dim = std::min({d, data.reducible, n - 1});
  }
  const std::size_t p = use_pca ? forest.pca_dim + forest.input_dim - forest.reducible : forest.input_dim;
  TreeParams params;
  params.max_depth = cfg.max_depth;
  params.min_leaf = cfg.min_leaf == 0 ? default_min_leaf(data.task) : cfg.min_leaf;
  params.features_per_split = cfg.features_per_split == 0 ? default_mtry(data.task, p) : cfg.features_per_split;

  forest.trees.resize(cfg.n_trees);
  parallel_for(cfg.n_trees, cfg.threads, [&](std::size_t k) {
    Rng rng(derive_seed(cfg.seed, k));
    ForestTree& out = forest.trees[k];
    out.bag.resize(n);
    std::vector<std::size_t> weights(n, 0);
    for (auto& b : out.bag) {
      b = static_cast<std::uint32_t>(rng.below(n));
      ++weights[b];
    }
    std::vector<std::size_t> bag(out.bag.begin(), out.bag.end());
    if (use_pca) {
      out.pca = pca_fit_weighted(data.features.leftCols(static_cast<Eigen::Index>(data.reducible)),
                                 weights, forest.pca_dim, cfg.standardize);
      out.has_pca = true;
      // Only bag rows are read by grow_tree; project those.
      std::vector<std::size_t> unique_rows;
      std::vector<std::size_t> slot(n, 0);
      for (std::size_t i = 0; i < n; ++i) {
        if (weights[i] > 0) {
          slot[i] = unique_rows.size();
          unique_rows.push_back(i);
        }
      }
      Matrix raw(static_cast<Eigen::Index>(unique_rows.size()), data.features.cols());
      for (std::size_t u = 0; u < unique_rows.size(); ++u) {
        raw.row(static_cast<Eigen::Index>(u)) = data.features.row(static_cast<Eigen::Index>(unique_rows[u]));
      }
      const Matrix projected = forest.transform_rows(k, raw);
      const LearningSet local = data.subset(unique_rows);
      std::vector<std::size_t> local_bag(bag.size());
      for (std::size_t i = 0; i < bag.size(); ++i) local_bag[i] = slot[bag[i]];
      out.tree = grow_tree(projected, local, local_bag, params, rng);
    } else {
      out.tree = grow_tree(data.features, data, bag, params, rng);
    }
  });
  return forest;
}

Vector predict_scores(const Forest& forest, const Vector& x, std::size_t tree_count) {
  const std::size_t m = tree_count == 0 ? forest.trees.size() : std::min(tree_count, forest.trees.size());
  Vector acc = Vector::Zero(static_cast<Eigen::Index>(forest.output_dim));
  for (std::size_t k = 0; k < m; ++k) {
    const Vector z = forest.transform(k, x);
    accumulate(acc, forest.trees[k].tree.evaluate({z.data(), static_cast<std::size_t>(z.size())}));
  }
  return acc / static_cast<double>(m);
}

std::size_t predict_class(const Forest& forest, const Vector& x) {
  if (forest.task != TaskKind::classification) throw InvalidArgument("predict_class: regression forest");
  const Vector s = predict_scores(forest, x);
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < s.size(); ++c) {
    if (s(c) > s(best)) best = c;
  }
  return static_cast<std::size_t>(best);
}

Vector predict_value(const Forest& forest, const Vector& x) {
  if (forest.task != TaskKind::regression) throw InvalidArgument("predict_value: classification forest");
  return predict_scores(forest, x);
}

namespace {

// Per-tree leaf outputs for every row: result[k] is rows x output_dim.
std::vector<Matrix> tree_outputs(const Forest& forest, const Matrix& rows) {
  std::vector<Matrix> out(forest.trees.size());
  parallel_for(forest.trees.size(), forest.config.threads, [&](std::size_t k) {
    const Matrix z = forest.transform_rows(k, rows);
    Matrix o(rows.rows(), static_cast<Eigen::Index>(forest.output_dim));
    std::vector<double> buf(static_cast<std::size_t>(z.cols()));
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      for (Eigen::Index j = 0; j < z.cols(); ++j) buf[static_cast<std::size_t>(j)] = z(i, j);
      const auto leaf = forest.trees[k].tree.evaluate(buf);
      for (std::size_t c = 0; c < leaf.size(); ++c) o(i, static_cast<Eigen::Index>(c)) = leaf[c];
    }
    out[k] = std::move(o);
  });
  return out;
}

}  // namespace

double evaluate_error(const Forest& forest, const LearningSet& data, std::size_t tree_count) {
  if (data.size() == 0) throw InvalidArgument("evaluate_error: empty data");
  double err = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vector x = data.features.row(static_cast<Eigen::Index>(i)).transpose();
    err += sample_error(forest, predict_scores(forest, x, tree_count), data, i);
  }
  return err / static_cast<double>(data.size());
}

std::vector<double> error_curve(const Forest& forest, const LearningSet& data) {
  if (data.size() == 0) throw InvalidArgument("error_curve: empty data");
  const auto outputs = tree_outputs(forest, data.features);
  Matrix acc = Matrix::Zero(data.features.rows(), static_cast<Eigen::Index>(forest.output_dim));
  std::vector<double> curve;
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    acc += outputs[k];
    double err = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const Vector s = acc.row(static_cast<Eigen::Index>(i)).transpose() / static_cast<double>(k + 1);
      err += sample_error(forest, s, data, i);
    }
    curve.push_back(err / static_cast<double>(data.size()));
  }
  return curve;
}

OobCurve oob_error(const Forest& forest, const LearningSet& data) {
  const std::size_t n = data.size();
  for (const auto& t : forest.trees) {
    if (t.bag.size() != n) throw DimensionError("oob_error: data is not the forest's training set");
  }
  const auto outputs = tree_outputs(forest, data.features);
  Matrix acc = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(forest.output_dim));
  std::vector<std::size_t> votes(n, 0);
  OobCurve curve;
  std::vector<char> in_bag(n);
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    std::fill(in_bag.begin(), in_bag.end(), 0);
    for (auto b : forest.trees[k].bag) in_bag[b] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (in_bag[i]) continue;
      acc.row(static_cast<Eigen::Index>(i)) += outputs[k].row(static_cast<Eigen::Index>(i));
      ++votes[i];
    }
    double err = 0.0;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (votes[i] == 0) continue;
      const Vector s = acc.row(static_cast<Eigen::Index>(i)).transpose() / static_cast<double>(votes[i]);
      err += sample_error(forest, s, data, i);
      ++counted;
    }
    curve.error.push_back(counted ? err / static_cast<double>(counted) : 0.0);
    curve.excluded.push_back(n - counted);
  }
  return curve;
}

std::vector<std::size_t> assign_folds(const LearningSet& data, std::size_t k, std::uint64_t seed) {
  const std::size_t n = data.size();
  if (k < 2) throw InvalidArgument("cross_validate: need at least 2 folds");
  if (n < k) throw InvalidArgument("cross_validate: fewer samples than folds");
  Rng rng(derive_seed(seed, kFoldStream));
  std::vector<std::size_t> fold(n, 0);
  if (data.task == TaskKind::classification) {
    std::vector<std::vector<std::size_t>> by_class(data.class_count);
    for (std::size_t i = 0; i < n; ++i) by_class[data.labels[i]].push_back(i);
    std::size_t counter = 0;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      auto& members = by_class[c];
      if (members.empty()) continue;
      if (members.size() < k) {
        throw InvalidArgument("cross_validate: class " + std::to_string(c) + " has " +
                              std::to_string(members.size()) + " samples, fewer than " +
                              std::to_string(k) + " folds");
      }
      rng.shuffle(members);
      for (auto i : members) fold[i] = counter++ % k;
    }
  } else {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    for (std::size_t pos = 0; pos < n; ++pos) fold[order[pos]] = pos * k / n;
  }
  return fold;
}

CvResult cross_validate(const LearningSet& data, const RfConfig& cfg, std::size_t k) {
  data.validate();
  CvResult result;
  result.folds = assign_folds(data, k, cfg.seed);
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < data.size(); ++i) (result.folds[i] == f ? test : train).push_back(i);
    RfConfig fold_cfg = cfg;
    fold_cfg.seed = derive_seed(cfg.seed, kFoldStream + 1 + f);
    const Forest forest = train_rf(data.subset(train), fold_cfg);
    result.fold_errors.push_back(evaluate_error(forest, data.subset(test)));
  }
  const double kk = static_cast<double>(k);
  result.mean = std::accumulate(result.fold_errors.begin(), result.fold_errors.end(), 0.0) / kk;
  double ss = 0.0;
  for (double e : result.fold_errors) ss += (e - result.mean) * (e - result.mean);
  result.stddev = std::sqrt(ss / (kk - 1.0));
  return result;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string Forest::to_json() const {
  json doc;
  doc["format"] = "stsg-forest";
  doc["version"] = kForestFormatVersion;
  doc["config"] = {{"n_trees", config.n_trees},       {"max_depth", config.max_depth},
                   {"min_leaf", config.min_leaf},     {"features_per_split", config.features_per_split},
                   {"pca_dim", config.pca_dim},       {"use_pca", config.use_pca},
                   {"standardize", config.standardize}, {"seed", config.seed}};
  doc["task"] = to_string(task);
  doc["class_count"] = class_count;
  doc["output_dim"] = output_dim;
  doc["input_dim"] = input_dim;
  doc["reducible"] = reducible;
  doc["pca_dim"] = pca_dim;
  json jt = json::array();
  for (const auto& t : trees) {
    json e;
    e["bag"] = t.bag;
    std::vector<int> feature;
    std::vector<double> threshold;
    std::vector<std::uint32_t> left, right, leaf;
    for (const auto& nd : t.tree.nodes()) {
      feature.push_back(nd.feature);
      threshold.push_back(nd.threshold);
      left.push_back(nd.left);
      right.push_back(nd.right);
      leaf.push_back(nd.leaf);
    }
    e["nodes"] = {{"feature", feature}, {"threshold", threshold}, {"left", left},
                  {"right", right},     {"leaf", leaf}};
    e["leaf_width"] = t.tree.leaf_width();
    e["leaf_values"] = t.tree.leaf_values();
    if (t.has_pca) {
      const Matrix& c = t.pca.components;
      e["pca"] = {{"mean", vec_json(t.pca.mean)},
                  {"scale", vec_json(t.pca.scale)},
                  {"rows", c.rows()},
                  {"cols", c.cols()},
                  {"components", std::vector<double>(c.data(), c.data() + c.size())},
                  {"variances", vec_json(t.pca.variances)},
                  {"degenerate", t.pca.degenerate}};
    }
    jt.push_back(std::move(e));
  }
  doc["trees"] = std::move(jt);
  return doc.dump();
}

Forest Forest::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("forest document: ") + e.what());
  }
  try {
    if (doc.at("format") != "stsg-forest") throw InvalidArgument("forest document: wrong format tag");
    if (doc.at("version").get<int>() != kForestFormatVersion) {
      throw InvalidArgument("forest document: unsupported version");
    }
    Forest f;
    const auto& c = doc.at("config");
    f.config.n_trees = c.at("n_trees");
    f.config.max_depth = c.at("max_depth");
    f.config.min_leaf = c.at("min_leaf");
    f.config.features_per_split = c.at("features_per_split");
    f.config.pca_dim = c.at("pca_dim");
    f.config.use_pca = c.at("use_pca");
    f.config.standardize = c.at("standardize");
    f.config.seed = c.at("seed");
    f.task = parse_task_kind(doc.at("task"));
    f.class_count = doc.at("class_count");
    f.output_dim = doc.at("output_dim");
    f.input_dim = doc.at("input_dim");
    f.reducible = doc.at("reducible");
    f.pca_dim = doc.at("pca_dim");
    for (const auto& e : doc.at("trees")) {
      ForestTree t;
      t.bag = e.at("bag").get<std::vector<std::uint32_t>>();
      const auto& nd = e.at("nodes");
      const auto feature = nd.at("feature").get<std::vector<int>>();
      const auto threshold = nd.at("threshold").get<std::vector<double>>();
      const auto left = nd.at("left").get<std::vector<std::uint32_t>>();
      const auto right = nd.at("right").get<std::vector<std::uint32_t>>();
      const auto leaf = nd.at("leaf").get<std::vector<std::uint32_t>>();
      if (threshold.size() != feature.size() || left.size() != feature.size() ||
          right.size() != feature.size() || leaf.size() != feature.size()) {
        throw InvalidArgument("forest document: node arrays differ in length");
      }
      std::vector<DecisionTree::Node> nodes(feature.size());
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        nodes[i] = {feature[i], threshold[i], left[i], right[i], leaf[i]};
      }
      t.tree = DecisionTree(std::move(nodes), e.at("leaf_values").get<std::vector<double>>(),
                            e.at("leaf_width").get<std::size_t>());
      if (e.contains("pca")) {
        const auto& p = e.at("pca");
        t.has_pca = true;
        t.pca.mean = json_vec(p.at("mean"));
        t.pca.scale = json_vec(p.at("scale"));
        const auto comp = p.at("components").get<std::vector<double>>();
        const Eigen::Index rows = p.at("rows");
        const Eigen::Index cols = p.at("cols");
        if (static_cast<std::size_t>(rows * cols) != comp.size()) {
          throw InvalidArgument("forest document: PCA component size mismatch");
        }
        t.pca.components = Eigen::Map<const Matrix>(comp.data(), rows, cols);
        t.pca.variances = json_vec(p.at("variances"));
        t.pca.degenerate = p.at("degenerate");
      }
      f.trees.push_back(std::move(t));
    }
    return f;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("forest document: ") + e.what());
  }
}

}  // namespace stsg
