#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls the library code it is compared against.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "stsg/graph_wavelet.hpp"

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using cd = std::complex<double>;

// ---------------------------------------------------------------- graphs

struct NamedGraph {
  std::string name;
  stsg::SensorGraph graph;
};

inline std::vector<stsg::Point2> line_positions(std::size_t n) {
  std::vector<stsg::Point2> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = {static_cast<double>(i), 0.0};
  return p;
}

inline std::vector<stsg::Point2> ring_positions(std::size_t n) {
  std::vector<stsg::Point2> p(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    p[i] = {std::cos(a), std::sin(a)};
  }
  return p;
}

/// Fixture set: for every N in 1..8, the path, cycle, star, complete and
/// edgeless graphs, a 2-row grid when N is even, and `random_per_n` seeded
/// Erdos-Renyi graphs with random planar positions.
inline std::vector<NamedGraph> graph_fixtures(std::size_t random_per_n = 12, std::uint64_t seed = 20240611) {
  std::vector<NamedGraph> out;
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t n = 1; n <= 8; ++n) {
    using E = stsg::SensorGraph::Edge;
    std::vector<E> path, cycle, star, complete;
    for (std::size_t i = 0; i + 1 < n; ++i) path.push_back({i, i + 1});
    cycle = path;
    if (n >= 3) cycle.push_back({0, n - 1});
    for (std::size_t i = 1; i < n; ++i) star.push_back({0, i});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) complete.push_back({i, j});
    const auto tag = std::to_string(n);
    out.push_back({"path" + tag, stsg::SensorGraph(line_positions(n), path)});
    out.push_back({"cycle" + tag, stsg::SensorGraph(ring_positions(n), cycle)});
    out.push_back({"star" + tag, stsg::SensorGraph(ring_positions(n), star)});
    out.push_back({"complete" + tag, stsg::SensorGraph(ring_positions(n), complete)});
    out.push_back({"edgeless" + tag, stsg::SensorGraph(line_positions(n), {})});
    if (n % 2 == 0 && n >= 4) {
      const std::size_t cols = n / 2;
      std::vector<stsg::Point2> pos(n);
      std::vector<E> grid;
      for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
          const std::size_t v = r * cols + c;
          pos[v] = {static_cast<double>(c), static_cast<double>(r)};
          if (c + 1 < cols) grid.push_back({v, v + 1});
          if (r == 0) grid.push_back({v, v + cols});
        }
      out.push_back({"grid2x" + std::to_string(cols), stsg::SensorGraph(pos, grid)});
    }
    for (std::size_t k = 0; k < random_per_n; ++k) {
      std::vector<stsg::Point2> pos(n);
      for (auto& p : pos) p = {unit(gen), unit(gen)};
      const double density = 0.2 + 0.6 * unit(gen);
      std::vector<E> edges;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          if (unit(gen) < density) edges.push_back({i, j});
      out.push_back({"random" + tag + "_" + std::to_string(k), stsg::SensorGraph(pos, edges)});
    }
  }
  return out;
}

// ------------------------------------------------------------------ Haar

/// Integer Haar function of one channel, materialized on the N vertices:
/// the folder indicator for a scaling channel, 1_alpha - 1_beta for a
/// wavelet channel. Members are expanded from the level-0 singletons by
/// walking the child lists, not read from Folder::members.
inline std::vector<long long> expand_members(const stsg::FolderDecomposition& dec, int level, std::size_t folder) {
  std::vector<long long> ind(dec.vertex_count(), 0);
  std::vector<std::pair<int, std::size_t>> stack{{level, folder}};
  while (!stack.empty()) {
    const auto [j, i] = stack.back();
    stack.pop_back();
    if (j == 0) {
      ind[dec.level(0)[i].members.at(0)] = 1;
      continue;
    }
    for (auto c : dec.level(j)[i].children) stack.push_back({j - 1, c});
  }
  return ind;
}

inline std::vector<long long> haar_function(const stsg::FolderDecomposition& dec, const stsg::HaarChannel& ch) {
  if (ch.coefficient == 0) return expand_members(dec, ch.level, ch.folder);
  const auto& f = dec.level(ch.level)[ch.folder];
  auto a = expand_members(dec, ch.level - 1, f.children.at(0));
  const auto b = expand_members(dec, ch.level - 1, f.children.at(1));
  for (std::size_t v = 0; v < a.size(); ++v) a[v] -= b[v];
  return a;
}

/// Channel values as plain dot products with the materialized functions.
inline Matrix haar_brute_force(const stsg::FolderDecomposition& dec, const std::vector<stsg::HaarChannel>& layout,
                               const Matrix& recording) {
  Matrix out(recording.rows(), static_cast<Eigen::Index>(layout.size()));
  for (std::size_t c = 0; c < layout.size(); ++c) {
    const auto f = haar_function(dec, layout[c]);
    for (Eigen::Index t = 0; t < recording.rows(); ++t) {
      double s = 0.0;
      for (std::size_t v = 0; v < f.size(); ++v) s += static_cast<double>(f[v]) * recording(t, static_cast<Eigen::Index>(v));
      out(t, static_cast<Eigen::Index>(c)) = s;
    }
  }
  return out;
}

// --------------------------------------------------------------- signals

/// y(t) = sum_s x(s) h((t - s) mod T), computed directly.
inline std::vector<cd> circular_convolve(const std::vector<cd>& x, const std::vector<cd>& h) {
  const std::size_t T = x.size();
  std::vector<cd> y(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    cd acc = 0.0;
    for (std::size_t s = 0; s < T; ++s) acc += x[s] * h[(t + T - s) % T];
    y[t] = acc;
  }
  return y;
}

/// X[k] = sum_t x[t] exp(-2 pi i k t / n).
inline std::vector<cd> dft(const std::vector<cd>& x) {
  const std::size_t n = x.size();
  std::vector<cd> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    cd acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double a = -2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
      acc += x[t] * cd(std::cos(a), std::sin(a));
    }
    out[k] = acc;
  }
  return out;
}

/// x(t - tau(t)) as a sum of triangular kernels on the circle:
/// y(t) = sum_s x(s) max(0, 1 - d(t - tau(t), s)), d the circular distance.
inline std::vector<double> resample(const std::vector<double>& x, const std::vector<double>& tau) {
  const double T = static_cast<double>(x.size());
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double u = static_cast<double>(t) - tau[t];
    for (std::size_t s = 0; s < x.size(); ++s) {
      double d = std::abs(std::remainder(u - static_cast<double>(s), T));
      if (d < 1.0) y[t] += (1.0 - d) * x[s];
    }
  }
  return y;
}

/// Per column: (mean, unbiased variance) by two passes.
inline std::vector<double> two_pass_moments(const Matrix& m) {
  std::vector<double> out;
  const double n = static_cast<double>(m.rows());
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    double s = 0.0;
    for (Eigen::Index t = 0; t < m.rows(); ++t) s += m(t, c);
    const double mean = s / n;
    double ss = 0.0;
    for (Eigen::Index t = 0; t < m.rows(); ++t) ss += (m(t, c) - mean) * (m(t, c) - mean);
    out.push_back(mean);
    out.push_back(ss / (n - 1.0));
  }
  return out;
}

// ----------------------------------------------------------------- eigen

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns
/// eigenvalues in descending order with eigenvectors as matching columns.
inline std::pair<Vector, Matrix> jacobi_eigen(Matrix a, int sweeps = 100) {
  const Eigen::Index n = a.rows();
  Matrix v = Matrix::Identity(n, n);
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return a(x, x) > a(y, y); });
  Vector values(n);
  Matrix vectors(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    values(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return {values, vectors};
}

/// Unbiased sample covariance, computed entry by entry.
inline Matrix sample_covariance(const Matrix& x) {
  const Eigen::Index n = x.rows(), F = x.cols();
  Vector mean = Vector::Zero(F);
  for (Eigen::Index i = 0; i < n; ++i) mean += x.row(i).transpose();
  mean /= static_cast<double>(n);
  Matrix c = Matrix::Zero(F, F);
  for (Eigen::Index a = 0; a < F; ++a)
    for (Eigen::Index b = 0; b < F; ++b) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) s += (x(i, a) - mean(a)) * (x(i, b) - mean(b));
      c(a, b) = s / static_cast<double>(n - 1);
    }
  return c;
}

// ---------------------------------------------------------------- splits

struct Split {
  bool valid = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity = std::numeric_limits<double>::infinity();
};

/// n * Gini for class labels.
inline double weighted_gini(const std::vector<std::size_t>& labels, std::size_t classes) {
  if (labels.empty()) return 0.0;
  std::vector<double> counts(classes, 0.0);
  for (auto l : labels) counts[l] += 1.0;
  const double n = static_cast<double>(labels.size());
  double g = 1.0;
  for (double c : counts) g -= (c / n) * (c / n);
  return n * g;
}

/// Summed squared deviation from the mean, over all target columns.
inline double sse(const std::vector<Vector>& ys) {
  if (ys.empty()) return 0.0;
  Vector mean = Vector::Zero(ys[0].size());
  for (const auto& y : ys) mean += y;
  mean /= static_cast<double>(ys.size());
  double s = 0.0;
  for (const auto& y : ys) s += (y - mean).squaredNorm();
  return s;
}

/// Tries every midpoint of every listed feature and recomputes both
/// children from scratch. Ties keep the first candidate found (lower feature,
/// then lower threshold) up to a relative slack of 1e-12.
template <typename ImpurityFn>
Split exhaustive_split(const Matrix& x, const std::vector<std::size_t>& samples,
                       const std::vector<std::size_t>& features, std::size_t min_leaf, ImpurityFn impurity) {
  Split best;
  for (auto f : features) {
    std::vector<double> values;
    for (auto s : samples) values.push_back(x(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(f)));
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      const double thr = 0.5 * (values[k] + values[k + 1]);
      std::vector<std::size_t> left, right;
      for (auto s : samples) (x(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(f)) <= thr ? left : right).push_back(s);
      if (left.size() < min_leaf || right.size() < min_leaf) continue;
      const double imp = impurity(left) + impurity(right);
      if (!best.valid || imp < best.impurity - 1e-12 * std::max(1.0, std::abs(best.impurity))) {
        best = {true, f, thr, imp};
      }
    }
  }
  return best;
}

// ------------------------------------------------------------- datasets

/// Two isotropic Gaussian blobs in 2D with unit spread, centers `separation`
/// apart on the x axis; labels alternate 0, 1.
inline std::pair<Matrix, std::vector<std::size_t>> blobs(std::size_t n, double separation, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix x(static_cast<Eigen::Index>(n), 2);
  std::vector<std::size_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 2;
    x(static_cast<Eigen::Index>(i), 0) = g(gen) + (y[i] == 1 ? separation : 0.0);
    x(static_cast<Eigen::Index>(i), 1) = g(gen);
  }
  return {x, y};
}

/// Four clusters at (+-1, +-1) with spread `sigma`; label = sign(x) xor sign(y).
inline std::pair<Matrix, std::vector<std::size_t>> xor_clusters(std::size_t n, double sigma, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g(0.0, sigma);
  Matrix x(static_cast<Eigen::Index>(n), 2);
  std::vector<std::size_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int q = static_cast<int>(i % 4);
    const double cx = (q & 1) ? 1.0 : -1.0;
    const double cy = (q & 2) ? 1.0 : -1.0;
    x(static_cast<Eigen::Index>(i), 0) = cx + g(gen);
    x(static_cast<Eigen::Index>(i), 1) = cy + g(gen);
    y[i] = ((q & 1) ^ ((q >> 1) & 1)) ? 1 : 0;
  }
  return {x, y};
}

inline double relative_error(const Matrix& got, const Matrix& want) {
  const double scale = std::max(want.norm(), 1e-300);
  return (got - want).norm() / scale;
}

}  // namespace oracle
