#pragma once

#include <cstddef>
#include <vector>

#include "stsg/common.hpp"

namespace stsg {

/// Principal components of a sample set. Inputs are centered by `mean` and
/// divided by `scale` (all ones unless the model was fit with
/// standardization), then projected on the columns of `components`.
struct PcaModel {
  Vector mean;
  Vector scale;
  Matrix components;  // F x d, orthonormal columns
  Vector variances;   // d, non-increasing
  /// Set when the fitted sample set has no variance in some retained
  /// direction (e.g. identical samples).
  bool degenerate = false;

  std::size_t input_dim() const { return static_cast<std::size_t>(mean.size()); }
  std::size_t dim() const { return static_cast<std::size_t>(components.cols()); }
};

/// Fits the top-d eigenvectors of the sample covariance of `samples`
/// (rows = samples). Each component is signed so that its first entry with
/// magnitude above 1e-12 is positive.
///
/// With `standardize`, every coordinate is first scaled to unit sample
/// variance; coordinates with standard deviation <= 1e-12 keep scale 1.
PcaModel pca_fit(const Matrix& samples, std::size_t d, bool standardize = false);

/// Same as pca_fit with sample multiplicities (a bootstrap bag): row i of
/// `samples` counts `weights[i]` times. Only rows with nonzero weight are read.
PcaModel pca_fit_weighted(const Matrix& samples, const std::vector<std::size_t>& weights,
                          std::size_t d, bool standardize = false);

Vector pca_project(const PcaModel& model, const Vector& x);

/// Projects every row of `samples`.
Matrix pca_project_rows(const PcaModel& model, const Matrix& samples);

}  // namespace stsg
