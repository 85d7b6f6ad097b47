#include "stsg/pca.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

namespace stsg {

namespace {

constexpr double kScaleFloor = 1e-12;

PcaModel fit_from_moments(Vector mean, Matrix centered, const Vector& weights, double total,
                          std::size_t d, bool standardize) {
  const auto F = centered.cols();
  const double denom = total - 1.0;

  Vector scale = Vector::Ones(F);
  if (standardize) {
    const Vector var = (centered.array().square().colwise() * weights.array()).colwise().sum() / denom;
    for (Eigen::Index j = 0; j < F; ++j) {
      const double sd = std::sqrt(var(j));
      if (sd > kScaleFloor) scale(j) = sd;
    }
    centered = centered.array().rowwise() / scale.transpose().array();
  }

  const Matrix weighted = centered.array().colwise() * weights.array().sqrt();
  const auto m = weighted.rows();
  const auto dd = static_cast<Eigen::Index>(d);

  PcaModel model;
  model.mean = std::move(mean);
  model.scale = std::move(scale);
  model.components.resize(F, dd);
  model.variances.resize(dd);

  // Fewer distinct rows than features: the nonzero spectrum of A^T A equals
  // that of A A^T, which is much smaller. Directions past its rank carry no
  // variance and are completed from the coordinate axes.
  if (m < F) {
    Matrix gram = Matrix::Zero(m, m);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(weighted, 1.0 / denom);
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    if (eig.info() != Eigen::Success) throw Error("pca_fit: eigen decomposition failed");
    const double top = std::max(eig.eigenvalues()(m - 1), 0.0);
    Eigen::Index k = 0;
    for (; k < std::min(dd, m); ++k) {
      const Eigen::Index src = m - 1 - k;
      const double lambda = eig.eigenvalues()(src);
      if (!(top > 0) || lambda <= 1e-10 * top) break;
      model.components.col(k) = weighted.transpose() * eig.eigenvectors().col(src);
      model.variances(k) = lambda;
    }
    Eigen::Index axis = 0;
    for (Eigen::Index j = 0; j < dd; ++j) {
      if (j >= k) {
        model.components.col(j) = Vector::Unit(F, axis++);
        model.variances(j) = 0.0;
      }
      auto v = model.components.col(j);
      for (int pass = 0; pass < 2; ++pass)
        for (Eigen::Index i = 0; i < j; ++i) v -= model.components.col(i).dot(v) * model.components.col(i);
      const double norm = v.norm();
      if (j >= k && norm < 0.5) {
        --j;  // axis already spanned; try the next one
        continue;
      }
      v /= norm;
    }
  } else {
    Matrix cov = Matrix::Zero(F, F);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(weighted.transpose(), 1.0 / denom);
    cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    if (eig.info() != Eigen::Success) throw Error("pca_fit: eigen decomposition failed");
    for (Eigen::Index k = 0; k < dd; ++k) {
      const Eigen::Index src = F - 1 - k;
      model.components.col(k) = eig.eigenvectors().col(src);
      model.variances(k) = std::max(eig.eigenvalues()(src), 0.0);
    }
  }

  const double top = std::max(model.variances(0), 0.0);
  for (Eigen::Index k = 0; k < dd; ++k) {
    auto v = model.components.col(k);
    for (Eigen::Index i = 0; i < F; ++i) {
      if (std::abs(v(i)) > 1e-12) {
        if (v(i) < 0) v = -v;
        break;
      }
    }
    if (model.variances(k) <= 1e-12 * std::max(top, 1.0)) model.degenerate = true;
  }
  return model;
}

void check_dims(Eigen::Index n, Eigen::Index F, std::size_t d) {
  if (n < 2) throw InvalidArgument("pca_fit: need at least 2 samples");
  if (d < 1) throw InvalidArgument("pca_fit: d must be >= 1");
  if (d > static_cast<std::size_t>(F)) {
    throw InvalidArgument("pca_fit: d = " + std::to_string(d) + " exceeds feature length " +
                          std::to_string(F));
  }
  if (d > static_cast<std::size_t>(n - 1)) {
    throw InvalidArgument("pca_fit: d = " + std::to_string(d) + " exceeds sample count - 1");
  }
}

}  // namespace

PcaModel pca_fit(const Matrix& samples, std::size_t d, bool standardize) {
  check_dims(samples.rows(), samples.cols(), d);
  if (!samples.allFinite()) throw InvalidArgument("pca_fit: non-finite sample");
  Vector mean = samples.colwise().mean();
  Matrix centered = samples.rowwise() - mean.transpose();
  return fit_from_moments(std::move(mean), std::move(centered), Vector::Ones(samples.rows()),
                          static_cast<double>(samples.rows()), d, standardize);
}

PcaModel pca_fit_weighted(const Matrix& samples, const std::vector<std::size_t>& weights,
                          std::size_t d, bool standardize) {
  if (weights.size() != static_cast<std::size_t>(samples.rows())) {
    throw DimensionError("pca_fit_weighted: weight count differs from sample count");
  }
  std::vector<Eigen::Index> rows;
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0) {
      rows.push_back(static_cast<Eigen::Index>(i));
      total += static_cast<double>(weights[i]);
    }
  }
  check_dims(static_cast<Eigen::Index>(total), samples.cols(), d);
  Matrix sub(static_cast<Eigen::Index>(rows.size()), samples.cols());
  Vector w(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    sub.row(static_cast<Eigen::Index>(r)) = samples.row(rows[r]);
    w(static_cast<Eigen::Index>(r)) = static_cast<double>(weights[static_cast<std::size_t>(rows[r])]);
  }
  if (!sub.allFinite()) throw InvalidArgument("pca_fit: non-finite sample");
  Vector mean = (sub.array().colwise() * w.array()).colwise().sum().transpose() / total;
  Matrix centered = sub.rowwise() - mean.transpose();
  return fit_from_moments(std::move(mean), std::move(centered), w, total, d, standardize);
}

Vector pca_project(const PcaModel& model, const Vector& x) {
  if (x.size() != model.mean.size()) {
    throw DimensionError("pca_project: input length " + std::to_string(x.size()) +
                         " != model input length " + std::to_string(model.mean.size()));
  }
  const Vector z = (x - model.mean).cwiseQuotient(model.scale);
  return model.components.transpose() * z;
}

Matrix pca_project_rows(const PcaModel& model, const Matrix& samples) {
  if (samples.cols() != model.mean.size()) {
    throw DimensionError("pca_project: input width does not match model");
  }
  const Matrix z = (samples.rowwise() - model.mean.transpose()).array().rowwise() /
                   model.scale.transpose().array();
  return z * model.components;
}

}  // namespace stsg
