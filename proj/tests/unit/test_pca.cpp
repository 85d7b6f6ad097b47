#include <random>

#include "doctest.h"
#include "../support/oracles.hpp"

#include "stsg/pca.hpp"

using namespace stsg;

namespace {

Matrix gaussian(std::size_t n, std::size_t F, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(F));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(gen);
  return m;
}

// Mixes coordinates so the covariance has a spread-out spectrum.
Matrix correlated(std::size_t n, std::size_t F, std::uint64_t seed) {
  Matrix mix = gaussian(F, F, seed + 1);
  for (Eigen::Index j = 0; j < mix.cols(); ++j) mix.col(j) *= 1.0 + static_cast<double>(j);
  return gaussian(n, F, seed) * mix;
}

void check_against_jacobi(const PcaModel& model, const Matrix& x, std::size_t d) {
  const auto [values, vectors] = oracle::jacobi_eigen(oracle::sample_covariance(x));
  for (std::size_t k = 0; k < d; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    CHECK(model.variances(kk) == doctest::Approx(values(kk)).epsilon(1e-9));
    const double align = std::abs(model.components.col(kk).dot(vectors.col(kk)));
    CHECK(align == doctest::Approx(1.0).epsilon(1e-8));
  }
}

}  // namespace

TEST_CASE("matches an independent eigensolver") {
  const Matrix x = correlated(20, 6, 3);
  const auto model = pca_fit(x, 3);
  check_against_jacobi(model, x, 3);
  const Matrix gram = model.components.transpose() * model.components;
  CHECK((gram - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-8);
  for (Eigen::Index k = 0; k + 1 < 3; ++k) CHECK(model.variances(k) >= model.variances(k + 1));
  for (Eigen::Index k = 0; k < 3; ++k) {
    for (Eigen::Index i = 0; i < 6; ++i) {
      if (std::abs(model.components(i, k)) > 1e-12) {
        CHECK(model.components(i, k) > 0);
        break;
      }
    }
  }
}

TEST_CASE("wide data takes the small eigenproblem") {
  const Matrix x = correlated(12, 40, 8);
  const auto model = pca_fit(x, 5);
  check_against_jacobi(model, x, 5);
}

TEST_CASE("more components than distinct rows") {
  const Matrix x = gaussian(6, 300, 4);
  std::vector<std::size_t> w{3, 0, 2, 1, 0, 4};  // 4 distinct rows: rank 3 after centering
  const auto m = pca_fit_weighted(x, w, 8);
  CHECK(m.degenerate);
  const Matrix gram = m.components.transpose() * m.components;
  CHECK((gram - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() <= 1e-12);
  for (Eigen::Index k = 0; k < 3; ++k) CHECK(m.variances(k) > 0.0);
  for (Eigen::Index k = 3; k < 8; ++k) CHECK(m.variances(k) == 0.0);

  // Expanded sample through the oracle: same leading spectrum.
  Matrix expanded(10, 300);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t c = 0; c < w[i]; ++c) expanded.row(r++) = x.row(static_cast<Eigen::Index>(i));
  const Matrix cov = oracle::sample_covariance(expanded);
  for (Eigen::Index k = 0; k < 3; ++k) {
    const Vector v = m.components.col(k);
    CHECK(v.dot(cov * v) == doctest::Approx(m.variances(k)).epsilon(1e-9));
    CHECK((cov * v - m.variances(k) * v).norm() <= 1e-9 * m.variances(0));
  }
}

TEST_CASE("weighted fit equals the expanded sample") {
  const Matrix x = correlated(10, 15, 4);
  const std::vector<std::size_t> w{0, 2, 1, 0, 3, 1, 1, 0, 2, 1};
  std::vector<Eigen::Index> rows;
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t k = 0; k < w[i]; ++k) rows.push_back(static_cast<Eigen::Index>(i));
  Matrix expanded(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) expanded.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);
  for (bool standardize : {false, true}) {
    const auto a = pca_fit_weighted(x, w, 4, standardize);
    const auto b = pca_fit(expanded, 4, standardize);
    CHECK((a.mean - b.mean).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((a.scale - b.scale).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((a.variances - b.variances).cwiseAbs().maxCoeff() <= 1e-9 * b.variances(0));
    CHECK((a.components - b.components).cwiseAbs().maxCoeff() <= 1e-7);
  }
}

TEST_CASE("line and isotropic clouds") {
  Matrix line(30, 3);
  for (Eigen::Index i = 0; i < 30; ++i) line.row(i) = static_cast<double>(i - 15) * Eigen::RowVector3d(1, 2, -2);
  const auto m = pca_fit(line, 1);
  CHECK(std::abs(m.components.col(0).dot(Eigen::Vector3d(1, 2, -2) / 3.0)) == doctest::Approx(1.0).epsilon(1e-12));
  const double total = oracle::sample_covariance(line).trace();
  CHECK(m.variances(0) == doctest::Approx(total).epsilon(1e-12));

  const auto iso = pca_fit(gaussian(20000, 4, 5), 2);
  CHECK(iso.variances(1) / iso.variances(0) > 0.95);
}

TEST_CASE("projection") {
  const Matrix x = correlated(50, 5, 6);
  const auto m = pca_fit(x, 3);
  CHECK(pca_project(m, m.mean).cwiseAbs().maxCoeff() == 0.0);
  const Vector e0 = pca_project(m, m.mean + m.components.col(0));
  CHECK(e0(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(e0(1)) <= 1e-12);
  const Vector r = x.row(7).transpose();
  const Vector want = m.components.transpose() * (r - m.mean);
  CHECK((pca_project(m, r) - want).cwiseAbs().maxCoeff() <= 1e-12);
  const Matrix rows = pca_project_rows(m, x);
  CHECK((rows.row(7).transpose() - want).cwiseAbs().maxCoeff() <= 1e-12);

  const Matrix cov = oracle::sample_covariance(rows);
  for (Eigen::Index a = 0; a < 3; ++a)
    for (Eigen::Index b = 0; b < 3; ++b)
      if (a != b) CHECK(std::abs(cov(a, b)) <= 1e-8 * cov(0, 0));

  double prev = 1e300;
  for (std::size_t d = 1; d <= 5; ++d) {
    const auto md = pca_fit(x, std::min<std::size_t>(d, 5));
    const Matrix z = pca_project_rows(md, x);
    const Matrix back = (z * md.components.transpose()).rowwise() + md.mean.transpose();
    const double err = (back - x).squaredNorm();
    CHECK(err <= prev + 1e-9);
    prev = err;
  }
  CHECK(prev <= 1e-18 * x.squaredNorm() + 1e-12);
  CHECK_THROWS_AS(pca_project(m, Vector::Zero(4)), DimensionError);
}

TEST_CASE("degenerate and invalid inputs") {
  const Matrix same = Matrix::Constant(5, 3, 2.0);
  const auto m = pca_fit(same, 2);
  CHECK(m.degenerate);
  CHECK(m.variances.cwiseAbs().maxCoeff() <= 1e-20);
  CHECK_FALSE(pca_fit(correlated(10, 3, 1), 2).degenerate);
  CHECK_THROWS_AS(pca_fit(gaussian(5, 3, 1), 4), InvalidArgument);
  CHECK_THROWS_AS(pca_fit(gaussian(3, 6, 1), 3), InvalidArgument);
  CHECK_THROWS_AS(pca_fit(gaussian(1, 3, 1), 1), InvalidArgument);
  CHECK_THROWS_AS(pca_fit(gaussian(5, 3, 1), 0), InvalidArgument);
}
