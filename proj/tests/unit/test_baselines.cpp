#include <numbers>
#include <random>

#include "doctest.h"
#include "../support/oracles.hpp"

#include "stsg/baselines.hpp"

using namespace stsg;

namespace {

Matrix random_recording(std::size_t T, std::size_t N, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(N));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(gen);
  return m;
}

// Uniform frame average of |DFT(w * frame)|^2 with circular framing.
std::vector<double> stft_oracle(const std::vector<double>& x, const std::vector<double>& w, std::size_t hop) {
  const std::size_t T = x.size(), W = w.size();
  const std::size_t frames = (T + hop - 1) / hop;
  std::vector<double> power(W, 0.0);
  for (std::size_t f = 0; f < frames; ++f) {
    std::vector<oracle::cd> seg(W);
    for (std::size_t i = 0; i < W; ++i) seg[i] = w[i] * x[(f * hop + i) % T];
    const auto X = oracle::dft(seg);
    for (std::size_t k = 0; k < W; ++k) power[k] += std::norm(X[k]) / static_cast<double>(frames);
  }
  return power;
}

}  // namespace

TEST_CASE("hann window") {
  const auto w = hann_window(8);
  CHECK(w[0] == 0.0);
  CHECK(w[4] == doctest::Approx(1.0));
  CHECK(w[2] == doctest::Approx(0.5));
  const auto cfg = StftConfig::hann(64);
  CHECK(cfg.hop == 32);
  CHECK(cfg.effective_bins().size() == 33);
}

TEST_CASE("stft matches a direct dft") {
  const Matrix x = random_recording(100, 3, 2);
  const auto cfg = StftConfig::hann(16);
  const auto f = stft_features(x, cfg);
  REQUIRE(f.values.size() == 3 * 9);
  CHECK(f.layout.summary() == "stft=27");
  for (Eigen::Index c = 0; c < 3; ++c) {
    std::vector<double> col(x.col(c).data(), x.col(c).data() + 100);
    const auto want = stft_oracle(col, cfg.window, cfg.hop);
    for (Eigen::Index k = 0; k < 9; ++k) CHECK(f.values(c * 9 + k) == doctest::Approx(want[static_cast<std::size_t>(k)]).epsilon(1e-10));
  }
}

TEST_CASE("stft of a constant and of a cosine") {
  Matrix c = Matrix::Constant(64, 1, 2.0);
  const auto rect = StftConfig::rectangular(16, 8);
  const auto fc = stft_features(c, rect);
  CHECK(fc.values(0) == doctest::Approx(4.0 * 16.0 * 16.0));
  CHECK(fc.values.tail(fc.values.size() - 1).cwiseAbs().maxCoeff() <= 1e-8 * fc.values(0));

  Matrix cosine(128, 1);
  for (Eigen::Index t = 0; t < 128; ++t) cosine(t, 0) = std::cos(2.0 * std::numbers::pi * 5.0 * static_cast<double>(t) / 32.0);
  const auto fcos = stft_features(cosine, StftConfig::hann(32));
  Eigen::Index best = 0;
  fcos.values.maxCoeff(&best);
  CHECK(best == 5);
}

TEST_CASE("parseval over the full grid") {
  const Matrix x = random_recording(48, 2, 9);
  StftConfig cfg = StftConfig::rectangular(48, 48);
  for (std::size_t k = 0; k < 48; ++k) cfg.bins.push_back(k);
  const auto f = stft_features(x, cfg);
  for (Eigen::Index c = 0; c < 2; ++c) {
    CHECK(f.values.segment(c * 48, 48).sum() == doctest::Approx(48.0 * x.col(c).squaredNorm()).epsilon(1e-10));
  }
}

TEST_CASE("hop-multiple shifts leave stft unchanged") {
  const Matrix x = random_recording(96, 2, 3);
  const auto cfg = StftConfig::rectangular(16, 8);
  Matrix shifted(96, 2);
  for (Eigen::Index t = 0; t < 96; ++t) shifted.row((t + 24) % 96) = x.row(t);
  CHECK((stft_features(shifted, cfg).values - stft_features(x, cfg).values).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("smoothing kernel") {
  const Matrix x = random_recording(64, 1, 4);
  StftConfig cfg = StftConfig::hann(16);
  const auto plain = stft_features(x, cfg);
  cfg.smoothing = {0.25, 0.5, 0.25};
  CHECK((stft_features(x, cfg).values - plain.values).cwiseAbs().maxCoeff() <= 1e-10 * plain.values.maxCoeff());
  cfg.smoothing = {0.5, 0.4};
  CHECK_THROWS_AS(stft_features(x, cfg), InvalidArgument);
  StftConfig bad = StftConfig::hann(16);
  bad.bins = {16};
  CHECK_THROWS_AS(stft_features(x, bad), InvalidArgument);
  CHECK_THROWS_AS(stft_features(random_recording(8, 1, 1), StftConfig::hann(16)), DimensionError);
}

TEST_CASE("statistical moments") {
  Matrix m(2, 2);
  m << 0.0, 3.0, 2.0, 3.0;
  const auto f = moment_features(m);
  CHECK(f.values(0) == 1.0);
  CHECK(f.values(1) == 2.0);
  CHECK(f.values(2) == 3.0);
  CHECK(f.values(3) == 0.0);
  CHECK(f.layout.summary() == "stats=4");

  const Matrix x = random_recording(100, 8, 5);
  const auto got = moment_features(x);
  const auto want = oracle::two_pass_moments(x);
  for (std::size_t i = 0; i < want.size(); ++i) CHECK(std::abs(got.values(static_cast<Eigen::Index>(i)) - want[i]) <= 1e-12 * std::max(1.0, std::abs(want[i])));

  Matrix reversed = x.colwise().reverse();
  CHECK((moment_features(reversed).values - got.values).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK_THROWS_AS(moment_features(Matrix::Zero(1, 3)), DimensionError);
}
