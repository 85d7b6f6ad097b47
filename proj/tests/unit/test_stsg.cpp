#include <algorithm>
#include <random>

#include "doctest.h"
#include "../support/oracles.hpp"

#include "stsg/stsg.hpp"

using namespace stsg;

namespace {

Matrix random_recording(std::size_t T, std::size_t N, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(N));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(gen);
  return m;
}

StsgConfig config_for(const SensorGraph& g, int levels, int J = 4, int q1 = 2,
                      OverlapPolicy overlap = OverlapPolicy::none) {
  DecompositionOptions opt;
  opt.overlap = overlap;
  StsgConfig cfg;
  cfg.decomposition = std::make_shared<FolderDecomposition>(build_decomposition(g, levels, opt));
  cfg.max_log_scale = J;
  cfg.q1 = q1;
  return cfg;
}

}  // namespace

TEST_CASE("single vertex passes through") {
  const auto cfg = config_for(SensorGraph::path(1), 0);
  const Matrix x = random_recording(64, 1, 1);
  const auto f = stsg_moments(x, cfg);
  const FilterBank fb(cfg.bank(64));
  const Vector plain = scattering_moments(std::span<const double>(x.data(), 64), fb);
  CHECK(f.values == plain);
}

TEST_CASE("composition oracle") {
  const auto cfg = config_for(SensorGraph::path(4), 2);
  const FilterBank fb(cfg.bank(64));
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Matrix x = random_recording(64, 4, 40 + s);
    const auto f = stsg_moments(x, cfg);
    const auto layout = haar_channel_layout(*cfg.decomposition);
    const Matrix channels = oracle::haar_brute_force(*cfg.decomposition, layout, x);
    std::vector<double> want;
    for (Eigen::Index c = 0; c < channels.cols(); ++c) {
      const Vector m = scattering_moments(std::span<const double>(channels.col(c).data(), 64), fb);
      want.insert(want.end(), m.data(), m.data() + m.size());
    }
    const Vector w = Eigen::Map<const Vector>(want.data(), static_cast<Eigen::Index>(want.size()));
    CHECK(oracle::relative_error(f.values, w) <= 1e-10);
    CHECK(f.layout.size() == static_cast<std::size_t>(f.values.size()));
  }
}

TEST_CASE("constant recording and time shift") {
  const auto cfg = config_for(SensorGraph::path(8), 3, 5, 2);
  Matrix c(64, 8);
  for (Eigen::Index v = 0; v < 8; ++v) c.col(v).setConstant(static_cast<double>(v + 1));
  const auto f = stsg_moments(c, cfg);
  const FilterBank fb(cfg.bank(64));
  const auto P = static_cast<Eigen::Index>(fb.paths(2).size());
  const auto channels = haar_analyze_series(*cfg.decomposition, c).values;
  for (Eigen::Index ch = 0; ch < channels.cols(); ++ch) {
    CHECK(f.values(ch * P) == doctest::Approx(channels(0, ch)).epsilon(1e-12));
    CHECK(f.values.segment(ch * P + 1, P - 1).cwiseAbs().maxCoeff() <= 1e-8 * 36.0);
  }

  const Matrix x = random_recording(64, 8, 5);
  Matrix shifted(64, 8);
  for (Eigen::Index t = 0; t < 64; ++t) shifted.row((t + 11) % 64) = x.row(t);
  CHECK((stsg_moments(shifted, cfg).values - stsg_moments(x, cfg).values).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("permutation covariance") {
  const auto g = SensorGraph::path(8);
  const auto cfg = config_for(g, 3);
  std::vector<std::size_t> perm{6, 2, 0, 7, 1, 4, 3, 5};
  StsgConfig moved = cfg;
  moved.decomposition = std::make_shared<FolderDecomposition>(cfg.decomposition->relabeled(perm));
  const Matrix x = random_recording(64, 8, 6);
  Matrix px(64, 8);
  for (std::size_t v = 0; v < 8; ++v) px.col(static_cast<Eigen::Index>(perm[v])) = x.col(static_cast<Eigen::Index>(v));
  Vector a = stsg_moments(x, cfg).values, b = stsg_moments(px, moved).values;
  std::sort(a.data(), a.data() + a.size());
  std::sort(b.data(), b.data() + b.size());
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("overlap lengthens the feature vector") {
  const auto g = SensorGraph::path(8);
  const auto plain = config_for(g, 3);
  const auto overlap = config_for(g, 3, 4, 2, OverlapPolicy::center);
  const Matrix x = random_recording(64, 8, 2);
  CHECK(stsg_moments(x, overlap).values.size() >= stsg_moments(x, plain).values.size());
}

TEST_CASE("batch matches single extraction") {
  auto cfg = config_for(SensorGraph::path(4), 2);
  cfg.threads = 3;
  std::vector<Matrix> recs;
  for (std::uint64_t s = 0; s < 6; ++s) recs.push_back(random_recording(64, 4, 70 + s));
  FeatureLayout layout;
  const Matrix batch = stsg_moments_batch(recs, cfg, &layout);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto f = stsg_moments(recs[i], cfg);
    CHECK(batch.row(static_cast<Eigen::Index>(i)).transpose() == f.values);
    CHECK(layout == f.layout);
  }
}

TEST_CASE("errors") {
  const auto cfg = config_for(SensorGraph::path(4), 2, 6);
  CHECK_THROWS_AS(stsg_moments(random_recording(64, 3, 1), cfg), DimensionError);
  CHECK_THROWS_AS(stsg_moments(random_recording(32, 4, 1), cfg), InvalidArgument);
  CHECK_THROWS_AS(stsg_moments(random_recording(64, 4, 1), StsgConfig{}), InvalidArgument);
}

TEST_CASE("assemble features") {
  FeatureVector m;
  m.values = Vector::LinSpaced(6, 1.0, 6.0);
  m.layout.blocks = {{"moments", 6}};
  const auto both = assemble_features(m, true, true, StaticFeatures{5.0, 3900, 1000}, LocationFeatures{0.98, 0.26});
  CHECK(both.values.size() == 11);
  CHECK(both.layout.summary() == "moments=6 static=3 location=2");
  CHECK(both.values(9) == 0.98);
  const auto none = assemble_features(m, false, false);
  CHECK(none.values == m.values);
  CHECK(none.layout == m.layout);
  const auto st = assemble_features(m, true, false, StaticFeatures{5.0, 3900, 1000});
  CHECK(st.values.tail(3) == Eigen::Vector3d(5.0, 3900, 1000));
  CHECK(st.layout.offset("static") == 6);
  CHECK_THROWS_AS(assemble_features(m, true, false), InvalidArgument);
  CHECK_THROWS_AS(assemble_features(m, false, true), InvalidArgument);
}
