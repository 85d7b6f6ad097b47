#include "stsg/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "stsg/fft.hpp"

namespace stsg {

std::vector<double> hann_window(std::size_t length) {
  std::vector<double> w(length);
  for (std::size_t i = 0; i < length; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(length));
  }
  return w;
}

StftConfig StftConfig::hann(std::size_t window_length) {
  StftConfig c;
  c.window = hann_window(window_length);
  c.hop = std::max<std::size_t>(window_length / 2, 1);
  return c;
}

StftConfig StftConfig::rectangular(std::size_t window_length, std::size_t hop) {
  StftConfig c;
  c.window.assign(window_length, 1.0);
  c.hop = hop;
  return c;
}

std::vector<std::size_t> StftConfig::effective_bins() const {
  if (!bins.empty()) return bins;
  std::vector<std::size_t> b(window.size() / 2 + 1);
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = i;
  return b;
}

void StftConfig::validate() const {
  if (window.empty()) throw InvalidArgument("stft: empty window");
  if (hop < 1) throw InvalidArgument("stft: hop must be >= 1");
  for (auto b : bins) {
    if (b >= window.size()) throw InvalidArgument("stft: frequency bin outside the DFT grid");
  }
  if (!smoothing.empty()) {
    double s = 0.0;
    for (double v : smoothing) s += v;
    if (std::abs(s - 1.0) > 1e-8) throw InvalidArgument("stft: smoothing kernel must sum to 1");
  }
}

FeatureVector stft_features(const Matrix& recording, const StftConfig& cfg) {
  cfg.validate();
  const auto T = static_cast<std::size_t>(recording.rows());
  const std::size_t W = cfg.window.size();
  if (T < W) {
    throw DimensionError("stft: recording length " + std::to_string(T) + " shorter than window " +
                         std::to_string(W));
  }
  const auto bins = cfg.effective_bins();
  const std::size_t frames = (T + cfg.hop - 1) / cfg.hop;
  const auto N = static_cast<std::size_t>(recording.cols());
  const Fft fft(W);

  FeatureVector out;
  out.values.resize(static_cast<Eigen::Index>(N * bins.size()));
  std::vector<Complex> buf(W), spec(W);
  Matrix power(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(bins.size()));
  for (std::size_t c = 0; c < N; ++c) {
    for (std::size_t f = 0; f < frames; ++f) {
      for (std::size_t i = 0; i < W; ++i) {
        buf[i] = cfg.window[i] * recording(static_cast<Eigen::Index>((f * cfg.hop + i) % T),
                                           static_cast<Eigen::Index>(c));
      }
      fft.forward(buf, spec);
      for (std::size_t b = 0; b < bins.size(); ++b) {
        power(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(b)) = std::norm(spec[bins[b]]);
      }
    }
    if (!cfg.smoothing.empty()) {
      Matrix smoothed = Matrix::Zero(power.rows(), power.cols());
      for (std::size_t f = 0; f < frames; ++f) {
        for (std::size_t k = 0; k < cfg.smoothing.size(); ++k) {
          smoothed.row(static_cast<Eigen::Index>(f)) +=
              cfg.smoothing[k] * power.row(static_cast<Eigen::Index>((f + frames - k % frames) % frames));
        }
      }
      power.swap(smoothed);
    }
    const Vector mean = power.colwise().mean().transpose();
    out.values.segment(static_cast<Eigen::Index>(c * bins.size()), static_cast<Eigen::Index>(bins.size())) = mean;
  }
  out.layout.blocks.push_back({"stft", static_cast<std::size_t>(out.values.size())});
  std::ostringstream d;
  d << "stft window " << W << " hop " << cfg.hop << " frames " << frames << " bins " << bins.size();
  out.layout.description = {"order channel-major bin-minor", d.str()};
  return out;
}

FeatureVector moment_features(const Matrix& recording) {
  const auto T = recording.rows();
  if (T < 2) throw DimensionError("moment_features: need at least 2 samples");
  FeatureVector out;
  out.values.resize(2 * recording.cols());
  for (Eigen::Index c = 0; c < recording.cols(); ++c) {
    const double mean = recording.col(c).mean();
    const double var = (recording.col(c).array() - mean).square().sum() / static_cast<double>(T - 1);
    out.values(2 * c) = mean;
    out.values(2 * c + 1) = var;
  }
  out.layout.blocks.push_back({"stats", static_cast<std::size_t>(out.values.size())});
  out.layout.description = {"order channel-major (mean, variance)"};
  return out;
}

}  // namespace stsg
