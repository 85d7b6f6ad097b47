#pragma once

#include <cstddef>
#include <vector>

#include "stsg/common.hpp"
#include "stsg/stsg.hpp"

namespace stsg {

/// Short-time power-spectrum configuration. Frames start every `hop`
/// samples and wrap around the end of the recording, giving ceil(T/hop)
/// frames. `smoothing` is a normalized kernel applied circularly across
/// frames; empty means a uniform average over all frames. `bins` are DFT
/// indices in [0, W); empty means the W/2+1 nonnegative bins.
struct StftConfig {
  std::vector<double> window;
  std::size_t hop = 32;
  std::vector<double> smoothing;
  std::vector<std::size_t> bins;

  /// Hann window of length W, hop W/2.
  static StftConfig hann(std::size_t window_length = 64);
  /// Rectangular (all-ones) window of length W.
  static StftConfig rectangular(std::size_t window_length, std::size_t hop);

  std::vector<std::size_t> effective_bins() const;
  void validate() const;
};

/// Periodic Hann taper.
std::vector<double> hann_window(std::size_t length);

/// Per channel and bin, the time average of the smoothed squared modulus of
/// the unnormalized windowed DFT. Channel-major, bin-minor.
FeatureVector stft_features(const Matrix& recording, const StftConfig& cfg);

/// Per channel, (mean, unbiased variance). Length 2N.
FeatureVector moment_features(const Matrix& recording);

}  // namespace stsg
