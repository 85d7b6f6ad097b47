#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stsg/common.hpp"
#include "stsg/fft.hpp"

namespace stsg {

/// Which second-layer scales follow a first-layer scale j1.
///   increasing: j1 < j2 (the propagator's ordering; default)
///   decreasing: j2 < j1 (the moment scale-set convention)
enum class SecondOrderRule { increasing, decreasing };

std::string to_string(SecondOrderRule rule);
SecondOrderRule parse_second_order_rule(const std::string& name);

struct FilterBankParams {
  std::size_t length = 0;   // T
  int max_log_scale = 6;    // J
  int q1 = 8;               // first-layer wavelets per octave
  int q2 = 1;               // second-layer wavelets per octave
  SecondOrderRule rule = SecondOrderRule::increasing;
};

/// Scale sequence (j1 < ... < jm under the increasing rule). Empty = order 0.
struct ScatteringPath {
  std::vector<double> scales;

  std::size_t order() const { return scales.size(); }
  std::string label() const;
  friend bool operator==(const ScatteringPath&, const ScatteringPath&) = default;
};

/// Sampled analytic Morlet wavelets and a Gaussian low-pass, stored as real
/// frequency responses on the T-point DFT grid for circular convolution.
///
/// Scales are j = z/Q for z = 0 .. J*Q - 1 (dilation 2^j). The mother wavelet
/// has center frequency 3*pi/4; each layer's wavelets are rescaled so that
///   |phi_hat(w)|^2 + 1/2 sum_j (|psi_hat_j(w)|^2 + |psi_hat_j(-w)|^2) <= 1
/// on the whole grid. psi_hat_j(0) = 0 and phi_hat(0) = 1 hold exactly.
class FilterBank {
 public:
  explicit FilterBank(const FilterBankParams& params);
  FilterBank(std::size_t length, int max_log_scale, int q1 = 8, int q2 = 1,
             SecondOrderRule rule = SecondOrderRule::increasing);

  const FilterBankParams& params() const { return params_; }
  std::size_t length() const { return params_.length; }
  int max_log_scale() const { return params_.max_log_scale; }

  /// Layer is 1 or 2.
  const std::vector<double>& scales(int layer) const;
  std::span<const double> wavelet_hat(int layer, std::size_t index) const;
  std::span<const double> lowpass_hat() const { return lowpass_hat_; }

  std::vector<Complex> wavelet_time(int layer, std::size_t index) const;
  std::vector<double> lowpass_time() const;

  /// Frame function max over the frequency grid for one layer.
  double littlewood_paley_max(int layer) const;

  std::optional<std::size_t> find_scale(int layer, double scale) const;

  /// Whether (j1, j2) is an emitted second-order path under the bank's rule.
  bool admissible(double j1, double j2) const;

  /// Moment/output layout: order 0, order 1 ascending j1, order 2
  /// lexicographic in (j1, j2).
  std::vector<ScatteringPath> paths(int max_order) const;

  const Fft& fft() const { return *fft_; }

 private:
  FilterBankParams params_;
  std::vector<double> scales_[2];
  std::vector<std::vector<double>> wavelets_[2];
  std::vector<double> lowpass_hat_;
  std::shared_ptr<const Fft> fft_;
};

/// U_m[p]X = | ... ||X * psi_j1| * psi_j2| ... * psi_jm |, circular.
std::vector<double> propagate(std::span<const double> x, const ScatteringPath& path,
                              const FilterBank& fb);

struct ScatteringOutput {
  std::vector<ScatteringPath> paths;
  Matrix series;  // T x paths.size(); column p is S_{m,J}[p]X
};

/// Windowed scattering S_{m,J}[p]X = U[p]X * phi_J for every path up to
/// order `max_order` (0, 1 or 2), including order 0 = X * phi_J.
ScatteringOutput windowed_scattering(std::span<const double> x, const FilterBank& fb,
                                     int max_order = 2);

/// Time averages (1/T) sum_t U_m[p]X(t) in the layout of fb.paths(max_order).
/// The order-0 entry is the mean of X.
Vector scattering_moments(std::span<const double> x, const FilterBank& fb, int max_order = 2);

/// Moments of every column of `signals` (T x C); returns paths x C.
/// Columns are independent and may be processed on `threads` workers.
Matrix scattering_moments_batch(const Matrix& signals, const FilterBank& fb, int max_order = 2,
                                std::size_t threads = 1);

/// D_tau X(t) = X(t - tau(t)) by linear interpolation on the circle.
/// Requires max_t |tau(t+1) - tau(t)| < 1 (circular forward difference).
std::vector<double> warp(std::span<const double> x, std::span<const double> tau);

/// sup_t |tau(t+1) - tau(t)| with circular wrap.
double max_gradient(std::span<const double> tau);

/// ||moments(D_tau X) - moments(X)|| / (2^-J |tau|_inf + |grad tau|_inf).
double deformation_ratio(std::span<const double> x, std::span<const double> tau,
                         const FilterBank& fb, int max_order = 2);

}  // namespace stsg
