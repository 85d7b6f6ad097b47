#include "stsg/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "stsg/parallel.hpp"

namespace stsg {

namespace {

constexpr double kCenterFrequency = 0.75 * std::numbers::pi;
constexpr double kScaleTolerance = 1e-9;

double grid_frequency(std::size_t k, std::size_t n) {
  const double two_pi = 2.0 * std::numbers::pi;
  const auto kk = static_cast<double>(k);
  const auto nn = static_cast<double>(n);
  return 2 * k <= n ? two_pi * kk / nn : two_pi * (kk - nn) / nn;
}

// Frequency-domain width of the mother wavelet: adjacent wavelets of a
// Q-per-octave family cross at half maximum.
double mother_bandwidth(int q) {
  const double spacing = kCenterFrequency * (1.0 - std::exp2(-1.0 / q));
  return spacing / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
}

std::vector<double> morlet_hat(std::size_t n, double scale, int q) {
  const double xi = kCenterFrequency * std::exp2(-scale);
  const double s = mother_bandwidth(q) * std::exp2(-scale);
  const double inv = 1.0 / (2.0 * s * s);
  const double kappa = std::exp(-xi * xi * inv);
  std::vector<double> h(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = grid_frequency(k, n);
    h[k] = std::exp(-(w - xi) * (w - xi) * inv) - kappa * std::exp(-w * w * inv);
  }
  h[0] = 0.0;
  return h;
}

std::vector<double> frame_sum(const std::vector<std::vector<double>>& wavelets, std::size_t n) {
  std::vector<double> sum(n, 0.0);
  for (const auto& h : wavelets) {
    for (std::size_t k = 0; k < n; ++k) {
      const double neg = h[(n - k) % n];
      sum[k] += 0.5 * (h[k] * h[k] + neg * neg);
    }
  }
  return sum;
}

void filter(const FilterBank& fb, std::span<const Complex> spectrum, std::span<const double> hat,
            std::span<Complex> work, std::span<Complex> out) {
  for (std::size_t k = 0; k < spectrum.size(); ++k) work[k] = spectrum[k] * hat[k];
  fb.fft().inverse(work, out);
}

std::vector<double> modulus(std::span<const Complex> z) {
  std::vector<double> m(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) m[i] = std::abs(z[i]);
  return m;
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

void check_signal(std::span<const double> x, const FilterBank& fb) {
  if (x.size() != fb.length()) {
    throw DimensionError("scattering: signal length " + std::to_string(x.size()) +
                         " != filter bank length " + std::to_string(fb.length()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw InvalidArgument("scattering: non-finite input");
  }
}

void check_order(int max_order) {
  if (max_order < 0 || max_order > 2) {
    throw InvalidArgument("scattering: max order must be 0, 1 or 2");
  }
}

}  // namespace

std::string to_string(SecondOrderRule rule) {
  return rule == SecondOrderRule::increasing ? "increasing" : "decreasing";
}

SecondOrderRule parse_second_order_rule(const std::string& name) {
  if (name == "increasing") return SecondOrderRule::increasing;
  if (name == "decreasing") return SecondOrderRule::decreasing;
  throw InvalidArgument("unknown second-order rule '" + name + "'");
}

std::string ScatteringPath::label() const {
  if (scales.empty()) return "S0";
  std::ostringstream out;
  out << 'S' << scales.size() << '[';
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (i) out << ',';
    out << scales[i];
  }
  out << ']';
  return out.str();
}

FilterBank::FilterBank(std::size_t length, int max_log_scale, int q1, int q2, SecondOrderRule rule)
    : FilterBank(FilterBankParams{length, max_log_scale, q1, q2, rule}) {}

FilterBank::FilterBank(const FilterBankParams& params) : params_(params) {
  const std::size_t n = params.length;
  const int J = params.max_log_scale;
  if (n < 4) throw InvalidArgument("FilterBank: length must be at least 4");
  if (J < 1) throw InvalidArgument("FilterBank: J must be at least 1");
  if (J >= 63 || (std::size_t{1} << J) > n) {
    throw InvalidArgument("FilterBank: 2^J = 2^" + std::to_string(J) + " exceeds length " +
                          std::to_string(n));
  }
  if (params.q1 < 1 || params.q2 < 1) throw InvalidArgument("FilterBank: Q1, Q2 must be >= 1");

  const double s_phi = 0.5 * kCenterFrequency * std::exp2(-J);
  lowpass_hat_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = grid_frequency(k, n);
    lowpass_hat_[k] = std::exp(-w * w / (2.0 * s_phi * s_phi));
  }
  lowpass_hat_[0] = 1.0;

  const int qs[2] = {params.q1, params.q2};
  for (int layer = 0; layer < 2; ++layer) {
    const int q = qs[layer];
    for (int z = 0; z < J * q; ++z) {
      const double j = static_cast<double>(z) / q;
      scales_[layer].push_back(j);
      wavelets_[layer].push_back(morlet_hat(n, j, q));
    }
    // Largest c with |phi|^2 + c * frame_sum <= 1 everywhere.
    const auto sum = frame_sum(wavelets_[layer], n);
    double c = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      if (sum[k] > 1e-300) {
        const double room = std::max(0.0, 1.0 - lowpass_hat_[k] * lowpass_hat_[k]);
        c = std::min(c, room / sum[k]);
      }
    }
    const double gain = std::sqrt(c);
    for (auto& h : wavelets_[layer]) {
      for (auto& v : h) v *= gain;
    }
  }
  fft_ = std::make_shared<const Fft>(n);
}

const std::vector<double>& FilterBank::scales(int layer) const {
  if (layer != 1 && layer != 2) throw InvalidArgument("FilterBank: layer must be 1 or 2");
  return scales_[layer - 1];
}

std::span<const double> FilterBank::wavelet_hat(int layer, std::size_t index) const {
  if (layer != 1 && layer != 2) throw InvalidArgument("FilterBank: layer must be 1 or 2");
  return wavelets_[layer - 1].at(index);
}

std::vector<Complex> FilterBank::wavelet_time(int layer, std::size_t index) const {
  const auto hat = wavelet_hat(layer, index);
  std::vector<Complex> in(hat.begin(), hat.end()), out(length());
  fft_->inverse(in, out);
  return out;
}

std::vector<double> FilterBank::lowpass_time() const {
  std::vector<Complex> in(lowpass_hat_.begin(), lowpass_hat_.end()), out(length());
  fft_->inverse(in, out);
  std::vector<double> re(length());
  for (std::size_t i = 0; i < re.size(); ++i) re[i] = out[i].real();
  return re;
}

double FilterBank::littlewood_paley_max(int layer) const {
  if (layer != 1 && layer != 2) throw InvalidArgument("FilterBank: layer must be 1 or 2");
  const auto sum = frame_sum(wavelets_[layer - 1], length());
  double mx = 0.0;
  for (std::size_t k = 0; k < length(); ++k) {
    mx = std::max(mx, lowpass_hat_[k] * lowpass_hat_[k] + sum[k]);
  }
  return mx;
}

std::optional<std::size_t> FilterBank::find_scale(int layer, double scale) const {
  const auto& s = scales(layer);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (std::abs(s[i] - scale) < kScaleTolerance) return i;
  }
  return std::nullopt;
}

bool FilterBank::admissible(double j1, double j2) const {
  if (params_.rule == SecondOrderRule::increasing) return j2 > j1 + kScaleTolerance;
  return j2 < j1 - kScaleTolerance;
}

std::vector<ScatteringPath> FilterBank::paths(int max_order) const {
  check_order(max_order);
  std::vector<ScatteringPath> out;
  out.push_back({});
  if (max_order >= 1) {
    for (double j1 : scales_[0]) out.push_back({{j1}});
  }
  if (max_order >= 2) {
    for (double j1 : scales_[0]) {
      for (double j2 : scales_[1]) {
        if (admissible(j1, j2)) out.push_back({{j1, j2}});
      }
    }
  }
  return out;
}

std::vector<double> propagate(std::span<const double> x, const ScatteringPath& path,
                              const FilterBank& fb) {
  check_signal(x, fb);
  if (path.order() > 2) throw InvalidArgument("propagate: paths longer than 2 are not supported");
  std::vector<std::size_t> idx;
  for (std::size_t m = 0; m < path.order(); ++m) {
    const int layer = m == 0 ? 1 : 2;
    const auto found = fb.find_scale(layer, path.scales[m]);
    if (!found) {
      throw InvalidArgument("propagate: scale " + std::to_string(path.scales[m]) +
                            " is not in layer " + std::to_string(layer) + " of the filter bank");
    }
    if (m > 0 && !fb.admissible(path.scales[m - 1], path.scales[m])) {
      throw InvalidArgument("propagate: path " + path.label() + " violates the second-order rule");
    }
    idx.push_back(*found);
  }
  std::vector<double> u(x.begin(), x.end());
  if (idx.empty()) return u;

  const std::size_t n = fb.length();
  std::vector<Complex> spectrum(n), work(n), out(n);
  for (std::size_t m = 0; m < idx.size(); ++m) {
    std::vector<Complex> in(u.begin(), u.end());
    fb.fft().forward(in, spectrum);
    filter(fb, spectrum, fb.wavelet_hat(m == 0 ? 1 : 2, idx[m]), work, out);
    u = modulus(out);
  }
  return u;
}

ScatteringOutput windowed_scattering(std::span<const double> x, const FilterBank& fb,
                                     int max_order) {
  check_signal(x, fb);
  ScatteringOutput result;
  result.paths = fb.paths(max_order);
  const std::size_t n = fb.length();
  result.series.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(result.paths.size()));
  std::vector<Complex> in(n), spectrum(n), work(n), out(n);
  for (std::size_t p = 0; p < result.paths.size(); ++p) {
    const auto u = propagate(x, result.paths[p], fb);
    std::copy(u.begin(), u.end(), in.begin());
    fb.fft().forward(in, spectrum);
    filter(fb, spectrum, fb.lowpass_hat(), work, out);
    for (std::size_t t = 0; t < n; ++t) {
      result.series(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(p)) = out[t].real();
    }
  }
  return result;
}

Vector scattering_moments(std::span<const double> x, const FilterBank& fb, int max_order) {
  check_signal(x, fb);
  check_order(max_order);
  const std::size_t n = fb.length();
  const auto& l1 = fb.scales(1);
  const auto& l2 = fb.scales(2);

  std::vector<double> values;
  values.push_back(mean(x));
  if (max_order == 0) return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));

  std::vector<Complex> in(x.begin(), x.end()), spectrum(n), work(n), out(n);
  fb.fft().forward(in, spectrum);

  // Order-1 moduli are kept in frequency form for the second layer.
  std::vector<std::vector<Complex>> first_spectra;
  for (std::size_t i = 0; i < l1.size(); ++i) {
    filter(fb, spectrum, fb.wavelet_hat(1, i), work, out);
    const auto u = modulus(out);
    values.push_back(mean(u));
    if (max_order >= 2) {
      std::vector<Complex> uc(u.begin(), u.end()), uh(n);
      fb.fft().forward(uc, uh);
      first_spectra.push_back(std::move(uh));
    }
  }
  if (max_order >= 2) {
    for (std::size_t i = 0; i < l1.size(); ++i) {
      for (std::size_t k = 0; k < l2.size(); ++k) {
        if (!fb.admissible(l1[i], l2[k])) continue;
        filter(fb, first_spectra[i], fb.wavelet_hat(2, k), work, out);
        values.push_back(mean(modulus(out)));
      }
    }
  }
  return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Matrix scattering_moments_batch(const Matrix& signals, const FilterBank& fb, int max_order,
                                std::size_t threads) {
  const auto rows = static_cast<Eigen::Index>(fb.paths(max_order).size());
  Matrix out(rows, signals.cols());
  parallel_for(static_cast<std::size_t>(signals.cols()), threads, [&](std::size_t c) {
    const auto ci = static_cast<Eigen::Index>(c);
    std::vector<double> col(signals.col(ci).data(), signals.col(ci).data() + signals.rows());
    out.col(ci) = scattering_moments(col, fb, max_order);
  });
  return out;
}

double max_gradient(std::span<const double> tau) {
  double g = 0.0;
  for (std::size_t t = 0; t < tau.size(); ++t) {
    g = std::max(g, std::abs(tau[(t + 1) % tau.size()] - tau[t]));
  }
  return g;
}

std::vector<double> warp(std::span<const double> x, std::span<const double> tau) {
  if (x.size() != tau.size()) throw DimensionError("warp: signal and displacement lengths differ");
  if (x.empty()) return {};
  for (double v : tau) {
    if (!std::isfinite(v)) throw InvalidArgument("warp: non-finite displacement");
  }
  if (max_gradient(tau) >= 1.0) {
    throw InvalidArgument("warp: |grad tau|_inf must be < 1");
  }
  const auto n = static_cast<double>(x.size());
  std::vector<double> y(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    double s = std::fmod(static_cast<double>(t) - tau[t], n);
    if (s < 0) s += n;
    const double fl = std::floor(s);
    const double frac = s - fl;
    const auto i0 = static_cast<std::size_t>(fl) % x.size();
    const auto i1 = (i0 + 1) % x.size();
    y[t] = (1.0 - frac) * x[i0] + frac * x[i1];
  }
  return y;
}

double deformation_ratio(std::span<const double> x, std::span<const double> tau,
                         const FilterBank& fb, int max_order) {
  const auto warped = warp(x, tau);
  const Vector a = scattering_moments(x, fb, max_order);
  const Vector b = scattering_moments(warped, fb, max_order);
  double sup = 0.0;
  for (double v : tau) sup = std::max(sup, std::abs(v));
  const double denom = std::exp2(-fb.max_log_scale()) * sup + max_gradient(tau);
  if (denom == 0.0) throw InvalidArgument("deformation_ratio: tau is identically zero");
  return (a - b).norm() / denom;
}

}  // namespace stsg
