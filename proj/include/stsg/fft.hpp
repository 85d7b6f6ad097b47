#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace stsg {

using Complex = std::complex<double>;

/// Unnormalized complex DFT of a fixed length backed by FFTW plans.
/// forward: X[k] = sum_t x[t] e^{-2 pi i k t / n}
/// inverse: x[t] = (1/n) sum_k X[k] e^{+2 pi i k t / n}
/// Plans are created once; transforms may run concurrently from any thread.
class Fft {
 public:
  explicit Fft(std::size_t n);
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;
  Fft(Fft&&) noexcept;
  Fft& operator=(Fft&&) noexcept;

  std::size_t size() const { return n_; }

  void forward(std::span<const Complex> in, std::span<Complex> out) const;
  /// Includes the 1/n factor.
  void inverse(std::span<const Complex> in, std::span<Complex> out) const;

  std::vector<Complex> forward(std::span<const double> real_in) const;

 private:
  struct Plans;
  std::size_t n_ = 0;
  std::unique_ptr<Plans> plans_;
};

}  // namespace stsg
