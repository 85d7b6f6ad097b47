#include "stsg/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

#include "stsg/common.hpp"

namespace stsg {

namespace {
// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct Fft::Plans {
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;

  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (inv) fftw_destroy_plan(inv);
  }
};

Fft::Fft(std::size_t n) : n_(n), plans_(std::make_unique<Plans>()) {
  if (n == 0) throw InvalidArgument("Fft: zero length");
  std::vector<Complex> a(n), b(n);
  auto* pa = reinterpret_cast<fftw_complex*>(a.data());
  auto* pb = reinterpret_cast<fftw_complex*>(b.data());
  const int len = static_cast<int>(n);
  std::lock_guard lock(planner_mutex());
  plans_->fwd = fftw_plan_dft_1d(len, pa, pb, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans_->inv = fftw_plan_dft_1d(len, pa, pb, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plans_->fwd || !plans_->inv) throw Error("Fft: FFTW planning failed");
}

Fft::~Fft() = default;
Fft::Fft(Fft&&) noexcept = default;
Fft& Fft::operator=(Fft&&) noexcept = default;

void Fft::forward(std::span<const Complex> in, std::span<Complex> out) const {
  if (in.size() != n_ || out.size() != n_) throw DimensionError("Fft::forward: length mismatch");
  if (in.data() == out.data()) {
    std::vector<Complex> copy(in.begin(), in.end());
    forward(copy, out);
    return;
  }
  // FFTW does not modify the input of an out-of-place complex transform.
  fftw_execute_dft(plans_->fwd, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

void Fft::inverse(std::span<const Complex> in, std::span<Complex> out) const {
  if (in.size() != n_ || out.size() != n_) throw DimensionError("Fft::inverse: length mismatch");
  if (in.data() == out.data()) {
    std::vector<Complex> copy(in.begin(), in.end());
    inverse(copy, out);
    return;
  }
  fftw_execute_dft(plans_->inv, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
  const double scale = 1.0 / static_cast<double>(n_);
  for (auto& z : out) z *= scale;
}

std::vector<Complex> Fft::forward(std::span<const double> real_in) const {
  if (real_in.size() != n_) throw DimensionError("Fft::forward: length mismatch");
  std::vector<Complex> in(real_in.begin(), real_in.end());
  std::vector<Complex> out(n_);
  forward(in, out);
  return out;
}

}  // namespace stsg
