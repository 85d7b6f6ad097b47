#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace stsg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes or lengths of inputs do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A value is outside the domain an operation accepts (non-finite input,
/// invalid configuration, violated precondition).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The operation is undefined for the given decomposition (e.g. synthesis on
/// an overlapping, non-orthogonal system).
class UnsupportedDecomposition : public Error {
 public:
  using Error::Error;
};

/// 64-bit FNV-1a; used for config hashes embedded in output headers.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value);

}  // namespace stsg
