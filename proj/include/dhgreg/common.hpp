#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dhg {

// Scalar type for all numerics. Tests assume 64-bit; -DDHGREG_REAL32
// switches to 32-bit for speed-over-precision builds.
#ifdef DHGREG_REAL32
using real = float;
#else
using real = double;
#endif

// Raised when an op produces NaN/Inf or training diverges.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

inline bool is_finite(real v) { return std::isfinite(v); }

}  // namespace dhg
