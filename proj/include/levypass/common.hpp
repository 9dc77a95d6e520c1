#pragma once

#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace levypass {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Error hierarchy. Every failure mode named by the operation contracts gets
// its own type so callers can route on it.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct DomainError : Error { using Error::Error; };
struct PoleHit : Error { using Error::Error; };
struct NoNegativeZero : Error { using Error::Error; };
struct ContourThroughZero : Error { using Error::Error; };
struct HypothesisUnverified : Error { using Error::Error; };
struct MultiplicityMismatch : Error { using Error::Error; };
struct ContourContamination : Error { using Error::Error; };
struct InconclusiveMultiplicity : Error { using Error::Error; };
struct WrongRegime : Error { using Error::Error; };
struct NeedsFGrid : Error { using Error::Error; };
struct ZeroDivision : Error { using Error::Error; };
struct GridTooCoarse : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct SlowDecay : Error { using Error::Error; };
struct TooFewHits : Error { using Error::Error; };
struct RegimeError : Error { using Error::Error; };

struct ConfigError : Error {
  int line;
  std::string field;
  ConfigError(int line_, std::string field_, const std::string& msg)
      : Error("config error at line " + std::to_string(line_) + ", field '" +
              field_ + "': " + msg),
        line(line_),
        field(std::move(field_)) {}
};

// expm1-based evaluation of (exp(z) - 1) / z, stable near z = 0.
inline cplx expm1_over(cplx z) {
  if (std::abs(z) < 1e-8) return 1.0 + z / 2.0 + z * z / 6.0;
  return (std::exp(z) - 1.0) / z;
}

inline bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline double sqr(double x) { return x * x; }

}  // namespace levypass
