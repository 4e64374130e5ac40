// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace pfem {

using Index = std::ptrdiff_t;
using Complex = std::complex<double>;

using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;

/// Full-length complex vector, replicated on every rank.
using CVector = Eigen::VectorXcd;

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr Complex kJ{0.0, 1.0};

/// Complex unknowns carried by one mesh node (Hx, Hy, Hz).
inline constexpr Index kDofsPerNode = 3;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent scenario configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Mesh exceeds the configured node budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

/// Malformed Matrix Market or vector file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A collective did not complete within the watchdog interval.
class DeadlockError : public Error {
 public:
  using Error::Error;
};

/// Another rank failed and the fabric was torn down.
class FabricAborted : public Error {
 public:
  using Error::Error;
};

/// Zero pivot or zero diagonal; `where` names the offending row or column.
class BreakdownError : public Error {
 public:
  BreakdownError(const std::string& what, Index where)
      : Error(what + " (index " + std::to_string(where) + ")"), where_(where) {}

  Index where() const { return where_; }

 private:
  Index where_;
};

}  // namespace pfem
