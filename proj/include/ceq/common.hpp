#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ceq {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Caller passed arguments violating a documented precondition.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// An iteration budget or conditioning floor was hit.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An oracle broke its contract (e.g. a cut that does not exclude the center).
struct ContractViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A configured hard resource cap was exceeded.
struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Counter-based seed splitting: one root seed, independent streams per
// component index. splitmix64 finalizer.
inline std::uint64_t split_seed(std::uint64_t root, std::uint64_t component) {
  std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (component + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace ceq
