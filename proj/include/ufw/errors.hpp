#pragma once

#include <stdexcept>

namespace ufw {

/// Numerical breakdown in an oracle or a solve (non-finite values, failed
/// iterations). Solvers catch these from oracles and rethrow with the trace
/// accumulated so far attached.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The requested operation needs a capability the region does not have
/// (e.g. away steps over a bounded set that is not a polytope).
class UnsupportedRegionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace ufw
