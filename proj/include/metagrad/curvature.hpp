#pragma once

#include <cstddef>
#include <optional>

#include "metagrad/linalg.hpp"

namespace metagrad {

/// Step-indexed curvature along an inner-loop path: hvp(k, v) = H^k·v for k = 0..steps()−1.
///
/// Every meta-gradient estimator is written against this interface, so the same code runs on
/// recorded GD trajectories (H^k is the training Hessian at φ^k) and on prescribed Hessian
/// sequences used for sharpness constructions. Implementations must be safe to call
/// concurrently from several threads.
class StepHessians {
 public:
  virtual ~StepHessians() = default;

  virtual std::size_t steps() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual Vector hvp(std::size_t k, const Vector& v) const = 0;

  /// Explicit H^k when cheaply available; oracles use this, estimators never do.
  virtual std::optional<Matrix> hessian(std::size_t /*k*/) const { return std::nullopt; }
};

}  // namespace metagrad
