#pragma once

#include "stvel/grid.hpp"

namespace stvel {

enum class TimeScheme {
  Symmetric,             ///< centered quotient only; first/last slices missing
  SymmetricWithEndpoint  ///< adds the first-order divided difference at the last slice
};

enum class BoundaryPolicy {
  Mask,     ///< outermost spatial ring is missing
  OneSided  ///< substitute the available one-sided difference at edges
};

struct VelocityOptions {
  TimeScheme time_scheme = TimeScheme::Symmetric;
  /// Cells whose gradient norm falls below gradient_floor times the slice
  /// maximum are marked missing instead of producing unbounded ratios.
  double gradient_floor = 1e-6;
  BoundaryPolicy boundary = BoundaryPolicy::Mask;
};

/// Centered time derivative (lambda(n+1) - lambda(n-1)) / (2 dt) of one time
/// slice. With SymmetricWithEndpoint, slice nt-1 uses
/// (lambda(n) - lambda(n-1)) / dt. Out-of-range n for the chosen scheme
/// throws std::out_of_range.
SpatialSlice time_derivative(const ScalarField& field, int n,
                             const VelocityOptions& options = {});

/// Gradient-norm estimate: the average of the four mixed forward/backward
/// difference magnitudes.
SpatialSlice gradient_norm(const ScalarField& field, int n,
                           const VelocityOptions& options = {});

/// Minimal velocity field: magnitude |d lambda/dt| over the averaged
/// gradient norm, direction sign(d lambda/dt) * grad/|grad| from centered
/// spatial differences.
///
/// The input is normalized internally by its largest absolute value before
/// any differencing, so two fields that are exact scalar multiples of each
/// other produce bit-identical output. Cells below the gradient floor, on a
/// masked boundary, or with an undefined scheme are missing; a defined cell
/// with zero time derivative has magnitude 0 and the zero direction.
VectorField min_velocity(const ScalarField& field,
                         const VelocityOptions& options = {});

/// Speed along a fixed unit direction: |d lambda/dt| / |v . grad lambda|
/// with centered spatial differences. Bounded below by the minimal velocity
/// wherever both are defined. Non-unit v throws std::invalid_argument.
ScalarField directional_velocity(const ScalarField& field, double vx, double vy,
                                 const VelocityOptions& options = {});

}  // namespace stvel
