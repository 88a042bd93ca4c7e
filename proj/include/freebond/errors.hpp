#pragma once

#include <stdexcept>
#include <string>

namespace freebond {

// Base for failures of the numerical machinery (as opposed to bad arguments,
// which throw std::domain_error / std::invalid_argument).
struct NumericsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The alternating stable series failed its convergence/cancellation guard.
struct SeriesDivergenceError : NumericsError {
  using NumericsError::NumericsError;
};

// Newton continuation for F stalled or left the upper half-plane.
struct ContinuationFailureError : NumericsError {
  using NumericsError::NumericsError;
};

struct QuadratureError : NumericsError {
  using NumericsError::NumericsError;
};

// Stieltjes y-ladder disagrees with its own extrapolation (atom/edge nearby).
struct ExtrapolationUnstableError : NumericsError {
  using NumericsError::NumericsError;
};

// Operation not available for this family (e.g. sampling a Custom spec).
struct UnsupportedFamilyError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A Monte Carlo cell received too few hits to produce an estimate.
struct DegenerateCellError : NumericsError {
  using NumericsError::NumericsError;
};

}  // namespace freebond
