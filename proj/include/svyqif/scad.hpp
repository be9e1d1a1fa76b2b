#pragma once

#include "svyqif/model.hpp"

namespace svyqif {

struct PenaltySpec {
  double lambda = 0.0;
  double a = 3.7;
  double zero_threshold = 1e-3;

  void validate() const;
};

double scadValue(double theta, const PenaltySpec& spec);
double scadDerivative(double theta, const PenaltySpec& spec);
/// -1/(a-1) strictly between the knots, 0 elsewhere (including the knots).
double scadSecondDerivative(double theta, const PenaltySpec& spec);

/// Diagonal of the local quadratic approximation, p'(|b|)/|b|.
Vector lqaWeights(const Vector& beta_active, const PenaltySpec& spec);

}  // namespace svyqif
