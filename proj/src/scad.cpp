#include "svyqif/scad.hpp"

#include <cmath>

#include "svyqif/errors.hpp"

namespace svyqif {

void PenaltySpec::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ContractError("SCAD: lambda must be >= 0");
  if (!(a > 2.0)) throw ContractError("SCAD: a must exceed 2");
  if (!(zero_threshold > 0.0)) throw ContractError("SCAD: zero threshold must be positive");
}

namespace {

void checkTheta(double theta) {
  if (!(theta >= 0.0)) throw ContractError("SCAD: argument must be nonnegative");
}

}  // namespace

double scadValue(double theta, const PenaltySpec& spec) {
  checkTheta(theta);
  const double lam = spec.lambda;
  const double a = spec.a;
  if (theta <= lam) return lam * theta;
  if (theta <= a * lam) return -(theta * theta - 2.0 * a * lam * theta + lam * lam) / (2.0 * (a - 1.0));
  return (a + 1.0) * lam * lam / 2.0;
}

double scadDerivative(double theta, const PenaltySpec& spec) {
  checkTheta(theta);
  const double lam = spec.lambda;
  if (theta <= lam) return lam;
  const double excess = spec.a * lam - theta;
  return excess > 0.0 ? excess / (spec.a - 1.0) : 0.0;
}

double scadSecondDerivative(double theta, const PenaltySpec& spec) {
  checkTheta(theta);
  const double lam = spec.lambda;
  if (theta > lam && theta < spec.a * lam) return -1.0 / (spec.a - 1.0);
  return 0.0;
}

Vector lqaWeights(const Vector& beta_active, const PenaltySpec& spec) {
  Vector out(beta_active.size());
  for (Eigen::Index k = 0; k < beta_active.size(); ++k) {
    const double t = std::abs(beta_active[k]);
    if (t < spec.zero_threshold)
      throw ContractError("lqaWeights: coefficient below the zero threshold must be pruned first");
    out[k] = scadDerivative(t, spec) / t;
  }
  return out;
}

}  // namespace svyqif
