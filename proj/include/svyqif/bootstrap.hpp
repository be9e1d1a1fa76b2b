#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "svyqif/qif.hpp"
#include "svyqif/scad.hpp"

namespace svyqif {

/// Rao-Wu rescaling bootstrap: B replicates of n-1 units drawn with
/// replacement and equal probabilities.
struct BootstrapPlan {
  int B = 200;
  std::uint64_t seed = 0;
};

/// w_i * n/(n-1) * t_i, where t_i counts unit i among n-1 uniform draws.
/// Replicate b always draws from the stream keyed by (seed, b).
Vector rescaledBootstrapWeights(const SurveySample& sample, const BootstrapPlan& plan, int b);

/// One LQA Newton step from the fitted point under bootstrap weights, on the
/// fit's active set, using the full second derivative of the replicate QIF.
/// Empty when that Hessian plus the penalty term is not positive definite.
std::optional<Vector> bootstrapOneStep(const SurveySample& sample, const FitResult& fit,
                                       const PenaltySpec& spec, const Vector& boot_weights);

struct BootstrapResult {
  Matrix variance;  // over fit.active_set
  int effective_B = 0;
  int excluded = 0;
};

BootstrapResult bootstrapVariance(const SurveySample& sample, const FitResult& fit,
                                  const PenaltySpec& spec, const BootstrapPlan& plan);

/// Average outer product of (replicate - center).
Matrix replicateVariance(const std::vector<Vector>& replicates, const Vector& center);

}  // namespace svyqif
