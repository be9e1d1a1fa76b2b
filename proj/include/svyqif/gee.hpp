#pragma once

#include "svyqif/correlation.hpp"
#include "svyqif/penalized.hpp"
#include "svyqif/qif.hpp"
#include "svyqif/scad.hpp"

namespace svyqif {

enum class AlphaUpdate { Moment, Fixed };

struct GeeConfig {
  CorrelationStructure structure;
  int max_iter = 100;
  double tol = 1e-8;
  AlphaUpdate alpha_update = AlphaUpdate::Moment;
  double fixed_alpha = 0.0;

  void validate() const;
};

/// Upper clamp of the moment estimate of alpha.
inline constexpr double kAlphaMax = 0.95;

/// Survey-weighted GEE score sum_i w_i jac^T A^{-1/2} R(alpha)^{-1} A^{-1/2} (y - mu)
/// (no 1/N factor).
Vector geeScore(const SurveySample& sample, const Vector& beta, double alpha,
                const CorrelationStructure& structure);

/// Weighted moment estimator from Pearson residuals, normalized by the weighted
/// mean squared residual and clamped to [0, kAlphaMax].
double estimateAlpha(const SurveySample& sample, const Vector& beta,
                     const CorrelationStructure& structure);

/// Fisher scoring alternating with the alpha update.
FitResult fitGee(const SurveySample& sample, const GeeConfig& config, const Vector& init);

/// SCAD-penalized GEE by LQA. The score and information are rescaled by n/N so
/// the penalty n * sum p_lambda sits on the same footing as for the QIF.
FitResult fitPenalizedGee(const SurveySample& sample, const PenaltySpec& spec,
                          const GeeConfig& config, const Vector& init,
                          const PenalizedFitOptions& opts = {});

/// n * gbar^T V^{-1} gbar with gbar = N^{-1} sum w_i g_i and
/// V = N^{-1} sum w_i g_i g_i^T (ridged as for C_n).
double geeQuadraticForm(const SurveySample& sample, const Vector& beta, double alpha,
                        const CorrelationStructure& structure);

/// WBIC tuning for the penalized GEE with geeQuadraticForm in place of Q_n.
LambdaSelection selectLambdaGee(const SurveySample& sample, const PenalizedFitConfig& config,
                                const GeeConfig& gee);

}  // namespace svyqif
