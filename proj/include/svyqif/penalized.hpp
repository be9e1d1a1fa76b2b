#pragma once

#include <functional>
#include <string>
#include <vector>

#include "svyqif/qif.hpp"
#include "svyqif/scad.hpp"

namespace svyqif {

struct PenalizedFitOptions {
  int max_outer = 100;
  double tol = 1e-6;  // active-set step, infinity norm
  int max_halvings = 30;
};

struct PenalizedFitConfig {
  /// Descending. Left empty, a log-spaced grid from lambda_max down to
  /// grid_ratio * lambda_max is built for each sample.
  std::vector<double> lambda_grid;
  PenaltySpec penalty;
  PenalizedFitOptions fit;
  int grid_size = 25;
  double grid_ratio = 0.01;

  void validate() const;
};

/// Q_n(beta) + n * sum_k p_lambda(|beta_k|).
double penalizedObjective(const SurveySample& sample, const Vector& beta, const PenaltySpec& spec);

/// SCAD-penalized QIF by LQA Newton-Raphson with pruning at spec.zero_threshold.
/// Pruned coordinates stay at zero for the rest of the fit.
FitResult fitPenalized(const SurveySample& sample, const PenaltySpec& spec, const Vector& init,
                       const PenalizedFitOptions& opts = {});

/// criterion + log(n) * df
double wbic(double criterion, int n, int df);

struct LambdaPathEntry {
  double lambda = 0.0;
  double criterion = 0.0;
  double wbic = 0.0;
  FitResult fit;
  bool failed = false;
  std::string error;
};

struct LambdaSelection {
  double lambda = 0.0;
  FitResult fit;
  std::vector<LambdaPathEntry> path;
};

using PenalizedFitter = std::function<FitResult(double lambda)>;
using SelectionCriterion = std::function<double(const FitResult&)>;

/// Smallest lambda whose fit has an empty active set. Doubles from `start`
/// until every coefficient is pruned, then bisects on the log scale.
double findLambdaMax(const PenalizedFitter& fitter, double start, int bisections = 10);

std::vector<double> logGrid(double lambda_max, int size, double ratio);

/// Fits every lambda on a descending grid and returns the WBIC minimizer. Ties
/// go to the larger lambda. Throws NumericError when every fit failed.
LambdaSelection selectOnGrid(const std::vector<double>& grid, const PenalizedFitter& fitter,
                             const SelectionCriterion& criterion, int n);

/// WBIC tuning of the penalized QIF. Every lambda starts from the unpenalized
/// pseudo-QIF estimate.
LambdaSelection selectLambda(const SurveySample& sample, const PenalizedFitConfig& config);

/// Plug-in sandwich variance of the active coefficients of a penalized fit.
Matrix sandwichVariance(const SurveySample& sample, const FitResult& fit, const PenaltySpec& spec);

/// With-replacement estimate of n * Var(q_n) at beta, restricted to `rows`.
Matrix scoreVarianceEstimate(const SurveySample& sample, const Vector& beta,
                             std::span<const int> rows);

/// Row indices eta*d + k (eta = 0..L-1, k in cols) of the stacked score.
std::vector<int> stackedRows(std::span<const int> cols, int d, int L);

}  // namespace svyqif
