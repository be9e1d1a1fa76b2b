#pragma once

#include <optional>
#include <span>
#include <vector>

#include "svyqif/correlation.hpp"
#include "svyqif/model.hpp"

namespace svyqif {

/// Clusters drawn from a finite population of known size. The weighted score
/// uses 1/population_size, so weights should be inverse selection
/// probabilities (or per-draw Hansen-Hurwitz weights).
struct SurveySample {
  std::vector<ClusterRecord> clusters;
  double population_size = 0.0;
  MarginalModel model;
  BasisSet basis;

  int n() const { return static_cast<int>(clusters.size()); }
  int dim() const { return clusters.empty() ? 0 : clusters.front().dim(); }
  int clusterSize() const { return clusters.empty() ? 0 : clusters.front().size(); }
};

/// Zero weights are allowed (units absent from a bootstrap replicate) as long
/// as one weight is positive.
void validateSample(const SurveySample& sample);

/// Copy of the sample with every weight set to 1 and population_size = n.
SurveySample unweighted(const SurveySample& sample);

/// Copy of the sample keeping only the given covariate columns.
SurveySample selectColumns(const SurveySample& sample, std::span<const int> cols);

SurveySample withWeights(const SurveySample& sample, const Vector& weights);

enum class QifDetail {
  Value,        // q, C, Cinv, value
  Derivatives,  // + D, gradient, hessian_lead
  Full,         // + explicit G^(k)
};

/// Everything evaluated at one parameter point. Derivative quantities are
/// restricted to `cols` (all coordinates unless a subset was requested).
struct QifState {
  Vector beta;
  std::vector<int> cols;
  Vector q;
  Matrix C;
  Matrix Cinv;
  double ridge = 0.0;
  double value = 0.0;
  Matrix D;                // Ld x |cols|
  std::vector<Matrix> G;   // one Ld x Ld matrix per entry of cols
  Vector gradient;         // dQ/dbeta_cols
  Matrix hessian_lead;     // 2n D^T Cinv D
};

QifState evaluateQif(const SurveySample& sample, const Vector& beta,
                     QifDetail detail = QifDetail::Derivatives,
                     std::optional<std::span<const int>> cols = std::nullopt);

/// Stacked score q_i: block l is jac^T A^{-1/2} M_l A^{-1/2} (y - mu).
Vector clusterScore(const ClusterRecord& rec, const Vector& beta, const MarginalModel& model,
                    const BasisSet& basis);

Vector weightedScore(const SurveySample& sample, const Vector& beta);
Matrix scoreCovariance(const SurveySample& sample, const Vector& beta);
double qifValue(const SurveySample& sample, const Vector& beta);
Vector qifGradient(const SurveySample& sample, const Vector& beta);
Matrix qifHessianLead(const SurveySample& sample, const Vector& beta);
/// Full second derivative of Q_n on `cols`: central differences of the
/// analytic gradient, symmetrized.
Matrix qifHessian(const SurveySample& sample, const Vector& beta, std::span<const int> cols);

/// Ridge added to C_n before inversion, relative to trace(C_n)/(Ld).
inline constexpr double kRidgeScale = 1e-8;

struct IterationRecord {
  double objective = 0.0;
  double step_norm = 0.0;
};

struct FitResult {
  Vector beta;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double grad_norm = 0.0;
  std::vector<int> active_set;
  std::optional<Matrix> variance;  // over active_set
  std::vector<IterationRecord> trace;
  double lambda = 0.0;
  std::optional<double> alpha;  // working-correlation parameter (GEE fits)
};

struct QifFitOptions {
  int max_iter = 100;
  double grad_tol = 1e-6;   // relative to 1 + |Q_n|
  double step_tol = 1e-8;
  int max_halvings = 30;
};

FitResult fitQif(const SurveySample& sample, const Vector& init, const QifFitOptions& opts = {});

/// Indices k with |beta_k| >= threshold.
std::vector<int> activeSet(const Vector& beta, double threshold);

}  // namespace svyqif
