#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "svyqif/correlation.hpp"
#include "svyqif/gee.hpp"
#include "svyqif/metrics.hpp"
#include "svyqif/penalized.hpp"
#include "svyqif/population.hpp"

namespace svyqif {

enum class Method {
  Unweighted,  // SCAD-QIF ignoring the weights
  Pqif,        // SCAD-penalized survey-weighted QIF
  Pgee,        // SCAD-penalized survey-weighted GEE
  Oracle,      // survey-weighted QIF on the true submodel
  Qif,         // unpenalized survey-weighted QIF on the full model
};

std::string toString(Method m);
Method parseMethod(const std::string& text);

struct CampaignConfig {
  PopulationConfig population;
  std::vector<int> sample_sizes{300, 500};
  int replicates = 200;
  std::vector<Method> methods{Method::Unweighted, Method::Pqif, Method::Pgee, Method::Oracle};
  std::vector<CorrelationKind> correlations{CorrelationKind::Exchangeable, CorrelationKind::Ar1};
  PenalizedFitConfig penalty;
  bool bootstrap = false;
  int bootstrap_replicates = 200;
  bool sandwich = true;
  std::uint64_t seed = 20240101;
  int threads = 1;
  double max_failure_rate = 0.2;

  /// Count of leading nonzero entries of beta0.
  int trueModelSize() const;
  void validate() const;
};

/// What one method produced on one replicate.
struct ReplicateOutcome {
  int replicate = 0;
  bool ok = false;
  std::string error;
  Vector estimate;
  double lambda = 0.0;
  std::optional<Vector> sandwich_se;   // full length, NaN outside the active set
  std::optional<Vector> bootstrap_se;  // full length, NaN outside the active set
};

struct CellSummary {
  int n = 0;
  Method method = Method::Pqif;
  CorrelationKind correlation = CorrelationKind::Exchangeable;
  int used = 0;
  int failures = 0;
  double correct = 0.0;  // percentages
  double over = 0.0;
  double under = 0.0;
  double mse = 0.0;
  std::vector<double> arb;       // per true nonzero coefficient
  std::vector<double> sd;
  std::vector<double> sd_m;      // empty unless bootstrap ran
  std::vector<double> sd_mad;
  std::vector<double> coverage;  // empty unless sandwich ran
  std::vector<ReplicateOutcome> outcomes;
};

struct SimulationReport {
  int replicates = 0;
  int true_model_size = 0;
  Vector beta0;
  int bootstrap_replicates = 0;
  std::vector<CellSummary> cells;

  const CellSummary* find(int n, Method m, CorrelationKind c) const;
};

/// Runs every (n, correlation, method) cell on H fresh population/sample
/// draws. A failed method on one replicate is excluded from that cell only;
/// the campaign aborts when any cell loses more than max_failure_rate.
SimulationReport runCampaign(const CampaignConfig& cfg);

/// Aggregates a cell from its outcomes (C/O/U, MSE, ARB, SD suite, coverage).
void summarizeCell(CellSummary& cell, const Vector& beta0, int d1);

}  // namespace svyqif
