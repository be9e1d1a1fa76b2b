#pragma once

#include <cstdint>
#include <vector>

#include "svyqif/qif.hpp"
#include "svyqif/rng.hpp"

namespace svyqif {

struct PopulationConfig {
  int N = 10000;
  int m = 5;
  int d = 10;
  Vector beta0 = (Vector(10) << 0.8, -0.7, -0.6, 0, 0, 0, 0, 0, 0, 0).finished();
  double alpha_true = 0.4;
  double x_low = 0.0;
  double x_high = 0.8;

  void validate() const;
};

struct FinitePopulation {
  std::vector<ClusterRecord> clusters;  // weight 1 placeholders
  std::vector<int> size_measures;       // z_i = sum_j y_ij + 1
};

/// Correlated binary population: uniform covariates, logistic marginal means
/// and exchangeable within-cluster Pearson correlation alpha_true through a
/// Gaussian copula calibrated pair by pair.
FinitePopulation generatePopulation(const PopulationConfig& cfg, Rng& rng);

/// PPS with replacement on z_i. Each draw is a separate unit with the
/// Hansen-Hurwitz weight 1/(n p_i); population_size is the known N.
SurveySample drawSamplePpswr(const FinitePopulation& pop, int n, Rng& rng,
                             const BasisSet& basis = {});

/// Index drawn with probability proportional to cumulative[i] - cumulative[i-1].
int drawProportional(const std::vector<double>& cumulative, Rng& rng);

}  // namespace svyqif
