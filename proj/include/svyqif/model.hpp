#pragma once

#include <string>

#include <Eigen/Dense>

namespace svyqif {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One longitudinal unit: m repeated responses, an m x d covariate block and
/// its survey weight.
struct ClusterRecord {
  Vector y;
  Matrix x;
  double weight = 1.0;
  std::string id;

  int size() const { return static_cast<int>(y.size()); }
  int dim() const { return static_cast<int>(x.cols()); }
};

enum class Family { BernoulliLogit };

struct MarginalModel {
  Family family = Family::BernoulliLogit;
  double dispersion = 1.0;
};

/// Mean, variance diagonal and mean Jacobian of one cluster at a given beta.
struct ClusterEvaluation {
  Vector mu;
  Vector a_diag;
  Matrix jac;
};

/// Linear predictors are clamped to this magnitude before exponentiation.
inline constexpr double kEtaClamp = 30.0;

double linkInverse(double eta);

/// Throws ContractError when the record breaks its invariants (empty, non-finite
/// covariates, non-positive weight, y outside {0,1}).
void validateCluster(const ClusterRecord& rec, bool require_binary = true);

ClusterEvaluation evaluateCluster(const ClusterRecord& rec, const Vector& beta,
                                  const MarginalModel& model);

}  // namespace svyqif
