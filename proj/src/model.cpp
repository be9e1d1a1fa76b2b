#include "svyqif/model.hpp"

#include <algorithm>
#include <cmath>

#include "svyqif/errors.hpp"

namespace svyqif {

double linkInverse(double eta) {
  const double t = std::clamp(eta, -kEtaClamp, kEtaClamp);
  return 1.0 / (1.0 + std::exp(-t));
}

void validateCluster(const ClusterRecord& rec, bool require_binary) {
  if (rec.size() < 1) throw ContractError("cluster " + rec.id + ": empty response vector");
  if (rec.x.rows() != rec.size())
    throw ContractError("cluster " + rec.id + ": covariate rows do not match responses");
  if (!rec.x.allFinite()) throw ContractError("cluster " + rec.id + ": non-finite covariate");
  if (!(rec.weight > 0.0) || !std::isfinite(rec.weight))
    throw ContractError("cluster " + rec.id + ": weight must be positive");
  if (require_binary) {
    for (int j = 0; j < rec.size(); ++j) {
      if (rec.y[j] != 0.0 && rec.y[j] != 1.0)
        throw ContractError("cluster " + rec.id + ": response must be 0 or 1");
    }
  }
}

ClusterEvaluation evaluateCluster(const ClusterRecord& rec, const Vector& beta,
                                  const MarginalModel& model) {
  if (beta.size() != rec.x.cols())
    throw ContractError("evaluateCluster: beta has " + std::to_string(beta.size()) +
                        " entries, covariates have " + std::to_string(rec.x.cols()));
  const int m = rec.size();
  ClusterEvaluation ev;
  ev.mu.resize(m);
  ev.a_diag.resize(m);
  const Vector eta = rec.x * beta;
  for (int j = 0; j < m; ++j) {
    const double mu = linkInverse(eta[j]);
    ev.mu[j] = mu;
    ev.a_diag[j] = model.dispersion * mu * (1.0 - mu);
  }
  ev.jac = (ev.mu.array() * (1.0 - ev.mu.array())).matrix().asDiagonal() * rec.x;
  return ev;
}

}  // namespace svyqif
