#include "svyqif/gee.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "svyqif/errors.hpp"

namespace svyqif {

void GeeConfig::validate() const {
  if (structure.m < 1) throw ContractError("GEE: cluster size must be positive");
  if (!(tol > 0.0) || max_iter < 1) throw ContractError("GEE: tolerances must be positive");
  if (alpha_update == AlphaUpdate::Fixed && !(fixed_alpha >= 0.0 && fixed_alpha < 1.0))
    throw ContractError("GEE: fixed alpha must lie in [0, 1)");
}

namespace {

struct ClusterGee {
  Vector score;       // jac^T A^{-1/2} Rinv A^{-1/2} (y - mu)
  Matrix information; // jac^T A^{-1/2} Rinv A^{-1/2} jac
};

ClusterGee clusterGee(const ClusterRecord& rec, const Vector& beta, const MarginalModel& model,
                      const Matrix& rinv, bool with_information) {
  const ClusterEvaluation ev = evaluateCluster(rec, beta, model);
  const int m = rec.size();
  Vector inv_sqrt_a(m);
  for (int j = 0; j < m; ++j) {
    if (!(ev.a_diag[j] > 0.0)) throw NumericError("GEE: non-positive variance in cluster " + rec.id);
    inv_sqrt_a[j] = 1.0 / std::sqrt(ev.a_diag[j]);
  }
  const Matrix weight = inv_sqrt_a.asDiagonal() * rinv * inv_sqrt_a.asDiagonal();
  const Matrix left = ev.jac.transpose() * weight;
  ClusterGee out;
  out.score = left * (rec.y - ev.mu);
  if (with_information) out.information = left * ev.jac;
  return out;
}

Matrix inverseCorrelation(const CorrelationStructure& structure, double alpha) {
  const Matrix r = workingCorrelation(structure, alpha);
  const Eigen::LLT<Matrix> llt(r);
  if (llt.info() != Eigen::Success) throw NumericError("GEE: working correlation is singular");
  return llt.solve(Matrix::Identity(r.rows(), r.cols()));
}

void checkSample(const SurveySample& sample, const CorrelationStructure& structure) {
  if (sample.n() < 1) throw ContractError("GEE: empty sample");
  if (!(sample.population_size > 0.0)) throw ContractError("GEE: population size must be positive");
  for (const auto& rec : sample.clusters) {
    if (rec.size() != structure.m)
      throw ContractError("GEE: cluster " + rec.id + " does not match the working correlation size");
    if (rec.dim() != sample.dim()) throw ContractError("GEE: covariate dimension differs");
  }
}

struct GeeSystem {
  Vector score;
  Matrix information;
};

GeeSystem geeSystem(const SurveySample& sample, const Vector& beta, const Matrix& rinv) {
  const int d = sample.dim();
  GeeSystem sys{Vector::Zero(d), Matrix::Zero(d, d)};
  for (const auto& rec : sample.clusters) {
    if (rec.weight == 0.0) continue;
    const ClusterGee c = clusterGee(rec, beta, sample.model, rinv, true);
    sys.score.noalias() += rec.weight * c.score;
    sys.information.noalias() += rec.weight * c.information;
  }
  return sys;
}

double currentAlpha(const SurveySample& sample, const Vector& beta, const GeeConfig& config) {
  if (config.structure.kind == CorrelationKind::Independence) return 0.0;
  if (config.alpha_update == AlphaUpdate::Fixed) return config.fixed_alpha;
  return estimateAlpha(sample, beta, config.structure);
}

double penaltySum(const Vector& beta, const PenaltySpec& spec) {
  double total = 0.0;
  for (int k = 0; k < beta.size(); ++k) total += scadValue(std::abs(beta[k]), spec);
  return total;
}

}  // namespace

Vector geeScore(const SurveySample& sample, const Vector& beta, double alpha,
                const CorrelationStructure& structure) {
  checkSample(sample, structure);
  const Matrix rinv = inverseCorrelation(structure, alpha);
  Vector total = Vector::Zero(sample.dim());
  for (const auto& rec : sample.clusters) {
    if (rec.weight == 0.0) continue;
    total.noalias() += rec.weight * clusterGee(rec, beta, sample.model, rinv, false).score;
  }
  return total;
}

double estimateAlpha(const SurveySample& sample, const Vector& beta,
                     const CorrelationStructure& structure) {
  if (structure.kind == CorrelationKind::Independence)
    throw ContractError("estimateAlpha: independence has no correlation parameter");
  checkSample(sample, structure);
  const int m = structure.m;
  if (m < 2) throw ContractError("estimateAlpha: needs at least two observations per cluster");
  double sum_sq = 0.0, count_sq = 0.0, sum_cross = 0.0, count_cross = 0.0;
  for (const auto& rec : sample.clusters) {
    const ClusterEvaluation ev = evaluateCluster(rec, beta, sample.model);
    Vector e(m);
    for (int j = 0; j < m; ++j) e[j] = (rec.y[j] - ev.mu[j]) / std::sqrt(ev.a_diag[j]);
    const double w = rec.weight;
    sum_sq += w * e.squaredNorm();
    count_sq += w * m;
    if (structure.kind == CorrelationKind::Exchangeable) {
      const double s = e.sum();
      sum_cross += w * 0.5 * (s * s - e.squaredNorm());
      count_cross += w * 0.5 * m * (m - 1);
    } else {
      for (int j = 0; j + 1 < m; ++j) sum_cross += w * e[j] * e[j + 1];
      count_cross += w * (m - 1);
    }
  }
  const double phi = sum_sq / count_sq;
  if (!(phi > 0.0)) return 0.0;
  const double alpha = (sum_cross / count_cross) / phi;
  return std::clamp(alpha, 0.0, kAlphaMax);
}

FitResult fitGee(const SurveySample& sample, const GeeConfig& config, const Vector& init) {
  config.validate();
  checkSample(sample, config.structure);
  if (!init.allFinite()) throw ContractError("fitGee: non-finite initial value");
  FitResult fit;
  Vector beta = init;
  double alpha = currentAlpha(sample, beta, config);
  for (int it = 0; it < config.max_iter; ++it) {
    const GeeSystem sys = geeSystem(sample, beta, inverseCorrelation(config.structure, alpha));
    const Eigen::LLT<Matrix> llt(sys.information);
    if (llt.info() != Eigen::Success) throw NumericError("fitGee: information matrix is singular");
    const Vector step = llt.solve(sys.score);
    beta += step;
    alpha = currentAlpha(sample, beta, config);
    const double step_norm = step.lpNorm<Eigen::Infinity>();
    fit.iterations = it + 1;
    fit.trace.push_back({sys.score.lpNorm<Eigen::Infinity>(), step_norm});
    if (!beta.allFinite()) throw NumericError("fitGee: iterate diverged");
    if (step_norm <= config.tol) {
      fit.converged = true;
      break;
    }
  }
  fit.beta = beta;
  fit.alpha = alpha;
  fit.grad_norm =
      geeScore(sample, beta, alpha, config.structure).lpNorm<Eigen::Infinity>() / sample.population_size;
  fit.objective = geeQuadraticForm(sample, beta, alpha, config.structure);
  fit.active_set = activeSet(beta, 0.0);
  return fit;
}

FitResult fitPenalizedGee(const SurveySample& sample, const PenaltySpec& spec,
                          const GeeConfig& config, const Vector& init,
                          const PenalizedFitOptions& opts) {
  spec.validate();
  config.validate();
  checkSample(sample, config.structure);
  if (!init.allFinite()) throw ContractError("fitPenalizedGee: non-finite initial value");
  const double n = sample.n();
  const double scale = n / sample.population_size;
  FitResult fit;
  fit.lambda = spec.lambda;
  Vector beta = init;
  std::vector<int> active;
  for (int k = 0; k < beta.size(); ++k) {
    if (std::abs(beta[k]) < spec.zero_threshold) {
      beta[k] = 0.0;
    } else {
      active.push_back(k);
    }
  }
  double alpha = currentAlpha(sample, beta, config);
  double grad_norm = 0.0;
  for (int outer = 0; outer < opts.max_outer && !active.empty(); ++outer) {
    const GeeSystem sys = geeSystem(sample, beta, inverseCorrelation(config.structure, alpha));
    const int p = static_cast<int>(active.size());
    Vector b(p), u(p);
    for (int j = 0; j < p; ++j) {
      b[j] = beta[active[j]];
      u[j] = scale * sys.score[active[j]];
    }
    const Vector gamma = lqaWeights(b, spec);
    Matrix h = scale * sys.information(active, active);
    h.diagonal() += n * gamma;
    const Vector g = u - n * gamma.cwiseProduct(b);
    grad_norm = g.lpNorm<Eigen::Infinity>();
    const Eigen::LLT<Matrix> llt(h);
    if (llt.info() != Eigen::Success) throw NumericError("fitPenalizedGee: LQA system is singular");
    const Vector step = llt.solve(g);
    for (int j = 0; j < p; ++j) beta[active[j]] += step[j];
    if (!beta.allFinite()) throw NumericError("fitPenalizedGee: iterate diverged");
    alpha = currentAlpha(sample, beta, config);
    const double step_norm = step.lpNorm<Eigen::Infinity>();
    fit.iterations = outer + 1;
    fit.trace.push_back({grad_norm, step_norm});
    const auto before = active.size();
    std::erase_if(active, [&](int k) {
      if (std::abs(beta[k]) < spec.zero_threshold) {
        beta[k] = 0.0;
        return true;
      }
      return false;
    });
    if (active.size() != before) {
      alpha = currentAlpha(sample, beta, config);
      continue;
    }
    if (step_norm <= opts.tol) {
      fit.converged = true;
      break;
    }
  }
  if (active.empty()) fit.converged = true;
  fit.beta = beta;
  fit.alpha = alpha;
  fit.grad_norm = grad_norm;
  fit.objective = geeQuadraticForm(sample, beta, alpha, config.structure) + n * penaltySum(beta, spec);
  fit.active_set = activeSet(beta, spec.zero_threshold);
  return fit;
}

double geeQuadraticForm(const SurveySample& sample, const Vector& beta, double alpha,
                        const CorrelationStructure& structure) {
  checkSample(sample, structure);
  const Matrix rinv = inverseCorrelation(structure, alpha);
  const int d = sample.dim();
  Vector gbar = Vector::Zero(d);
  Matrix v = Matrix::Zero(d, d);
  for (const auto& rec : sample.clusters) {
    if (rec.weight == 0.0) continue;
    const Vector g = clusterGee(rec, beta, sample.model, rinv, false).score;
    gbar.noalias() += rec.weight * g;
    v.noalias() += rec.weight * g * g.transpose();
  }
  gbar /= sample.population_size;
  v /= sample.population_size;
  v.diagonal().array() += std::max(kRidgeScale * v.trace() / d, std::numeric_limits<double>::min());
  const Eigen::LLT<Matrix> llt(v);
  if (llt.info() != Eigen::Success) throw NumericError("geeQuadraticForm: score covariance is singular");
  return sample.n() * gbar.dot(llt.solve(gbar));
}

LambdaSelection selectLambdaGee(const SurveySample& sample, const PenalizedFitConfig& config,
                                const GeeConfig& gee) {
  config.validate();
  const Vector init = fitGee(sample, gee, Vector::Zero(sample.dim())).beta;
  const PenalizedFitter fitter = [&](double lambda) {
    PenaltySpec s = config.penalty;
    s.lambda = lambda;
    return fitPenalizedGee(sample, s, gee, init, config.fit);
  };
  std::vector<double> grid = config.lambda_grid;
  if (grid.empty()) {
    const double start = std::max(init.lpNorm<Eigen::Infinity>(), config.penalty.zero_threshold);
    grid = logGrid(findLambdaMax(fitter, start), config.grid_size, config.grid_ratio);
  }
  const SelectionCriterion criterion = [&](const FitResult& fit) {
    return geeQuadraticForm(sample, fit.beta, fit.alpha.value_or(0.0), gee.structure);
  };
  return selectOnGrid(grid, fitter, criterion, sample.n());
}

}  // namespace svyqif
