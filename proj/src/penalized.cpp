#include "svyqif/penalized.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "svyqif/errors.hpp"

namespace svyqif {

void PenalizedFitConfig::validate() const {
  penalty.validate();
  for (double l : lambda_grid) {
    if (!(l > 0.0) || !std::isfinite(l)) throw ContractError("lambda grid entries must be positive");
  }
  if (lambda_grid.empty() && grid_size < 1) throw ContractError("grid size must be positive");
  if (!(grid_ratio > 0.0 && grid_ratio <= 1.0)) throw ContractError("grid ratio must lie in (0, 1]");
  if (!(fit.tol > 0.0) || fit.max_outer < 1) throw ContractError("fit tolerances must be positive");
}

namespace {

double penaltySum(const Vector& beta, const PenaltySpec& spec) {
  double total = 0.0;
  for (int k = 0; k < beta.size(); ++k) total += scadValue(std::abs(beta[k]), spec);
  return total;
}

Vector gather(const Vector& v, const std::vector<int>& idx) {
  Vector out(idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) out[j] = v[idx[j]];
  return out;
}

// Zeroes coordinates below the threshold and drops them from `active`.
bool prune(Vector& beta, std::vector<int>& active, double threshold) {
  const auto before = active.size();
  std::erase_if(active, [&](int k) {
    if (std::abs(beta[k]) < threshold) {
      beta[k] = 0.0;
      return true;
    }
    return false;
  });
  return active.size() != before;
}

}  // namespace

double penalizedObjective(const SurveySample& sample, const Vector& beta, const PenaltySpec& spec) {
  return qifValue(sample, beta) + sample.n() * penaltySum(beta, spec);
}

FitResult fitPenalized(const SurveySample& sample, const PenaltySpec& spec, const Vector& init,
                       const PenalizedFitOptions& opts) {
  spec.validate();
  if (!init.allFinite()) throw ContractError("fitPenalized: non-finite initial value");
  const double n = sample.n();
  FitResult fit;
  fit.lambda = spec.lambda;
  Vector beta = init;
  std::vector<int> active(beta.size());
  std::iota(active.begin(), active.end(), 0);
  for (int k = 0; k < beta.size(); ++k) {
    if (std::abs(beta[k]) < spec.zero_threshold) beta[k] = 0.0;
  }
  prune(beta, active, spec.zero_threshold);

  double objective = 0.0;
  double grad_norm = 0.0;
  bool objective_known = false;
  for (int outer = 0; outer < opts.max_outer && !active.empty(); ++outer) {
    const QifState st = evaluateQif(sample, beta, QifDetail::Derivatives, std::span<const int>(active));
    const Vector b = gather(beta, active);
    const Vector gamma = lqaWeights(b, spec);
    Matrix h = st.hessian_lead;
    h.diagonal() += n * gamma;
    const Vector g = st.gradient + n * gamma.cwiseProduct(b);
    grad_norm = g.lpNorm<Eigen::Infinity>();
    objective = st.value + n * penaltySum(beta, spec);
    objective_known = true;

    const Eigen::LLT<Matrix> llt(h);
    if (llt.info() != Eigen::Success) throw NumericError("fitPenalized: LQA system is singular");
    const Vector step = -llt.solve(g);

    double t = 1.0;
    bool accepted = false;
    Vector trial = beta;
    double trial_objective = objective;
    for (int halving = 0; halving <= opts.max_halvings; ++halving, t *= 0.5) {
      trial = beta;
      for (std::size_t j = 0; j < active.size(); ++j) trial[active[j]] += t * step[j];
      trial_objective = penalizedObjective(sample, trial, spec);
      if (trial_objective <= objective) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      fit.converged = true;
      break;
    }
    const double step_norm = t * step.lpNorm<Eigen::Infinity>();
    beta = trial;
    objective = trial_objective;
    fit.iterations = outer + 1;
    fit.trace.push_back({objective, step_norm});
    const bool pruned = prune(beta, active, spec.zero_threshold);
    if (pruned) {
      objective_known = false;
      continue;
    }
    if (step_norm <= opts.tol) {
      fit.converged = true;
      break;
    }
  }
  if (active.empty()) {
    beta.setZero();
    fit.converged = true;
    grad_norm = 0.0;
    objective_known = false;
  }
  fit.beta = beta;
  fit.objective = objective_known ? objective : penalizedObjective(sample, beta, spec);
  fit.grad_norm = grad_norm;
  fit.active_set = activeSet(beta, spec.zero_threshold);
  return fit;
}

double wbic(double criterion, int n, int df) { return criterion + std::log(static_cast<double>(n)) * df; }

double findLambdaMax(const PenalizedFitter& fitter, double start, int bisections) {
  if (!(start > 0.0)) throw ContractError("findLambdaMax: start must be positive");
  auto all_zero = [&](double lambda) { return fitter(lambda).active_set.empty(); };
  double hi = start;
  double lo = 0.0;
  int guard = 0;
  if (all_zero(hi)) {
    lo = hi / 2.0;
    while (all_zero(lo)) {
      hi = lo;
      lo /= 2.0;
      if (++guard > 60) return hi;
    }
  } else {
    do {
      lo = hi;
      hi *= 2.0;
      if (++guard > 60) throw NumericError("findLambdaMax: no lambda prunes every coefficient");
    } while (!all_zero(hi));
  }
  for (int i = 0; i < bisections; ++i) {
    const double mid = std::sqrt(lo * hi);
    if (all_zero(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

std::vector<double> logGrid(double lambda_max, int size, double ratio) {
  if (!(lambda_max > 0.0) || size < 1) throw ContractError("logGrid: invalid arguments");
  std::vector<double> grid(size);
  if (size == 1) {
    grid[0] = lambda_max;
    return grid;
  }
  const double step = std::log(ratio) / (size - 1);
  for (int i = 0; i < size; ++i) grid[i] = lambda_max * std::exp(step * i);
  return grid;
}

LambdaSelection selectOnGrid(const std::vector<double>& grid, const PenalizedFitter& fitter,
                             const SelectionCriterion& criterion, int n) {
  if (grid.empty()) throw ContractError("selectOnGrid: empty grid");
  std::vector<double> ordered = grid;
  std::sort(ordered.begin(), ordered.end(), std::greater<>());
  LambdaSelection sel;
  int best = -1;
  for (double lambda : ordered) {
    LambdaPathEntry entry;
    entry.lambda = lambda;
    try {
      entry.fit = fitter(lambda);
      entry.criterion = criterion(entry.fit);
      entry.wbic = wbic(entry.criterion, n, static_cast<int>(entry.fit.active_set.size()));
      if (!std::isfinite(entry.wbic)) throw NumericError("non-finite criterion");
    } catch (const std::exception& e) {
      entry.failed = true;
      entry.error = e.what();
    }
    sel.path.push_back(entry);
    const int idx = static_cast<int>(sel.path.size()) - 1;
    if (!entry.failed && (best < 0 || entry.wbic < sel.path[best].wbic)) best = idx;
  }
  if (best < 0) {
    std::string msg = "every lambda fit failed:";
    for (const auto& e : sel.path) msg += " [" + std::to_string(e.lambda) + ": " + e.error + "]";
    throw NumericError(msg);
  }
  sel.lambda = sel.path[best].lambda;
  sel.fit = sel.path[best].fit;
  return sel;
}

LambdaSelection selectLambda(const SurveySample& sample, const PenalizedFitConfig& config) {
  config.validate();
  const Vector init = fitQif(sample, Vector::Zero(sample.dim())).beta;
  PenaltySpec spec = config.penalty;
  const PenalizedFitter fitter = [&](double lambda) {
    PenaltySpec s = spec;
    s.lambda = lambda;
    return fitPenalized(sample, s, init, config.fit);
  };
  std::vector<double> grid = config.lambda_grid;
  if (grid.empty()) {
    const double start = std::max(init.lpNorm<Eigen::Infinity>(), spec.zero_threshold);
    grid = logGrid(findLambdaMax(fitter, start), config.grid_size, config.grid_ratio);
  }
  const SelectionCriterion criterion = [&](const FitResult& fit) { return qifValue(sample, fit.beta); };
  return selectOnGrid(grid, fitter, criterion, sample.n());
}

std::vector<int> stackedRows(std::span<const int> cols, int d, int L) {
  std::vector<int> rows;
  rows.reserve(cols.size() * L);
  for (int eta = 0; eta < L; ++eta) {
    for (int k : cols) rows.push_back(eta * d + k);
  }
  return rows;
}

Matrix scoreVarianceEstimate(const SurveySample& sample, const Vector& beta,
                             std::span<const int> rows) {
  validateSample(sample);
  const int n = sample.n();
  if (n < 2) throw ContractError("scoreVarianceEstimate: needs at least two clusters");
  const std::vector<int> idx(rows.begin(), rows.end());
  const int r = static_cast<int>(idx.size());
  Matrix u(r, n);
  for (int i = 0; i < n; ++i) {
    const auto& rec = sample.clusters[i];
    const Vector qi = clusterScore(rec, beta, sample.model, sample.basis);
    for (int j = 0; j < r; ++j) u(j, i) = rec.weight * qi[idx[j]];
  }
  const Vector mean = u.rowwise().mean();
  u.colwise() -= mean;
  const double N = sample.population_size;
  const Matrix var_qn = (static_cast<double>(n) / (n - 1)) * (u * u.transpose()) / (N * N);
  return n * var_qn;
}

Matrix sandwichVariance(const SurveySample& sample, const FitResult& fit, const PenaltySpec& spec) {
  spec.validate();
  const std::vector<int>& active = fit.active_set;
  if (active.empty()) throw ContractError("sandwichVariance: fit has an empty active set");
  const int n = sample.n();
  const int d = sample.dim();
  const int L = sample.basis.size();
  const QifState st = evaluateQif(sample, fit.beta, QifDetail::Derivatives, std::span<const int>(active));
  const std::vector<int> rows = stackedRows(active, d, L);

  const Matrix D1 = st.D(rows, Eigen::all);
  Matrix C1 = st.C(rows, rows);
  C1.diagonal().array() += std::max(kRidgeScale * C1.trace() / C1.rows(), std::numeric_limits<double>::min());
  const Eigen::LLT<Matrix> llt(C1);
  if (llt.info() != Eigen::Success) throw NumericError("sandwichVariance: C_1n is not positive definite");
  const Matrix C1inv_D1 = llt.solve(D1);
  const Matrix sigma0 = scoreVarianceEstimate(sample, fit.beta, rows);
  const Matrix V = 4.0 * C1inv_D1.transpose() * sigma0 * C1inv_D1;

  Matrix bracket = st.hessian_lead / n;
  for (std::size_t j = 0; j < active.size(); ++j)
    bracket(j, j) += scadSecondDerivative(std::abs(fit.beta[active[j]]), spec);
  const Eigen::JacobiSVD<Matrix> svd(bracket);
  const Vector sv = svd.singularValues();
  const double cond = sv[0] / sv[sv.size() - 1];
  if (!(sv[sv.size() - 1] > 0.0) || !(cond < 1e12))
    throw NumericError("sandwichVariance: bracket matrix is singular (condition number " +
                       std::to_string(cond) + ")");
  const Matrix inv = bracket.inverse();
  Matrix var = inv * V * inv.transpose() / n;
  return 0.5 * (var + var.transpose());
}

}  // namespace svyqif
