#include "svyqif/qif.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "svyqif/errors.hpp"

namespace svyqif {

void validateSample(const SurveySample& sample) {
  if (sample.n() < 1) throw ContractError("sample has no clusters");
  if (!(sample.population_size >= sample.n()))
    throw ContractError("population size must be at least the number of sampled clusters");
  if (sample.basis.size() < 1) throw ContractError("sample has no basis matrices");
  const int d = sample.dim();
  const int m = sample.basis.dim();
  bool any_positive = false;
  for (const auto& rec : sample.clusters) {
    if (!(rec.weight >= 0.0) || !std::isfinite(rec.weight))
      throw ContractError("cluster " + rec.id + ": weight must be nonnegative");
    if (rec.weight > 0.0) {
      any_positive = true;
      validateCluster(rec, false);
    } else {
      ClusterRecord probe = rec;
      probe.weight = 1.0;
      validateCluster(probe, false);
    }
    if (rec.dim() != d) throw ContractError("cluster " + rec.id + ": covariate dimension differs");
    if (rec.size() != m)
      throw ContractError("cluster " + rec.id + ": size " + std::to_string(rec.size()) +
                          " does not match basis dimension " + std::to_string(m));
  }
  if (!any_positive) throw ContractError("sample has no cluster with positive weight");
  if (!(sample.model.dispersion > 0.0)) throw ContractError("dispersion must be positive");
}

SurveySample unweighted(const SurveySample& sample) {
  SurveySample out = sample;
  for (auto& rec : out.clusters) rec.weight = 1.0;
  out.population_size = out.n();
  return out;
}

SurveySample selectColumns(const SurveySample& sample, std::span<const int> cols) {
  SurveySample out = sample;
  const std::vector<int> idx(cols.begin(), cols.end());
  for (auto& rec : out.clusters) {
    Matrix x = rec.x(Eigen::all, idx);
    rec.x = std::move(x);
  }
  return out;
}

SurveySample withWeights(const SurveySample& sample, const Vector& weights) {
  if (weights.size() != sample.n()) throw ContractError("withWeights: length mismatch");
  SurveySample out = sample;
  for (int i = 0; i < out.n(); ++i) out.clusters[i].weight = weights[i];
  return out;
}

namespace {

// Per-observation quantities of the logit model, written into column i.
struct ObservationTerms {
  Matrix sigma;   // sqrt(mu (1 - mu))
  Matrix resid;   // Pearson residual (y - mu) / sigma
  Matrix dsigma;  // d sigma / d eta
  Matrix dresid;  // d resid / d eta
};

void fillTerms(const ClusterRecord& rec, const Vector& beta, int i, ObservationTerms& t) {
  const Vector eta = rec.x * beta;
  for (int j = 0; j < rec.size(); ++j) {
    const double mu = linkInverse(eta[j]);
    const double var = mu * (1.0 - mu);
    if (!(var > 0.0)) throw NumericError("cluster " + rec.id + ": non-positive variance");
    const double s = std::sqrt(var);
    const double r = (rec.y[j] - mu) / s;
    t.sigma(j, i) = s;
    t.resid(j, i) = r;
    t.dsigma(j, i) = 0.5 * (1.0 - 2.0 * mu) * s;
    t.dresid(j, i) = -s - 0.5 * r * (1.0 - 2.0 * mu);
  }
}

Vector stackedScore(const Matrix& x, const Eigen::Ref<const Vector>& sigma,
                    const Eigen::Ref<const Vector>& resid, const BasisSet& basis, double scale) {
  const int d = static_cast<int>(x.cols());
  Vector q(basis.size() * d);
  for (int l = 0; l < basis.size(); ++l) {
    q.segment(l * d, d) = scale * (x.transpose() * sigma.cwiseProduct(basis.bases[l] * resid));
  }
  return q;
}

// dq_i / dbeta_cols, Ld x |cols|.
Matrix stackedJacobian(const Matrix& x, const Matrix& xc, const Eigen::Ref<const Vector>& sigma,
                       const Eigen::Ref<const Vector>& resid, const Eigen::Ref<const Vector>& dsigma,
                       const Eigen::Ref<const Vector>& dresid, const BasisSet& basis,
                       double scale) {
  const int d = static_cast<int>(x.cols());
  const int p = static_cast<int>(xc.cols());
  Matrix out(basis.size() * d, p);
  const Matrix bx = dresid.asDiagonal() * xc;
  for (int l = 0; l < basis.size(); ++l) {
    const Matrix& M = basis.bases[l];
    const Vector u = M * resid;
    const Matrix inner = dsigma.cwiseProduct(u).asDiagonal() * xc + sigma.asDiagonal() * (M * bx);
    out.middleRows(l * d, d) = scale * (x.transpose() * inner);
  }
  return out;
}

}  // namespace

QifState evaluateQif(const SurveySample& sample, const Vector& beta, QifDetail detail,
                     std::optional<std::span<const int>> cols) {
  validateSample(sample);
  const int n = sample.n();
  const int d = sample.dim();
  const int m = sample.clusterSize();
  const int L = sample.basis.size();
  const int Ld = L * d;
  if (beta.size() != d)
    throw ContractError("evaluateQif: beta has " + std::to_string(beta.size()) + " entries, expected " +
                        std::to_string(d));
  const double invN = 1.0 / sample.population_size;
  const double scale = 1.0 / sample.model.dispersion;

  QifState st;
  st.beta = beta;
  if (cols) {
    st.cols.assign(cols->begin(), cols->end());
  } else {
    st.cols.resize(d);
    std::iota(st.cols.begin(), st.cols.end(), 0);
  }

  ObservationTerms t{Matrix(m, n), Matrix(m, n), Matrix(m, n), Matrix(m, n)};
  Matrix scores(Ld, n);
  st.q = Vector::Zero(Ld);
  st.C = Matrix::Zero(Ld, Ld);
  for (int i = 0; i < n; ++i) {
    const ClusterRecord& rec = sample.clusters[i];
    fillTerms(rec, beta, i, t);
    scores.col(i) = stackedScore(rec.x, t.sigma.col(i), t.resid.col(i), sample.basis, scale);
    st.q.noalias() += rec.weight * scores.col(i);
    st.C.selfadjointView<Eigen::Lower>().rankUpdate(scores.col(i), rec.weight);
  }
  st.q *= invN;
  st.C = st.C.selfadjointView<Eigen::Lower>();
  st.C *= invN;

  const double trace = st.C.trace();
  st.ridge = std::max(kRidgeScale * trace / Ld, std::numeric_limits<double>::min());
  Matrix regularized = st.C;
  regularized.diagonal().array() += st.ridge;
  const Eigen::LLT<Matrix> llt(regularized);
  if (llt.info() != Eigen::Success) throw NumericError("evaluateQif: C_n is not positive definite");
  st.Cinv = llt.solve(Matrix::Identity(Ld, Ld));
  const Vector v = st.Cinv * st.q;
  st.value = n * st.q.dot(v);
  if (!std::isfinite(st.value)) throw NumericError("evaluateQif: non-finite objective");
  if (st.value < 0.0) {
    if (st.value < -1e-10 * (1.0 + st.q.squaredNorm() / st.ridge))
      throw NumericError("evaluateQif: negative quadratic form");
    st.value = 0.0;
  }
  if (detail == QifDetail::Value) return st;

  const int p = static_cast<int>(st.cols.size());
  st.D = Matrix::Zero(Ld, p);
  Vector correction = Vector::Zero(p);  // sum_i w_i (q_i.v) D_i^T v
  if (detail == QifDetail::Full) st.G.assign(p, Matrix::Zero(Ld, Ld));
  for (int i = 0; i < n; ++i) {
    const ClusterRecord& rec = sample.clusters[i];
    const Matrix xc = rec.x(Eigen::all, st.cols);
    const Matrix Di = stackedJacobian(rec.x, xc, t.sigma.col(i), t.resid.col(i), t.dsigma.col(i),
                                      t.dresid.col(i), sample.basis, scale);
    st.D.noalias() += rec.weight * Di;
    const double qv = scores.col(i).dot(v);
    correction.noalias() += (rec.weight * qv) * (Di.transpose() * v);
    if (detail == QifDetail::Full) {
      for (int k = 0; k < p; ++k) {
        st.G[k].noalias() += rec.weight * (Di.col(k) * scores.col(i).transpose() +
                                           scores.col(i) * Di.col(k).transpose());
      }
    }
  }
  st.D *= invN;
  for (auto& g : st.G) g *= invN;
  st.gradient = n * (2.0 * st.D.transpose() * v - 2.0 * invN * correction);
  st.hessian_lead = 2.0 * n * st.D.transpose() * st.Cinv * st.D;
  st.hessian_lead = 0.5 * (st.hessian_lead + st.hessian_lead.transpose()).eval();
  return st;
}

Vector clusterScore(const ClusterRecord& rec, const Vector& beta, const MarginalModel& model,
                    const BasisSet& basis) {
  if (basis.size() < 1 || basis.dim() != rec.size())
    throw ContractError("clusterScore: basis dimension does not match cluster size");
  const ClusterEvaluation ev = evaluateCluster(rec, beta, model);
  const int m = rec.size();
  Vector inv_sqrt_a(m);
  for (int j = 0; j < m; ++j) {
    if (!(ev.a_diag[j] > 0.0)) throw NumericError("clusterScore: non-positive variance");
    inv_sqrt_a[j] = 1.0 / std::sqrt(ev.a_diag[j]);
  }
  const Vector scaled_resid = inv_sqrt_a.cwiseProduct(rec.y - ev.mu);
  const Matrix left = ev.jac.transpose() * inv_sqrt_a.asDiagonal();
  const int d = rec.dim();
  Vector q(basis.size() * d);
  for (int l = 0; l < basis.size(); ++l) q.segment(l * d, d) = left * (basis.bases[l] * scaled_resid);
  return q;
}

Vector weightedScore(const SurveySample& sample, const Vector& beta) {
  return evaluateQif(sample, beta, QifDetail::Value).q;
}

Matrix scoreCovariance(const SurveySample& sample, const Vector& beta) {
  return evaluateQif(sample, beta, QifDetail::Value).C;
}

double qifValue(const SurveySample& sample, const Vector& beta) {
  return evaluateQif(sample, beta, QifDetail::Value).value;
}

Vector qifGradient(const SurveySample& sample, const Vector& beta) {
  return evaluateQif(sample, beta, QifDetail::Derivatives).gradient;
}

Matrix qifHessianLead(const SurveySample& sample, const Vector& beta) {
  return evaluateQif(sample, beta, QifDetail::Derivatives).hessian_lead;
}

Matrix qifHessian(const SurveySample& sample, const Vector& beta, std::span<const int> cols) {
  const int a = static_cast<int>(cols.size());
  Matrix h(a, a);
  for (int j = 0; j < a; ++j) {
    const double step = 1e-5 * std::max(1.0, std::abs(beta[cols[j]]));
    Vector up = beta, down = beta;
    up[cols[j]] += step;
    down[cols[j]] -= step;
    h.col(j) = (evaluateQif(sample, up, QifDetail::Derivatives, cols).gradient -
                evaluateQif(sample, down, QifDetail::Derivatives, cols).gradient) /
               (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

std::vector<int> activeSet(const Vector& beta, double threshold) {
  std::vector<int> out;
  for (int k = 0; k < beta.size(); ++k) {
    const double a = std::abs(beta[k]);
    if (threshold > 0.0 ? a >= threshold : a > 0.0) out.push_back(k);
  }
  return out;
}

namespace {

Vector solveSpd(const Matrix& h, const Vector& rhs) {
  Eigen::LLT<Matrix> llt(h);
  if (llt.info() == Eigen::Success) return llt.solve(rhs);
  const double scale = h.diagonal().cwiseAbs().maxCoeff();
  for (int k = 0; k < h.rows(); ++k) {
    if (!(h(k, k) > 1e-14 * scale))
      throw NumericError("Newton system is singular: no information on coefficient " + std::to_string(k + 1));
  }
  Matrix damped = h;
  damped.diagonal().array() += 1e-10 * std::max(h.trace() / h.rows(), 1e-300);
  llt.compute(damped);
  if (llt.info() != Eigen::Success) throw NumericError("Newton system is singular");
  return llt.solve(rhs);
}

}  // namespace

FitResult fitQif(const SurveySample& sample, const Vector& init, const QifFitOptions& opts) {
  if (!init.allFinite()) throw ContractError("fitQif: non-finite initial value");
  FitResult fit;
  Vector beta = init;
  QifState st = evaluateQif(sample, beta, QifDetail::Derivatives);
  for (int it = 0; it < opts.max_iter; ++it) {
    const double gnorm = st.gradient.lpNorm<Eigen::Infinity>();
    const bool grad_ok = gnorm <= opts.grad_tol * (1.0 + std::abs(st.value));
    const Vector step = -solveSpd(st.hessian_lead, st.gradient);
    const double step_norm = step.lpNorm<Eigen::Infinity>();
    if (grad_ok && step_norm <= opts.step_tol) break;

    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h, t *= 0.5) {
      const Vector trial = beta + t * step;
      const double value = evaluateQif(sample, trial, QifDetail::Value).value;
      if (value <= st.value) {
        beta = trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    st = evaluateQif(sample, beta, QifDetail::Derivatives);
    fit.trace.push_back({st.value, t * step_norm});
    fit.iterations = it + 1;
  }
  fit.beta = beta;
  fit.objective = st.value;
  fit.grad_norm = st.gradient.lpNorm<Eigen::Infinity>();
  fit.converged = fit.grad_norm <= opts.grad_tol * (1.0 + std::abs(st.value));
  fit.active_set = activeSet(beta, 0.0);
  return fit;
}

}  // namespace svyqif
