#include "svyqif/bootstrap.hpp"

#include <random>

#include "svyqif/errors.hpp"
#include "svyqif/rng.hpp"

namespace svyqif {

Vector rescaledBootstrapWeights(const SurveySample& sample, const BootstrapPlan& plan, int b) {
  const int n = sample.n();
  if (n < 2) throw ContractError("bootstrap needs at least two sampled units");
  Rng rng = makeStream(plan.seed, {0xB007ULL, static_cast<std::uint64_t>(b)});
  std::uniform_int_distribution<int> pick(0, n - 1);
  Vector counts = Vector::Zero(n);
  for (int draw = 0; draw < n - 1; ++draw) counts[pick(rng)] += 1.0;
  Vector w(n);
  const double factor = static_cast<double>(n) / (n - 1);
  for (int i = 0; i < n; ++i) w[i] = sample.clusters[i].weight * factor * counts[i];
  return w;
}

std::optional<Vector> bootstrapOneStep(const SurveySample& sample, const FitResult& fit,
                                       const PenaltySpec& spec, const Vector& boot_weights) {
  const std::vector<int>& active = fit.active_set;
  if (active.empty()) throw ContractError("bootstrapOneStep: fit has an empty active set");
  const SurveySample replicate = withWeights(sample, boot_weights);
  const double n = sample.n();
  Vector b(active.size());
  for (std::size_t j = 0; j < active.size(); ++j) b[j] = fit.beta[active[j]];
  const Vector gamma = lqaWeights(b, spec);
  try {
    const QifState st =
        evaluateQif(replicate, fit.beta, QifDetail::Derivatives, std::span<const int>(active));
    Matrix h = qifHessian(replicate, fit.beta, active);
    h.diagonal() += n * gamma;
    const Vector g = st.gradient + n * gamma.cwiseProduct(b);
    const Eigen::LLT<Matrix> llt(h);
    if (llt.info() != Eigen::Success) return std::nullopt;
    Vector out = b - llt.solve(g);
    if (!out.allFinite()) return std::nullopt;
    return out;
  } catch (const NumericError&) {
    return std::nullopt;
  }
}

Matrix replicateVariance(const std::vector<Vector>& replicates, const Vector& center) {
  Matrix v = Matrix::Zero(center.size(), center.size());
  for (const auto& r : replicates) {
    const Vector dev = r - center;
    v.noalias() += dev * dev.transpose();
  }
  if (!replicates.empty()) v /= static_cast<double>(replicates.size());
  return v;
}

BootstrapResult bootstrapVariance(const SurveySample& sample, const FitResult& fit,
                                  const PenaltySpec& spec, const BootstrapPlan& plan) {
  if (plan.B < 2) throw ContractError("bootstrapVariance: needs B >= 2");
  std::vector<Vector> reps;
  reps.reserve(plan.B);
  BootstrapResult res;
  for (int b = 0; b < plan.B; ++b) {
    const Vector w = rescaledBootstrapWeights(sample, plan, b);
    auto step = bootstrapOneStep(sample, fit, spec, w);
    if (step) {
      reps.push_back(std::move(*step));
    } else {
      ++res.excluded;
    }
  }
  res.effective_B = static_cast<int>(reps.size());
  if (res.effective_B < 2) throw NumericError("bootstrapVariance: fewer than two valid replicates");
  Vector center(fit.active_set.size());
  for (std::size_t j = 0; j < fit.active_set.size(); ++j) center[j] = fit.beta[fit.active_set[j]];
  res.variance = replicateVariance(reps, center);
  return res;
}

}  // namespace svyqif
