#include "svyqif/campaign.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "svyqif/bootstrap.hpp"
#include "svyqif/errors.hpp"
#include "svyqif/rng.hpp"

namespace svyqif {

std::string toString(Method m) {
  switch (m) {
    case Method::Unweighted: return "UNWGT";
    case Method::Pqif: return "PQIF";
    case Method::Pgee: return "PGEE";
    case Method::Oracle: return "ORACLE";
    case Method::Qif: return "QIF";
  }
  return "?";
}

Method parseMethod(const std::string& text) {
  std::string up;
  for (char c : text) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (up == "UNWGT") return Method::Unweighted;
  if (up == "PQIF") return Method::Pqif;
  if (up == "PGEE") return Method::Pgee;
  if (up == "ORACLE") return Method::Oracle;
  if (up == "QIF") return Method::Qif;
  throw ContractError("unknown method '" + text + "'");
}

int CampaignConfig::trueModelSize() const {
  int d1 = 0;
  while (d1 < population.beta0.size() && population.beta0[d1] != 0.0) ++d1;
  return d1;
}

void CampaignConfig::validate() const {
  population.validate();
  const int d1 = trueModelSize();
  for (int k = d1; k < population.beta0.size(); ++k) {
    if (population.beta0[k] != 0.0)
      throw ContractError("campaign: nonzero true coefficients must come first in beta0");
  }
  if (d1 == 0) throw ContractError("campaign: beta0 has no nonzero coefficient");
  if (replicates < 1) throw ContractError("campaign: replicates must be positive");
  if (sample_sizes.empty() || methods.empty() || correlations.empty())
    throw ContractError("campaign: sample sizes, methods and correlations must be nonempty");
  for (int n : sample_sizes) {
    if (n < 2) throw ContractError("campaign: sample sizes must be at least 2");
  }
  if (bootstrap && bootstrap_replicates < 2) throw ContractError("campaign: bootstrap needs B >= 2");
  if (threads < 1) throw ContractError("campaign: threads must be positive");
  if (!(max_failure_rate >= 0.0 && max_failure_rate <= 1.0))
    throw ContractError("campaign: failure rate must lie in [0, 1]");
  penalty.validate();
}

const CellSummary* SimulationReport::find(int n, Method m, CorrelationKind c) const {
  for (const auto& cell : cells) {
    if (cell.n == n && cell.method == m && cell.correlation == c) return &cell;
  }
  return nullptr;
}

namespace {

struct CellKey {
  int n;
  Method method;
  CorrelationKind correlation;
};

std::vector<CellKey> cellKeys(const CampaignConfig& cfg) {
  std::vector<CellKey> keys;
  for (int n : cfg.sample_sizes) {
    for (Method m : cfg.methods) {
      for (CorrelationKind c : cfg.correlations) keys.push_back({n, m, c});
    }
  }
  return keys;
}

Vector spreadOver(const Vector& values, const std::vector<int>& idx, int d) {
  Vector out = Vector::Constant(d, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j = 0; j < idx.size(); ++j) out[idx[j]] = values[j];
  return out;
}

ReplicateOutcome runMethod(const CampaignConfig& cfg, const SurveySample& sample, Method method,
                           CorrelationKind corr, int h) {
  ReplicateOutcome out;
  out.replicate = h;
  const int d = sample.dim();
  const int d1 = cfg.trueModelSize();
  switch (method) {
    case Method::Unweighted: {
      const LambdaSelection sel = selectLambda(unweighted(sample), cfg.penalty);
      out.estimate = sel.fit.beta;
      out.lambda = sel.lambda;
      break;
    }
    case Method::Pqif: {
      const LambdaSelection sel = selectLambda(sample, cfg.penalty);
      out.estimate = sel.fit.beta;
      out.lambda = sel.lambda;
      if (!sel.fit.active_set.empty()) {
        PenaltySpec spec = cfg.penalty.penalty;
        spec.lambda = sel.lambda;
        if (cfg.sandwich) {
          const Matrix var = sandwichVariance(sample, sel.fit, spec);
          out.sandwich_se = spreadOver(var.diagonal().cwiseMax(0.0).cwiseSqrt(), sel.fit.active_set, d);
        }
        if (cfg.bootstrap) {
          BootstrapPlan plan;
          plan.B = cfg.bootstrap_replicates;
          plan.seed = makeStream(cfg.seed, {3, static_cast<std::uint64_t>(h),
                                            static_cast<std::uint64_t>(sample.n()),
                                            static_cast<std::uint64_t>(corr)})();
          const BootstrapResult boot = bootstrapVariance(sample, sel.fit, spec, plan);
          out.bootstrap_se =
              spreadOver(boot.variance.diagonal().cwiseMax(0.0).cwiseSqrt(), sel.fit.active_set, d);
        }
      }
      break;
    }
    case Method::Pgee: {
      GeeConfig gee;
      gee.structure = {corr, sample.clusterSize()};
      const LambdaSelection sel = selectLambdaGee(sample, cfg.penalty, gee);
      out.estimate = sel.fit.beta;
      out.lambda = sel.lambda;
      break;
    }
    case Method::Oracle: {
      std::vector<int> cols(d1);
      for (int k = 0; k < d1; ++k) cols[k] = k;
      const SurveySample sub = selectColumns(sample, cols);
      const FitResult fit = fitQif(sub, Vector::Zero(d1));
      out.estimate = Vector::Zero(d);
      out.estimate.head(d1) = fit.beta;
      if (cfg.sandwich && !fit.active_set.empty()) {
        PenaltySpec spec = cfg.penalty.penalty;
        spec.lambda = 0.0;
        const Matrix var = sandwichVariance(sub, fit, spec);
        out.sandwich_se = Vector::Constant(d, std::numeric_limits<double>::quiet_NaN());
        for (std::size_t j = 0; j < fit.active_set.size(); ++j)
          (*out.sandwich_se)[fit.active_set[j]] = std::sqrt(std::max(var(j, j), 0.0));
      }
      break;
    }
    case Method::Qif: {
      const FitResult fit = fitQif(sample, Vector::Zero(d));
      out.estimate = fit.beta;
      break;
    }
  }
  if (!out.estimate.allFinite()) throw NumericError("non-finite estimate");
  out.ok = true;
  return out;
}

std::vector<ReplicateOutcome> runReplicate(const CampaignConfig& cfg, const std::vector<CellKey>& keys,
                                           int h) {
  std::vector<ReplicateOutcome> outcomes(keys.size());
  for (auto& o : outcomes) o.replicate = h;
  FinitePopulation pop;
  try {
    Rng rng = makeStream(cfg.seed, {1, static_cast<std::uint64_t>(h)});
    pop = generatePopulation(cfg.population, rng);
  } catch (const std::exception& e) {
    for (auto& o : outcomes) o.error = std::string("population: ") + e.what();
    return outcomes;
  }
  for (int n : cfg.sample_sizes) {
    Rng rng = makeStream(cfg.seed, {2, static_cast<std::uint64_t>(h), static_cast<std::uint64_t>(n)});
    const SurveySample base = drawSamplePpswr(pop, n, rng);
    for (CorrelationKind corr : cfg.correlations) {
      SurveySample sample = base;
      sample.basis = basisMatrices({corr, cfg.population.m});
      for (std::size_t c = 0; c < keys.size(); ++c) {
        if (keys[c].n != n || keys[c].correlation != corr) continue;
        try {
          outcomes[c] = runMethod(cfg, sample, keys[c].method, corr, h);
        } catch (const std::exception& e) {
          outcomes[c].ok = false;
          outcomes[c].error = e.what();
        }
      }
    }
  }
  return outcomes;
}

}  // namespace

void summarizeCell(CellSummary& cell, const Vector& beta0, int d1) {
  std::vector<Vector> estimates;
  std::vector<Vector> boot;
  int correct = 0, over = 0, under = 0;
  cell.failures = 0;
  for (const auto& o : cell.outcomes) {
    if (!o.ok) {
      ++cell.failures;
      continue;
    }
    estimates.push_back(o.estimate);
    if (o.bootstrap_se) boot.push_back(*o.bootstrap_se);
    switch (classifySelection(o.estimate, d1)) {
      case Selection::Correct: ++correct; break;
      case Selection::Over: ++over; break;
      case Selection::Under: ++under; break;
    }
  }
  cell.used = static_cast<int>(estimates.size());
  cell.arb.clear();
  cell.sd.clear();
  cell.sd_m.clear();
  cell.sd_mad.clear();
  cell.coverage.clear();
  if (cell.used == 0) return;
  const double denom = cell.used;
  cell.correct = 100.0 * correct / denom;
  cell.over = 100.0 * over / denom;
  cell.under = 100.0 * under / denom;
  cell.mse = computeMse(estimates, beta0);
  bool any_sandwich = false;
  for (const auto& o : cell.outcomes) any_sandwich = any_sandwich || (o.ok && o.sandwich_se);
  for (int k = 0; k < d1; ++k) {
    cell.arb.push_back(computeArb(estimates, beta0, k));
    if (cell.used >= 2) {
      const RobustSd r = robustSdSuite(estimates, boot, k);
      cell.sd.push_back(r.sd);
      if (!boot.empty()) {
        cell.sd_m.push_back(r.sd_m);
        cell.sd_mad.push_back(r.sd_mad);
      }
    }
    if (any_sandwich) {
      int covered = 0;
      for (const auto& o : cell.outcomes) {
        if (!o.ok || !o.sandwich_se) continue;
        const double se = (*o.sandwich_se)[k];
        if (std::isfinite(se) && std::abs(o.estimate[k] - beta0[k]) <= 1.959963984540054 * se) ++covered;
      }
      cell.coverage.push_back(100.0 * covered / denom);
    }
  }
}

SimulationReport runCampaign(const CampaignConfig& cfg) {
  cfg.validate();
  const std::vector<CellKey> keys = cellKeys(cfg);
  const int H = cfg.replicates;
  std::vector<std::vector<ReplicateOutcome>> results(H);

  std::atomic<int> next{0};
  auto worker = [&] {
    for (int h = next++; h < H; h = next++) results[h] = runReplicate(cfg, keys, h);
  };
  const int workers = std::min(cfg.threads, H);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  SimulationReport report;
  report.replicates = H;
  report.true_model_size = cfg.trueModelSize();
  report.beta0 = cfg.population.beta0;
  report.bootstrap_replicates = cfg.bootstrap ? cfg.bootstrap_replicates : 0;
  for (std::size_t c = 0; c < keys.size(); ++c) {
    CellSummary cell;
    cell.n = keys[c].n;
    cell.method = keys[c].method;
    cell.correlation = keys[c].correlation;
    for (int h = 0; h < H; ++h) cell.outcomes.push_back(std::move(results[h][c]));
    summarizeCell(cell, report.beta0, report.true_model_size);
    if (cell.failures > cfg.max_failure_rate * H) {
      std::string first_error;
      for (const auto& o : cell.outcomes) {
        if (!o.ok) {
          first_error = o.error;
          break;
        }
      }
      throw NumericError("campaign aborted: " + toString(cell.method) + "/" + toString(cell.correlation) +
                         " n=" + std::to_string(cell.n) + " failed on " + std::to_string(cell.failures) +
                         " of " + std::to_string(H) + " replicates (first error: " + first_error + ")");
    }
    report.cells.push_back(std::move(cell));
  }
  return report;
}

}  // namespace svyqif
