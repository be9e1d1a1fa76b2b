#include "svyqif/population.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "svyqif/copula.hpp"
#include "svyqif/errors.hpp"

namespace svyqif {

void PopulationConfig::validate() const {
  if (N < 1) throw ContractError("population: N must be positive");
  if (m < 1) throw ContractError("population: m must be positive");
  if (d < 1 || beta0.size() != d) throw ContractError("population: beta0 must have d entries");
  if (!(alpha_true >= 0.0 && alpha_true < 1.0)) throw ContractError("population: alpha_true must lie in [0, 1)");
  if (!(x_high > x_low)) throw ContractError("population: empty covariate range");
}

FinitePopulation generatePopulation(const PopulationConfig& cfg, Rng& rng) {
  cfg.validate();
  const int m = cfg.m;
  std::uniform_real_distribution<double> unif(cfg.x_low, cfg.x_high);
  std::normal_distribution<double> gauss(0.0, 1.0);

  FinitePopulation pop;
  pop.clusters.resize(cfg.N);
  pop.size_measures.resize(cfg.N);
  Matrix latent(m, m);
  Vector threshold(m), z(m), mu(m);
  for (int i = 0; i < cfg.N; ++i) {
    ClusterRecord& rec = pop.clusters[i];
    rec.id = std::to_string(i + 1);
    rec.weight = 1.0;
    rec.x.resize(m, cfg.d);
    for (int j = 0; j < m; ++j) {
      for (int k = 0; k < cfg.d; ++k) rec.x(j, k) = unif(rng);
    }
    for (int j = 0; j < m; ++j) {
      mu[j] = linkInverse(rec.x.row(j).dot(cfg.beta0));
      threshold[j] = normalQuantile(mu[j]);
    }
    latent.setIdentity();
    if (cfg.alpha_true > 0.0) {
      for (int j = 0; j < m; ++j) {
        for (int l = j + 1; l < m; ++l) {
          try {
            latent(j, l) = latent(l, j) = latentCorrelation(mu[j], mu[l], cfg.alpha_true);
          } catch (const NumericError& e) {
            throw NumericError("population cluster " + rec.id + ", occasions " + std::to_string(j + 1) +
                               " and " + std::to_string(l + 1) + ": " + e.what());
          }
        }
      }
    }
    const Eigen::LLT<Matrix> llt(latent);
    if (llt.info() != Eigen::Success)
      throw NumericError("population cluster " + rec.id + ": calibrated latent correlation is not positive definite");
    for (int j = 0; j < m; ++j) z[j] = gauss(rng);
    const Vector latent_draw = llt.matrixL() * z;
    rec.y.resize(m);
    int total = 0;
    for (int j = 0; j < m; ++j) {
      rec.y[j] = latent_draw[j] <= threshold[j] ? 1.0 : 0.0;
      total += static_cast<int>(rec.y[j]);
    }
    pop.size_measures[i] = total + 1;
  }
  return pop;
}

int drawProportional(const std::vector<double>& cumulative, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, cumulative.back());
  const double u = unif(rng);
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                   static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
}

SurveySample drawSamplePpswr(const FinitePopulation& pop, int n, Rng& rng, const BasisSet& basis) {
  if (n < 1) throw ContractError("drawSamplePpswr: n must be positive");
  if (pop.clusters.empty() || pop.size_measures.size() != pop.clusters.size())
    throw ContractError("drawSamplePpswr: malformed population");
  std::vector<double> cumulative(pop.size_measures.size());
  double total = 0.0;
  for (std::size_t i = 0; i < cumulative.size(); ++i) {
    total += pop.size_measures[i];
    cumulative[i] = total;
  }
  SurveySample sample;
  sample.population_size = static_cast<double>(pop.clusters.size());
  sample.basis = basis;
  sample.clusters.reserve(n);
  for (int draw = 0; draw < n; ++draw) {
    const int i = drawProportional(cumulative, rng);
    ClusterRecord rec = pop.clusters[i];
    const double p = pop.size_measures[i] / total;
    rec.weight = 1.0 / (n * p);
    sample.clusters.push_back(std::move(rec));
  }
  return sample;
}

}  // namespace svyqif
