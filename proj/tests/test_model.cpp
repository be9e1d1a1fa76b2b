#include <doctest.h>

#include <cmath>
#include <random>

#include "svyqif/errors.hpp"
#include "svyqif/model.hpp"

using namespace svyqif;

namespace {

ClusterRecord randomCluster(std::mt19937_64& rng, int m, int d) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ClusterRecord rec;
  rec.y = Vector::Zero(m);
  rec.x = Matrix(m, d);
  for (int j = 0; j < m; ++j) {
    rec.y[j] = u(rng) > 0 ? 1.0 : 0.0;
    for (int k = 0; k < d; ++k) rec.x(j, k) = u(rng);
  }
  rec.id = "r";
  return rec;
}

}  // namespace

TEST_CASE("logistic inverse link closed forms") {
  CHECK(linkInverse(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(linkInverse(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(linkInverse(-std::log(3.0)) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(linkInverse(1e4) < 1.0);
  CHECK(linkInverse(-1e4) > 0.0);
}

TEST_CASE("zero covariates or zero beta give mean one half") {
  ClusterRecord rec;
  rec.y = Vector::Zero(4);
  rec.x = Matrix::Zero(4, 3);
  const auto ev = evaluateCluster(rec, Vector::Constant(3, 2.5), MarginalModel{});
  for (int j = 0; j < 4; ++j) {
    CHECK(ev.mu[j] == 0.5);
    CHECK(ev.a_diag[j] == 0.25);
  }
  std::mt19937_64 rng(3);
  const ClusterRecord r2 = randomCluster(rng, 5, 2);
  const auto ev2 = evaluateCluster(r2, Vector::Zero(2), MarginalModel{});
  for (int j = 0; j < 5; ++j) CHECK(ev2.mu[j] == 0.5);
}

TEST_CASE("mean Jacobian matches central differences") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  const double h = 1e-5;
  for (int rep = 0; rep < 50; ++rep) {
    const ClusterRecord rec = randomCluster(rng, 3, 2);
    Vector beta(2);
    beta << g(rng), g(rng);
    const auto ev = evaluateCluster(rec, beta, MarginalModel{});
    Matrix fd(3, 2);
    for (int k = 0; k < 2; ++k) {
      Vector bp = beta, bm = beta;
      bp[k] += h;
      bm[k] -= h;
      fd.col(k) = (evaluateCluster(rec, bp, MarginalModel{}).mu - evaluateCluster(rec, bm, MarginalModel{}).mu) /
                  (2 * h);
    }
    const double jac_norm = ev.jac.cwiseAbs().rowwise().sum().maxCoeff();
    CHECK((ev.jac - fd).cwiseAbs().maxCoeff() / (1.0 + jac_norm) < 1e-6);
    for (int j = 0; j < 3; ++j) {
      CHECK(ev.mu[j] > 0.0);
      CHECK(ev.mu[j] < 1.0);
      CHECK(ev.a_diag[j] == doctest::Approx(ev.mu[j] * (1 - ev.mu[j])));
      CHECK(ev.a_diag[j] <= 0.25);
    }
  }
}

TEST_CASE("cluster validation rejects broken records") {
  ClusterRecord rec;
  rec.y = Vector::Zero(2);
  rec.x = Matrix::Zero(2, 1);
  CHECK_NOTHROW(validateCluster(rec));
  ClusterRecord bad = rec;
  bad.weight = 0.0;
  CHECK_THROWS_AS(validateCluster(bad), ContractError);
  bad = rec;
  bad.y[0] = 0.5;
  CHECK_THROWS_AS(validateCluster(bad), ContractError);
  CHECK_NOTHROW(validateCluster(bad, false));
  bad = rec;
  bad.x(1, 0) = std::nan("");
  CHECK_THROWS_AS(validateCluster(bad), ContractError);
  CHECK_THROWS_AS(evaluateCluster(rec, Vector::Zero(3), MarginalModel{}), ContractError);
}
