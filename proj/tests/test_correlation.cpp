#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "svyqif/correlation.hpp"
#include "svyqif/errors.hpp"

using namespace svyqif;

TEST_CASE("exchangeable basis for m = 5") {
  const BasisSet b = basisMatrices({CorrelationKind::Exchangeable, 5});
  REQUIRE(b.size() == 2);
  CHECK(b.bases[0].isApprox(Matrix::Identity(5, 5)));
  Matrix m2 = Matrix::Ones(5, 5);
  m2.diagonal().setZero();
  CHECK(b.bases[1] == m2);
}

TEST_CASE("independence and AR1 bases") {
  const BasisSet ind = basisMatrices({CorrelationKind::Independence, 3});
  REQUIRE(ind.size() == 1);
  CHECK(ind.bases[0] == Matrix::Identity(3, 3));
  const BasisSet ar = basisMatrices({CorrelationKind::Ar1, 3});
  REQUIRE(ar.size() == 3);
  Matrix band(3, 3);
  band << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  Matrix ends = Matrix::Zero(3, 3);
  ends(0, 0) = ends(2, 2) = 1;
  CHECK(ar.bases[1] == band);
  CHECK(ar.bases[2] == ends);
  for (int m = 2; m <= 8; ++m) {
    for (auto kind : {CorrelationKind::Independence, CorrelationKind::Exchangeable, CorrelationKind::Ar1}) {
      for (const auto& M : basisMatrices({kind, m}).bases) {
        CHECK(M == M.transpose());
        CHECK((M.array() * (M.array() - 1.0)).abs().maxCoeff() == 0.0);
      }
    }
  }
}

TEST_CASE("working correlation matrices") {
  Matrix ex(3, 3);
  ex << 1, .4, .4, .4, 1, .4, .4, .4, 1;
  CHECK(workingCorrelation({CorrelationKind::Exchangeable, 3}, 0.4).isApprox(ex, 1e-15));
  Matrix ar(3, 3);
  ar << 1, .5, .25, .5, 1, .5, .25, .5, 1;
  CHECK(workingCorrelation({CorrelationKind::Ar1, 3}, 0.5).isApprox(ar, 1e-15));
  CHECK(workingCorrelation({CorrelationKind::Independence, 4}, 0.3) == Matrix::Identity(4, 4));
  CHECK_THROWS_AS(workingCorrelation({CorrelationKind::Exchangeable, 3}, 1.0), ContractError);
  CHECK_THROWS_AS(workingCorrelation({CorrelationKind::Exchangeable, 3}, -0.1), ContractError);
  for (double a = 0.0; a <= 0.95; a += 0.05) {
    for (auto kind : {CorrelationKind::Exchangeable, CorrelationKind::Ar1}) {
      const Matrix R = workingCorrelation({kind, 6}, a);
      CHECK(R == R.transpose());
      CHECK(R.diagonal().isOnes());
      CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(R).eigenvalues().minCoeff() > 0.0);
    }
  }
}

TEST_CASE("inverse working correlation lies in the basis span") {
  CHECK(spanCheck({CorrelationKind::Exchangeable, 5}, 0.4) < 1e-10);
  CHECK(spanCheck({CorrelationKind::Exchangeable, 3}, 0.9) < 1e-10);
  CHECK(spanCheck({CorrelationKind::Independence, 4}, 0.7) == 0.0);
  for (int m = 2; m <= 8; ++m) {
    for (double a = 0.0; a <= 0.951; a += 0.05) CHECK(spanCheck({CorrelationKind::Exchangeable, m}, a) < 1e-10);
  }
  // Oracle: explicit exchangeable inverse c1 I + c2 (J - I).
  const int m = 4;
  const double a = 0.3;
  const double c2 = -a / ((1 - a) * (1 + (m - 1) * a));
  const double c1 = 1.0 / (1 - a) + c2;
  const BasisSet b = basisMatrices({CorrelationKind::Exchangeable, m});
  const Matrix rinv = c1 * b.bases[0] + c2 * b.bases[1];
  CHECK((rinv * workingCorrelation({CorrelationKind::Exchangeable, m}, a) - Matrix::Identity(m, m))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("correlation kind names round trip") {
  for (auto kind : {CorrelationKind::Independence, CorrelationKind::Exchangeable, CorrelationKind::Ar1})
    CHECK((parseCorrelationKind(toString(kind)) == kind));
  CHECK((parseCorrelationKind("ex") == CorrelationKind::Exchangeable));
  CHECK_THROWS_AS(parseCorrelationKind("toeplitz"), ContractError);
}
