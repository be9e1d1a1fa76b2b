#include "svyqif/correlation.hpp"

#include <cmath>

#include "svyqif/errors.hpp"

namespace svyqif {

std::string toString(CorrelationKind kind) {
  switch (kind) {
    case CorrelationKind::Independence: return "independence";
    case CorrelationKind::Exchangeable: return "exchangeable";
    case CorrelationKind::Ar1: return "ar1";
  }
  return "unknown";
}

CorrelationKind parseCorrelationKind(const std::string& text) {
  if (text == "independence" || text == "ind") return CorrelationKind::Independence;
  if (text == "exchangeable" || text == "ex") return CorrelationKind::Exchangeable;
  if (text == "ar1") return CorrelationKind::Ar1;
  throw ContractError("unsupported correlation structure '" + text + "'");
}

namespace {

void checkSize(const CorrelationStructure& s) {
  if (s.m < 1) throw ContractError("correlation structure needs m >= 1");
}

}  // namespace

BasisSet basisMatrices(const CorrelationStructure& structure) {
  checkSize(structure);
  const int m = structure.m;
  BasisSet set;
  set.bases.push_back(Matrix::Identity(m, m));
  switch (structure.kind) {
    case CorrelationKind::Independence:
      break;
    case CorrelationKind::Exchangeable:
      set.bases.push_back(Matrix::Ones(m, m) - Matrix::Identity(m, m));
      break;
    case CorrelationKind::Ar1: {
      // Symmetric tridiagonal form of the first off-diagonal basis.
      Matrix band = Matrix::Zero(m, m);
      for (int l = 1; l < m; ++l) band(l, l - 1) = band(l - 1, l) = 1.0;
      Matrix ends = Matrix::Zero(m, m);
      ends(0, 0) = 1.0;
      ends(m - 1, m - 1) = 1.0;
      set.bases.push_back(std::move(band));
      set.bases.push_back(std::move(ends));
      break;
    }
  }
  return set;
}

Matrix workingCorrelation(const CorrelationStructure& structure, double alpha) {
  checkSize(structure);
  const int m = structure.m;
  if (structure.kind == CorrelationKind::Independence) return Matrix::Identity(m, m);
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw ContractError("working correlation parameter must lie in [0, 1), got " +
                        std::to_string(alpha));
  Matrix r(m, m);
  for (int l = 0; l < m; ++l) {
    for (int c = 0; c < m; ++c) {
      if (l == c) {
        r(l, c) = 1.0;
      } else if (structure.kind == CorrelationKind::Exchangeable) {
        r(l, c) = alpha;
      } else {
        r(l, c) = std::pow(alpha, std::abs(l - c));
      }
    }
  }
  return r;
}

double spanCheck(const CorrelationStructure& structure, double alpha) {
  const Matrix r = workingCorrelation(structure, alpha);
  const Eigen::FullPivLU<Matrix> lu(r);
  if (!lu.isInvertible()) throw NumericError("spanCheck: singular working correlation");
  const Matrix rinv = lu.inverse();
  const BasisSet basis = basisMatrices(structure);
  const int m = structure.m;
  const int L = basis.size();
  // Least squares on vectorized matrices.
  Matrix design(m * m, L);
  for (int l = 0; l < L; ++l) design.col(l) = basis.bases[l].reshaped();
  const Vector target = rinv.reshaped();
  const Vector coef = design.colPivHouseholderQr().solve(target);
  return (design * coef - target).norm();
}

}  // namespace svyqif
