#pragma once

#include <string>
#include <vector>

#include "svyqif/model.hpp"

namespace svyqif {

enum class CorrelationKind { Independence, Exchangeable, Ar1 };

std::string toString(CorrelationKind kind);
CorrelationKind parseCorrelationKind(const std::string& text);

struct CorrelationStructure {
  CorrelationKind kind = CorrelationKind::Independence;
  int m = 1;
};

/// Basis matrices M_1..M_L whose span contains the inverse working correlation.
/// M_1 is always the identity; the order is part of the stacked-score layout.
struct BasisSet {
  std::vector<Matrix> bases;

  int size() const { return static_cast<int>(bases.size()); }
  int dim() const { return bases.empty() ? 0 : static_cast<int>(bases.front().rows()); }
};

BasisSet basisMatrices(const CorrelationStructure& structure);

Matrix workingCorrelation(const CorrelationStructure& structure, double alpha);

/// Frobenius residual of the least-squares projection of R(alpha)^{-1} onto
/// span{M_l}.
double spanCheck(const CorrelationStructure& structure, double alpha);

}  // namespace svyqif
