#pragma once

#include <vector>

#include "svyqif/model.hpp"

namespace svyqif {

enum class Selection { Correct, Over, Under };

const char* toString(Selection s);

/// Classifies an estimate against the true model {0..d1-1}. Under-selection
/// takes precedence over extra actives.
Selection classifySelection(const Vector& estimate, int d1, double threshold = 0.0);

double computeMse(const std::vector<Vector>& estimates, const Vector& beta0);

/// Absolute relative bias of coordinate k in percent.
double computeArb(const std::vector<Vector>& estimates, const Vector& beta0, int k);

double median(std::vector<double> values);
double medianAbsoluteDeviation(const std::vector<double>& values);

inline constexpr double kMadScale = 0.6745;

struct RobustSd {
  double sd = 0.0;      // MAD(estimates) / 0.6745
  double sd_m = 0.0;    // median bootstrap SD
  double sd_mad = 0.0;  // median |bootstrap SD - sd| / 0.6745
};

RobustSd robustSdSuite(const std::vector<Vector>& estimates,
                       const std::vector<Vector>& bootstrap_sds, int k);

}  // namespace svyqif
