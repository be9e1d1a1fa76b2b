#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "svyqif/campaign.hpp"
#include "svyqif/config.hpp"
#include "svyqif/penalized.hpp"
#include "svyqif/qif.hpp"

namespace svyqif {

/// Data problem tied to a CSV row (1-based, header is row 1).
class DataError : public std::runtime_error {
 public:
  DataError(int row, const std::string& message);
  int row() const { return row_; }

 private:
  int row_;
};

/// Reads cluster_id,occasion,y,weight,x1..xd. Rows may come in any order;
/// records are sorted by cluster_id (numeric when every id is an integer) and
/// occasion. Occasions must be 1..m without gaps, y binary, weight positive
/// and constant within a cluster.
std::vector<ClusterRecord> ingestClusters(std::istream& in);
std::vector<ClusterRecord> ingestClusters(const std::string& path);

struct FitReport {
  std::string method;
  std::string correlation;
  int n = 0;
  double lambda = 0.0;
  double objective = 0.0;
  bool converged = false;
  int iterations = 0;
  Vector beta;
  Vector se;  // NaN where unavailable
  std::vector<int> active_set;
};

void writeFitCsv(std::ostream& out, const FitReport& report);
void writeFitMarkdown(std::ostream& out, const FitReport& report);
/// Coefficients read back from writeFitCsv output.
FitReport readFitCsv(std::istream& in);

void writeLambdaPathCsv(std::ostream& out, const LambdaSelection& selection);

void writeReportCsv(std::ostream& out, const SimulationReport& report);
void writeReportMarkdown(std::ostream& out, const SimulationReport& report);

/// Writes `content` to `path`; throws std::runtime_error if it cannot.
void writeFile(const std::string& path, const std::string& content);

}  // namespace svyqif
