#include "svyqif/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "svyqif/errors.hpp"

namespace svyqif {

namespace {

std::string rowMessage(int row, const std::string& message) {
  return "row " + std::to_string(row) + ": " + message;
}

std::vector<std::string> splitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parseNumber(const std::string& text, int row, const std::string& column) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(v))
    throw DataError(row, column + " is not a finite number: '" + text + "'");
  return v;
}

bool isInteger(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size() || s.size() - i > 18) return false;
  return std::all_of(s.begin() + static_cast<std::ptrdiff_t>(i), s.end(),
                     [](unsigned char c) { return std::isdigit(c) != 0; });
}

std::string num(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string fixed(double v, int digits) {
  if (std::isnan(v)) return "-";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s = buf;
  // "-0.000" reads as noise in a table
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

std::string optionalAt(const std::vector<double>& v, std::size_t k) {
  return k < v.size() ? num(v[k]) : std::string{};
}

}  // namespace

DataError::DataError(int row, const std::string& message)
    : std::runtime_error(rowMessage(row, message)), row_(row) {}

std::vector<ClusterRecord> ingestClusters(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(1, "missing header");
  const auto header = splitCsv(line);
  const std::vector<std::string> fixed_cols = {"cluster_id", "occasion", "y", "weight"};
  if (header.size() < 5 || !std::equal(fixed_cols.begin(), fixed_cols.end(), header.begin()))
    throw DataError(1, "header must be cluster_id,occasion,y,weight,x1..xd");
  const int d = static_cast<int>(header.size()) - 4;
  for (int k = 0; k < d; ++k) {
    if (header[4 + k] != "x" + std::to_string(k + 1))
      throw DataError(1, "expected column x" + std::to_string(k + 1) + ", found '" + header[4 + k] + "'");
  }

  struct Row {
    int row;
    long long occasion;
    double y;
    double weight;
    std::vector<double> x;
  };
  std::map<std::string, std::vector<Row>> groups;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = splitCsv(line);
    if (static_cast<int>(cells.size()) != d + 4)
      throw DataError(row, "expected " + std::to_string(d + 4) + " fields, found " +
                               std::to_string(cells.size()));
    if (cells[0].empty()) throw DataError(row, "empty cluster_id");
    Row r{row, 0, 0.0, 0.0, {}};
    if (!isInteger(cells[1])) throw DataError(row, "occasion must be an integer: '" + cells[1] + "'");
    r.occasion = std::strtoll(cells[1].c_str(), nullptr, 10);
    r.y = parseNumber(cells[2], row, "y");
    if (r.y != 0.0 && r.y != 1.0) throw DataError(row, "y must be 0 or 1, got '" + cells[2] + "'");
    r.weight = parseNumber(cells[3], row, "weight");
    if (!(r.weight > 0.0)) throw DataError(row, "weight must be positive, got '" + cells[3] + "'");
    for (int k = 0; k < d; ++k) r.x.push_back(parseNumber(cells[4 + k], row, header[4 + k]));
    groups[cells[0]].push_back(std::move(r));
  }

  std::vector<std::string> ids;
  for (const auto& kv : groups) ids.push_back(kv.first);
  if (std::all_of(ids.begin(), ids.end(), isInteger)) {
    std::stable_sort(ids.begin(), ids.end(), [](const std::string& a, const std::string& b) {
      return std::strtoll(a.c_str(), nullptr, 10) < std::strtoll(b.c_str(), nullptr, 10);
    });
  }

  std::vector<ClusterRecord> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto rows = groups[id];
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      return a.occasion != b.occasion ? a.occasion < b.occasion : a.row < b.row;
    });
    const int m = static_cast<int>(rows.size());
    for (int j = 0; j < m; ++j) {
      if (rows[j].occasion != j + 1) {
        if (j > 0 && rows[j].occasion == rows[j - 1].occasion)
          throw DataError(rows[j].row, "duplicate occasion " + std::to_string(rows[j].occasion) +
                                           " in cluster '" + id + "'");
        throw DataError(rows[j].row, "cluster '" + id + "' is missing occasion " + std::to_string(j + 1));
      }
      if (rows[j].weight != rows[0].weight)
        throw DataError(rows[j].row, "weight differs within cluster '" + id + "'");
    }
    ClusterRecord rec;
    rec.id = id;
    rec.weight = rows[0].weight;
    rec.y.resize(m);
    rec.x.resize(m, d);
    for (int j = 0; j < m; ++j) {
      rec.y[j] = rows[j].y;
      for (int k = 0; k < d; ++k) rec.x(j, k) = rows[j].x[k];
    }
    out.push_back(std::move(rec));
  }
  if (out.empty()) throw DataError(row, "no data rows");
  return out;
}

std::vector<ClusterRecord> ingestClusters(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(0, "cannot open data file '" + path + "'");
  return ingestClusters(in);
}

void writeFitCsv(std::ostream& out, const FitReport& report) {
  out << "# method=" << report.method << "\n";
  out << "# correlation=" << report.correlation << "\n";
  out << "# n=" << report.n << "\n";
  out << "# lambda=" << num(report.lambda) << "\n";
  out << "# objective=" << num(report.objective) << "\n";
  out << "# converged=" << (report.converged ? 1 : 0) << "\n";
  out << "# iterations=" << report.iterations << "\n";
  out << "term,estimate,se,active\n";
  for (int k = 0; k < report.beta.size(); ++k) {
    const bool active =
        std::find(report.active_set.begin(), report.active_set.end(), k) != report.active_set.end();
    const double se = k < report.se.size() ? report.se[k] : std::nan("");
    out << "x" << k + 1 << "," << num(report.beta[k]) << "," << num(se) << "," << (active ? 1 : 0) << "\n";
  }
}

void writeFitMarkdown(std::ostream& out, const FitReport& report) {
  out << "## " << report.method << " fit (" << report.correlation << ")\n\n";
  out << "- clusters: " << report.n << "\n";
  out << "- lambda: " << num(report.lambda) << "\n";
  out << "- objective: " << num(report.objective) << "\n";
  out << "- converged: " << (report.converged ? "yes" : "no") << " after " << report.iterations
      << " iterations\n\n";
  out << "| term | estimate | SE | active |\n";
  out << "|---|---:|---:|:---:|\n";
  for (int k = 0; k < report.beta.size(); ++k) {
    const bool active =
        std::find(report.active_set.begin(), report.active_set.end(), k) != report.active_set.end();
    const double se = k < report.se.size() ? report.se[k] : std::nan("");
    out << "| x" << k + 1 << " | " << num(report.beta[k]) << " | " << num(se) << " | "
        << (active ? "yes" : "no") << " |\n";
  }
}

FitReport readFitCsv(std::istream& in) {
  FitReport report;
  std::string line;
  std::vector<double> beta, se;
  bool header_seen = false;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string value = line.substr(eq + 1);
      if (key == "method") report.method = value;
      else if (key == "correlation") report.correlation = value;
      else if (key == "n") report.n = std::atoi(value.c_str());
      else if (key == "lambda") report.lambda = std::strtod(value.c_str(), nullptr);
      else if (key == "objective") report.objective = std::strtod(value.c_str(), nullptr);
      else if (key == "converged") report.converged = value == "1";
      else if (key == "iterations") report.iterations = std::atoi(value.c_str());
      continue;
    }
    if (!header_seen) {
      if (line != "term,estimate,se,active") throw DataError(row, "unexpected fit header");
      header_seen = true;
      continue;
    }
    const auto cells = splitCsv(line);
    if (cells.size() != 4) throw DataError(row, "expected 4 fields");
    beta.push_back(parseNumber(cells[1], row, "estimate"));
    se.push_back(cells[2] == "NA" ? std::nan("") : parseNumber(cells[2], row, "se"));
    if (cells[3] == "1") report.active_set.push_back(static_cast<int>(beta.size()) - 1);
  }
  if (!header_seen) throw DataError(row, "no fit table found");
  report.beta = Eigen::Map<Vector>(beta.data(), static_cast<Eigen::Index>(beta.size()));
  report.se = Eigen::Map<Vector>(se.data(), static_cast<Eigen::Index>(se.size()));
  return report;
}

void writeLambdaPathCsv(std::ostream& out, const LambdaSelection& selection) {
  int d = 0;
  for (const auto& e : selection.path) d = std::max<int>(d, static_cast<int>(e.fit.beta.size()));
  out << "lambda,criterion,wbic,df,selected,failed";
  for (int k = 0; k < d; ++k) out << ",x" << k + 1;
  out << "\n";
  for (const auto& e : selection.path) {
    const bool selected = !e.failed && e.lambda == selection.lambda;
    out << num(e.lambda) << ",";
    if (e.failed) {
      out << "NA,NA,NA,0,1";
      for (int k = 0; k < d; ++k) out << ",NA";
    } else {
      out << num(e.criterion) << "," << num(e.wbic) << "," << e.fit.active_set.size() << ","
          << (selected ? 1 : 0) << ",0";
      for (int k = 0; k < d; ++k) out << "," << num(k < e.fit.beta.size() ? e.fit.beta[k] : std::nan(""));
    }
    out << "\n";
  }
}

void writeReportCsv(std::ostream& out, const SimulationReport& report) {
  const int d1 = report.true_model_size;
  out << "n,method,correlation,replicates,used,failures,C,O,U,MSE";
  for (const char* stat : {"ARB", "SD", "SD_m", "SD_mad", "coverage"}) {
    for (int k = 0; k < d1; ++k) out << "," << stat << "_" << k + 1;
  }
  out << "\n";
  for (const auto& cell : report.cells) {
    out << cell.n << "," << toString(cell.method) << "," << toString(cell.correlation) << ","
        << report.replicates << "," << cell.used << "," << cell.failures << ",";
    if (cell.used > 0) {
      out << num(cell.correct) << "," << num(cell.over) << "," << num(cell.under) << "," << num(cell.mse);
    } else {
      out << ",,,";
    }
    for (const auto* v : {&cell.arb, &cell.sd, &cell.sd_m, &cell.sd_mad, &cell.coverage}) {
      for (int k = 0; k < d1; ++k) out << "," << optionalAt(*v, static_cast<std::size_t>(k));
    }
    out << "\n";
  }
}

void writeReportMarkdown(std::ostream& out, const SimulationReport& report) {
  const int d1 = report.true_model_size;
  out << "# Simulation report\n\n";
  out << "Replicates: " << report.replicates << ". True model size: " << d1 << ".";
  if (report.bootstrap_replicates > 0) out << " Bootstrap replicates: " << report.bootstrap_replicates << ".";
  out << "\n\n";

  out << "## Model selection and MSE\n\n";
  out << "| n | Method | Correlation | C | O | U | MSE | used | failed |\n";
  out << "|---:|---|---|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& c : report.cells) {
    out << "| " << c.n << " | " << toString(c.method) << " | " << toString(c.correlation) << " | ";
    if (c.used > 0) {
      out << fixed(c.correct, 1) << " | " << fixed(c.over, 1) << " | " << fixed(c.under, 1) << " | "
          << fixed(c.mse, 3);
    } else {
      out << "- | - | - | -";
    }
    out << " | " << c.used << " | " << c.failures << " |\n";
  }

  const bool any_arb = std::any_of(report.cells.begin(), report.cells.end(),
                                   [](const CellSummary& c) { return !c.arb.empty(); });
  if (any_arb) {
    out << "\n## Absolute relative bias (%)\n\n";
    out << "| n | Method | Correlation |";
    for (int k = 0; k < d1; ++k) out << " beta" << k + 1 << " |";
    out << "\n|---:|---|---|";
    for (int k = 0; k < d1; ++k) out << "---:|";
    out << "\n";
    for (const auto& c : report.cells) {
      if (c.arb.empty()) continue;
      out << "| " << c.n << " | " << toString(c.method) << " | " << toString(c.correlation) << " |";
      for (int k = 0; k < d1; ++k) out << " " << fixed(c.arb[k], 1) << " |";
      out << "\n";
    }
  }

  const bool any_boot = std::any_of(report.cells.begin(), report.cells.end(),
                                    [](const CellSummary& c) { return !c.sd_m.empty(); });
  if (any_boot) {
    out << "\n## Standard deviations: SD, SD_m (SD_mad)\n\n";
    out << "| n | Method | Correlation |";
    for (int k = 0; k < d1; ++k) out << " SD" << k + 1 << " | SD_m" << k + 1 << " (SD_mad) |";
    out << "\n|---:|---|---|";
    for (int k = 0; k < d1; ++k) out << "---:|---:|";
    out << "\n";
    for (const auto& c : report.cells) {
      if (c.sd_m.empty()) continue;
      out << "| " << c.n << " | " << toString(c.method) << " | " << toString(c.correlation) << " |";
      for (int k = 0; k < d1; ++k)
        out << " " << fixed(c.sd[k], 3) << " | " << fixed(c.sd_m[k], 3) << " (" << fixed(c.sd_mad[k], 3)
            << ") |";
      out << "\n";
    }
  }

  const bool any_cov = std::any_of(report.cells.begin(), report.cells.end(),
                                   [](const CellSummary& c) { return !c.coverage.empty(); });
  if (any_cov) {
    out << "\n## Sandwich 95% interval coverage (%)\n\n";
    out << "| n | Method | Correlation |";
    for (int k = 0; k < d1; ++k) out << " beta" << k + 1 << " |";
    out << "\n|---:|---|---|";
    for (int k = 0; k < d1; ++k) out << "---:|";
    out << "\n";
    for (const auto& c : report.cells) {
      if (c.coverage.empty()) continue;
      out << "| " << c.n << " | " << toString(c.method) << " | " << toString(c.correlation) << " |";
      for (int k = 0; k < d1; ++k) out << " " << fixed(c.coverage[k], 1) << " |";
      out << "\n";
    }
  }
}

void writeFile(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  out.close();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace svyqif
