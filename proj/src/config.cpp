#include "svyqif/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "svyqif/errors.hpp"

namespace svyqif {

namespace {

std::string locate(const std::string& key, int line, const std::string& message) {
  std::string out;
  if (line > 0) out += "line " + std::to_string(line) + ": ";
  if (!key.empty()) out += key + ": ";
  return out + message;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> splitList(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Typed access to the document; every read marks the key as consumed.
class Reader {
 public:
  explicit Reader(const IniDocument& doc) : doc_(doc) {}

  const IniDocument::Entry* find(const std::string& key) {
    auto it = doc_.entries.find(key);
    if (it == doc_.entries.end()) return nullptr;
    return &it->second;
  }

  bool has(const std::string& key) const { return doc_.entries.count(key) > 0; }

  int line(const std::string& key) const {
    auto it = doc_.entries.find(key);
    return it == doc_.entries.end() ? 0 : it->second.line;
  }

  double real(const std::string& key, double fallback) {
    const auto* e = find(key);
    return e ? parseReal(key, e->line, e->value) : fallback;
  }

  long long integer(const std::string& key, long long fallback) {
    const auto* e = find(key);
    return e ? parseInt(key, e->line, e->value) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) {
    const auto* e = find(key);
    if (!e) return fallback;
    const std::string v = lower(e->value);
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    throw ConfigError(key, e->line, "expected a boolean, got '" + e->value + "'");
  }

  std::vector<double> reals(const std::string& key) {
    const auto* e = find(key);
    std::vector<double> out;
    for (const auto& item : splitList(e->value)) out.push_back(parseReal(key, e->line, item));
    if (out.empty()) throw ConfigError(key, e->line, "expected a nonempty list");
    return out;
  }

  std::vector<std::string> words(const std::string& key) {
    const auto* e = find(key);
    auto out = splitList(e->value);
    if (out.empty()) throw ConfigError(key, e->line, "expected a nonempty list");
    return out;
  }

  static double parseReal(const std::string& key, int line, const std::string& text) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(v))
      throw ConfigError(key, line, "expected a finite number, got '" + text + "'");
    return v;
  }

  static long long parseInt(const std::string& key, int line, const std::string& text) {
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(text.c_str(), &end, 10);
    if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE)
      throw ConfigError(key, line, "expected an integer, got '" + text + "'");
    return v;
  }

 private:
  const IniDocument& doc_;
};

int positiveInt(Reader& r, const std::string& key, int fallback, int minimum = 1) {
  const long long v = r.integer(key, fallback);
  if (v < minimum || v > 1000000000)
    throw ConfigError(key, r.line(key), "must be an integer >= " + std::to_string(minimum));
  return static_cast<int>(v);
}

// Re-raises a contract violation from a module validate() as a config error.
template <typename F>
void checked(const std::string& section, F&& f) {
  try {
    f();
  } catch (const ContractError& e) {
    throw ConfigError("[" + section + "]", 0, e.what());
  }
}

}  // namespace

ConfigError::ConfigError(const std::string& key, int line, const std::string& message)
    : std::runtime_error(locate(key, line, message)), key_(key), line_(line) {}

IniDocument parseIni(const std::string& text) {
  IniDocument doc;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("", line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError("", line_no, "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("", line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    const auto hash = value.find_first_of("#;");
    if (hash != std::string::npos) value = trim(value.substr(0, hash));
    if (key.empty()) throw ConfigError("", line_no, "missing key");
    if (section.empty()) throw ConfigError(key, line_no, "key outside of any section");
    const std::string full = section + "." + key;
    auto [it, inserted] = doc.entries.emplace(full, IniDocument::Entry{value, line_no});
    if (!inserted)
      throw ConfigError(full, line_no,
                        "duplicate key (first set on line " + std::to_string(it->second.line) + ")");
  }
  return doc;
}

std::string toString(Command c) {
  switch (c) {
    case Command::Fit: return "fit";
    case Command::Simulate: return "simulate";
    case Command::Bootstrap: return "bootstrap";
    case Command::LambdaPath: return "lambda-path";
  }
  return "?";
}

Command parseCommand(const std::string& text) {
  if (text == "fit") return Command::Fit;
  if (text == "simulate") return Command::Simulate;
  if (text == "bootstrap") return Command::Bootstrap;
  if (text == "lambda-path") return Command::LambdaPath;
  throw ConfigError("", 0, "unknown command '" + text + "'");
}

std::string toString(FitMethod m) {
  switch (m) {
    case FitMethod::Pqif: return "PQIF";
    case FitMethod::Qif: return "QIF";
    case FitMethod::Gee: return "GEE";
    case FitMethod::Pgee: return "PGEE";
  }
  return "?";
}

const std::vector<std::string>& documentedKeys() {
  static const std::vector<std::string> keys = {
      "run.seed",           "run.threads",           "run.format",
      "population.N",       "population.m",          "population.d",
      "population.beta0",   "population.alpha_true", "population.x_low",
      "population.x_high",  "campaign.sample_sizes", "campaign.replicates",
      "campaign.methods",   "campaign.correlations", "campaign.bootstrap",
      "campaign.sandwich",  "campaign.max_failure_rate",
      "penalty.a",          "penalty.zero_threshold", "penalty.grid_size",
      "penalty.grid_ratio", "penalty.lambda_grid",   "penalty.max_outer",
      "penalty.tol",        "fit.method",            "fit.correlation",
      "fit.population_size", "fit.lambda",           "fit.max_iter",
      "fit.tol",            "bootstrap.replicates",
  };
  return keys;
}

RunConfig parseConfig(const std::string& text, Command command) {
  const IniDocument doc = parseIni(text);
  const auto& known = documentedKeys();
  for (const auto& [key, entry] : doc.entries) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError(key, entry.line, "unknown key");
  }
  Reader r(doc);
  RunConfig cfg;
  cfg.command = command;

  // [run]
  if (r.has("run.seed")) {
    const auto* e = r.find("run.seed");
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(e->value.c_str(), &end, 10);
    if (e->value.empty() || e->value[0] == '-' || end != e->value.c_str() + e->value.size() ||
        errno == ERANGE)
      throw ConfigError("run.seed", e->line, "expected an unsigned 64-bit integer");
    cfg.seed = v;
    cfg.seed_given = true;
  }
  if ((command == Command::Simulate || command == Command::Bootstrap) && !cfg.seed_given)
    throw ConfigError("run.seed", 0, "required for " + toString(command));
  CampaignConfig& camp = cfg.campaign;
  camp.seed = cfg.seed;
  camp.threads = positiveInt(r, "run.threads", 1);
  if (const auto* e = r.find("run.format")) {
    const std::string v = lower(e->value);
    if (v == "csv") cfg.format = ReportFormat::Csv;
    else if (v == "markdown" || v == "md") cfg.format = ReportFormat::Markdown;
    else throw ConfigError("run.format", e->line, "expected csv or markdown");
  }

  // [population]
  PopulationConfig& pop = camp.population;
  pop.N = positiveInt(r, "population.N", pop.N);
  pop.m = positiveInt(r, "population.m", pop.m, 2);
  pop.d = positiveInt(r, "population.d", pop.d);
  if (r.has("population.beta0")) {
    const auto v = r.reals("population.beta0");
    pop.beta0 = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  } else if (pop.d != pop.beta0.size()) {
    Vector b = Vector::Zero(pop.d);
    const int keep = std::min<int>(pop.d, static_cast<int>(pop.beta0.size()));
    b.head(keep) = pop.beta0.head(keep);
    pop.beta0 = b;
  }
  if (pop.beta0.size() != pop.d)
    throw ConfigError("population.beta0", r.line("population.beta0"),
                      "length " + std::to_string(pop.beta0.size()) + " does not match d = " +
                          std::to_string(pop.d));
  pop.alpha_true = r.real("population.alpha_true", pop.alpha_true);
  pop.x_low = r.real("population.x_low", pop.x_low);
  pop.x_high = r.real("population.x_high", pop.x_high);

  // [campaign]
  if (r.has("campaign.sample_sizes")) {
    camp.sample_sizes.clear();
    for (const auto& w : r.words("campaign.sample_sizes")) {
      const long long n = Reader::parseInt("campaign.sample_sizes", r.line("campaign.sample_sizes"), w);
      if (n < 2 || n > 100000000)
        throw ConfigError("campaign.sample_sizes", r.line("campaign.sample_sizes"),
                          "sample sizes must be at least 2");
      camp.sample_sizes.push_back(static_cast<int>(n));
    }
  }
  camp.replicates = positiveInt(r, "campaign.replicates", camp.replicates);
  if (r.has("campaign.methods")) {
    camp.methods.clear();
    for (const auto& w : r.words("campaign.methods")) {
      try {
        camp.methods.push_back(parseMethod(w));
      } catch (const ContractError& e) {
        throw ConfigError("campaign.methods", r.line("campaign.methods"), e.what());
      }
    }
  }
  if (r.has("campaign.correlations")) {
    camp.correlations.clear();
    for (const auto& w : r.words("campaign.correlations")) {
      try {
        camp.correlations.push_back(parseCorrelationKind(w));
      } catch (const ContractError& e) {
        throw ConfigError("campaign.correlations", r.line("campaign.correlations"), e.what());
      }
    }
  }
  camp.bootstrap = r.boolean("campaign.bootstrap", camp.bootstrap);
  camp.sandwich = r.boolean("campaign.sandwich", camp.sandwich);
  camp.max_failure_rate = r.real("campaign.max_failure_rate", camp.max_failure_rate);

  // [penalty]
  PenalizedFitConfig& pen = camp.penalty;
  pen.penalty.a = r.real("penalty.a", pen.penalty.a);
  if (!(pen.penalty.a > 2.0)) throw ConfigError("penalty.a", r.line("penalty.a"), "SCAD requires a > 2");
  pen.penalty.zero_threshold = r.real("penalty.zero_threshold", pen.penalty.zero_threshold);
  if (!(pen.penalty.zero_threshold > 0.0))
    throw ConfigError("penalty.zero_threshold", r.line("penalty.zero_threshold"), "must be positive");
  pen.grid_size = positiveInt(r, "penalty.grid_size", pen.grid_size, 2);
  pen.grid_ratio = r.real("penalty.grid_ratio", pen.grid_ratio);
  if (!(pen.grid_ratio > 0.0 && pen.grid_ratio < 1.0))
    throw ConfigError("penalty.grid_ratio", r.line("penalty.grid_ratio"), "must lie in (0, 1)");
  if (r.has("penalty.lambda_grid")) {
    pen.lambda_grid = r.reals("penalty.lambda_grid");
    for (double l : pen.lambda_grid) {
      if (!(l >= 0.0))
        throw ConfigError("penalty.lambda_grid", r.line("penalty.lambda_grid"), "lambdas must be nonnegative");
    }
    std::sort(pen.lambda_grid.begin(), pen.lambda_grid.end(), std::greater<>());
  }
  pen.fit.max_outer = positiveInt(r, "penalty.max_outer", pen.fit.max_outer);
  pen.fit.tol = r.real("penalty.tol", pen.fit.tol);
  if (!(pen.fit.tol > 0.0)) throw ConfigError("penalty.tol", r.line("penalty.tol"), "must be positive");

  // [fit]
  if (const auto* e = r.find("fit.method")) {
    const std::string v = lower(e->value);
    if (v == "pqif") cfg.fit_method = FitMethod::Pqif;
    else if (v == "qif") cfg.fit_method = FitMethod::Qif;
    else if (v == "gee") cfg.fit_method = FitMethod::Gee;
    else if (v == "pgee") cfg.fit_method = FitMethod::Pgee;
    else throw ConfigError("fit.method", e->line, "expected one of pqif, qif, gee, pgee");
  }
  if (const auto* e = r.find("fit.correlation")) {
    try {
      cfg.fit_correlation = parseCorrelationKind(e->value);
    } catch (const ContractError& err) {
      throw ConfigError("fit.correlation", e->line, err.what());
    }
  }
  if (r.has("fit.population_size")) {
    const double v = r.real("fit.population_size", 0.0);
    if (!(v > 0.0))
      throw ConfigError("fit.population_size", r.line("fit.population_size"), "must be positive");
    cfg.population_size = v;
  }
  if (r.has("fit.lambda")) {
    const double v = r.real("fit.lambda", 0.0);
    if (!(v >= 0.0)) throw ConfigError("fit.lambda", r.line("fit.lambda"), "must be nonnegative");
    cfg.fixed_lambda = v;
  }
  cfg.qif.max_iter = positiveInt(r, "fit.max_iter", cfg.qif.max_iter);
  cfg.qif.grad_tol = r.real("fit.tol", cfg.qif.grad_tol);
  if (!(cfg.qif.grad_tol > 0.0)) throw ConfigError("fit.tol", r.line("fit.tol"), "must be positive");

  // [bootstrap]
  cfg.bootstrap_replicates = positiveInt(r, "bootstrap.replicates", cfg.bootstrap_replicates, 2);
  camp.bootstrap_replicates = cfg.bootstrap_replicates;

  checked("population", [&] { pop.validate(); });
  checked("penalty", [&] { pen.validate(); });
  if (command == Command::Simulate) checked("campaign", [&] { camp.validate(); });
  return cfg;
}

RunConfig loadConfig(const std::string& path, Command command) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", 0, "cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parseConfig(buf.str(), command);
}

}  // namespace svyqif
