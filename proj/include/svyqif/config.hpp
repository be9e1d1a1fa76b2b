#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "svyqif/campaign.hpp"

namespace svyqif {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, int line, const std::string& message);

  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  std::string key_;
  int line_;
};

/// Flat INI document: "section.key" -> (value, line). Comments start with
/// '#' or ';'. Duplicate keys and keys outside a section are rejected.
struct IniDocument {
  struct Entry {
    std::string value;
    int line = 0;
  };
  std::map<std::string, Entry> entries;
};

IniDocument parseIni(const std::string& text);

enum class Command { Fit, Simulate, Bootstrap, LambdaPath };

std::string toString(Command c);
Command parseCommand(const std::string& text);

enum class ReportFormat { Csv, Markdown };

enum class FitMethod { Pqif, Qif, Gee, Pgee };

std::string toString(FitMethod m);

struct RunConfig {
  Command command = Command::Simulate;
  std::string data_path;
  std::string out_path;
  std::uint64_t seed = 20240101;
  bool seed_given = false;
  ReportFormat format = ReportFormat::Markdown;

  CampaignConfig campaign;

  FitMethod fit_method = FitMethod::Pqif;
  CorrelationKind fit_correlation = CorrelationKind::Exchangeable;
  std::optional<double> population_size;
  std::optional<double> fixed_lambda;
  QifFitOptions qif;
  int bootstrap_replicates = 200;
};

/// Every key the parser accepts, as "section.key".
const std::vector<std::string>& documentedKeys();

/// Validated configuration with defaults filled. Unknown keys, malformed values
/// and invariant violations raise ConfigError naming the key and line.
RunConfig parseConfig(const std::string& text, Command command);
RunConfig loadConfig(const std::string& path, Command command);

}  // namespace svyqif
