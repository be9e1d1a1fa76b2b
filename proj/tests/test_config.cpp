#include <doctest.h>

#include "svyqif/config.hpp"

using namespace svyqif;

namespace {

std::string sampleValue(const std::string& key) {
  if (key == "run.format") return "csv";
  if (key == "population.beta0") return "0.8, -0.7, -0.6, 0, 0, 0, 0, 0, 0, 0";
  if (key == "population.alpha_true" || key == "population.x_low") return "0.2";
  if (key == "population.x_high") return "0.9";
  if (key == "campaign.sample_sizes") return "300, 500";
  if (key == "campaign.methods") return "UNWGT, PQIF";
  if (key == "campaign.correlations") return "exchangeable, ar1";
  if (key == "campaign.bootstrap" || key == "campaign.sandwich") return "true";
  if (key == "campaign.max_failure_rate") return "0.1";
  if (key == "penalty.a") return "3.7";
  if (key == "penalty.zero_threshold" || key == "penalty.tol" || key == "fit.tol") return "0.001";
  if (key == "penalty.grid_ratio") return "0.05";
  if (key == "penalty.lambda_grid") return "0.1, 0.3, 0.2";
  if (key == "fit.method") return "pgee";
  if (key == "fit.correlation") return "ar1";
  if (key == "fit.population_size" || key == "fit.lambda") return "0.5";
  if (key == "population.N") return "5000";
  return "10";
}

std::string asIni(const std::string& key, const std::string& value) {
  const auto dot = key.find('.');
  return "[" + key.substr(0, dot) + "]\n" + key.substr(dot + 1) + " = " + value + "\n";
}

}  // namespace

TEST_CASE("a seed alone yields the default simulation") {
  const RunConfig cfg = parseConfig("[run]\nseed = 7\n", Command::Simulate);
  CHECK(cfg.seed == 7u);
  CHECK(cfg.campaign.seed == 7u);
  CHECK(cfg.campaign.population.N == 10000);
  CHECK(cfg.campaign.population.m == 5);
  CHECK(cfg.campaign.population.d == 10);
  CHECK(cfg.campaign.population.beta0[0] == 0.8);
  CHECK(cfg.campaign.population.alpha_true == 0.4);
  CHECK(cfg.campaign.replicates == 200);
  CHECK(cfg.campaign.sample_sizes == std::vector<int>{300, 500});
  CHECK(cfg.campaign.penalty.penalty.a == 3.7);
  CHECK(cfg.campaign.penalty.penalty.zero_threshold == 0.001);
  CHECK(cfg.campaign.penalty.grid_size == 25);
  CHECK(cfg.bootstrap_replicates == 200);
  CHECK(cfg.format == ReportFormat::Markdown);
}

TEST_CASE("invalid and duplicate entries are rejected with their location") {
  try {
    parseConfig("[run]\nseed = 1\n[penalty]\na = 1.5\n", Command::Simulate);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "penalty.a");
    CHECK(e.line() == 4);
  }
  try {
    parseConfig("[run]\nseed = 1\n\n[run]\nseed = 2\n", Command::Simulate);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "run.seed");
    CHECK(e.line() == 5);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parseConfig("[run]\nseed = 1\ncolour = red\n", Command::Simulate), ConfigError);
  CHECK_THROWS_AS(parseConfig("seed = 1\n", Command::Simulate), ConfigError);
  CHECK_THROWS_AS(parseConfig("[run\nseed = 1\n", Command::Simulate), ConfigError);
  CHECK_THROWS_AS(parseConfig("[run]\nseed\n", Command::Simulate), ConfigError);
  CHECK_THROWS_AS(parseConfig("[run]\nseed = -3\n", Command::Simulate), ConfigError);
  CHECK_THROWS_AS(parseConfig("[run]\nseed = 1\n[campaign]\nreplicates = many\n", Command::Simulate), ConfigError);
  CHECK_THROWS_AS(parseConfig("[run]\nseed = 1\n[population]\nd = 4\nbeta0 = 1, 2\n", Command::Simulate), ConfigError);
  CHECK_THROWS_AS(parseConfig("[run]\nseed = 1\n[campaign]\nmethods = PQIF, LASSO\n", Command::Simulate), ConfigError);
  CHECK_THROWS_AS(parseConfig("[population]\nN = 10\n", Command::Simulate), ConfigError);
  CHECK_NOTHROW(parseConfig("# fit without a seed\n[fit]\nmethod = qif ; inline comment\n", Command::Fit));
}

TEST_CASE("every documented key is accepted and anything else is rejected") {
  for (const auto& key : documentedKeys()) {
    std::string text = asIni(key, sampleValue(key));
    if (key != "run.seed") text += "[run]\nseed = 3\n";
    CAPTURE(key);
    CHECK_NOTHROW(parseConfig(text, Command::Simulate));
    const auto dot = key.find('.');
    CHECK_THROWS_AS(parseConfig(asIni(key.substr(0, dot) + ".x" + key.substr(dot + 1), "1") + "[run]\nseed = 3\n",
                                Command::Simulate),
                    ConfigError);
  }
  CHECK_THROWS_AS(parseConfig("[extra]\nseed = 3\n", Command::Fit), ConfigError);
}

TEST_CASE("values reach the run configuration") {
  const RunConfig cfg = parseConfig(
      "[run]\nseed = 18446744073709551615\nthreads = 2\nformat = csv\n"
      "[population]\nd = 4\n"
      "[penalty]\nlambda_grid = 0.1, 0.3, 0.2\n"
      "[fit]\nmethod = gee\ncorrelation = ar1\npopulation_size = 1200\nlambda = 0.05\n",
      Command::Fit);
  CHECK(cfg.seed == 18446744073709551615ull);
  CHECK(cfg.campaign.threads == 2);
  CHECK(cfg.format == ReportFormat::Csv);
  CHECK(cfg.campaign.population.beta0.size() == 4);
  CHECK(cfg.campaign.penalty.lambda_grid == std::vector<double>{0.3, 0.2, 0.1});
  CHECK((cfg.fit_method == FitMethod::Gee));
  CHECK((cfg.fit_correlation == CorrelationKind::Ar1));
  CHECK(*cfg.population_size == 1200.0);
  CHECK(*cfg.fixed_lambda == 0.05);
  CHECK((parseCommand("lambda-path") == Command::LambdaPath));
  CHECK(toString(Command::Bootstrap) == "bootstrap");
}
