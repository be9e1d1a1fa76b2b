#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>

#include "svyqif/bootstrap.hpp"
#include "svyqif/campaign.hpp"
#include "svyqif/config.hpp"
#include "svyqif/errors.hpp"
#include "svyqif/gee.hpp"
#include "svyqif/io.hpp"
#include "svyqif/penalized.hpp"
#include "svyqif/rng.hpp"

namespace {

using namespace svyqif;

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

SurveySample loadSample(const RunConfig& cfg) {
  SurveySample sample;
  sample.clusters = ingestClusters(cfg.data_path);
  const int m = sample.clusterSize();
  for (const auto& rec : sample.clusters) {
    if (rec.size() != m)
      throw ConfigError("", 0, "data: every cluster must have the same number of occasions");
  }
  double total = 0.0;
  for (const auto& rec : sample.clusters) total += rec.weight;
  sample.population_size = cfg.population_size.value_or(total);
  sample.basis = basisMatrices({cfg.fit_correlation, m});
  return sample;
}

Vector spread(const Matrix& var, const std::vector<int>& active, int d) {
  Vector se = Vector::Constant(d, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j = 0; j < active.size(); ++j) se[active[j]] = std::sqrt(std::max(var(j, j), 0.0));
  return se;
}

FitReport makeReport(const RunConfig& cfg, const SurveySample& sample, const FitResult& fit) {
  FitReport r;
  r.method = toString(cfg.fit_method);
  r.correlation = toString(cfg.fit_correlation);
  r.n = sample.n();
  r.lambda = fit.lambda;
  r.objective = fit.objective;
  r.converged = fit.converged;
  r.iterations = fit.iterations;
  r.beta = fit.beta;
  r.se = Vector::Constant(fit.beta.size(), std::numeric_limits<double>::quiet_NaN());
  r.active_set = fit.active_set;
  return r;
}

// Penalized QIF at the configured lambda, or WBIC-tuned when none is given.
FitResult fitPqif(const RunConfig& cfg, const SurveySample& sample) {
  const PenalizedFitConfig& pen = cfg.campaign.penalty;
  if (cfg.fixed_lambda) {
    PenaltySpec spec = pen.penalty;
    spec.lambda = *cfg.fixed_lambda;
    const Vector init = fitQif(sample, Vector::Zero(sample.dim()), cfg.qif).beta;
    FitResult fit = fitPenalized(sample, spec, init, pen.fit);
    fit.lambda = spec.lambda;
    return fit;
  }
  LambdaSelection sel = selectLambda(sample, pen);
  sel.fit.lambda = sel.lambda;
  return sel.fit;
}

PenaltySpec specAt(const RunConfig& cfg, double lambda) {
  PenaltySpec spec = cfg.campaign.penalty.penalty;
  spec.lambda = lambda;
  return spec;
}

std::string render(const RunConfig& cfg, const FitReport& report) {
  std::ostringstream out;
  if (cfg.format == ReportFormat::Csv) {
    writeFitCsv(out, report);
  } else {
    writeFitMarkdown(out, report);
  }
  return out.str();
}

void runFit(const RunConfig& cfg) {
  const SurveySample sample = loadSample(cfg);
  const int d = sample.dim();
  FitResult fit;
  GeeConfig gee;
  gee.structure = {cfg.fit_correlation, sample.clusterSize()};
  switch (cfg.fit_method) {
    case FitMethod::Pqif: fit = fitPqif(cfg, sample); break;
    case FitMethod::Qif: fit = fitQif(sample, Vector::Zero(d), cfg.qif); break;
    case FitMethod::Gee: fit = fitGee(sample, gee, Vector::Zero(d)); break;
    case FitMethod::Pgee:
      if (cfg.fixed_lambda) {
        fit = fitPenalizedGee(sample, specAt(cfg, *cfg.fixed_lambda), gee,
                              fitGee(sample, gee, Vector::Zero(d)).beta, cfg.campaign.penalty.fit);
        fit.lambda = *cfg.fixed_lambda;
      } else {
        LambdaSelection sel = selectLambdaGee(sample, cfg.campaign.penalty, gee);
        fit = sel.fit;
        fit.lambda = sel.lambda;
      }
      break;
  }
  if (!fit.converged)
    throw NumericError("fit did not converge after " + std::to_string(fit.iterations) + " iterations");
  FitReport report = makeReport(cfg, sample, fit);
  if ((cfg.fit_method == FitMethod::Pqif || cfg.fit_method == FitMethod::Qif) && !fit.active_set.empty()) {
    const double lambda = cfg.fit_method == FitMethod::Qif ? 0.0 : fit.lambda;
    report.se = spread(sandwichVariance(sample, fit, specAt(cfg, lambda)), fit.active_set, d);
  }
  writeFile(cfg.out_path, render(cfg, report));
}

void runBootstrap(const RunConfig& cfg) {
  const SurveySample sample = loadSample(cfg);
  const FitResult fit = fitPqif(cfg, sample);
  FitReport report = makeReport(cfg, sample, fit);
  report.method = "PQIF-bootstrap";
  if (!fit.active_set.empty()) {
    BootstrapPlan plan;
    plan.B = cfg.bootstrap_replicates;
    plan.seed = cfg.seed;
    const BootstrapResult boot = bootstrapVariance(sample, fit, specAt(cfg, fit.lambda), plan);
    report.se = spread(boot.variance, fit.active_set, sample.dim());
    if (boot.excluded > 0)
      std::cerr << "bootstrap: " << boot.excluded << " of " << plan.B << " replicates excluded\n";
  }
  writeFile(cfg.out_path, render(cfg, report));
}

void runLambdaPath(const RunConfig& cfg) {
  const SurveySample sample = loadSample(cfg);
  std::ostringstream out;
  if (cfg.fit_method == FitMethod::Pgee) {
    GeeConfig gee;
    gee.structure = {cfg.fit_correlation, sample.clusterSize()};
    writeLambdaPathCsv(out, selectLambdaGee(sample, cfg.campaign.penalty, gee));
  } else {
    writeLambdaPathCsv(out, selectLambda(sample, cfg.campaign.penalty));
  }
  writeFile(cfg.out_path, out.str());
}

void runSimulate(const RunConfig& cfg) {
  const SimulationReport report = runCampaign(cfg.campaign);
  std::ostringstream out;
  if (cfg.format == ReportFormat::Csv) {
    writeReportCsv(out, report);
  } else {
    writeReportMarkdown(out, report);
  }
  writeFile(cfg.out_path, out.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Penalized survey-weighted QIF estimation and simulation"};
  app.require_subcommand(1);

  struct Paths {
    std::string config, data, out;
  };
  Paths paths;
  auto add = [&](const char* name, const char* help, bool needs_data) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", paths.config, "INI configuration file")->required()->check(CLI::ExistingFile);
    if (needs_data)
      sub->add_option("--data", paths.data, "CSV data file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", paths.out, "output file")->required();
    return sub;
  };
  add("fit", "fit one model to a data file", true);
  add("simulate", "run a Monte Carlo campaign", false);
  add("bootstrap", "penalized fit with Rao-Wu bootstrap standard errors", true);
  add("lambda-path", "WBIC and coefficients along the lambda grid", true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const Command command = parseCommand(app.get_subcommands().front()->get_name());
    RunConfig cfg = loadConfig(paths.config, command);
    cfg.data_path = paths.data;
    cfg.out_path = paths.out;
    switch (command) {
      case Command::Fit: runFit(cfg); break;
      case Command::Simulate: runSimulate(cfg); break;
      case Command::Bootstrap: runBootstrap(cfg); break;
      case Command::LambdaPath: runLambdaPath(cfg); break;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ContractError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
