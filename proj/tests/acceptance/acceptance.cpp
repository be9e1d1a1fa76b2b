// One PASS/FAIL line per acceptance criterion. `acceptance 4 9` runs a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "svyqif/campaign.hpp"
#include "svyqif/gee.hpp"
#include "svyqif/io.hpp"
#include "svyqif/population.hpp"
#include "svyqif/qif.hpp"
#include "svyqif/scad.hpp"

using namespace svyqif;

namespace {

using Clock = std::chrono::steady_clock;

double secondsSince(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [x]");
  }
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// ---- independent Monte Carlo summaries computed from raw outcomes ----

std::vector<const ReplicateOutcome*> usable(const CellSummary& cell) {
  std::vector<const ReplicateOutcome*> out;
  for (const auto& o : cell.outcomes) {
    if (o.ok) out.push_back(&o);
  }
  return out;
}

double percentCorrect(const CellSummary& cell, int d1) {
  const auto rows = usable(cell);
  int hits = 0;
  for (const auto* o : rows) {
    bool ok = true;
    for (int k = 0; k < o->estimate.size(); ++k) {
      const bool nonzero = o->estimate[k] != 0.0;
      if (nonzero != (k < d1)) ok = false;
    }
    hits += ok;
  }
  return 100.0 * hits / rows.size();
}

double meanSquaredError(const CellSummary& cell, const Vector& beta0) {
  const auto rows = usable(cell);
  double total = 0.0;
  for (const auto* o : rows) {
    for (int k = 0; k < beta0.size(); ++k) total += (o->estimate[k] - beta0[k]) * (o->estimate[k] - beta0[k]);
  }
  return total / rows.size();
}

double relativeBias(const CellSummary& cell, const Vector& beta0, int k) {
  const auto rows = usable(cell);
  double mean = 0.0;
  for (const auto* o : rows) mean += o->estimate[k];
  mean /= rows.size();
  return 100.0 * std::abs(mean - beta0[k]) / std::abs(beta0[k]);
}

double medianOf(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// MAD / 0.6745 of the estimates of coordinate k.
double robustSd(const CellSummary& cell, int k) {
  std::vector<double> v;
  for (const auto* o : usable(cell)) v.push_back(o->estimate[k]);
  const double med = medianOf(v);
  for (double& x : v) x = std::abs(x - med);
  return medianOf(v) / 0.6745;
}

double medianBootstrapSd(const CellSummary& cell, int k) {
  std::vector<double> v;
  for (const auto* o : usable(cell)) {
    if (o->bootstrap_se && std::isfinite((*o->bootstrap_se)[k])) v.push_back((*o->bootstrap_se)[k]);
  }
  return v.empty() ? std::nan("") : medianOf(v);
}

double coverage(const CellSummary& cell, const Vector& beta0, int k) {
  const auto rows = usable(cell);
  int hit = 0;
  for (const auto* o : rows) {
    if (!o->sandwich_se) continue;
    const double se = (*o->sandwich_se)[k];
    if (std::isfinite(se) && std::abs(o->estimate[k] - beta0[k]) <= 1.959963984540054 * se) ++hit;
  }
  return 100.0 * hit / rows.size();
}

const CellSummary& cellOf(const SimulationReport& r, int n, Method m) {
  const CellSummary* c = r.find(n, m, CorrelationKind::Exchangeable);
  if (!c) throw std::runtime_error("missing campaign cell");
  return *c;
}

// ---- shared campaign for criteria 4, 5 and 8 ----

constexpr std::uint64_t kSeed = 20240101;

struct Table1Run {
  SimulationReport report;
  double seconds = 0.0;
};

const Table1Run& table1() {
  static const Table1Run run = [] {
    CampaignConfig cfg;
    cfg.sample_sizes = {300, 500};
    cfg.replicates = 200;
    cfg.methods = {Method::Unweighted, Method::Pqif, Method::Oracle};
    cfg.correlations = {CorrelationKind::Exchangeable};
    cfg.sandwich = true;
    cfg.seed = kSeed;
    const auto t0 = Clock::now();
    Table1Run r;
    r.report = runCampaign(cfg);
    r.seconds = secondsSince(t0);
    return r;
  }();
  return run;
}

// Draws a PPS sample of the simulation design with a given covariate count.
SurveySample designSample(std::uint64_t key, int N, int n, int d, CorrelationKind kind) {
  PopulationConfig pc;
  pc.N = N;
  pc.d = d;
  pc.beta0 = Vector::Zero(d);
  const double lead[] = {0.8, -0.7, -0.6};
  for (int k = 0; k < std::min(d, 3); ++k) pc.beta0[k] = lead[k];
  Rng rng = makeStream(kSeed, {77, key});
  const FinitePopulation pop = generatePopulation(pc, rng);
  return drawSamplePpswr(pop, n, rng, basisMatrices({kind, pc.m}));
}

// ---- criteria ----

Verdict gradientCheck() {
  Verdict v;
  const auto t0 = Clock::now();
  double worst = 0.0;
  const double h = 1e-5;
  for (int i = 0; i < 20; ++i) {
    const auto kind = i % 2 ? CorrelationKind::Ar1 : CorrelationKind::Exchangeable;
    const SurveySample s = designSample(100 + i, 400, 50, 4, kind);
    Rng rng = makeStream(kSeed, {101, static_cast<std::uint64_t>(i)});
    std::normal_distribution<double> g(0.0, 0.5);
    Vector beta(4);
    for (int k = 0; k < 4; ++k) beta[k] = g(rng);
    const Vector grad = qifGradient(s, beta);
    Vector fd(4);
    for (int k = 0; k < 4; ++k) {
      Vector bp = beta, bm = beta;
      bp[k] += h;
      bm[k] -= h;
      fd[k] = (qifValue(s, bp) - qifValue(s, bm)) / (2 * h);
    }
    worst = std::max(worst, (grad - fd).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff());
  }
  const double secs = secondsSince(t0);
  v.require(worst < 1e-5, "max relative error " + fmt(worst, 3) + " < 1e-5");
  v.require(secs < 10.0, "time " + fmt(secs, 3) + " s < 10 s");
  return v;
}

Verdict scadCheck() {
  Verdict v;
  PenaltySpec s;
  s.lambda = 0.2;
  s.a = 3.7;
  // closed forms: middle branch value and slope at theta = 0.4
  const double a = 3.7, l = 0.2, t = 0.4;
  const double value = -(t * t - 2 * a * l * t + l * l) / (2 * (a - 1));
  const double slope = (a * l - t) / (a - 1);
  v.require(std::abs(scadValue(t, s) - 0.0725926) < 1e-7 && std::abs(value - 0.0725926) < 1e-7,
            "p(0.4) = " + fmt(scadValue(t, s), 8));
  v.require(std::abs(scadDerivative(t, s) - 0.1259259) < 1e-7 && std::abs(slope - 0.1259259) < 1e-7,
            "p'(0.4) = " + fmt(scadDerivative(t, s), 8));
  double jump = 0.0;
  for (double knot : {l, a * l}) {
    jump = std::max(jump, std::abs(scadValue(knot - 1e-9, s) - scadValue(knot + 1e-9, s)));
  }
  v.require(jump < 1e-8, "knot jump " + fmt(jump, 3));
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    double theta = 0.0015 + 1.5 * i / 1000.0;
    if (std::abs(theta - l) < 1e-4 || std::abs(theta - a * l) < 1e-4) theta += 3e-4;
    const double fd = (scadValue(theta + 1e-6, s) - scadValue(theta - 1e-6, s)) / 2e-6;
    worst = std::max(worst, std::abs(fd - scadDerivative(theta, s)));
  }
  v.require(worst < 1e-6, "derivative vs FD at 1000 points, max error " + fmt(worst, 3));
  return v;
}

Verdict independenceCheck() {
  Verdict v;
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const SurveySample s = designSample(300 + i, 2000, 200, 10, CorrelationKind::Independence);
    const FitResult qif = fitQif(s, Vector::Zero(10));
    GeeConfig gee;
    gee.structure = {CorrelationKind::Independence, s.clusterSize()};
    const FitResult g = fitGee(s, gee, Vector::Zero(10));
    worst = std::max(worst, (qif.beta - g.beta).lpNorm<Eigen::Infinity>());
  }
  const double secs = secondsSince(t0);
  v.require(worst < 1e-6, "max |QIF - GEE| " + fmt(worst, 3) + " < 1e-6");
  v.require(secs < 30.0, "time " + fmt(secs, 3) + " s < 30 s");
  return v;
}

Verdict table1Check() {
  Verdict v;
  const Table1Run& run = table1();
  const SimulationReport& r = run.report;
  const Vector& b0 = r.beta0;
  const int d1 = r.true_model_size;
  for (int n : {300, 500}) {
    const auto& pq = cellOf(r, n, Method::Pqif);
    const auto& un = cellOf(r, n, Method::Unweighted);
    const auto& orc = cellOf(r, n, Method::Oracle);
    const double cp = percentCorrect(pq, d1), mp = meanSquaredError(pq, b0);
    const double cu = percentCorrect(un, d1), mu = meanSquaredError(un, b0);
    const double co = percentCorrect(orc, d1), mo = meanSquaredError(orc, b0);
    if (std::abs(cp - pq.correct) > 1e-9 || std::abs(mp - pq.mse) > 1e-9 * (1 + mp))
      v.require(false, "library summary disagrees with the recomputation");
    const double c_target = n == 300 ? 80.8 : 91.2, c_tol = n == 300 ? 7.0 : 6.0;
    const double m_target = n == 300 ? 0.129 : 0.049, m_tol = n == 300 ? 0.05 : 0.03;
    const std::string tag = "n=" + std::to_string(n) + " ";
    v.require(std::abs(cp - c_target) <= c_tol, tag + "PQIF C " + fmt(cp, 3) + " in " + fmt(c_target, 3) + "+-" + fmt(c_tol, 2));
    v.require(std::abs(mp - m_target) <= m_tol, tag + "PQIF MSE " + fmt(mp, 3) + " in " + fmt(m_target, 3) + "+-" + fmt(m_tol, 2));
    v.require(cu < 20.0, tag + "UNWGT C " + fmt(cu, 3) + " < 20");
    v.require(co == 100.0, tag + "ORACLE C " + fmt(co, 4));
    v.require(mo <= mp && mp <= mu, tag + "MSE ORACLE " + fmt(mo, 3) + " <= PQIF " + fmt(mp, 3) + " <= UNWGT " + fmt(mu, 3));
    const int failures = pq.failures + un.failures + orc.failures;
    if (failures > 0) v.detail << "; " << tag << failures << " failed fits excluded";
  }
  v.require(run.seconds <= 1800.0, "campaign time " + fmt(run.seconds, 4) + " s <= 1800 s");
  return v;
}

Verdict biasCheck() {
  Verdict v;
  const SimulationReport& r = table1().report;
  for (int n : {300, 500}) {
    const auto& pq = cellOf(r, n, Method::Pqif);
    const auto& un = cellOf(r, n, Method::Unweighted);
    std::string arbs;
    bool ok = true;
    for (int k = 0; k < 3; ++k) {
      const double arb = relativeBias(pq, r.beta0, k);
      arbs += (k ? "/" : "") + fmt(arb, 3);
      ok = ok && arb < 10.0;
    }
    v.require(ok, "n=" + std::to_string(n) + " PQIF ARB% " + arbs + " < 10");
    const double u3 = relativeBias(un, r.beta0, 2);
    v.require(u3 > 25.0, "n=" + std::to_string(n) + " UNWGT ARB3% " + fmt(u3, 3) + " > 25");
  }
  return v;
}

Verdict bootstrapCheck() {
  Verdict v;
  CampaignConfig cfg;
  cfg.sample_sizes = {300};
  cfg.replicates = 100;
  cfg.methods = {Method::Pqif};
  cfg.correlations = {CorrelationKind::Exchangeable};
  cfg.bootstrap = true;
  cfg.bootstrap_replicates = 200;
  cfg.sandwich = false;
  cfg.seed = kSeed;
  const auto t0 = Clock::now();
  const SimulationReport r = runCampaign(cfg);
  const double secs = secondsSince(t0);
  const auto& cell = cellOf(r, 300, Method::Pqif);
  for (int k = 0; k < 3; ++k) {
    const double sd = robustSd(cell, k);
    const double sdm = medianBootstrapSd(cell, k);
    v.require(std::abs(sdm - sd) <= 0.25 * sd,
              "beta" + std::to_string(k + 1) + " SD " + fmt(sd, 3) + " SD_m " + fmt(sdm, 3));
  }
  v.require(secs <= 2700.0, "time " + fmt(secs, 4) + " s <= 2700 s");
  return v;
}

Verdict sparsityCheck() {
  Verdict v;
  CampaignConfig cfg;
  cfg.sample_sizes = {2000};
  cfg.replicates = 50;
  cfg.methods = {Method::Pqif};
  cfg.correlations = {CorrelationKind::Exchangeable};
  cfg.sandwich = false;
  cfg.seed = kSeed;
  const SimulationReport r = runCampaign(cfg);
  const auto& cell = cellOf(r, 2000, Method::Pqif);
  const auto rows = usable(cell);
  int sparse = 0;
  for (const auto* o : rows) {
    bool zeros = true;
    for (int k = 3; k < 10; ++k) zeros = zeros && o->estimate[k] == 0.0;
    sparse += zeros;
  }
  const double pct = 100.0 * sparse / rows.size();
  v.require(pct >= 95.0, "all 7 zeros exact in " + fmt(pct, 3) + "% of " + std::to_string(rows.size()) + " replicates");
  return v;
}

Verdict coverageCheck() {
  Verdict v;
  const SimulationReport& r = table1().report;
  const double cov = coverage(cellOf(r, 300, Method::Pqif), r.beta0, 0);
  v.require(cov >= 88.0 && cov <= 99.0, "PQIF n=300 beta1 coverage " + fmt(cov, 3) + "% in [88, 99]");
  const double cov5 = coverage(cellOf(r, 500, Method::Pqif), r.beta0, 0);
  v.detail << "; n=500: " << fmt(cov5, 3) << "%";
  return v;
}

Verdict rateCheck() {
  Verdict v;
  CampaignConfig cfg;
  cfg.population.N = 50000;
  cfg.sample_sizes = {300, 1200, 4800};
  cfg.replicates = 60;
  cfg.methods = {Method::Qif};
  cfg.correlations = {CorrelationKind::Exchangeable};
  cfg.sandwich = false;
  cfg.seed = kSeed;
  const SimulationReport r = runCampaign(cfg);
  std::vector<double> lx, ly;
  std::string rmse;
  for (int n : cfg.sample_sizes) {
    const double e = std::sqrt(meanSquaredError(cellOf(r, n, Method::Qif), r.beta0));
    lx.push_back(std::log(n));
    ly.push_back(std::log(e));
    rmse += (rmse.empty() ? "" : "/") + fmt(e, 3);
  }
  const double mx = (lx[0] + lx[1] + lx[2]) / 3, my = (ly[0] + ly[1] + ly[2]) / 3;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < 3; ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = sxy / sxx;
  v.require(std::abs(slope + 0.5) <= 0.1, "slope " + fmt(slope, 3) + " in -0.5+-0.1 (RMSE " + rmse + ")");
  return v;
}

Verdict determinismCheck() {
  Verdict v;
  CampaignConfig cfg;
  cfg.population.N = 2000;
  cfg.sample_sizes = {150};
  cfg.replicates = 3;
  cfg.methods = {Method::Unweighted, Method::Pqif, Method::Pgee, Method::Oracle};
  cfg.correlations = {CorrelationKind::Exchangeable, CorrelationKind::Ar1};
  cfg.bootstrap = true;
  cfg.bootstrap_replicates = 20;
  cfg.seed = 99;
  auto render = [](const SimulationReport& rep) {
    std::ostringstream out;
    writeReportCsv(out, rep);
    writeReportMarkdown(out, rep);
    return out.str();
  };
  const std::string first = render(runCampaign(cfg));
  const std::string second = render(runCampaign(cfg));
  CampaignConfig threaded = cfg;
  threaded.threads = 3;
  const std::string third = render(runCampaign(threaded));
  v.require(first == second, "rerun byte-identical (" + std::to_string(first.size()) + " bytes)");
  v.require(first == third, "three workers byte-identical");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"QIF gradient matches central differences", gradientCheck},
      {"SCAD continuity, derivative and spot values", scadCheck},
      {"L=1 QIF equals independence GEE", independenceCheck},
      {"desk-scale selection and MSE table", table1Check},
      {"absolute relative bias", biasCheck},
      {"bootstrap SD_m tracks Monte Carlo SD", bootstrapCheck},
      {"sparsity at n=2000", sparsityCheck},
      {"sandwich interval coverage", coverageCheck},
      {"root-n rate of the QIF estimator", rateCheck},
      {"byte-identical reports", determinismCheck},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    if (!v.pass) ++failed;
    std::printf("%s [%d] %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                v.detail.str().c_str(), secondsSince(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
