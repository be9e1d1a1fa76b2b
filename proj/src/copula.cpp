#include "svyqif/copula.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/normal.hpp>

#include "svyqif/errors.hpp"

namespace svyqif {

double normalCdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normalQuantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ContractError("normalQuantile: probability must lie in (0, 1)");
  static const boost::math::normal standard;
  return boost::math::quantile(standard, p);
}

namespace {

// Upper orthant probability P(X > h, Y > k) by Gauss-Legendre quadrature of
// the Drezner-Wesolowsky representation (Genz's BVNU).
double upperOrthant(double h, double k, double r) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (r == 0.0) return normalCdf(-h) * normalCdf(-k);

  static constexpr double w6[] = {0.1713244923791705, 0.3607615730481384, 0.4679139345726904};
  static constexpr double x6[] = {0.9324695142031522, 0.6612093864662647, 0.2386191860831970};
  static constexpr double w12[] = {0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
                                   0.2031674267230659,  0.2334925365383547, 0.2491470458134029};
  static constexpr double x12[] = {0.9815606342467191, 0.9041172563704750, 0.7699026741943050,
                                   0.5873179542866171, 0.3678314989981802, 0.1252334085114692};
  static constexpr double w20[] = {0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
                                   0.08327674157670475, 0.1019301198172404,  0.1181945319615184,
                                   0.1316886384491766,  0.1420961093183821,  0.1491729864726037,
                                   0.1527533871307259};
  static constexpr double x20[] = {0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
                                   0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
                                   0.5108670019508271, 0.3737060887154196, 0.2277858511416451,
                                   0.07652652113349733};
  const double* w;
  const double* x;
  int lg;
  if (std::abs(r) < 0.3) {
    w = w6, x = x6, lg = 3;
  } else if (std::abs(r) < 0.75) {
    w = w12, x = x12, lg = 6;
  } else {
    w = w20, x = x20, lg = 10;
  }

  double hk = h * k;
  double bvn = 0.0;
  if (std::abs(r) < 0.925) {
    const double hs = 0.5 * (h * h + k * k);
    const double asr = 0.5 * std::asin(r);
    for (int i = 0; i < lg; ++i) {
      for (double sgn : {-1.0, 1.0}) {
        const double sn = std::sin(asr * (1.0 + sgn * x[i]));
        bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      }
    }
    return bvn * asr / two_pi + normalCdf(-h) * normalCdf(-k);
  }

  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  if (std::abs(r) < 1.0) {
    const double as = (1.0 - r) * (1.0 + r);
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 80.0;
    double asr = -0.5 * (bs / as + hk);
    if (asr > -100.0) bvn = a * std::exp(asr) * (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
    if (hk > -100.0) {
      const double b = std::sqrt(bs);
      const double sp = std::sqrt(two_pi) * normalCdf(-b / a);
      bvn -= std::exp(-0.5 * hk) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
    }
    a *= 0.5;
    double sum = 0.0;
    for (int i = 0; i < lg; ++i) {
      for (double sgn : {-1.0, 1.0}) {
        const double xs = std::pow(a * (1.0 + sgn * x[i]), 2);
        const double asr_i = -0.5 * (bs / xs + hk);
        if (asr_i <= -100.0) continue;
        const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
        const double rs = std::sqrt(1.0 - xs);
        const double ep = std::exp(-0.5 * hk * xs / std::pow(1.0 + rs, 2)) / rs;
        sum += w[i] * std::exp(asr_i) * (sp - ep);
      }
    }
    bvn = (a * sum - bvn) / two_pi;
  }
  if (r > 0.0) return bvn + normalCdf(-std::max(h, k));
  if (h >= k) return -bvn;
  const double L = h < 0.0 ? normalCdf(k) - normalCdf(h) : normalCdf(-h) - normalCdf(-k);
  return L - bvn;
}

}  // namespace

double bivariateNormalCdf(double a, double b, double rho) {
  if (!(rho >= -1.0 && rho <= 1.0)) throw ContractError("bivariateNormalCdf: |rho| must be <= 1");
  if (std::isinf(a) || std::isinf(b)) {
    if (a == -INFINITY || b == -INFINITY) return 0.0;
    if (a == INFINITY) return normalCdf(b);
    return normalCdf(a);
  }
  return std::clamp(upperOrthant(-a, -b, rho), 0.0, 1.0);
}

double bivariateNormalPdf(double a, double b, double rho) {
  const double one_minus = 1.0 - rho * rho;
  return std::exp(-(a * a - 2.0 * rho * a * b + b * b) / (2.0 * one_minus)) /
         (2.0 * std::numbers::pi * std::sqrt(one_minus));
}

double binaryCorrelation(double p1, double p2, double rho) {
  const double p11 = bivariateNormalCdf(normalQuantile(p1), normalQuantile(p2), rho);
  return (p11 - p1 * p2) / std::sqrt(p1 * (1.0 - p1) * p2 * (1.0 - p2));
}

double latentCorrelation(double p1, double p2, double target) {
  if (!(p1 > 0.0 && p1 < 1.0 && p2 > 0.0 && p2 < 1.0))
    throw ContractError("latentCorrelation: means must lie in (0, 1)");
  if (target == 0.0) return 0.0;
  const double a = normalQuantile(p1);
  const double b = normalQuantile(p2);
  const double p11 = target * std::sqrt(p1 * (1.0 - p1) * p2 * (1.0 - p2)) + p1 * p2;
  const double upper = std::min(p1, p2);
  const double lower = std::max(0.0, p1 + p2 - 1.0);
  if (!(p11 < upper && p11 > lower))
    throw NumericError("latentCorrelation: binary correlation " + std::to_string(target) +
                       " is unattainable for means " + std::to_string(p1) + " and " +
                       std::to_string(p2));

  // Safeguarded Newton on Phi2(a, b; rho) = p11; Phi2 is increasing in rho.
  constexpr double edge = 1.0 - 1e-12;
  double lo = target > 0.0 ? 0.0 : -edge;
  double hi = target > 0.0 ? edge : 0.0;
  double rho = std::clamp(target, lo, hi);
  for (int it = 0; it < 200; ++it) {
    const double f = bivariateNormalCdf(a, b, rho) - p11;
    if (std::abs(f) < 1e-15) return rho;
    if (f > 0.0) {
      hi = rho;
    } else {
      lo = rho;
    }
    if (hi - lo < 1e-14) return 0.5 * (lo + hi);
    const double slope = bivariateNormalPdf(a, b, rho);
    double next = slope > 0.0 ? rho - f / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    rho = next;
  }
  return rho;
}

}  // namespace svyqif
