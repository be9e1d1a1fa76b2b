#pragma once

namespace svyqif {

double normalCdf(double x);
double normalQuantile(double p);

/// P(X <= a, Y <= b) for a standard bivariate normal with correlation rho.
double bivariateNormalCdf(double a, double b, double rho);

/// Bivariate normal density at (a, b); the derivative of the CDF in rho.
double bivariateNormalPdf(double a, double b, double rho);

/// Latent normal correlation that makes two thresholded binaries with means
/// p1, p2 reach Pearson correlation `target`. Throws NumericError when the
/// target exceeds what any latent correlation can produce.
double latentCorrelation(double p1, double p2, double target);

/// Pearson correlation of the two binaries induced by latent correlation rho.
double binaryCorrelation(double p1, double p2, double rho);

}  // namespace svyqif
