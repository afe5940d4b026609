#pragma once

namespace poc {

// Standard normal distribution function, accurate to ~1e-15 via erfc.
double normal_cdf(double x);

// Standard normal quantile function. Rational approximation refined by one
// Halley step against normal_cdf; absolute error well below 1e-9.
double normal_quantile(double p);

}  // namespace poc
