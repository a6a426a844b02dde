#pragma once

namespace esrate {

double std_normal_pdf(double x);
//! Phi(x), via erfc so both tails keep relative accuracy.
double std_normal_cdf(double x);
//! Phi^{-1}(p) for p in (0, 1). Throws InvalidInput otherwise.
double std_normal_quantile(double p);

}  // namespace esrate
