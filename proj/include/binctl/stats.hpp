// Small statistics toolkit: normal and noncentral chi-squared probabilities,
// rank correlation, and the sqrt(s_n) dispersion fit.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace binctl::stats {

double normal_cdf(double z);

/// P(-tol < mu + e < tol) for e ~ N(0, sigma^2). sigma == 0 gives the
/// indicator |mu| < tol.
double box_probability(double mu, double sigma, double tol);

/// P(X <= x) for X ~ noncentral chi-squared(k, lambda).
double noncentral_chi2_cdf(double k, double lambda, double x);

struct Correlation {
  double rho = 0.0;
  double p_positive = 1.0;  ///< one-sided p-value for rho > 0
  double p_two_sided = 1.0;
};

/// Spearman rank correlation (average ranks for ties), Student-t p-values.
Correlation spearman(std::span<const double> x, std::span<const double> y);

/// Least-squares fit of |e| = c * sqrt(s) through the origin, converted to a
/// normal standard deviation (E|e| = sigma * sqrt(2/pi)).
double fit_sqrt_law(std::span<const double> abs_err, std::span<const double> switches);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LineFit least_squares_line(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> v);
double stddev(std::span<const double> v);

}  // namespace binctl::stats
