#include "binctl/stats.hpp"

#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "binctl/errors.hpp"

namespace binctl::stats {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double box_probability(double mu, double sigma, double tol) {
  if (sigma <= 0.0) return std::abs(mu) < tol ? 1.0 : 0.0;
  const double hi = (tol - mu) / sigma;
  const double lo = (-tol - mu) / sigma;
  // Evaluate in the tail that keeps precision.
  double p;
  if (lo > 0.0) {
    p = normal_cdf(-lo) - normal_cdf(-hi);
  } else {
    p = normal_cdf(hi) - normal_cdf(lo);
  }
  return std::clamp(p, 0.0, 1.0);
}

double noncentral_chi2_cdf(double k, double lambda, double x) {
  if (x <= 0.0) return 0.0;
  if (lambda <= 0.0) {
    boost::math::chi_squared_distribution<double> dist(k);
    return boost::math::cdf(dist, x);
  }
  boost::math::non_central_chi_squared_distribution<double> dist(k, lambda);
  return boost::math::cdf(dist, x);
}

namespace {

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) r[idx[t]] = avg;
    i = j + 1;
  }
  return r;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

Correlation spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractError("spearman: length mismatch");
  Correlation c;
  if (x.size() < 3) return c;
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  c.rho = pearson(rx, ry);
  const double dfree = static_cast<double>(x.size()) - 2.0;
  const double r = std::clamp(c.rho, -0.999999999999, 0.999999999999);
  const double t = r * std::sqrt(dfree / (1.0 - r * r));
  boost::math::students_t_distribution<double> dist(dfree);
  c.p_positive = boost::math::cdf(boost::math::complement(dist, t));
  c.p_two_sided = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return c;
}

double fit_sqrt_law(std::span<const double> abs_err, std::span<const double> switches) {
  if (abs_err.size() != switches.size()) throw ContractError("fit_sqrt_law: length mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < abs_err.size(); ++i) {
    num += abs_err[i] * std::sqrt(switches[i]);
    den += switches[i];
  }
  if (den <= 0.0) return 0.0;
  return num / den * std::sqrt(std::numbers::pi / 2.0);
}

LineFit least_squares_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ContractError("least_squares_line: need >= 2 matching points");
  const double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  LineFit f;
  f.slope = sxx > 0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  return f;
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace binctl::stats
