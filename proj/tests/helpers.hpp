#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

// Test-side statistics, kept independent of the library implementation.
namespace testutil {

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (const double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

inline double sd(const std::vector<double>& v) { return std::sqrt(variance(v)); }

inline double se_of_mean(const std::vector<double>& v) {
  return sd(v) / std::sqrt(static_cast<double>(v.size()));
}

// Batch-means standard error for autocorrelated chains.
inline double batch_se(const std::vector<double>& v, int n_batches) {
  const std::size_t b = v.size() / static_cast<std::size_t>(n_batches);
  std::vector<double> bm;
  for (int k = 0; k < n_batches; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < b; ++i) s += v[static_cast<std::size_t>(k) * b + i];
    bm.push_back(s / static_cast<double>(b));
  }
  return sd(bm) / std::sqrt(static_cast<double>(n_batches));
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double phi_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

inline double phi_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

// Mean and variance of N(0,1) truncated to [a, inf), via direct erfc.
inline double trunc_lower_mean(double a) { return phi_pdf(a) / phi_tail(a); }

inline double trunc_lower_var(double a) {
  const double h = trunc_lower_mean(a);
  return 1.0 + a * h - h * h;
}

}  // namespace testutil
