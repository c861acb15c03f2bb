#pragma once

// Brute-force references and small statistical helpers shared by the tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <vector>

#include "calib/binning.hpp"
#include "calib/domain.hpp"
#include "calib/rng.hpp"

namespace calib::testing {

// Groups example indices by cell with a plain linear scan over all pairs.
inline std::vector<std::vector<std::size_t>> naive_groups(const TopKView& view,
                                                          const PartitionSpec& spec) {
  std::vector<std::vector<std::size_t>> groups;
  std::vector<BinKey> keys;
  for (std::size_t i = 0; i < view.n; ++i) {
    const BinKey key = assign_bin(view.z_row(i), spec);
    auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end()) {
      keys.push_back(key);
      groups.push_back({i});
    } else {
      groups[static_cast<std::size_t>(it - keys.begin())].push_back(i);
    }
  }
  return groups;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

// (1/n) sum_bins 1/weight(N) sum_{a != b} U_a . U_b, as a double loop.
template <class Weight>
double pairwise_oracle(const TopKView& view, const PartitionSpec& spec, Weight weight) {
  double total = 0.0;
  for (const auto& g : naive_groups(view, spec)) {
    if (g.size() < 2) continue;
    double s = 0.0;
    for (std::size_t a : g) {
      for (std::size_t b : g) {
        if (a != b) s += dot(view.u_row(a), view.u_row(b));
      }
    }
    total += s / weight(g.size());
  }
  return total / static_cast<double>(view.n);
}

inline double debiased_oracle(const TopKView& view, const PartitionSpec& spec) {
  return pairwise_oracle(view, spec, [](std::size_t c) { return static_cast<double>(c - 1); });
}

inline double tcal_oracle(const TopKView& view, const PartitionSpec& spec) {
  return pairwise_oracle(view, spec, [](std::size_t c) { return static_cast<double>(c); });
}

// Plug-in variance straight from per-cell means and covariances.
inline double sigma1_oracle(const TopKView& view, const PartitionSpec& spec) {
  const std::size_t k = view.k;
  const double n = static_cast<double>(view.n);
  double a = 0.0, b = 0.0, c = 0.0;
  for (const auto& g : naive_groups(view, spec)) {
    const double p = static_cast<double>(g.size()) / n;
    std::vector<double> m(k, 0.0);
    for (std::size_t i : g) {
      for (std::size_t j = 0; j < k; ++j) m[j] += view.u_row(i)[j] / static_cast<double>(g.size());
    }
    std::vector<double> cov(k * k, 0.0);
    for (std::size_t i : g) {
      const auto u = view.u_row(i);
      for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t s = 0; s < k; ++s) {
          cov[r * k + s] += (u[r] * u[s] - m[r] * m[s]) / static_cast<double>(g.size());
        }
      }
    }
    double norm2 = 0.0;
    for (double v : m) norm2 += v * v;
    double quad = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t s = 0; s < k; ++s) quad += m[r] * cov[r * k + s] * m[s];
    }
    a += p * norm2 * norm2;
    b += p * norm2;
    c += p * quad;
  }
  return a - b * b + 4.0 * c;
}

// Random dataset with K classes; labels drawn from the row probabilities
// when `calibrated`, uniformly otherwise.
inline Dataset random_dataset(std::size_t n, std::size_t K, Rng& rng, bool calibrated = false) {
  std::vector<double> probs(n * K);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
      probs[i * K + j] = -std::log1p(-uniform01(rng));
      sum += probs[i * K + j];
    }
    for (std::size_t j = 0; j < K; ++j) probs[i * K + j] /= sum;
    if (calibrated) {
      const double u = uniform01(rng);
      double acc = 0.0;
      int label = static_cast<int>(K) - 1;
      for (std::size_t j = 0; j < K; ++j) {
        acc += probs[i * K + j];
        if (u < acc) {
          label = static_cast<int>(j);
          break;
        }
      }
      labels[i] = label;
    } else {
      labels[i] = static_cast<int>(uniform_index(rng, K));
    }
  }
  return Dataset::validate(K, std::move(probs), std::move(labels));
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  double var = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& x) {
  MeanSe r;
  for (double v : x) r.mean += v;
  r.mean /= static_cast<double>(x.size());
  for (double v : x) r.var += (v - r.mean) * (v - r.mean);
  r.var /= static_cast<double>(x.size() - 1);
  r.se = std::sqrt(r.var / static_cast<double>(x.size()));
  return r;
}

// Kolmogorov distribution upper tail P(K > x) via its alternating series.
inline double kolmogorov_upper(double x) {
  if (x < 0.27) return 1.0;
  double s = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * x * x);
    s += (j % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// One-sample KS test against N(0, 1); returns the asymptotic p-value with
// the Stephens small-sample correction.
inline double ks_normal_pvalue(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = std_normal_cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  const double sn = std::sqrt(n);
  return kolmogorov_upper((sn + 0.12 + 0.11 / sn) * d);
}

}  // namespace calib::testing
