#pragma once

// Independent reference implementations used to check the library. They
// follow the textbook definitions directly and favour clarity over speed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

using Dense = std::vector<std::vector<double>>;

inline double euclid(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return std::sqrt(s);
}

// Mean silhouette straight from the definition, O(N^2) per point.
inline double silhouette(const Dense& x, const std::vector<int>& label) {
  const std::size_t n = x.size();
  std::set<int> clusters(label.begin(), label.end());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t own_size = 0;
    for (std::size_t j = 0; j < n; ++j) own_size += label[j] == label[i];
    if (own_size == 1) continue;
    double a = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && label[j] == label[i]) a += euclid(x[i], x[j]);
    }
    a /= static_cast<double>(own_size - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c : clusters) {
      if (c == label[i]) continue;
      double s = 0.0;
      std::size_t m = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (label[j] == c) {
          s += euclid(x[i], x[j]);
          ++m;
        }
      }
      b = std::min(b, s / static_cast<double>(m));
    }
    const double den = std::max(a, b);
    if (den > 0.0) total += (b - a) / den;
  }
  return total / static_cast<double>(n);
}

inline double purity(const std::vector<int>& cluster, const std::vector<std::string>& label) {
  std::map<int, std::map<std::string, int>> counts;
  for (std::size_t i = 0; i < cluster.size(); ++i) ++counts[cluster[i]][label[i]];
  int majority = 0;
  for (const auto& [c, m] : counts) {
    int best = 0;
    for (const auto& [l, k] : m) best = std::max(best, k);
    majority += best;
  }
  return static_cast<double>(majority) / static_cast<double>(cluster.size());
}

inline double inertia(const Dense& x, const std::vector<int>& label) {
  std::map<int, std::vector<double>> sum;
  std::map<int, int> count;
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto& s = sum[label[i]];
    s.resize(x[i].size(), 0.0);
    for (std::size_t d = 0; d < x[i].size(); ++d) s[d] += x[i][d];
    ++count[label[i]];
  }
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto c = sum[label[i]];
    for (double& v : c) v /= count[label[i]];
    const double d = euclid(x[i], c);
    total += d * d;
  }
  return total;
}

// Equal-variance two-sample t statistic.
inline double pooled_t(const std::vector<double>& a, const std::vector<double>& b) {
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const double ma = mean(a), mb = mean(b);
  double ssa = 0.0, ssb = 0.0;
  for (double x : a) ssa += (x - ma) * (x - ma);
  for (double x : b) ssb += (x - mb) * (x - mb);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double sp2 = (ssa + ssb) / (na + nb - 2.0);
  return (ma - mb) / std::sqrt(sp2 * (1.0 / na + 1.0 / nb));
}

// Unique contiguous n-grams / total n-grams.
inline double ngram_diversity(const std::vector<std::string>& tokens, std::size_t n) {
  std::set<std::vector<std::string>> seen;
  const std::size_t total = tokens.size() - n + 1;
  for (std::size_t i = 0; i < total; ++i) seen.emplace(tokens.begin() + i, tokens.begin() + i + n);
  return static_cast<double>(seen.size()) / static_cast<double>(total);
}

}  // namespace oracle
