#pragma once

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "blendkg/error.hpp"
#include "blendkg/annotations.hpp"

namespace blendkg::stats {

struct Correlation {
  double r = 0;
  double p_value = 1;
};

/// Standard Fleiss' kappa over the categories present in the matrix.
inline double fleiss_kappa(const eval::AnnotationMatrix& m) {
  m.check();
  std::size_t n_items = m.labels.size();
  std::size_t raters = m.annotators.size();
  if (raters < 2 || n_items < 2) throw DegenerateMatrix("need at least 2 items and 2 annotators");
  std::map<std::string, std::size_t> totals;
  double p_bar = 0;
  for (const auto& row : m.labels) {
    std::map<std::string, std::size_t> counts;
    for (const auto& l : row) ++counts[l];
    double agree = 0;
    for (const auto& [l, c] : counts) {
      agree += static_cast<double>(c) * (c - 1);
      totals[l] += c;
    }
    p_bar += agree / (static_cast<double>(raters) * (raters - 1));
  }
  p_bar /= n_items;
  double p_e = 0;
  for (const auto& [l, c] : totals) {
    double pj = static_cast<double>(c) / (static_cast<double>(n_items) * raters);
    p_e += pj * pj;
  }
  if (p_e >= 1.0) throw DegenerateMatrix("every annotation falls in one category");
  return (p_bar - p_e) / (1.0 - p_e);
}

/// Two-sided p-value of a correlation coefficient under H0: rho = 0.
inline double correlation_p_value(double r, std::size_t n) {
  if (n < 3) return 1.0;
  double df = static_cast<double>(n - 2);
  if (std::abs(r) >= 1.0) return 0.0;
  double t = r * std::sqrt(df / (1.0 - r * r));
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

/// r = (M1 - M0) / s * sqrt(n1 n0 / n^2), s the population standard deviation.
inline Correlation point_biserial(const std::vector<int>& binary, const std::vector<double>& scores) {
  if (binary.size() != scores.size()) throw DegenerateInput("inputs differ in length");
  std::size_t n = binary.size();
  if (n < 3) throw DegenerateInput("need at least 3 pairs");
  double sum1 = 0, sum0 = 0;
  std::size_t n1 = 0, n0 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (binary[i] == 1) {
      sum1 += scores[i];
      ++n1;
    } else if (binary[i] == 0) {
      sum0 += scores[i];
      ++n0;
    } else {
      throw DegenerateInput("binary input must be 0 or 1");
    }
  }
  if (n1 == 0 || n0 == 0) throw DegenerateInput("both classes must be present");
  double mean = (sum1 + sum0) / n;
  double var = 0;
  for (double s : scores) var += (s - mean) * (s - mean);
  var /= n;
  if (var <= 0) throw DegenerateInput("scores have zero variance");
  double r = (sum1 / n1 - sum0 / n0) / std::sqrt(var) *
             std::sqrt(static_cast<double>(n1) * n0 / (static_cast<double>(n) * n));
  r = std::clamp(r, -1.0, 1.0);
  return {r, correlation_p_value(r, n)};
}

/// 1-based ranks with ties sharing their average rank.
inline std::vector<double> average_ranks(const std::vector<double>& xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    double avg = (static_cast<double>(i) + j) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  std::size_t n = xs.size();
  double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx <= 0 || syy <= 0) throw DegenerateInput("zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Pearson correlation of average ranks.
inline Correlation spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw DegenerateInput("inputs differ in length");
  if (xs.size() < 3) throw DegenerateInput("need at least 3 pairs");
  double rho = 0;
  try {
    rho = pearson(average_ranks(xs), average_ranks(ys));
  } catch (const DegenerateInput&) {
    throw DegenerateInput("zero rank variance");
  }
  return {rho, correlation_p_value(rho, xs.size())};
}

}  // namespace blendkg::stats
