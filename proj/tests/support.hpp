/**
 * @file support.hpp
 * @brief Shared fixtures and independent oracles for the test suites.
 *
 * The oracles deliberately avoid the library's solver path: the lattice
 * search, the exhaustive reassignment search and the quadrature t-tail are
 * separate computations that the library results are checked against.
 */

#ifndef NMSORT_TESTS_SUPPORT_HPP
#define NMSORT_TESTS_SUPPORT_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "nmsort/nmsort.hpp"

namespace nmsort::fixtures {

/// The twenty-firm, three-criterion illustration with six assignment examples.
inline ProblemInstance firms_instance(int subintervals = 4) {
  const std::vector<std::vector<double>> rows{
      {3.8, 2.4, 60.7},     {5.84, 1.96, 63.7},   {0.04, 1.14, 64.26},  {4.89, 2.92, 55.04},
      {0.57, 1.72, 64.7},   {16.7, 2.32, 53.29},  {3.16, 4.1, 23.9},    {25.42, 3.35, 59.03},
      {17.99, 1.34, 73.84}, {3.98, 3.26, 84.95},  {0.76, 2.74, 84.44},  {24.16, 2.83, 70.51},
      {2.53, 2.54, 81.05},  {35.06, 9.56, 61.08}, {0.72, 0.97, 99.67},  {24.0, 2.5, 99.92},
      {8.86, 29.06, 47.4},  {10.58, 4.03, 89.64}, {16.35, 3.6, 56.55},  {1.7, 5.92, 85.83}};
  AssignmentExamples examples{{1, 4}, {2, 2}, {8, 3}, {9, 2}, {11, 1}, {16, 3}};
  auto inst = ProblemInstance::from_matrix(Matrix::from_rows(rows), subintervals, 4, examples);
  for (int i = 1; i <= 20; ++i) inst.alternative_ids.push_back("a" + std::to_string(i));
  inst.criterion_names = {"g1", "g2", "g3"};
  return inst;
}

/// Zero-based indices of the fourteen firms without an example.
inline std::vector<int> firms_non_reference() { return {0, 3, 4, 5, 6, 7, 10, 12, 13, 14, 15, 17, 18, 19}; }

/// Marginal values of the published discrimination-first model, one row per criterion.
inline std::vector<std::vector<double>> firms_published_marginals() {
  return {{0.0336, 1, 0.5562, 0, 0}, {1, 0, 0, 0, 0}, {1, 0.6972, 0.3941, 0, 1}};
}

/// The published discrimination-first model (eps 0.2675, b = 1.3547, 1.6222, 1.8898).
inline SortingModel firms_published_model() {
  const auto inst = firms_instance(4);
  SortingModel model;
  const auto values = firms_published_marginals();
  for (std::size_t j = 0; j < 3; ++j) {
    model.marginals.push_back({inst.criterion_names[j], inst.criteria[j], values[j]});
  }
  model.thresholds = {1.3547, 1.6222, 1.8898};
  model.epsilon = 0.2675;
  model.b0 = 0.0;
  model.bq = 3.2675;
  return model;
}

/**
 * @brief Tiny two-category instance on the levels {min, mid, max} of each criterion, s = 1.
 *
 * thetas[i][j] in {0, 0.5, 1} is the position of alternative i on criterion j.
 * The first two rows are pinned to the scale ends so every scale spans [0, 1].
 */
struct TinyInstance {
  std::vector<std::vector<double>> thetas;
  std::vector<int> categories;  // 1 or 2 per alternative, all are references
};

inline TinyInstance random_tiny(std::mt19937_64& rng, int n, int m) {
  std::uniform_int_distribution<int> level(0, 2);
  std::uniform_int_distribution<int> cat(1, 2);
  TinyInstance t;
  for (int i = 0; i < n; ++i) {
    std::vector<double> row;
    for (int j = 0; j < m; ++j) {
      double th = 0.5 * level(rng);
      if (i == 0) th = 0.0;
      if (i == 1) th = 1.0;
      row.push_back(th);
    }
    t.thetas.push_back(row);
    t.categories.push_back(cat(rng));
  }
  return t;
}

inline ProblemInstance to_instance(const TinyInstance& t, int q = 2) {
  auto inst = ProblemInstance::from_matrix(Matrix::from_rows(t.thetas), 1, q);
  for (std::size_t i = 0; i < t.categories.size(); ++i) {
    inst.examples.push_back({static_cast<int>(i), t.categories[i]});
  }
  return inst;
}

/**
 * @brief Brute-force consistency verdict on a lattice of slopes, m <= 2.
 *
 * With one subinterval each marginal is v_j(min) + theta * w_j with w_j in
 * [-1, 1], and the constants cancel between categories. Pairwise differences
 * of theta lie in {0, +-0.5, +-1}, so the only critical slope ratios are 0,
 * +-1/2, +-1, +-2 and infinity; every open cone between them and every
 * critical ray contains a point of the {-1, -0.95, ..., 1}^m lattice. Any
 * strict separation found there has a gap of at least 0.025, which exceeds
 * eps, so the verdict is exact.
 */
inline bool lattice_consistent(const TinyInstance& t, double eps) {
  const int m = static_cast<int>(t.thetas.front().size());
  const int grid = 41;
  std::vector<int> idx(static_cast<std::size_t>(m), 0);
  const auto total = static_cast<long>(std::pow(grid, m));
  for (long code = 0; code < total; ++code) {
    long c = code;
    for (auto& k : idx) {
      k = static_cast<int>(c % grid);
      c /= grid;
    }
    double top_c1 = -1e300;
    double bottom_c2 = 1e300;
    for (std::size_t i = 0; i < t.thetas.size(); ++i) {
      double v = 0.0;
      for (int j = 0; j < m; ++j) {
        v += t.thetas[i][static_cast<std::size_t>(j)] * (idx[static_cast<std::size_t>(j)] - 20) / 20.0;
      }
      if (t.categories[i] == 1) top_c1 = std::max(top_c1, v);
      else bottom_c2 = std::min(bottom_c2, v);
    }
    if (bottom_c2 - top_c1 >= eps - 1e-12) return true;
  }
  return false;
}

/// Fewest category moves over all q^n reassignments, each judged by the consistency check.
inline int exhaustive_min_moves(const ProblemInstance& inst, const LearnConfig& config) {
  const std::size_t n = inst.examples.size();
  const int q = inst.categories;
  long total = 1;
  for (std::size_t k = 0; k < n; ++k) total *= q;
  int best = -1;
  for (long code = 0; code < total; ++code) {
    ProblemInstance trial = inst;
    long c = code;
    int moves = 0;
    for (std::size_t k = 0; k < n; ++k) {
      trial.examples[k].category = static_cast<int>(c % q) + 1;
      c /= q;
      moves += std::abs(trial.examples[k].category - inst.examples[k].category);
    }
    if (best >= 0 && moves >= best) continue;
    if (check_consistency(trial, config).consistent()) best = moves;
  }
  return best;
}

/// Upper tail P(T > t) of Student's t by composite Simpson quadrature of the density.
inline double t_upper_tail(double t, double df) {
  const double log_norm = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * M_PI);
  auto pdf = [&](double x) { return std::exp(log_norm - (df + 1) / 2 * std::log1p(x * x / df)); };
  // substitute x = t + u / (1 - u) to map [t, inf) onto [0, 1)
  auto integrand = [&](double u) {
    if (u >= 1.0) return 0.0;
    const double w = 1.0 - u;
    return pdf(t + u / w) / (w * w);
  };
  const int steps = 200000;
  const double h = 1.0 / steps;
  double sum = integrand(0.0) + integrand(1.0);
  for (int k = 1; k < steps; ++k) sum += integrand(k * h) * (k % 2 == 1 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

}  // namespace nmsort::fixtures

#endif  // NMSORT_TESTS_SUPPORT_HPP
