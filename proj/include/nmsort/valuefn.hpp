/**
 * @file valuefn.hpp
 * @brief Marginal/global value evaluation, category assignment and the
 *        transformation into the UTA-like standard form.
 */

#ifndef NMSORT_VALUEFN_HPP
#define NMSORT_VALUEFN_HPP

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "nmsort/core.hpp"

namespace nmsort {

/// Linear interpolation between the two breakpoints bracketing x (x is clamped into the scale).
inline double marginal_value(const CriterionScale& scale, std::span<const double> values, double x) {
  if (values.size() != scale.breakpoints.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one value per breakpoint required");
  }
  const Interpolation at = locate(scale, x);
  const auto l = static_cast<std::size_t>(at.lower);
  if (at.theta == 0.0) return values[l];
  if (at.theta == 1.0) return values[l + 1];
  return values[l] + at.theta * (values[l + 1] - values[l]);
}

inline double marginal_value(const MarginalFunction& fn, double x) {
  return marginal_value(fn.scale, fn.values, x);
}

/// Global value together with a flag telling whether any level was clamped into its scale.
struct Evaluation {
  double value = 0.0;
  bool clamped = false;
};

inline Evaluation evaluate(std::span<const MarginalFunction> marginals, std::span<const double> row) {
  if (row.size() != marginals.size()) {
    throw Error(ErrorCode::DimensionMismatch, "row length differs from the criterion count");
  }
  Evaluation out;
  for (std::size_t j = 0; j < row.size(); ++j) {
    const auto& fn = marginals[j];
    out.clamped = out.clamped || row[j] < fn.scale.min || row[j] > fn.scale.max;
    out.value += marginal_value(fn, row[j]);
  }
  return out;
}

inline double global_value(const SortingModel& model, std::span<const double> row) {
  return evaluate(model.marginals, row).value;
}

/**
 * @brief Category h with b_{h-1} <= value < b_h.
 *
 * @p interior holds b_1..b_{q-1}. Values below b_0 land in C_1 and values at
 * or above b_q in C_q, so only the interior thresholds matter.
 */
inline int assign_category(std::span<const double> interior, double value) {
  int h = 1;
  for (double b : interior) {
    if (b <= value) ++h;
  }
  return h;
}

inline int assign_category(const SortingModel& model, double value) {
  return assign_category(model.thresholds, value);
}

/// Categories of every matrix row under the model.
inline std::vector<int> sort_alternatives(const SortingModel& model, const Matrix& matrix) {
  std::vector<int> out(matrix.rows());
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    out[i] = assign_category(model, global_value(model, matrix.row(i)));
  }
  return out;
}

/// (b0, bq) from the per-criterion marginal extremes.
inline std::pair<double, double> derive_outer_thresholds(std::span<const std::vector<double>> marginals,
                                                         double epsilon) {
  double lo = 0.0;
  double hi = 0.0;
  for (const auto& values : marginals) {
    if (values.empty()) throw Error(ErrorCode::InvalidArgument, "empty marginal vector");
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    lo += *mn;
    hi += *mx;
  }
  return {lo, hi + epsilon};
}

inline std::pair<double, double> derive_outer_thresholds(std::span<const MarginalFunction> marginals,
                                                         double epsilon) {
  std::vector<std::vector<double>> values;
  values.reserve(marginals.size());
  for (const auto& fn : marginals) values.push_back(fn.values);
  return derive_outer_thresholds(values, epsilon);
}

/**
 * @brief Sorting model mapped into the UTA-like functional space.
 *
 * Every transformed marginal is 0 at its worst breakpoint, the best values
 * sum to 1, thresholds run from 0 to 1 + epsilon.
 */
struct TransformedModel {
  std::vector<MarginalFunction> marginals;
  std::vector<double> thresholds;  // b_0^S .. b_q^S
  double epsilon = 0.0;
  std::vector<double> weights;
  std::vector<int> worst_breakpoint;  // index of g_j^-
  std::vector<int> best_breakpoint;   // index of g_j^+

  [[nodiscard]] std::span<const double> interior_thresholds() const {
    return std::span<const double>(thresholds).subspan(1, thresholds.size() - 2);
  }

  bool operator==(const TransformedModel&) const = default;
};

namespace detail {

inline std::pair<int, int> extreme_breakpoints(const std::vector<double>& values) {
  // first occurrence wins on ties
  int worst = 0;
  int best = 0;
  for (int l = 1; l < static_cast<int>(values.size()); ++l) {
    if (values[static_cast<std::size_t>(l)] < values[static_cast<std::size_t>(worst)]) worst = l;
    if (values[static_cast<std::size_t>(l)] > values[static_cast<std::size_t>(best)]) best = l;
  }
  return {worst, best};
}

}  // namespace detail

inline TransformedModel transform_to_uta(const SortingModel& model) {
  TransformedModel out;
  double low_sum = 0.0;
  double range = 0.0;
  for (const auto& fn : model.marginals) {
    const auto [worst, best] = detail::extreme_breakpoints(fn.values);
    out.worst_breakpoint.push_back(worst);
    out.best_breakpoint.push_back(best);
    low_sum += fn.values[static_cast<std::size_t>(worst)];
    range += fn.values[static_cast<std::size_t>(best)] - fn.values[static_cast<std::size_t>(worst)];
  }
  if (!(range > 0.0)) {
    throw Error(ErrorCode::ZeroRange, "all marginal value functions are constant");
  }
  for (std::size_t j = 0; j < model.marginals.size(); ++j) {
    const auto& fn = model.marginals[j];
    const double worst = fn.values[static_cast<std::size_t>(out.worst_breakpoint[j])];
    const double best = fn.values[static_cast<std::size_t>(out.best_breakpoint[j])];
    MarginalFunction transformed{fn.name, fn.scale, {}};
    transformed.values.reserve(fn.values.size());
    for (double v : fn.values) transformed.values.push_back((v - worst) / range);
    out.marginals.push_back(std::move(transformed));
    out.weights.push_back((best - worst) / range);
  }
  for (double b : model.full_thresholds()) out.thresholds.push_back((b - low_sum) / range);
  out.epsilon = model.epsilon / range;
  return out;
}

inline double global_value(const TransformedModel& model, std::span<const double> row) {
  return evaluate(model.marginals, row).value;
}

inline int assign_category(const TransformedModel& model, double value) {
  return assign_category(model.interior_thresholds(), value);
}

}  // namespace nmsort

#endif  // NMSORT_VALUEFN_HPP
