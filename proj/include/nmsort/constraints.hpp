/**
 * @file constraints.hpp
 * @brief Constraint-set builders over a fixed variable layout.
 *
 * Every model in learn.hpp is assembled from these pieces: the assignment
 * example rows, threshold ordering, the value box, slope-change rows and the
 * big-M reformulation used for minimum adjustment.
 */

#ifndef NMSORT_CONSTRAINTS_HPP
#define NMSORT_CONSTRAINTS_HPP

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nmsort/core.hpp"
#include "nmsort/solver.hpp"

namespace nmsort {

/// Box applied to every breakpoint value v_j(beta_j^l).
struct BoundBox {
  double lower = 0.0;
  double upper = 1.0;
};

/**
 * @brief Indices of the model variables inside a LinearProgram.
 *
 * Always present: breakpoint values v[j][l], interior thresholds b[1..q-1]
 * and epsilon. Slope, slack and assignment-binary groups are added on demand.
 */
class VariableLayout {
 public:
  struct SlackPair {
    int below = -1;  // delta^+: lets V fall under the lower threshold
    int above = -1;  // delta^-: lets V exceed the upper threshold
  };

  static VariableLayout create(LinearProgram& lp, std::span<const CriterionScale> scales, int categories,
                               BoundBox box = {}) {
    if (categories < 2) throw Error(ErrorCode::CategoryOutOfRange, "at least two categories required");
    VariableLayout layout;
    layout.categories_ = categories;
    layout.box_ = box;
    layout.scales_.assign(scales.begin(), scales.end());
    layout.values_.resize(scales.size());
    for (std::size_t j = 0; j < scales.size(); ++j) {
      for (std::size_t l = 0; l < scales[j].size(); ++l) {
        layout.values_[j].push_back(
            lp.add_variable(-kInfinity, kInfinity, "v_" + std::to_string(j + 1) + "_" + std::to_string(l + 1)));
      }
    }
    const double m = static_cast<double>(scales.size());
    for (int h = 1; h < categories; ++h) {
      layout.thresholds_.push_back(
          lp.add_variable(m * box.lower, m * box.upper + 1.0, "b_" + std::to_string(h)));
    }
    layout.epsilon_ = lp.add_variable(0.0, kInfinity, "eps");
    return layout;
  }

  [[nodiscard]] int categories() const noexcept { return categories_; }
  [[nodiscard]] std::size_t criteria() const noexcept { return scales_.size(); }
  [[nodiscard]] const std::vector<CriterionScale>& scales() const noexcept { return scales_; }
  [[nodiscard]] const BoundBox& box() const noexcept { return box_; }

  [[nodiscard]] int value(std::size_t j, std::size_t l) const { return values_.at(j).at(l); }
  [[nodiscard]] const std::vector<int>& values(std::size_t j) const { return values_.at(j); }
  /// b_h for h in 1..q-1.
  [[nodiscard]] int threshold(int h) const { return thresholds_.at(static_cast<std::size_t>(h - 1)); }
  [[nodiscard]] int epsilon() const noexcept { return epsilon_; }

  [[nodiscard]] const std::vector<int>& gammas() const noexcept { return gammas_; }
  [[nodiscard]] const std::vector<SlackPair>& slacks() const noexcept { return slacks_; }
  /// t[h][k] for category h and example k.
  [[nodiscard]] int binary(int h, std::size_t k) const {
    return binaries_.at(k).at(static_cast<std::size_t>(h - 1));
  }
  [[nodiscard]] const std::vector<std::pair<int, int>>& adjustments() const noexcept { return adjustments_; }

  /// Big-M that dominates every |V - b| gap under the value box and threshold bounds.
  [[nodiscard]] double big_m() const noexcept {
    return static_cast<double>(scales_.size()) * (box_.upper - box_.lower) + 2.0;
  }

  /// Sum of all slope-change variables.
  [[nodiscard]] std::vector<Term> gamma_sum() const {
    std::vector<Term> out;
    for (int g : gammas_) out.push_back({g, 1.0});
    return out;
  }

  void record_gamma(int var) { gammas_.push_back(var); }
  void record_slack(SlackPair pair) { slacks_.push_back(pair); }
  void record_binaries(std::vector<int> vars) { binaries_.push_back(std::move(vars)); }
  void record_adjustment(int p, int n) { adjustments_.emplace_back(p, n); }

 private:
  int categories_ = 2;
  BoundBox box_;
  std::vector<CriterionScale> scales_;
  std::vector<std::vector<int>> values_;
  std::vector<int> thresholds_;
  int epsilon_ = -1;
  std::vector<int> gammas_;
  std::vector<SlackPair> slacks_;
  std::vector<std::vector<int>> binaries_;
  std::vector<std::pair<int, int>> adjustments_;  // (p_i, n_i)
};

/// Breakpoint weights (index, coefficient) expressing v_j(x) linearly in the breakpoint values.
inline std::vector<std::pair<int, double>> interpolation_weights(const CriterionScale& scale, double x) {
  const Interpolation at = locate(scale, x);
  if (at.theta == 0.0) return {{at.lower, 1.0}};
  if (at.theta == 1.0) return {{at.lower + 1, 1.0}};
  return {{at.lower, 1.0 - at.theta}, {at.lower + 1, at.theta}};
}

/// V(a) = sum_j v_j(x_j) as sparse terms over the breakpoint-value variables.
inline std::vector<Term> value_expression(const VariableLayout& layout, std::span<const double> row) {
  if (row.size() != layout.criteria()) {
    throw Error(ErrorCode::DimensionMismatch, "row length differs from the criterion count");
  }
  std::vector<Term> out;
  for (std::size_t j = 0; j < row.size(); ++j) {
    for (const auto& [l, w] : interpolation_weights(layout.scales()[j], row[j])) {
      out.push_back({layout.value(j, static_cast<std::size_t>(l)), w});
    }
  }
  return out;
}

namespace detail {

inline std::vector<Term> plus(std::vector<Term> terms, std::initializer_list<Term> extra) {
  terms.insert(terms.end(), extra.begin(), extra.end());
  return terms;
}

inline std::string example_tag(const AssignmentExample& ex) {
  return "a" + std::to_string(ex.alternative + 1);
}

}  // namespace detail

/**
 * @brief Assignment example rows: b_{B-1} <= V(a) <= b_B - eps.
 *
 * Bottom-category examples only get the upper row and top-category examples
 * only the lower row. Returns the number of rows added.
 */
inline int add_assignment_constraints(LinearProgram& lp, const VariableLayout& layout, const Matrix& matrix,
                                      std::span<const AssignmentExample> examples) {
  const int q = layout.categories();
  int added = 0;
  for (const auto& ex : examples) {
    const auto value = value_expression(layout, matrix.row(static_cast<std::size_t>(ex.alternative)));
    const std::string tag = detail::example_tag(ex);
    if (ex.category >= 2) {
      lp.add_row(detail::plus(value, {{layout.threshold(ex.category - 1), -1.0}}), RowSense::GreaterEqual, 0.0,
                 "lo_" + tag);
      ++added;
    }
    if (ex.category <= q - 1) {
      lp.add_row(detail::plus(value, {{layout.threshold(ex.category), -1.0}, {layout.epsilon(), 1.0}}),
                 RowSense::LessEqual, 0.0, "up_" + tag);
      ++added;
    }
  }
  return added;
}

/// Assignment rows relaxed by per-example slack pairs (delta^+, delta^-) >= 0.
inline std::vector<VariableLayout::SlackPair> add_relaxed_assignment_constraints(
    LinearProgram& lp, VariableLayout& layout, const Matrix& matrix, std::span<const AssignmentExample> examples) {
  const int q = layout.categories();
  std::vector<VariableLayout::SlackPair> added;
  for (const auto& ex : examples) {
    const auto value = value_expression(layout, matrix.row(static_cast<std::size_t>(ex.alternative)));
    const std::string tag = detail::example_tag(ex);
    VariableLayout::SlackPair pair;
    pair.below = lp.add_variable(0.0, kInfinity, "dplus_" + tag);
    pair.above = lp.add_variable(0.0, kInfinity, "dminus_" + tag);
    if (ex.category >= 2) {
      lp.add_row(detail::plus(value, {{layout.threshold(ex.category - 1), -1.0}, {pair.below, 1.0}}),
                 RowSense::GreaterEqual, 0.0, "lo_" + tag);
    }
    if (ex.category <= q - 1) {
      lp.add_row(detail::plus(value, {{layout.threshold(ex.category), -1.0}, {layout.epsilon(), 1.0},
                                      {pair.above, -1.0}}),
                 RowSense::LessEqual, 0.0, "up_" + tag);
    }
    added.push_back(pair);
  }
  for (const auto& pair : added) layout.record_slack(pair);
  return added;
}

/// b_h - b_{h-1} >= eps for h = 2..q-1. Returns the row count (q - 2, or 0).
inline int add_threshold_ordering(LinearProgram& lp, const VariableLayout& layout) {
  int added = 0;
  for (int h = 2; h <= layout.categories() - 1; ++h) {
    lp.add_row({{layout.threshold(h), 1.0}, {layout.threshold(h - 1), -1.0}, {layout.epsilon(), -1.0}},
               RowSense::GreaterEqual, 0.0, "sort_" + std::to_string(h));
    ++added;
  }
  return added;
}

/// Box on every breakpoint value. Returns the number of bounded variables.
inline int apply_value_bounds(LinearProgram& lp, const VariableLayout& layout) {
  int bounded = 0;
  for (std::size_t j = 0; j < layout.criteria(); ++j) {
    for (int var : layout.values(j)) {
      lp.set_bounds(var, layout.box().lower, layout.box().upper);
      ++bounded;
    }
  }
  return bounded;
}

/**
 * @brief Slope-change variables gamma_lj >= |slope(l-1,l) - slope(l,l+1)|.
 *
 * One gamma per interior breakpoint, two rows each. Throws NoSlopeVariables
 * when every criterion has a single subinterval.
 */
inline int add_slope_constraints(LinearProgram& lp, VariableLayout& layout) {
  int added = 0;
  for (std::size_t j = 0; j < layout.criteria(); ++j) {
    const auto& bp = layout.scales()[j].breakpoints;
    for (std::size_t l = 1; l + 1 < bp.size(); ++l) {
      const double left = 1.0 / (bp[l] - bp[l - 1]);
      const double right = 1.0 / (bp[l + 1] - bp[l]);
      const int prev = layout.value(j, l - 1);
      const int mid = layout.value(j, l);
      const int next = layout.value(j, l + 1);
      const std::string tag = std::to_string(l + 1) + "_" + std::to_string(j + 1);
      const int gamma = lp.add_variable(0.0, kInfinity, "gamma_" + tag);
      // slope_left - slope_right = left*(mid - prev) - right*(next - mid)
      const std::vector<Term> change{{mid, left + right}, {prev, -left}, {next, -right}};
      lp.add_row(detail::plus(change, {{gamma, -1.0}}), RowSense::LessEqual, 0.0, "slope_pos_" + tag);
      std::vector<Term> negated;
      for (const auto& t : change) negated.push_back({t.var, -t.coef});
      lp.add_row(detail::plus(negated, {{gamma, -1.0}}), RowSense::LessEqual, 0.0, "slope_neg_" + tag);
      layout.record_gamma(gamma);
      added += 2;
    }
  }
  if (layout.gammas().empty()) {
    throw Error(ErrorCode::NoSlopeVariables, "every criterion has a single subinterval");
  }
  return added;
}

/**
 * @brief Big-M rows letting each example move to any category.
 *
 * Binaries t[h][k] select the category of example k:
 *   V >= b_{h-1} + M (t_hk - 1)         h = 2..q
 *   V <= b_h - eps + M (1 - t_hk)       h = 1..q-1
 *   sum_h t_hk = 1
 * Returns the number of rows added.
 */
inline int add_adjustable_assignment_constraints(LinearProgram& lp, VariableLayout& layout, const Matrix& matrix,
                                                 std::span<const AssignmentExample> examples) {
  const int q = layout.categories();
  const double big_m = layout.big_m();
  int added = 0;
  for (const auto& ex : examples) {
    const auto value = value_expression(layout, matrix.row(static_cast<std::size_t>(ex.alternative)));
    const std::string tag = detail::example_tag(ex);
    std::vector<int> t;
    for (int h = 1; h <= q; ++h) {
      t.push_back(lp.add_variable(0.0, 1.0, "t_" + std::to_string(h) + "_" + tag, true));
    }
    for (int h = 2; h <= q; ++h) {
      lp.add_row(detail::plus(value, {{layout.threshold(h - 1), -1.0}, {t[static_cast<std::size_t>(h - 1)], -big_m}}),
                 RowSense::GreaterEqual, -big_m, "bigm_lo_" + std::to_string(h) + "_" + tag);
      ++added;
    }
    for (int h = 1; h <= q - 1; ++h) {
      lp.add_row(detail::plus(value, {{layout.threshold(h), -1.0}, {layout.epsilon(), 1.0},
                                      {t[static_cast<std::size_t>(h - 1)], big_m}}),
                 RowSense::LessEqual, big_m, "bigm_up_" + std::to_string(h) + "_" + tag);
      ++added;
    }
    std::vector<Term> pick;
    for (int var : t) pick.push_back({var, 1.0});
    lp.add_row(std::move(pick), RowSense::Equal, 1.0, "pick_" + tag);
    ++added;
    layout.record_binaries(std::move(t));
  }
  return added;
}

/// Adjusted category of example k as a linear expression: sum_h h * t[h][k].
inline std::vector<Term> adjusted_category_expression(const VariableLayout& layout, std::size_t k) {
  std::vector<Term> out;
  for (int h = 1; h <= layout.categories(); ++h) out.push_back({layout.binary(h, k), static_cast<double>(h)});
  return out;
}

/// |adjusted - original| = p - n with p, n >= 0, one pair per example. Returns rows added.
inline int add_adjustment_objective_rows(LinearProgram& lp, VariableLayout& layout,
                                         std::span<const AssignmentExample> examples) {
  int added = 0;
  for (std::size_t k = 0; k < examples.size(); ++k) {
    const std::string tag = detail::example_tag(examples[k]);
    const int p = lp.add_variable(0.0, kInfinity, "p_" + tag);
    const int n = lp.add_variable(0.0, kInfinity, "n_" + tag);
    auto expr = adjusted_category_expression(layout, k);
    expr.push_back({p, -1.0});
    expr.push_back({n, 1.0});
    lp.add_row(std::move(expr), RowSense::Equal, static_cast<double>(examples[k].category), "move_" + tag);
    layout.record_adjustment(p, n);
    ++added;
  }
  return added;
}

}  // namespace nmsort

#endif  // NMSORT_CONSTRAINTS_HPP
