/**
 * @file learn.hpp
 * @brief Consistency check, minimum adjustment and the four model learners.
 *
 * All learners read the examples stored in the instance. run_pipeline chains
 * the consistency check, the optional adjustment and the chosen learner, then
 * sorts every alternative with the resulting model.
 */

#ifndef NMSORT_LEARN_HPP
#define NMSORT_LEARN_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "nmsort/constraints.hpp"
#include "nmsort/core.hpp"
#include "nmsort/solver.hpp"
#include "nmsort/valuefn.hpp"

namespace nmsort {

enum class Approach { Approach1, Approach2, LFP, UTADIS };

inline std::string_view to_string(Approach a) {
  switch (a) {
    case Approach::Approach1: return "approach1";
    case Approach::Approach2: return "approach2";
    case Approach::LFP: return "lfp";
    case Approach::UTADIS: return "utadis";
  }
  return "unknown";
}

/// Optimum at or below this counts as a zero-slack consistency check.
inline constexpr double kConsistencyTolerance = 1e-8;

struct LearnConfig {
  Approach approach = Approach::Approach2;
  double eps_fixed = 1e-3;
  double eps_floor = 1e-6;
  std::optional<double> eps_cap;  // defaults to the criterion count
  double tol_lex = 1e-7;
  double tau = 1e-6;
  BoundBox box;

  [[nodiscard]] double cap(std::size_t criteria) const {
    return eps_cap.value_or(static_cast<double>(criteria));
  }

  void check(std::size_t criteria) const {
    if (!(eps_floor > 0.0 && eps_floor <= eps_fixed && eps_fixed <= cap(criteria))) {
      throw Error(ErrorCode::InvalidArgument, "need 0 < eps_floor <= eps_fixed <= eps_cap");
    }
    if (!(tol_lex >= 0.0) || !(tau >= 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerances must be >= 0");
    if (!(box.lower < box.upper)) throw Error(ErrorCode::InvalidArgument, "value box requires lower < upper");
  }
};

struct ConsistencyResult {
  double optimum = 0.0;
  /// Per example, in instance order: (delta^+, delta^-).
  std::vector<std::pair<double, double>> slacks;
  SortingModel model;

  [[nodiscard]] bool consistent() const noexcept { return optimum <= kConsistencyTolerance; }
};

struct AdjustmentResult {
  AssignmentExamples adjusted;
  int moves = 0;
};

struct LearnOutcome {
  SortingModel model;
  double gamma_star = 0.0;
  double eps_star = 0.0;
  AssignmentExamples adjusted_examples;
  double consistency_slack = 0.0;
  int adjustment_moves = 0;
  std::vector<std::string> log;
};

namespace detail {

struct ModelProgram {
  LinearProgram lp;
  VariableLayout layout;
};

/// Layout plus E^Bound and E^Sort, epsilon bounded to [eps_lo, eps_hi].
inline ModelProgram base_program(const ProblemInstance& inst, const BoundBox& box, double eps_lo, double eps_hi) {
  ModelProgram out;
  out.layout = VariableLayout::create(out.lp, inst.criteria, inst.categories, box);
  out.lp.set_bounds(out.layout.epsilon(), eps_lo, eps_hi);
  apply_value_bounds(out.lp, out.layout);
  add_threshold_ordering(out.lp, out.layout);
  return out;
}

/// base_program plus the exact assignment rows of every example.
inline ModelProgram feasibility_program(const ProblemInstance& inst, std::span<const AssignmentExample> examples,
                                        const BoundBox& box, double eps_lo, double eps_hi) {
  auto out = base_program(inst, box, eps_lo, eps_hi);
  add_assignment_constraints(out.lp, out.layout, inst.matrix, examples);
  return out;
}

inline std::string format_value(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

/// Snaps breakpoint values back into the box when the solver left them outside by rounding noise.
inline double snap_to_box(double v, const BoundBox& box) {
  constexpr double noise = 1e-9;
  if (v < box.lower && v >= box.lower - noise) return box.lower;
  if (v > box.upper && v <= box.upper + noise) return box.upper;
  return v;
}

/**
 * @brief Moves thresholds by at most @p slack so the examples are reproduced exactly.
 *
 * LP solutions satisfy rows only up to the feasibility tolerance, so an example
 * that sits on its lower threshold may evaluate a hair below it. Returns the
 * number of thresholds moved.
 */
inline int polish_thresholds(SortingModel& model, const Matrix& matrix, std::span<const AssignmentExample> examples,
                             double slack = 1e-6) {
  int moved = 0;
  auto& b = model.thresholds;
  for (int pass = 0; pass < 3; ++pass) {
    bool changed = false;
    for (const auto& ex : examples) {
      const double v = global_value(model, matrix.row(static_cast<std::size_t>(ex.alternative)));
      if (ex.category >= 2) {
        double& lower = b[static_cast<std::size_t>(ex.category - 2)];
        if (v < lower && lower - v <= slack) {
          lower = v;
          changed = true;
          ++moved;
        }
      }
      if (ex.category <= model.categories() - 1) {
        double& upper = b[static_cast<std::size_t>(ex.category - 1)];
        if (v >= upper && v - upper <= slack) {
          upper = std::nextafter(v, kInfinity);
          changed = true;
          ++moved;
        }
      }
    }
    if (!changed) break;
  }
  return moved;
}

inline SortingModel extract_model(const ProblemInstance& inst, const VariableLayout& layout,
                                  std::span<const double> values, double epsilon) {
  SortingModel model;
  for (std::size_t j = 0; j < layout.criteria(); ++j) {
    MarginalFunction fn;
    fn.name = j < inst.criterion_names.size() ? inst.criterion_names[j] : "g" + std::to_string(j + 1);
    fn.scale = layout.scales()[j];
    for (int var : layout.values(j)) {
      fn.values.push_back(snap_to_box(values[static_cast<std::size_t>(var)], layout.box()));
    }
    model.marginals.push_back(std::move(fn));
  }
  for (int h = 1; h < layout.categories(); ++h) {
    model.thresholds.push_back(values[static_cast<std::size_t>(layout.threshold(h))]);
  }
  model.epsilon = epsilon;
  return model;
}

inline void finish_model(SortingModel& model, const ProblemInstance& inst,
                         std::span<const AssignmentExample> examples) {
  polish_thresholds(model, inst.matrix, examples);
  std::tie(model.b0, model.bq) = derive_outer_thresholds(model.marginals, model.epsilon);
}

inline Solution require_optimal(SolverContext& ctx, const LinearProgram& lp, std::string_view label) {
  Solution sol = ctx.solve(lp, label);
  if (sol.status == SolveStatus::Infeasible) {
    throw Error(ErrorCode::InfeasibleAfterAdjustment,
                std::string(label) + " is infeasible; the examples are not consistent");
  }
  if (sol.status == SolveStatus::Unbounded) {
    throw Error(ErrorCode::BackendFailure, std::string(label) + " is unbounded");
  }
  return sol;
}

}  // namespace detail

/**
 * @brief Minimum total slack needed to reproduce the examples with a fixed epsilon.
 *
 * Always feasible: the slacks absorb any violation.
 */
inline ConsistencyResult check_consistency(const ProblemInstance& inst, const LearnConfig& config,
                                           SolverContext& ctx) {
  require_valid(inst);
  auto prog = detail::base_program(inst, config.box, config.eps_fixed, config.eps_fixed);
  const auto pairs = add_relaxed_assignment_constraints(prog.lp, prog.layout, inst.matrix, inst.examples);
  std::vector<Term> objective;
  for (const auto& p : pairs) {
    objective.push_back({p.below, 1.0});
    objective.push_back({p.above, 1.0});
  }
  prog.lp.set_objective(std::move(objective), ObjectiveSense::Minimize);
  const Solution sol = ctx.solve(prog.lp, "consistency");
  if (!sol.optimal()) {
    throw Error(ErrorCode::BackendFailure, "consistency check returned " + std::string(to_string(sol.status)));
  }
  ConsistencyResult out;
  out.optimum = std::max(0.0, sol.objective);
  for (const auto& p : pairs) out.slacks.emplace_back(sol.value(p.below), sol.value(p.above));
  out.model = detail::extract_model(inst, prog.layout, sol.values, config.eps_fixed);
  if (out.consistent()) {
    detail::finish_model(out.model, inst, inst.examples);
  } else {
    std::tie(out.model.b0, out.model.bq) = derive_outer_thresholds(out.model.marginals, out.model.epsilon);
  }
  return out;
}

inline ConsistencyResult check_consistency(const ProblemInstance& inst, const LearnConfig& config = {}) {
  SolverContext ctx;
  return check_consistency(inst, config, ctx);
}

/**
 * @brief Fewest category moves (sum of |new - old|) that make the examples consistent.
 */
inline AdjustmentResult minimum_adjustment(const ProblemInstance& inst, const LearnConfig& config,
                                           SolverContext& ctx) {
  require_valid(inst);
  auto prog = detail::base_program(inst, config.box, config.eps_fixed, config.eps_fixed);
  add_adjustable_assignment_constraints(prog.lp, prog.layout, inst.matrix, inst.examples);
  add_adjustment_objective_rows(prog.lp, prog.layout, inst.examples);
  std::vector<Term> objective;
  for (const auto& [p, n] : prog.layout.adjustments()) {
    objective.push_back({p, 1.0});
    objective.push_back({n, 1.0});
  }
  prog.lp.set_objective(std::move(objective), ObjectiveSense::Minimize);
  const Solution sol = ctx.solve(prog.lp, "adjustment");
  if (!sol.optimal()) {
    throw Error(ErrorCode::BackendFailure, "minimum adjustment returned " + std::string(to_string(sol.status)));
  }
  AdjustmentResult out;
  for (std::size_t k = 0; k < inst.examples.size(); ++k) {
    int category = 0;
    for (int h = 1; h <= inst.categories; ++h) {
      if (sol.value(prog.layout.binary(h, k)) > 0.5) category = h;
    }
    out.adjusted.push_back({inst.examples[k].alternative, category});
    out.moves += std::abs(category - inst.examples[k].category);
  }
  return out;
}

inline AdjustmentResult minimum_adjustment(const ProblemInstance& inst, const LearnConfig& config = {}) {
  SolverContext ctx;
  return minimum_adjustment(inst, config, ctx);
}

/**
 * @brief Complexity first: minimize total slope change, then maximize epsilon.
 *
 * Stage 1 keeps epsilon in [eps_fixed, eps_cap]; stage 2 caps the slope change
 * at gamma* + tol_lex.
 */
inline LearnOutcome learn_approach1(const ProblemInstance& inst, const LearnConfig& config, SolverContext& ctx) {
  require_valid(inst);
  config.check(inst.criteria_count());
  if (!inst.has_slope_freedom()) {
    throw Error(ErrorCode::NoSlopeVariables, "every criterion has a single subinterval");
  }
  auto prog = detail::feasibility_program(inst, inst.examples, config.box, config.eps_fixed,
                                          config.cap(inst.criteria_count()));
  add_slope_constraints(prog.lp, prog.layout);
  prog.lp.set_objective(prog.layout.gamma_sum(), ObjectiveSense::Minimize);
  const Solution first = detail::require_optimal(ctx, prog.lp, "approach1_complexity");

  LearnOutcome out;
  out.gamma_star = std::max(0.0, first.objective);
  prog.lp.add_row(prog.layout.gamma_sum(), RowSense::LessEqual, out.gamma_star + config.tol_lex, "complexity_cap");
  prog.lp.set_objective({{prog.layout.epsilon(), 1.0}}, ObjectiveSense::Maximize);
  const Solution second = detail::require_optimal(ctx, prog.lp, "approach1_discrimination");
  out.eps_star = second.objective;
  out.model = detail::extract_model(inst, prog.layout, second.values, out.eps_star);
  detail::finish_model(out.model, inst, inst.examples);
  out.adjusted_examples = inst.examples;
  out.log.push_back("complexity stage: gamma* = " + detail::format_value(out.gamma_star));
  out.log.push_back("discrimination stage: eps* = " + detail::format_value(out.eps_star));
  return out;
}

/**
 * @brief Discrimination first: maximize epsilon, then minimize slope change at that epsilon.
 *
 * With a single subinterval everywhere there is no slope to smooth and the
 * first-stage model is returned.
 */
inline LearnOutcome learn_approach2(const ProblemInstance& inst, const LearnConfig& config, SolverContext& ctx) {
  require_valid(inst);
  config.check(inst.criteria_count());
  const double cap = config.cap(inst.criteria_count());
  auto first_prog = detail::feasibility_program(inst, inst.examples, config.box, config.eps_floor, cap);
  first_prog.lp.set_objective({{first_prog.layout.epsilon(), 1.0}}, ObjectiveSense::Maximize);
  const Solution first = detail::require_optimal(ctx, first_prog.lp, "approach2_discrimination");

  LearnOutcome out;
  out.eps_star = first.objective;
  out.adjusted_examples = inst.examples;
  out.log.push_back("discrimination stage: eps* = " + detail::format_value(out.eps_star));
  if (!inst.has_slope_freedom()) {
    out.model = detail::extract_model(inst, first_prog.layout, first.values, out.eps_star);
    detail::finish_model(out.model, inst, inst.examples);
    out.log.push_back("complexity stage skipped: no interior breakpoints");
    return out;
  }

  auto second_prog = detail::feasibility_program(inst, inst.examples, config.box, out.eps_star, out.eps_star);
  add_slope_constraints(second_prog.lp, second_prog.layout);
  second_prog.lp.set_objective(second_prog.layout.gamma_sum(), ObjectiveSense::Minimize);
  Solution second = ctx.solve(second_prog.lp, "approach2_complexity");
  if (second.status == SolveStatus::Infeasible && config.tol_lex > 0.0) {
    // eps* itself can be marginally out of reach once the solver re-derives it
    const double relaxed = std::max(config.eps_floor, out.eps_star - config.tol_lex);
    second_prog.lp.set_bounds(second_prog.layout.epsilon(), relaxed, relaxed);
    second = ctx.solve(second_prog.lp, "approach2_complexity_relaxed");
    out.eps_star = relaxed;
    out.log.push_back("complexity stage retried with eps = eps* - tol_lex");
  }
  if (!second.optimal()) {
    throw Error(ErrorCode::BackendFailure, "complexity stage returned " + std::string(to_string(second.status)));
  }
  out.gamma_star = std::max(0.0, second.objective);
  out.model = detail::extract_model(inst, second_prog.layout, second.values, out.eps_star);
  detail::finish_model(out.model, inst, inst.examples);
  out.log.push_back("complexity stage: gamma* = " + detail::format_value(out.gamma_star));
  return out;
}

/**
 * @brief Minimizes (total slope change) / epsilon as one linear-fractional program.
 */
inline LearnOutcome learn_lfp(const ProblemInstance& inst, const LearnConfig& config, SolverContext& ctx) {
  require_valid(inst);
  config.check(inst.criteria_count());
  if (!inst.has_slope_freedom()) {
    throw Error(ErrorCode::NoSlopeVariables, "every criterion has a single subinterval");
  }
  auto prog = detail::feasibility_program(inst, inst.examples, config.box, config.eps_floor,
                                          config.cap(inst.criteria_count()));
  add_slope_constraints(prog.lp, prog.layout);
  const auto transform = charnes_cooper(prog.lp, prog.layout.gamma_sum(), {{prog.layout.epsilon(), 1.0}});
  const Solution sol = detail::require_optimal(ctx, transform.program, "lfp");
  const double t = sol.value(transform.scale_var);
  if (!(t > config.tau)) {
    throw Error(ErrorCode::DegenerateScaling, "homogenizing variable collapsed to " + detail::format_value(t));
  }
  auto x = transform.recover(sol);
  // The ratio is scale-free and every row is homogeneous, so stretch the
  // solution until an upper bound binds; the optimum and the sorting are unchanged.
  double stretch = kInfinity;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const auto& var = prog.lp.variables()[k];
    if (var.lower < 0.0) stretch = 1.0;
    if (std::isfinite(var.upper) && x[k] > 0.0) stretch = std::min(stretch, var.upper / x[k]);
  }
  if (std::isfinite(stretch) && stretch > 1.0) {
    for (double& v : x) v *= stretch;
  }
  LearnOutcome out;
  out.eps_star = x[static_cast<std::size_t>(prog.layout.epsilon())];
  for (int g : prog.layout.gammas()) out.gamma_star += x[static_cast<std::size_t>(g)];
  out.model = detail::extract_model(inst, prog.layout, x, out.eps_star);
  detail::finish_model(out.model, inst, inst.examples);
  out.adjusted_examples = inst.examples;
  out.log.push_back("fractional optimum: " + detail::format_value(sol.objective) + " (gamma = " +
                    detail::format_value(out.gamma_star) + ", eps = " + detail::format_value(out.eps_star) + ")");
  return out;
}

/// The consistency-check solution used directly as the model.
inline LearnOutcome learn_utadis(const ProblemInstance& inst, const LearnConfig& config, SolverContext& ctx) {
  config.check(inst.criteria_count());
  auto check = check_consistency(inst, config, ctx);
  LearnOutcome out;
  out.model = std::move(check.model);
  out.eps_star = config.eps_fixed;
  out.consistency_slack = check.optimum;
  out.adjusted_examples = inst.examples;
  out.log.push_back("slack optimum: " + detail::format_value(check.optimum));
  return out;
}

inline LearnOutcome learn(const ProblemInstance& inst, const LearnConfig& config, SolverContext& ctx) {
  switch (config.approach) {
    case Approach::Approach1: return learn_approach1(inst, config, ctx);
    case Approach::Approach2: return learn_approach2(inst, config, ctx);
    case Approach::LFP: return learn_lfp(inst, config, ctx);
    case Approach::UTADIS: return learn_utadis(inst, config, ctx);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown approach");
}

inline LearnOutcome learn(const ProblemInstance& inst, const LearnConfig& config = {}) {
  SolverContext ctx;
  return learn(inst, config, ctx);
}

struct PipelineResult {
  LearnOutcome outcome;
  std::vector<double> global_values;
  std::vector<int> assignments;  // every alternative
  std::vector<int> non_reference;
  bool adjusted = false;
};

/**
 * @brief Breakpoints, consistency check, adjustment when needed, learning, sorting.
 */
inline PipelineResult run_pipeline(const ProblemInstance& inst, const LearnConfig& config, SolverContext& ctx) {
  require_valid(inst);
  config.check(inst.criteria_count());
  PipelineResult out;
  const auto check = check_consistency(inst, config, ctx);
  ProblemInstance working = inst;
  int moves = 0;
  if (!check.consistent()) {
    auto adjustment = minimum_adjustment(inst, config, ctx);
    working.examples = std::move(adjustment.adjusted);
    moves = adjustment.moves;
    out.adjusted = true;
  }
  out.outcome = learn(working, config, ctx);
  out.outcome.consistency_slack = check.optimum;
  out.outcome.adjustment_moves = moves;
  out.outcome.adjusted_examples = working.examples;
  out.outcome.log.insert(out.outcome.log.begin(),
                         "consistency check: " + detail::format_value(check.optimum) +
                             (out.adjusted ? ", " + std::to_string(moves) + " category moves applied" : ""));

  std::vector<bool> is_reference(inst.alternatives(), false);
  for (const auto& ex : working.examples) is_reference[static_cast<std::size_t>(ex.alternative)] = true;
  for (std::size_t i = 0; i < inst.alternatives(); ++i) {
    const double v = global_value(out.outcome.model, inst.matrix.row(i));
    out.global_values.push_back(v);
    out.assignments.push_back(assign_category(out.outcome.model, v));
    if (!is_reference[i]) out.non_reference.push_back(static_cast<int>(i));
  }
  return out;
}

inline PipelineResult run_pipeline(const ProblemInstance& inst, const LearnConfig& config = {}) {
  SolverContext ctx;
  return run_pipeline(inst, config, ctx);
}

/// Examples whose category the model does not reproduce.
inline std::vector<AssignmentExample> misclassified_examples(const SortingModel& model, const Matrix& matrix,
                                                             std::span<const AssignmentExample> examples) {
  std::vector<AssignmentExample> out;
  for (const auto& ex : examples) {
    const int h = assign_category(model, global_value(model, matrix.row(static_cast<std::size_t>(ex.alternative))));
    if (h != ex.category) out.push_back(ex);
  }
  return out;
}

}  // namespace nmsort

#endif  // NMSORT_LEARN_HPP
