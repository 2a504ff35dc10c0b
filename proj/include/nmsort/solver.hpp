/**
 * @file solver.hpp
 * @brief Backend-agnostic LP/MILP representation and the HiGHS adapter.
 *
 * Constraint builders only ever see LinearProgram; SolverContext is the one
 * place that talks to the backend. A context is meant to be used from a
 * single thread; finished programs are plain values and can be shared.
 */

#ifndef NMSORT_SOLVER_HPP
#define NMSORT_SOLVER_HPP

#include <Highs.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nmsort/core.hpp"

namespace nmsort {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct Term {
  int var = 0;
  double coef = 0.0;
};

enum class RowSense { LessEqual, GreaterEqual, Equal };
enum class ObjectiveSense { Minimize, Maximize };

struct Variable {
  double lower = 0.0;
  double upper = kInfinity;
  bool integral = false;
  std::string name;
};

struct Row {
  std::vector<Term> terms;
  RowSense sense = RowSense::LessEqual;
  double rhs = 0.0;
  std::string name;
};

/**
 * @brief Sparse (mixed-integer) linear program.
 */
class LinearProgram {
 public:
  int add_variable(double lower, double upper, std::string name = {}, bool integral = false) {
    variables_.push_back({lower, upper, integral, std::move(name)});
    return static_cast<int>(variables_.size()) - 1;
  }

  int add_row(std::vector<Term> terms, RowSense sense, double rhs, std::string name = {}) {
    for (const auto& t : terms) check_index(t.var);
    rows_.push_back({std::move(terms), sense, rhs, std::move(name)});
    return static_cast<int>(rows_.size()) - 1;
  }

  void set_bounds(int var, double lower, double upper) {
    check_index(var);
    variables_[static_cast<std::size_t>(var)].lower = lower;
    variables_[static_cast<std::size_t>(var)].upper = upper;
  }

  void set_objective(std::vector<Term> terms, ObjectiveSense sense, double offset = 0.0) {
    for (const auto& t : terms) check_index(t.var);
    objective_ = std::move(terms);
    sense_ = sense;
    offset_ = offset;
  }

  [[nodiscard]] const std::vector<Variable>& variables() const noexcept { return variables_; }
  [[nodiscard]] const std::vector<Row>& rows() const noexcept { return rows_; }
  [[nodiscard]] const std::vector<Term>& objective() const noexcept { return objective_; }
  [[nodiscard]] ObjectiveSense sense() const noexcept { return sense_; }
  [[nodiscard]] double objective_offset() const noexcept { return offset_; }
  [[nodiscard]] std::size_t variable_count() const noexcept { return variables_.size(); }
  [[nodiscard]] std::size_t row_count() const noexcept { return rows_.size(); }
  [[nodiscard]] const Variable& variable(int var) const { return variables_.at(static_cast<std::size_t>(var)); }

  [[nodiscard]] bool is_mip() const {
    return std::any_of(variables_.begin(), variables_.end(), [](const Variable& v) { return v.integral; });
  }

 private:
  void check_index(int var) const {
    if (var < 0 || static_cast<std::size_t>(var) >= variables_.size()) {
      throw Error(ErrorCode::InvalidArgument, "variable index " + std::to_string(var) + " out of range");
    }
  }

  std::vector<Variable> variables_;
  std::vector<Row> rows_;
  std::vector<Term> objective_;
  ObjectiveSense sense_ = ObjectiveSense::Minimize;
  double offset_ = 0.0;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded };

inline std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
  }
  return "unknown";
}

struct Solution {
  SolveStatus status = SolveStatus::Infeasible;
  double objective = 0.0;
  std::vector<double> values;

  [[nodiscard]] bool optimal() const noexcept { return status == SolveStatus::Optimal; }
  [[nodiscard]] double value(int var) const { return values.at(static_cast<std::size_t>(var)); }
};

inline double evaluate_terms(std::span<const Term> terms, std::span<const double> values) {
  double sum = 0.0;
  for (const auto& t : terms) sum += t.coef * values[static_cast<std::size_t>(t.var)];
  return sum;
}

/// Largest bound, row or integrality violation of a point.
inline double max_violation(const LinearProgram& lp, std::span<const double> values) {
  if (values.size() != lp.variable_count()) return kInfinity;
  double worst = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const auto& v = lp.variables()[k];
    worst = std::max({worst, v.lower - values[k], values[k] - v.upper});
    if (v.integral) worst = std::max(worst, std::abs(values[k] - std::round(values[k])));
  }
  for (const auto& row : lp.rows()) {
    const double lhs = evaluate_terms(row.terms, values);
    switch (row.sense) {
      case RowSense::LessEqual: worst = std::max(worst, lhs - row.rhs); break;
      case RowSense::GreaterEqual: worst = std::max(worst, row.rhs - lhs); break;
      case RowSense::Equal: worst = std::max(worst, std::abs(lhs - row.rhs)); break;
    }
  }
  return worst;
}

struct SolveOptions {
  double time_limit_seconds = 600.0;
  double mip_relative_gap = 1e-6;
  double feasibility_tolerance = 1e-9;
  /// When set, every solved program is written there in LP text format.
  std::optional<std::filesystem::path> dump_directory;
};

namespace detail {

inline HighsLp to_highs(const LinearProgram& program) {
  HighsLp lp;
  const auto& vars = program.variables();
  const auto& rows = program.rows();
  lp.num_col_ = static_cast<HighsInt>(vars.size());
  lp.num_row_ = static_cast<HighsInt>(rows.size());
  lp.sense_ = program.sense() == ObjectiveSense::Minimize ? ObjSense::kMinimize : ObjSense::kMaximize;
  lp.offset_ = program.objective_offset();
  lp.col_cost_.assign(vars.size(), 0.0);
  for (const auto& t : program.objective()) lp.col_cost_[static_cast<std::size_t>(t.var)] += t.coef;
  bool any_integral = false;
  for (const auto& v : vars) {
    lp.col_lower_.push_back(v.lower);
    lp.col_upper_.push_back(v.upper);
    any_integral = any_integral || v.integral;
  }
  if (any_integral) {
    for (const auto& v : vars) {
      lp.integrality_.push_back(v.integral ? HighsVarType::kInteger : HighsVarType::kContinuous);
    }
  }
  bool named = std::all_of(vars.begin(), vars.end(), [](const Variable& v) { return !v.name.empty(); });
  if (named) {
    for (const auto& v : vars) lp.col_names_.push_back(v.name);
  }
  lp.a_matrix_.format_ = MatrixFormat::kRowwise;
  lp.a_matrix_.num_col_ = lp.num_col_;
  lp.a_matrix_.num_row_ = lp.num_row_;
  lp.a_matrix_.start_.assign(1, 0);  // the default matrix already holds a leading 0
  for (const auto& row : rows) {
    for (const auto& t : row.terms) {
      if (t.coef == 0.0) continue;
      lp.a_matrix_.index_.push_back(t.var);
      lp.a_matrix_.value_.push_back(t.coef);
    }
    lp.a_matrix_.start_.push_back(static_cast<HighsInt>(lp.a_matrix_.index_.size()));
    switch (row.sense) {
      case RowSense::LessEqual:
        lp.row_lower_.push_back(-kHighsInf);
        lp.row_upper_.push_back(row.rhs);
        break;
      case RowSense::GreaterEqual:
        lp.row_lower_.push_back(row.rhs);
        lp.row_upper_.push_back(kHighsInf);
        break;
      case RowSense::Equal:
        lp.row_lower_.push_back(row.rhs);
        lp.row_upper_.push_back(row.rhs);
        break;
    }
  }
  named = named && std::all_of(rows.begin(), rows.end(), [](const Row& r) { return !r.name.empty(); });
  if (named) {
    for (const auto& r : rows) lp.row_names_.push_back(r.name);
  }
  return lp;
}

}  // namespace detail

/**
 * @brief Per-thread solving context wrapping the HiGHS backend.
 */
class SolverContext {
 public:
  SolverContext() = default;
  explicit SolverContext(SolveOptions options) : options_(std::move(options)) {}

  [[nodiscard]] const SolveOptions& options() const noexcept { return options_; }
  [[nodiscard]] std::size_t solves() const noexcept { return solves_; }

  Solution solve(const LinearProgram& program, std::string_view label = "model") {
    if (program.variable_count() == 0) {
      throw Error(ErrorCode::InvalidArgument, "program has no variables");
    }
    ++solves_;
    Highs highs;
    configure(highs, true);
    const HighsLp lp = detail::to_highs(program);
    if (highs.passModel(lp) == HighsStatus::kError) {
      throw Error(ErrorCode::BackendFailure, "backend rejected the program");
    }
    if (options_.dump_directory) dump(highs, label);
    if (highs.run() == HighsStatus::kError) {
      throw Error(ErrorCode::BackendFailure, "backend run failed");
    }
    HighsModelStatus status = highs.getModelStatus();
    if (status == HighsModelStatus::kUnboundedOrInfeasible) {
      // presolve cannot tell the two apart; retry without it
      Highs retry;
      configure(retry, false);
      retry.passModel(lp);
      if (retry.run() == HighsStatus::kError) {
        throw Error(ErrorCode::BackendFailure, "backend run failed");
      }
      status = retry.getModelStatus();
      if (status == HighsModelStatus::kUnboundedOrInfeasible) status = HighsModelStatus::kInfeasible;
      return collect(retry, status, program);
    }
    return collect(highs, status, program);
  }

 private:
  void configure(Highs& highs, bool presolve) const {
    highs.setOptionValue("output_flag", false);
    highs.setOptionValue("threads", 1);
    highs.setOptionValue("random_seed", 0);
    highs.setOptionValue("time_limit", options_.time_limit_seconds);
    highs.setOptionValue("mip_rel_gap", options_.mip_relative_gap);
    highs.setOptionValue("primal_feasibility_tolerance", options_.feasibility_tolerance);
    highs.setOptionValue("dual_feasibility_tolerance", options_.feasibility_tolerance);
    highs.setOptionValue("mip_feasibility_tolerance", options_.feasibility_tolerance);
    if (!presolve) highs.setOptionValue("presolve", "off");
  }

  void dump(Highs& highs, std::string_view label) const {
    std::filesystem::create_directories(*options_.dump_directory);
    const auto file = *options_.dump_directory /
                      (std::to_string(solves_) + "_" + std::string(label.empty() ? "model" : label) + ".lp");
    highs.writeModel(file.string());
  }

  static Solution collect(Highs& highs, HighsModelStatus status, const LinearProgram& program) {
    Solution out;
    switch (status) {
      case HighsModelStatus::kOptimal: out.status = SolveStatus::Optimal; break;
      case HighsModelStatus::kInfeasible: out.status = SolveStatus::Infeasible; return out;
      case HighsModelStatus::kUnbounded: out.status = SolveStatus::Unbounded; return out;
      default:
        throw Error(ErrorCode::BackendFailure,
                    "backend stopped with status " + highs.modelStatusToString(status));
    }
    out.objective = highs.getInfo().objective_function_value;
    out.values = highs.getSolution().col_value;
    for (std::size_t k = 0; k < out.values.size(); ++k) {
      if (program.variables()[k].integral) out.values[k] = std::round(out.values[k]);
    }
    return out;
  }

  SolveOptions options_;
  std::size_t solves_ = 0;
};

inline Solution solve(const LinearProgram& program) {
  SolverContext ctx;
  return ctx.solve(program);
}

/**
 * @brief Linear-fractional program min (N x)/(D x) homogenized into an LP.
 *
 * Uses y = t x with t = 1 / (D x): bounds become rows in (y, t), right-hand
 * sides move to the left scaled by t, D y is fixed to 1 and N y minimized.
 * Requires D x > 0 on the feasible set. The scale variable is appended last.
 */
struct FractionalTransform {
  LinearProgram program;
  int scale_var = -1;

  /// Original-space point from a solution of the homogenized program.
  [[nodiscard]] std::vector<double> recover(const Solution& sol) const {
    const double t = sol.value(scale_var);
    std::vector<double> x(static_cast<std::size_t>(scale_var));
    for (int k = 0; k < scale_var; ++k) x[static_cast<std::size_t>(k)] = sol.value(k) / t;
    return x;
  }
};

inline FractionalTransform charnes_cooper(const LinearProgram& original, std::vector<Term> numerator,
                                          std::vector<Term> denominator) {
  if (original.is_mip()) throw Error(ErrorCode::InvalidArgument, "fractional transform needs a pure LP");
  FractionalTransform out;
  auto& lp = out.program;
  const auto& vars = original.variables();
  for (const auto& v : vars) {
    // sign-only bounds survive scaling by t > 0
    const double lo = v.lower == 0.0 ? 0.0 : -kInfinity;
    const double hi = v.upper == 0.0 ? 0.0 : kInfinity;
    lp.add_variable(lo, hi, v.name);
  }
  out.scale_var = lp.add_variable(0.0, kInfinity, "homogenizer");
  const int t = out.scale_var;
  for (std::size_t k = 0; k < vars.size(); ++k) {
    const auto& v = vars[k];
    const int y = static_cast<int>(k);
    const std::string base = v.name.empty() ? "x" + std::to_string(k) : v.name;
    if (std::isfinite(v.lower) && v.lower != 0.0) {
      lp.add_row({{y, 1.0}, {t, -v.lower}}, RowSense::GreaterEqual, 0.0, base + "_lb");
    }
    if (std::isfinite(v.upper) && v.upper != 0.0) {
      lp.add_row({{y, 1.0}, {t, -v.upper}}, RowSense::LessEqual, 0.0, base + "_ub");
    }
  }
  for (const auto& row : original.rows()) {
    auto terms = row.terms;
    if (row.rhs != 0.0) terms.push_back({t, -row.rhs});
    lp.add_row(std::move(terms), row.sense, 0.0, row.name);
  }
  lp.add_row(std::move(denominator), RowSense::Equal, 1.0, "denominator");
  lp.set_objective(std::move(numerator), ObjectiveSense::Minimize);
  return out;
}

/// Writes a program in LP text format through the backend.
inline void write_lp_file(const LinearProgram& program, const std::filesystem::path& file) {
  Highs highs;
  highs.setOptionValue("output_flag", false);
  if (highs.passModel(detail::to_highs(program)) == HighsStatus::kError ||
      highs.writeModel(file.string()) == HighsStatus::kError) {
    throw Error(ErrorCode::BackendFailure, "could not write " + file.string());
  }
}

}  // namespace nmsort

#endif  // NMSORT_SOLVER_HPP
