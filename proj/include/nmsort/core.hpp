/**
 * @file core.hpp
 * @brief Domain types for threshold-based sorting with non-monotonic criteria.
 *
 * Holds the problem instance (decision matrix, criterion scales, assignment
 * examples), the learned sorting model, the shared error type, and instance
 * validation. Categories are 1-indexed (C_1 worst ... C_q best); alternatives
 * and criteria are 0-indexed.
 */

#ifndef NMSORT_CORE_HPP
#define NMSORT_CORE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace nmsort {

enum class ErrorCode {
  InvalidArgument,
  EmptyMatrix,
  NonFinitePerformance,
  DegenerateCriterion,
  DuplicateExample,
  CategoryOutOfRange,
  AlternativeOutOfRange,
  DimensionMismatch,
  ZeroRange,
  NoSlopeVariables,
  InfeasibleAfterAdjustment,
  DegenerateScaling,
  BackendFailure,
  LengthMismatch,
  EmptySet,
  DegenerateSample,
  InsufficientAlternatives,
  RaggedRow,
  NonNumericCell,
  DuplicateAlternativeId,
  UnknownAlternative,
  MalformedDocument,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::NonFinitePerformance: return "NonFinitePerformance";
    case ErrorCode::DegenerateCriterion: return "DegenerateCriterion";
    case ErrorCode::DuplicateExample: return "DuplicateExample";
    case ErrorCode::CategoryOutOfRange: return "CategoryOutOfRange";
    case ErrorCode::AlternativeOutOfRange: return "AlternativeOutOfRange";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroRange: return "ZeroRange";
    case ErrorCode::NoSlopeVariables: return "NoSlopeVariables";
    case ErrorCode::InfeasibleAfterAdjustment: return "InfeasibleAfterAdjustment";
    case ErrorCode::DegenerateScaling: return "DegenerateScaling";
    case ErrorCode::BackendFailure: return "BackendFailure";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::InsufficientAlternatives: return "InsufficientAlternatives";
    case ErrorCode::RaggedRow: return "RaggedRow";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::DuplicateAlternativeId: return "DuplicateAlternativeId";
    case ErrorCode::UnknownAlternative: return "UnknownAlternative";
    case ErrorCode::MalformedDocument: return "MalformedDocument";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/**
 * @brief Dense row-major n x m matrix of performance levels.
 */
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    Matrix out(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != out.cols_) {
        throw Error(ErrorCode::DimensionMismatch, "row " + std::to_string(i) + " has wrong length");
      }
      std::copy(rows[i].begin(), rows[i].end(), out.data_.begin() + static_cast<std::ptrdiff_t>(i * out.cols_));
    }
    return out;
  }

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  [[nodiscard]] std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  [[nodiscard]] std::vector<double> column(std::size_t j) const {
    std::vector<double> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
  }

  /// Sub-matrix made of the listed rows, in order.
  [[nodiscard]] Matrix select_rows(std::span<const int> indices) const {
    Matrix out(indices.size(), cols_);
    for (std::size_t k = 0; k < indices.size(); ++k) {
      auto src = row(static_cast<std::size_t>(indices[k]));
      std::copy(src.begin(), src.end(), out.data_.begin() + static_cast<std::ptrdiff_t>(k * cols_));
    }
    return out;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Equally spaced breakpoints min = b[0] < ... < b[s] = max.
inline std::vector<double> compute_breakpoints(double min, double max, int subintervals) {
  if (!std::isfinite(min) || !std::isfinite(max) || !(min < max)) {
    throw Error(ErrorCode::DegenerateCriterion, "criterion range requires min < max");
  }
  if (subintervals < 1) {
    throw Error(ErrorCode::InvalidArgument, "subinterval count must be >= 1");
  }
  std::vector<double> points(static_cast<std::size_t>(subintervals) + 1);
  const double width = max - min;
  for (int l = 0; l <= subintervals; ++l) {
    points[static_cast<std::size_t>(l)] = min + (static_cast<double>(l) / subintervals) * width;
  }
  points.back() = max;
  return points;
}

/**
 * @brief Performance scale of one criterion, split into equal subintervals.
 */
struct CriterionScale {
  double min = 0.0;
  double max = 1.0;
  int subintervals = 1;
  std::vector<double> breakpoints{0.0, 1.0};

  static CriterionScale make(double min, double max, int subintervals) {
    return {min, max, subintervals, compute_breakpoints(min, max, subintervals)};
  }

  [[nodiscard]] std::size_t size() const noexcept { return breakpoints.size(); }

  bool operator==(const CriterionScale&) const = default;
};

/**
 * @brief Position of a performance level inside a scale.
 *
 * The level equals (1 - theta) * b[lower] + theta * b[lower + 1]. Levels that
 * coincide with a breakpoint (to a 1e-12 relative tolerance) are snapped so
 * that theta is exactly 0, or exactly 1 at the right end.
 */
struct Interpolation {
  int lower = 0;
  double theta = 0.0;
  bool clamped = false;
};

inline Interpolation locate(const CriterionScale& scale, double x) {
  Interpolation out;
  const auto& bp = scale.breakpoints;
  const int s = static_cast<int>(bp.size()) - 1;
  if (x < scale.min) {
    x = scale.min;
    out.clamped = true;
  } else if (x > scale.max) {
    x = scale.max;
    out.clamped = true;
  }
  const double snap = 1e-12 * (scale.max - scale.min);
  for (int l = 0; l <= s; ++l) {
    if (std::abs(x - bp[static_cast<std::size_t>(l)]) <= snap) {
      if (l == s) {
        out.lower = s - 1;
        out.theta = 1.0;
      } else {
        out.lower = l;
        out.theta = 0.0;
      }
      return out;
    }
  }
  auto it = std::upper_bound(bp.begin(), bp.end(), x);
  int l = static_cast<int>(it - bp.begin()) - 1;
  l = std::clamp(l, 0, s - 1);
  const double lo = bp[static_cast<std::size_t>(l)];
  const double hi = bp[static_cast<std::size_t>(l) + 1];
  out.lower = l;
  out.theta = std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
  return out;
}

/// One "a_i -> C_{B_i}" statement.
struct AssignmentExample {
  int alternative = 0;
  int category = 1;

  bool operator==(const AssignmentExample&) const = default;
};

using AssignmentExamples = std::vector<AssignmentExample>;

/**
 * @brief Multi-criteria sorting problem with assignment examples.
 */
struct ProblemInstance {
  Matrix matrix;
  std::vector<CriterionScale> criteria;
  int categories = 2;
  AssignmentExamples examples;
  std::vector<std::string> alternative_ids;
  std::vector<std::string> criterion_names;

  [[nodiscard]] std::size_t alternatives() const noexcept { return matrix.rows(); }
  [[nodiscard]] std::size_t criteria_count() const noexcept { return matrix.cols(); }

  /// Instance whose scales span the observed column ranges.
  static ProblemInstance from_matrix(Matrix matrix, std::span<const int> subintervals, int categories,
                                     AssignmentExamples examples = {}) {
    if (matrix.empty()) throw Error(ErrorCode::EmptyMatrix, "decision matrix has no entries");
    if (subintervals.size() != 1 && subintervals.size() != matrix.cols()) {
      throw Error(ErrorCode::DimensionMismatch, "need one subinterval count or one per criterion");
    }
    ProblemInstance inst;
    inst.criteria.reserve(matrix.cols());
    for (std::size_t j = 0; j < matrix.cols(); ++j) {
      const auto col = matrix.column(j);
      const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
      const int s = subintervals.size() == 1 ? subintervals[0] : subintervals[j];
      inst.criteria.push_back(CriterionScale::make(*lo, *hi, s));
    }
    inst.matrix = std::move(matrix);
    inst.categories = categories;
    inst.examples = std::move(examples);
    return inst;
  }

  static ProblemInstance from_matrix(Matrix matrix, int subintervals, int categories,
                                     AssignmentExamples examples = {}) {
    const int s[1] = {subintervals};
    return from_matrix(std::move(matrix), std::span<const int>(s), categories, std::move(examples));
  }

  [[nodiscard]] bool has_slope_freedom() const {
    return std::any_of(criteria.begin(), criteria.end(),
                       [](const CriterionScale& c) { return c.subintervals >= 2; });
  }

  [[nodiscard]] std::string alternative_label(int i) const {
    if (i >= 0 && static_cast<std::size_t>(i) < alternative_ids.size()) {
      return alternative_ids[static_cast<std::size_t>(i)];
    }
    return "a" + std::to_string(i + 1);
  }
};

/**
 * @brief Piecewise-linear marginal value function: values at the breakpoints.
 */
struct MarginalFunction {
  std::string name;
  CriterionScale scale;
  std::vector<double> values;

  bool operator==(const MarginalFunction&) const = default;
};

/**
 * @brief Learned threshold-based additive sorting model.
 *
 * thresholds holds b_1..b_{q-1}; b0/bq are the outer thresholds derived from
 * the marginal extremes.
 */
struct SortingModel {
  std::vector<MarginalFunction> marginals;
  std::vector<double> thresholds;
  double epsilon = 0.0;
  double b0 = 0.0;
  double bq = 1.0;

  [[nodiscard]] int categories() const noexcept { return static_cast<int>(thresholds.size()) + 1; }

  /// b_0, b_1, ..., b_q.
  [[nodiscard]] std::vector<double> full_thresholds() const {
    std::vector<double> out;
    out.reserve(thresholds.size() + 2);
    out.push_back(b0);
    out.insert(out.end(), thresholds.begin(), thresholds.end());
    out.push_back(bq);
    return out;
  }

  bool operator==(const SortingModel&) const = default;
};

/// A single validation failure, naming the offending field.
struct Violation {
  ErrorCode code;
  std::string field;
  std::string message;
};

struct ValidationResult {
  std::optional<ProblemInstance> instance;
  std::vector<Violation> violations;

  [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
};

/// Checks every instance invariant; returns the instance untouched when all hold.
inline ValidationResult validate(const ProblemInstance& inst) {
  std::vector<Violation> out;
  const std::size_t n = inst.matrix.rows();
  const std::size_t m = inst.matrix.cols();
  if (inst.matrix.empty()) {
    out.push_back({ErrorCode::EmptyMatrix, "matrix", "decision matrix has no entries"});
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (!std::isfinite(inst.matrix(i, j))) {
        out.push_back({ErrorCode::NonFinitePerformance, "matrix[" + std::to_string(i) + "][" + std::to_string(j) + "]",
                       "performance level is not finite"});
      }
    }
  }
  if (inst.criteria.size() != m) {
    out.push_back({ErrorCode::DimensionMismatch, "criteria", "one scale per matrix column required"});
  }
  for (std::size_t j = 0; j < inst.criteria.size(); ++j) {
    const auto& c = inst.criteria[j];
    const std::string field = "criteria[" + std::to_string(j) + "]";
    if (!(c.min < c.max) || !std::isfinite(c.min) || !std::isfinite(c.max)) {
      out.push_back({ErrorCode::DegenerateCriterion, field, "scale requires min < max"});
      continue;
    }
    if (c.subintervals < 1 || c.breakpoints.size() != static_cast<std::size_t>(c.subintervals) + 1) {
      out.push_back({ErrorCode::InvalidArgument, field + ".breakpoints", "expected subintervals + 1 breakpoints"});
      continue;
    }
    const auto expected = compute_breakpoints(c.min, c.max, c.subintervals);
    for (std::size_t l = 0; l < expected.size(); ++l) {
      if (std::abs(expected[l] - c.breakpoints[l]) > 1e-9 * (c.max - c.min)) {
        out.push_back({ErrorCode::InvalidArgument, field + ".breakpoints", "breakpoints must be equally spaced"});
        break;
      }
    }
  }
  if (inst.categories < 2) {
    out.push_back({ErrorCode::CategoryOutOfRange, "categories", "at least two categories required"});
  }
  std::unordered_set<int> seen;
  for (std::size_t k = 0; k < inst.examples.size(); ++k) {
    const auto& ex = inst.examples[k];
    const std::string field = "examples[" + std::to_string(k) + "]";
    if (ex.alternative < 0 || static_cast<std::size_t>(ex.alternative) >= n) {
      out.push_back({ErrorCode::AlternativeOutOfRange, field + ".alternative", "alternative index out of range"});
    }
    if (ex.category < 1 || ex.category > inst.categories) {
      out.push_back({ErrorCode::CategoryOutOfRange, field + ".category", "category outside [1, q]"});
    }
    if (!seen.insert(ex.alternative).second) {
      out.push_back({ErrorCode::DuplicateExample, field + ".alternative", "alternative appears in two examples"});
    }
  }
  ValidationResult result;
  result.violations = std::move(out);
  if (result.ok()) result.instance = inst;
  return result;
}

/// Throws the first violation when the instance is invalid.
inline const ProblemInstance& require_valid(const ProblemInstance& inst) {
  auto result = validate(inst);
  if (!result.ok()) {
    const auto& v = result.violations.front();
    throw Error(v.code, v.field + ": " + v.message);
  }
  return inst;
}

}  // namespace nmsort

#endif  // NMSORT_CORE_HPP
