/**
 * @file robustness.hpp
 * @brief Possible assignments of non-reference alternatives and the APA metric.
 */

#ifndef NMSORT_ROBUSTNESS_HPP
#define NMSORT_ROBUSTNESS_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <limits>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "nmsort/core.hpp"
#include "nmsort/learn.hpp"
#include "nmsort/solver.hpp"

namespace nmsort {

/// Categories reachable by some example-compatible model, with the best epsilon per category.
struct PossibleAssignment {
  int alternative = 0;
  std::vector<int> categories;
  /// eps*_h for h = 1..q; NaN where the extended example set is infeasible.
  std::vector<double> epsilon;

  [[nodiscard]] bool contains(int h) const {
    return std::find(categories.begin(), categories.end(), h) != categories.end();
  }
};

/**
 * @brief Tries every category for one alternative by maximizing epsilon with the extra example.
 *
 * Category h is possible iff that maximum exceeds config.tau. Epsilon ranges
 * over [0, eps_cap] so barely-compatible categories are rejected by tau.
 */
inline PossibleAssignment possible_assignments(const ProblemInstance& inst, int alternative,
                                               const LearnConfig& config, SolverContext& ctx) {
  if (alternative < 0 || static_cast<std::size_t>(alternative) >= inst.alternatives()) {
    throw Error(ErrorCode::AlternativeOutOfRange, "alternative index out of range");
  }
  PossibleAssignment out;
  out.alternative = alternative;
  AssignmentExamples examples;
  for (const auto& ex : inst.examples) {
    if (ex.alternative != alternative) examples.push_back(ex);
  }
  examples.push_back({alternative, 1});
  for (int h = 1; h <= inst.categories; ++h) {
    examples.back().category = h;
    auto prog = detail::feasibility_program(inst, examples, config.box, 0.0, config.cap(inst.criteria_count()));
    prog.lp.set_objective({{prog.layout.epsilon(), 1.0}}, ObjectiveSense::Maximize);
    const Solution sol = ctx.solve(prog.lp, "possible_" + std::to_string(alternative + 1) + "_" + std::to_string(h));
    if (sol.status == SolveStatus::Unbounded) {
      throw Error(ErrorCode::BackendFailure, "possible-assignment program is unbounded");
    }
    const double eps = sol.optimal() ? sol.objective : std::numeric_limits<double>::quiet_NaN();
    out.epsilon.push_back(eps);
    if (sol.optimal() && eps > config.tau) out.categories.push_back(h);
  }
  return out;
}

inline PossibleAssignment possible_assignments(const ProblemInstance& inst, int alternative,
                                               const LearnConfig& config = {}) {
  SolverContext ctx;
  return possible_assignments(inst, alternative, config, ctx);
}

/**
 * @brief Possible assignments of several alternatives on @p jobs worker threads.
 *
 * Each worker owns a solver context. The output follows the input order
 * regardless of scheduling.
 */
inline std::vector<PossibleAssignment> possible_assignment_sets(const ProblemInstance& inst,
                                                                std::span<const int> alternatives,
                                                                const LearnConfig& config = {},
                                                                unsigned jobs = 1,
                                                                const SolveOptions& options = {}) {
  require_valid(inst);
  std::vector<PossibleAssignment> out(alternatives.size());
  jobs = std::clamp<unsigned>(jobs, 1u, static_cast<unsigned>(std::max<std::size_t>(alternatives.size(), 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    SolverContext ctx(options);
    for (std::size_t k = next++; k < alternatives.size(); k = next++) {
      try {
        out[k] = possible_assignments(inst, alternatives[k], config, ctx);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < jobs; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

/// 1 - mean((|C^P| - 1) / (q - 1)); 1 means every set is a singleton.
inline double apa(std::span<const PossibleAssignment> sets, int categories) {
  if (categories < 2) throw Error(ErrorCode::CategoryOutOfRange, "at least two categories required");
  if (sets.empty()) throw Error(ErrorCode::EmptySet, "no possible-assignment sets");
  double spread = 0.0;
  for (const auto& s : sets) {
    if (s.categories.empty()) throw Error(ErrorCode::EmptySet, "possible-assignment set is empty");
    spread += static_cast<double>(s.categories.size() - 1) / static_cast<double>(categories - 1);
  }
  return 1.0 - spread / static_cast<double>(sets.size());
}

/// Same metric from bare set sizes.
inline double apa(std::span<const int> sizes, int categories) {
  std::vector<PossibleAssignment> sets(sizes.size());
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    for (int h = 1; h <= sizes[k]; ++h) sets[k].categories.push_back(h);
  }
  return apa(sets, categories);
}

}  // namespace nmsort

#endif  // NMSORT_ROBUSTNESS_HPP
