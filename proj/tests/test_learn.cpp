#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace nmsort;

namespace {

LearnConfig with(Approach a) {
  LearnConfig c;
  c.approach = a;
  return c;
}

/// Total absolute slope change of the model's marginals, recomputed from the breakpoint values.
double slope_change(const SortingModel& model) {
  double total = 0.0;
  for (const auto& fn : model.marginals) {
    const auto& bp = fn.scale.breakpoints;
    for (std::size_t l = 1; l + 1 < bp.size(); ++l) {
      const double left = (fn.values[l] - fn.values[l - 1]) / (bp[l] - bp[l - 1]);
      const double right = (fn.values[l + 1] - fn.values[l]) / (bp[l + 1] - bp[l]);
      total += std::abs(left - right);
    }
  }
  return total;
}

void expect_reproduces(const SortingModel& model, const ProblemInstance& inst, const AssignmentExamples& examples) {
  EXPECT_TRUE(misclassified_examples(model, inst.matrix, examples).empty());
}

void expect_in_box(const SortingModel& model, BoundBox box = {}) {
  for (const auto& fn : model.marginals) {
    for (double v : fn.values) {
      EXPECT_GE(v, box.lower);
      EXPECT_LE(v, box.upper);
    }
  }
}

void expect_ordered(const SortingModel& model) {
  for (std::size_t h = 1; h < model.thresholds.size(); ++h) {
    EXPECT_GE(model.thresholds[h] - model.thresholds[h - 1], model.epsilon - 1e-7);
  }
}

/// Two-category toy where two identical rows carry different categories.
ProblemInstance identical_rows_toy() {
  auto inst = ProblemInstance::from_matrix(Matrix::from_rows({{0.5}, {0.5}, {0.0}, {1.0}}), 1, 2);
  inst.examples = {{0, 1}, {1, 2}};
  return inst;
}

/// Random instance whose examples follow a hidden piecewise model, so it is consistent.
ProblemInstance planted_instance(std::mt19937_64& rng, int n, int m, int q, int s) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < n; ++i) {
    std::vector<double> row;
    for (int j = 0; j < m; ++j) row.push_back(u(rng));
    rows.push_back(row);
  }
  auto inst = ProblemInstance::from_matrix(Matrix::from_rows(rows), s, q);
  std::vector<double> score;
  for (const auto& row : rows) {
    double v = 0.0;
    for (int j = 0; j < m; ++j) v += std::sin(3.0 * row[static_cast<std::size_t>(j)] + j);
    score.push_back(v);
  }
  auto sorted = score;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < n; ++i) {
    int h = 1;
    for (int k = 1; k < q; ++k) h += score[static_cast<std::size_t>(i)] >= sorted[static_cast<std::size_t>(k * n / q)] ? 1 : 0;
    inst.examples.push_back({i, h});
  }
  // the hidden model is not piecewise linear on these scales, so keep only a consistent core
  if (!check_consistency(inst).consistent()) inst.examples = minimum_adjustment(inst).adjusted;
  return inst;
}

}  // namespace

TEST(Consistency, FirmsExamplesAreConsistent) {
  const auto result = check_consistency(fixtures::firms_instance());
  EXPECT_LE(result.optimum, kConsistencyTolerance);
  EXPECT_TRUE(result.consistent());
  ASSERT_EQ(result.slacks.size(), 6u);
  expect_reproduces(result.model, fixtures::firms_instance(), fixtures::firms_instance().examples);
}

TEST(Consistency, IdenticalRowsNeedEpsilonOfSlack) {
  const auto result = check_consistency(identical_rows_toy());
  EXPECT_NEAR(result.optimum, 1e-3, 1e-9);
  EXPECT_FALSE(result.consistent());
}

TEST(Consistency, EmptyExampleSet) {
  auto inst = fixtures::firms_instance();
  inst.examples.clear();
  EXPECT_EQ(check_consistency(inst).optimum, 0.0);
}

TEST(Consistency, AgreesWithLatticeOracle) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 3 + trial % 4;
    const int m = 1 + trial % 2;
    const auto tiny = fixtures::random_tiny(rng, n, m);
    const bool expected = fixtures::lattice_consistent(tiny, 1e-3);
    EXPECT_EQ(check_consistency(fixtures::to_instance(tiny)).consistent(), expected) << "trial " << trial;
  }
}

TEST(Adjustment, IdenticalRowsMoveOnce) {
  const auto inst = identical_rows_toy();
  const auto result = minimum_adjustment(inst);
  EXPECT_EQ(result.moves, 1);
  EXPECT_EQ(fixtures::exhaustive_min_moves(inst, {}), 1);
  auto fixed = inst;
  fixed.examples = result.adjusted;
  EXPECT_TRUE(check_consistency(fixed).consistent());
}

TEST(Adjustment, ConsistentInputUnchanged) {
  const auto inst = fixtures::firms_instance();
  const auto result = minimum_adjustment(inst);
  EXPECT_EQ(result.moves, 0);
  EXPECT_EQ(result.adjusted, inst.examples);
}

TEST(Adjustment, ThreeIdenticalRowsMoveTwice) {
  auto inst = ProblemInstance::from_matrix(Matrix::from_rows({{0.5}, {0.5}, {0.5}, {0.0}, {1.0}}), 1, 3);
  inst.examples = {{0, 1}, {1, 2}, {2, 3}};
  EXPECT_EQ(minimum_adjustment(inst).moves, 2);
  EXPECT_EQ(fixtures::exhaustive_min_moves(inst, {}), 2);
}

TEST(Adjustment, AgreesWithExhaustiveSearch) {
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 15; ++trial) {
    auto tiny = fixtures::random_tiny(rng, 3 + trial % 2, 1 + trial % 2);
    const int q = 2 + trial % 2;
    for (auto& c : tiny.categories) c = 1 + static_cast<int>(rng() % static_cast<unsigned>(q));
    const auto inst = fixtures::to_instance(tiny, q);
    EXPECT_EQ(minimum_adjustment(inst).moves, fixtures::exhaustive_min_moves(inst, {})) << "trial " << trial;
  }
}

TEST(Approach1, FirmsObjectives) {
  const auto inst = fixtures::firms_instance();
  const auto out = learn(inst, with(Approach::Approach1));
  EXPECT_NEAR(out.gamma_star, 0.000683, 1e-4);
  EXPECT_NEAR(out.eps_star, 0.001, 1e-6);
  expect_reproduces(out.model, inst, inst.examples);
  EXPECT_LE(slope_change(out.model), out.gamma_star + 1e-7 + 1e-9);
}

TEST(Approach1, LinearlySortableInstanceHasNoSlopeChange) {
  auto inst = ProblemInstance::from_matrix(Matrix::from_rows({{0, 5}, {1, 3}, {2, 9}, {3, 1}, {4, 4}}), 2, 3);
  inst.examples = {{0, 1}, {1, 1}, {2, 2}, {3, 3}, {4, 3}};
  const auto out = learn(inst, with(Approach::Approach1));
  EXPECT_NEAR(out.gamma_star, 0.0, 1e-9);
  expect_reproduces(out.model, inst, inst.examples);
}

TEST(Approach1, NeedsInteriorBreakpoints) {
  try {
    learn(fixtures::firms_instance(1), with(Approach::Approach1));
    FAIL() << "expected NoSlopeVariables";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoSlopeVariables);
  }
  EXPECT_THROW(learn(fixtures::firms_instance(1), with(Approach::LFP)), Error);
}

TEST(Approach2, FirmsObjectivesAndAssignments) {
  const auto inst = fixtures::firms_instance();
  const auto out = learn(inst, with(Approach::Approach2));
  EXPECT_NEAR(out.eps_star, 0.2675, 1e-3);
  EXPECT_NEAR(out.gamma_star, 0.458, 5e-3);
  const std::vector<std::pair<int, int>> expected{{1, 4}, {2, 2}, {8, 3}, {9, 2}, {11, 1}, {16, 3}};
  for (const auto& [i, h] : expected) {
    EXPECT_EQ(assign_category(out.model, global_value(out.model, inst.matrix.row(static_cast<std::size_t>(i)))), h)
        << inst.alternative_label(i);
  }
  EXPECT_EQ(out.model.epsilon, out.eps_star);
}

TEST(Approach2, SeparableTwoCategoryInstance) {
  auto inst = ProblemInstance::from_matrix(Matrix::from_rows({{0.0}, {1.0}}), 1, 2);
  inst.examples = {{0, 1}, {1, 2}};
  const auto out = learn(inst, with(Approach::Approach2));
  EXPECT_GT(out.eps_star, 1e-6);
  expect_reproduces(out.model, inst, inst.examples);
}

TEST(Approach2, InconsistentExamplesSignalled) {
  try {
    learn(identical_rows_toy(), with(Approach::Approach2));
    FAIL() << "expected InfeasibleAfterAdjustment";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InfeasibleAfterAdjustment);
  }
}

TEST(Lfp, FirmsModelIsCompatible) {
  const auto inst = fixtures::firms_instance();
  const auto out = learn(inst, with(Approach::LFP));
  EXPECT_GT(out.eps_star, 0.0);
  expect_reproduces(out.model, inst, inst.examples);
  expect_in_box(out.model);
  expect_ordered(out.model);
}

TEST(Lfp, ZeroSlopeChangeGivesZeroObjective) {
  auto inst = ProblemInstance::from_matrix(Matrix::from_rows({{0, 5}, {1, 3}, {2, 9}, {3, 1}, {4, 4}}), 2, 3);
  inst.examples = {{0, 1}, {1, 1}, {2, 2}, {3, 3}, {4, 3}};
  const auto out = learn(inst, with(Approach::LFP));
  EXPECT_NEAR(out.gamma_star, 0.0, 1e-9);
  expect_reproduces(out.model, inst, inst.examples);
}

TEST(Utadis, ConsistentInstanceGivesZeroSlack) {
  const auto inst = fixtures::firms_instance();
  const auto out = learn(inst, with(Approach::UTADIS));
  EXPECT_LE(out.consistency_slack, kConsistencyTolerance);
  EXPECT_EQ(out.eps_star, 1e-3);
  expect_reproduces(out.model, inst, inst.examples);
}

TEST(Learners, RandomInstancesSatisfyEveryProperty) {
  std::mt19937_64 rng(107);
  for (int trial = 0; trial < 12; ++trial) {
    const auto inst = planted_instance(rng, 30, 3, 2 + trial % 3, 2 + trial % 2);
    for (auto a : {Approach::Approach1, Approach::Approach2, Approach::LFP, Approach::UTADIS}) {
      const auto out = learn(inst, with(a));
      SCOPED_TRACE(std::string(to_string(a)) + " trial " + std::to_string(trial));
      expect_reproduces(out.model, inst, inst.examples);
      expect_in_box(out.model);
      expect_ordered(out.model);
      if (a == Approach::Approach1) {
        EXPECT_LE(slope_change(out.model), out.gamma_star + 1e-7 + 1e-8);
      }
      if (a == Approach::Approach2) {
        const auto first = learn(inst, with(Approach::Approach2));
        EXPECT_EQ(first.eps_star, out.eps_star);
        EXPECT_EQ(first.gamma_star, out.gamma_star);
      }
    }
  }
}

TEST(Learners, ObjectivesAreRepeatable) {
  const auto inst = fixtures::firms_instance();
  for (auto a : {Approach::Approach1, Approach::Approach2, Approach::LFP, Approach::UTADIS}) {
    const auto x = learn(inst, with(a));
    const auto y = learn(inst, with(a));
    EXPECT_EQ(x.gamma_star, y.gamma_star) << to_string(a);
    EXPECT_EQ(x.eps_star, y.eps_star) << to_string(a);
  }
  EXPECT_EQ(minimum_adjustment(identical_rows_toy()).moves, minimum_adjustment(identical_rows_toy()).moves);
}

TEST(Config, RejectsInvertedEpsilonRange) {
  LearnConfig c;
  c.eps_floor = 0.01;
  c.eps_fixed = 0.001;
  EXPECT_THROW(learn(fixtures::firms_instance(), c), Error);
}

TEST(Pipeline, FirmsApproach1SortsEveryFirm) {
  const auto inst = fixtures::firms_instance();
  const auto result = run_pipeline(inst, with(Approach::Approach1));
  EXPECT_FALSE(result.adjusted);
  EXPECT_EQ(result.outcome.adjustment_moves, 0);
  ASSERT_EQ(result.assignments.size(), 20u);
  EXPECT_EQ(result.non_reference, fixtures::firms_non_reference());
  for (const auto& ex : inst.examples) {
    EXPECT_EQ(result.assignments[static_cast<std::size_t>(ex.alternative)], ex.category);
  }
  for (int h : result.assignments) {
    EXPECT_GE(h, 1);
    EXPECT_LE(h, 4);
  }
}

TEST(Pipeline, InconsistentToyIsAdjustedThenLearned) {
  const auto inst = identical_rows_toy();
  const auto result = run_pipeline(inst, with(Approach::Approach2));
  EXPECT_TRUE(result.adjusted);
  EXPECT_EQ(result.outcome.adjustment_moves, 1);
  EXPECT_GT(result.outcome.consistency_slack, 0.0);
  expect_reproduces(result.outcome.model, inst, result.outcome.adjusted_examples);
  // both identical rows end up in one category
  EXPECT_EQ(result.outcome.adjusted_examples[0].category, result.outcome.adjusted_examples[1].category);
}
