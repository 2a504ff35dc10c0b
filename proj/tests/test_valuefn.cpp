#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace nmsort;

namespace {

SortingModel random_model(std::mt19937_64& rng, int m, int q) {
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> s(1, 5);
  SortingModel model;
  double hi = 0.0;
  for (int j = 0; j < m; ++j) {
    const double lo = -10 * u(rng);
    MarginalFunction fn{"g" + std::to_string(j), CriterionScale::make(lo, lo + 1 + 20 * u(rng), s(rng)), {}};
    for (std::size_t l = 0; l < fn.scale.size(); ++l) fn.values.push_back(u(rng));
    hi += *std::max_element(fn.values.begin(), fn.values.end());
    model.marginals.push_back(fn);
  }
  model.epsilon = 0.01 + 0.1 * u(rng);
  const auto [b0, bq] = derive_outer_thresholds(model.marginals, model.epsilon);
  std::vector<double> cuts;
  for (int h = 1; h < q; ++h) cuts.push_back(b0 + (hi - b0) * u(rng));
  std::sort(cuts.begin(), cuts.end());
  model.thresholds = cuts;
  model.b0 = b0;
  model.bq = bq;
  return model;
}

std::vector<double> random_row(std::mt19937_64& rng, const SortingModel& model) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> row;
  for (const auto& fn : model.marginals) {
    // a quarter of the levels sit exactly on breakpoints
    if (u(rng) < 0.25) {
      row.push_back(fn.scale.breakpoints[static_cast<std::size_t>(u(rng) * static_cast<double>(fn.scale.size()))]);
    } else {
      row.push_back(fn.scale.min + u(rng) * (fn.scale.max - fn.scale.min));
    }
  }
  return row;
}

}  // namespace

TEST(MarginalValue, PublishedFirstCriterion) {
  const auto model = fixtures::firms_published_model();
  const auto& g1 = model.marginals[0];
  EXPECT_DOUBLE_EQ(marginal_value(g1, 8.795), 1.0);
  EXPECT_DOUBLE_EQ(marginal_value(g1, 0.04), 0.0336);
  EXPECT_NEAR(marginal_value(g1, 4.4175), (0.0336 + 1.0) / 2, 1e-12);
}

TEST(MarginalValue, ClampsOutsideTheScale) {
  const auto model = fixtures::firms_published_model();
  EXPECT_DOUBLE_EQ(marginal_value(model.marginals[0], -3.0), 0.0336);
  EXPECT_DOUBLE_EQ(marginal_value(model.marginals[0], 99.0), 0.0);
  const std::vector<double> row{-3.0, 2.4, 60.7};
  EXPECT_TRUE(evaluate(model.marginals, row).clamped);
}

TEST(MarginalValue, LipschitzInTheMaximumSlope) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto model = random_model(rng, 3, 3);
    for (const auto& fn : model.marginals) {
      const double width = fn.scale.breakpoints[1] - fn.scale.breakpoints[0];
      double slope = 0.0;
      for (std::size_t l = 1; l < fn.values.size(); ++l) {
        slope = std::max(slope, std::abs(fn.values[l] - fn.values[l - 1]) / width);
      }
      for (int k = 0; k < 100; ++k) {
        const double x = fn.scale.min + u(rng) * (fn.scale.max - fn.scale.min);
        const double delta = 1e-3 * (fn.scale.max - fn.scale.min) * u(rng);
        EXPECT_LE(std::abs(marginal_value(fn, x + delta) - marginal_value(fn, x)), slope * delta + 1e-12);
      }
    }
  }
}

TEST(GlobalValue, PublishedFirmA2) {
  const auto inst = fixtures::firms_instance();
  const auto model = fixtures::firms_published_model();
  EXPECT_NEAR(global_value(model, inst.matrix.row(1)), 1.8898, 1e-3);
}

TEST(GlobalValue, ZeroMarginalsAndIdentity) {
  auto model = fixtures::firms_published_model();
  for (auto& fn : model.marginals) std::fill(fn.values.begin(), fn.values.end(), 0.0);
  const std::vector<double> row{10, 3, 70};
  EXPECT_EQ(global_value(model, row), 0.0);

  SortingModel identity;
  identity.marginals.push_back({"x", CriterionScale::make(0, 1, 1), {0, 1}});
  const std::vector<double> x{0.37};
  EXPECT_DOUBLE_EQ(global_value(identity, x), 0.37);
  const std::vector<double> wrong{0.37, 0.5};
  EXPECT_THROW(global_value(identity, wrong), Error);
}

TEST(AssignCategory, PublishedThresholds) {
  const auto model = fixtures::firms_published_model();
  EXPECT_EQ(assign_category(model, 1.8898), 4);
  EXPECT_EQ(assign_category(model, 1.6222), 3);
  EXPECT_EQ(assign_category(model, 0.0), 1);
  EXPECT_EQ(assign_category(model, -5.0), 1);
  EXPECT_EQ(assign_category(model, 10.0), 4);
}

TEST(OuterThresholds, PublishedAndTrivialCases) {
  const auto [b0, bq] = derive_outer_thresholds(fixtures::firms_published_model().marginals, 0.2675);
  EXPECT_NEAR(b0, 0.0, 1e-12);
  EXPECT_NEAR(bq, 3.2675, 1e-12);

  const std::vector<std::vector<double>> flat{{0.5, 0.5}, {0.5, 0.5, 0.5}};
  const auto [f0, fq] = derive_outer_thresholds(flat, 0.01);
  EXPECT_DOUBLE_EQ(f0, 1.0);
  EXPECT_DOUBLE_EQ(fq, 1.01);

  const std::vector<std::vector<double>> one{{0.2, 0.7, 0.4}};
  const auto [o0, oq] = derive_outer_thresholds(one, 0.1);
  EXPECT_DOUBLE_EQ(o0, 0.2);
  EXPECT_DOUBLE_EQ(oq, 0.8);
}

TEST(Transform, PublishedModel) {
  const auto t = transform_to_uta(fixtures::firms_published_model());
  ASSERT_EQ(t.thresholds.size(), 5u);
  EXPECT_NEAR(t.thresholds[0], 0.0, 1e-12);
  EXPECT_NEAR(t.thresholds[1], 0.4516, 5e-4);
  EXPECT_NEAR(t.thresholds[2], 0.5407, 5e-4);
  EXPECT_NEAR(t.thresholds[3], 0.6299, 5e-4);
  EXPECT_NEAR(t.thresholds[4], 1.0892, 5e-4);
  EXPECT_NEAR(t.weights[0], 0.3333, 1e-3);
  EXPECT_NEAR(t.weights[1], 0.3333, 1e-3);
  EXPECT_NEAR(t.weights[2], 0.3334, 1e-3);
  // g1 peaks at its second breakpoint and bottoms out at its fourth
  EXPECT_EQ(t.best_breakpoint[0], 1);
  EXPECT_EQ(t.worst_breakpoint[0], 3);
}

TEST(Transform, ConstantModelRejected) {
  auto model = fixtures::firms_published_model();
  for (auto& fn : model.marginals) std::fill(fn.values.begin(), fn.values.end(), 0.3);
  try {
    transform_to_uta(model);
    FAIL() << "expected ZeroRange";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroRange);
  }
}

TEST(Transform, NormalizationIdentities) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto model = random_model(rng, 1 + trial % 5, 2 + trial % 4);
    const auto t = transform_to_uta(model);
    double best_sum = 0.0;
    double weight_sum = 0.0;
    for (std::size_t j = 0; j < t.marginals.size(); ++j) {
      const auto& v = t.marginals[j].values;
      EXPECT_NEAR(v[static_cast<std::size_t>(t.worst_breakpoint[j])], 0.0, 1e-9);
      EXPECT_NEAR(*std::min_element(v.begin(), v.end()), 0.0, 1e-9);
      best_sum += v[static_cast<std::size_t>(t.best_breakpoint[j])];
      weight_sum += t.weights[j];
    }
    EXPECT_NEAR(best_sum, 1.0, 1e-9);
    EXPECT_NEAR(weight_sum, 1.0, 1e-9);
    EXPECT_NEAR(t.thresholds.front(), 0.0, 1e-9);
    EXPECT_NEAR(t.thresholds.back(), 1.0 + t.epsilon, 1e-9);
  }
}

TEST(Transform, TieBreakPicksFirstBreakpoint) {
  SortingModel model;
  model.marginals.push_back({"x", CriterionScale::make(0, 3, 3), {0.2, 0.9, 0.2, 0.9}});
  model.thresholds = {0.5};
  model.epsilon = 0.1;
  const auto t = transform_to_uta(model);
  EXPECT_EQ(t.worst_breakpoint[0], 0);
  EXPECT_EQ(t.best_breakpoint[0], 1);
}

TEST(Transform, CategoriesAndThresholdSignsInvariant) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto model = random_model(rng, 1 + trial % 6, 2 + trial % 5);
    const auto t = transform_to_uta(model);
    const auto full = model.full_thresholds();
    for (int k = 0; k < 10; ++k) {
      const auto row = random_row(rng, model);
      const double v = global_value(model, row);
      const double vs = global_value(t, row);
      EXPECT_EQ(assign_category(model, v), assign_category(t, vs));
      for (std::size_t h = 0; h < full.size(); ++h) {
        if (std::abs(v - full[h]) < 1e-9) continue;
        EXPECT_EQ(v < full[h], vs < t.thresholds[h]);
      }
    }
  }
}
