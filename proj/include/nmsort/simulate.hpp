/**
 * @file simulate.hpp
 * @brief Synthetic datasets, accuracy and robustness experiments, paired t-tests.
 *
 * Every random draw comes from a stream keyed by (seed, dataset, replication),
 * so results do not depend on how cells are scheduled across threads.
 */

#ifndef NMSORT_SIMULATE_HPP
#define NMSORT_SIMULATE_HPP

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "nmsort/core.hpp"
#include "nmsort/learn.hpp"
#include "nmsort/robustness.hpp"
#include "nmsort/solver.hpp"
#include "nmsort/valuefn.hpp"

namespace nmsort {

using Rng = std::mt19937_64;

/// Independent stream for one (dataset, replication) cell.
inline Rng make_stream(std::uint64_t seed, std::uint64_t dataset, std::uint64_t replication) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(dataset), static_cast<std::uint32_t>(replication)};
  return Rng(seq);
}

/// Uniform on [0, 1) from the top 53 bits; identical on every standard library.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Unbiased integer in [0, bound).
inline std::size_t uniform_index(Rng& rng, std::size_t bound) {
  const std::uint64_t b = bound;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % b;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return static_cast<std::size_t>(x % b);
}

template <class T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t k = items.size(); k > 1; --k) std::swap(items[k - 1], items[uniform_index(rng, k)]);
}

struct SimulationConfig {
  int n = 200;
  int m = 6;
  int q = 4;
  std::vector<int> subintervals{2};  // one value for all criteria, or one per criterion
  double r = 0.8;
  int replications = 20;
  int datasets = 10;
  std::uint64_t seed = 1;
  bool balanced = false;
  std::vector<Approach> approaches{Approach::Approach1, Approach::Approach2, Approach::LFP, Approach::UTADIS};
  unsigned jobs = 1;
  double alpha = 0.05;
  LearnConfig learn;
  SolveOptions solve;

  [[nodiscard]] std::vector<int> subintervals_per_criterion() const {
    if (subintervals.size() == 1) return std::vector<int>(static_cast<std::size_t>(m), subintervals[0]);
    return subintervals;
  }

  [[nodiscard]] int reference_count() const {
    return static_cast<int>(std::floor(static_cast<double>(n) * r + 1e-9));
  }

  void check() const {
    if (n < 1 || m < 1) throw Error(ErrorCode::InvalidArgument, "n and m must be >= 1");
    if (q < 2) throw Error(ErrorCode::CategoryOutOfRange, "at least two categories required");
    if (subintervals.size() != 1 && subintervals.size() != static_cast<std::size_t>(m)) {
      throw Error(ErrorCode::DimensionMismatch, "need one subinterval count or one per criterion");
    }
    for (int s : subintervals) {
      if (s < 1) throw Error(ErrorCode::InvalidArgument, "subinterval count must be >= 1");
    }
    if (!(r > 0.0 && r < 1.0)) throw Error(ErrorCode::InvalidArgument, "reference proportion must lie in (0, 1)");
    if (replications < 1 || datasets < 1) {
      throw Error(ErrorCode::InvalidArgument, "need at least one dataset and one replication");
    }
    if (balanced && reference_count() < q) {
      throw Error(ErrorCode::InsufficientAlternatives, "balanced sampling needs floor(n r) >= q");
    }
  }
};

/// Decision matrix plus the ground-truth model and the categories it assigns.
struct Dataset {
  Matrix matrix;
  std::vector<CriterionScale> scales;
  SortingModel truth;
  std::vector<double> global_values;
  std::vector<int> categories;
  int redraws = 0;
};

namespace detail {

inline constexpr int kMaxRedraws = 1000;

struct DrawnModel {
  Matrix matrix;
  std::vector<CriterionScale> scales;
  std::vector<MarginalFunction> marginals;
  std::vector<double> values;
};

/// Uniform matrix on [0, 100] and uniform breakpoint values normalized so the worst sum is 0 and the best 1.
inline std::optional<DrawnModel> draw_model(const SimulationConfig& config, Rng& rng) {
  DrawnModel out;
  out.matrix = Matrix(static_cast<std::size_t>(config.n), static_cast<std::size_t>(config.m));
  for (std::size_t i = 0; i < out.matrix.rows(); ++i) {
    for (std::size_t j = 0; j < out.matrix.cols(); ++j) out.matrix(i, j) = 100.0 * uniform01(rng);
  }
  const auto s = config.subintervals_per_criterion();
  for (std::size_t j = 0; j < out.matrix.cols(); ++j) {
    const auto col = out.matrix.column(j);
    const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    if (!(*lo < *hi)) return std::nullopt;
    out.scales.push_back(CriterionScale::make(*lo, *hi, s[j]));
  }
  SortingModel raw;
  for (std::size_t j = 0; j < out.scales.size(); ++j) {
    MarginalFunction fn{"g" + std::to_string(j + 1), out.scales[j], {}};
    for (std::size_t l = 0; l < out.scales[j].size(); ++l) fn.values.push_back(uniform01(rng));
    raw.marginals.push_back(std::move(fn));
  }
  raw.thresholds.assign(static_cast<std::size_t>(config.q - 1), 0.0);
  raw.bq = 1.0;
  TransformedModel normalized;
  try {
    normalized = transform_to_uta(raw);
  } catch (const Error&) {
    return std::nullopt;
  }
  out.marginals = std::move(normalized.marginals);
  for (std::size_t i = 0; i < out.matrix.rows(); ++i) {
    out.values.push_back(evaluate(out.marginals, out.matrix.row(i)).value);
  }
  return out;
}

/// True when the dataset, with every alternative as a reference, passes the consistency check.
inline bool self_consistent(const Dataset& d, int q, const LearnConfig& learn, SolverContext& ctx) {
  ProblemInstance inst;
  inst.matrix = d.matrix;
  inst.criteria = d.scales;
  inst.categories = q;
  for (std::size_t i = 0; i < d.categories.size(); ++i) {
    inst.examples.push_back({static_cast<int>(i), d.categories[i]});
  }
  return check_consistency(inst, learn, ctx).consistent();
}

inline Dataset assemble(DrawnModel drawn, std::vector<double> thresholds, double b0, double bq) {
  Dataset out;
  out.matrix = std::move(drawn.matrix);
  out.scales = std::move(drawn.scales);
  out.truth.marginals = std::move(drawn.marginals);
  out.truth.thresholds = std::move(thresholds);
  out.truth.b0 = b0;
  out.truth.bq = bq;
  out.global_values = std::move(drawn.values);
  for (double v : out.global_values) out.categories.push_back(assign_category(out.truth, v));
  return out;
}

}  // namespace detail

/**
 * @brief Random matrix and model; the truth uses thresholds b_h = h / q.
 *
 * Redraws when a criterion is constant or when the full alternative set fails
 * the consistency check at eps_fixed.
 */
inline Dataset generate_dataset(const SimulationConfig& config, Rng& rng, SolverContext& ctx) {
  for (int attempt = 0; attempt < detail::kMaxRedraws; ++attempt) {
    auto drawn = detail::draw_model(config, rng);
    if (!drawn) continue;
    std::vector<double> b;
    for (int h = 1; h < config.q; ++h) b.push_back(static_cast<double>(h) / config.q);
    Dataset out = detail::assemble(std::move(*drawn), std::move(b), 0.0, 1.0);
    if (!detail::self_consistent(out, config.q, config.learn, ctx)) continue;
    out.redraws = attempt;
    return out;
  }
  throw Error(ErrorCode::DegenerateSample, "could not draw a self-consistent dataset");
}

/**
 * @brief As generate_dataset, but thresholds sit at order statistics of the global values.
 *
 * b_h is the floor(h n / q)-th smallest value, so category sizes differ by at
 * most one. Ties straddling a cut trigger a redraw.
 */
inline Dataset generate_balanced_dataset(const SimulationConfig& config, Rng& rng, SolverContext& ctx) {
  if (config.n < config.q) {
    throw Error(ErrorCode::InsufficientAlternatives, "balanced generation needs n >= q");
  }
  for (int attempt = 0; attempt < detail::kMaxRedraws; ++attempt) {
    auto drawn = detail::draw_model(config, rng);
    if (!drawn) continue;
    auto sorted = drawn->values;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> b;
    bool tied = false;
    for (int h = 1; h < config.q; ++h) {
      const auto cut = static_cast<std::size_t>(h * config.n / config.q);
      tied = tied || sorted[cut - 1] == sorted[cut];
      b.push_back(sorted[cut]);
    }
    if (tied) continue;
    Dataset out = detail::assemble(std::move(*drawn), std::move(b), 0.0, 1.0);
    if (!detail::self_consistent(out, config.q, config.learn, ctx)) continue;
    out.redraws = attempt;
    return out;
  }
  throw Error(ErrorCode::DegenerateSample, "could not draw a balanced self-consistent dataset");
}

inline Dataset generate(const SimulationConfig& config, Rng& rng, SolverContext& ctx) {
  return config.balanced ? generate_balanced_dataset(config, rng, ctx) : generate_dataset(config, rng, ctx);
}

struct Partition {
  std::vector<int> reference;
  std::vector<int> non_reference;
};

/**
 * @brief Splits alternatives into floor(n r) references and the rest.
 *
 * Balanced mode first spreads references evenly over the categories present,
 * then fills the remainder uniformly. Both lists come back sorted.
 */
inline Partition partition_reference(std::span<const int> categories, double r, bool balanced, Rng& rng) {
  const std::size_t n = categories.size();
  if (n == 0) throw Error(ErrorCode::EmptySet, "no alternatives to partition");
  const auto count = static_cast<std::size_t>(std::floor(static_cast<double>(n) * r + 1e-9));
  if (count == 0 || count >= n) {
    throw Error(ErrorCode::EmptySet, "partition leaves the reference or non-reference set empty");
  }
  std::vector<bool> chosen(n, false);
  std::size_t taken = 0;
  if (balanced) {
    std::vector<std::vector<int>> groups(static_cast<std::size_t>(*std::max_element(categories.begin(), categories.end())) + 1);
    for (std::size_t i = 0; i < n; ++i) groups[static_cast<std::size_t>(categories[i])].push_back(static_cast<int>(i));
    const auto present = static_cast<std::size_t>(
        std::count_if(groups.begin(), groups.end(), [](const auto& g) { return !g.empty(); }));
    if (count < present) {
      throw Error(ErrorCode::InsufficientAlternatives, "fewer references than nonempty categories");
    }
    const std::size_t share = count / present;
    for (auto& g : groups) {
      if (g.empty()) continue;
      shuffle(g, rng);
      for (std::size_t k = 0; k < std::min(share, g.size()); ++k) {
        chosen[static_cast<std::size_t>(g[k])] = true;
        ++taken;
      }
    }
  }
  std::vector<int> pool;
  for (std::size_t i = 0; i < n; ++i) {
    if (!chosen[i]) pool.push_back(static_cast<int>(i));
  }
  shuffle(pool, rng);
  for (std::size_t k = 0; taken < count; ++k, ++taken) chosen[static_cast<std::size_t>(pool[k])] = true;
  Partition out;
  for (std::size_t i = 0; i < n; ++i) (chosen[i] ? out.reference : out.non_reference).push_back(static_cast<int>(i));
  return out;
}

/// Fraction of exact category matches.
inline double accuracy(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw Error(ErrorCode::LengthMismatch, "category vectors differ in length");
  if (truth.empty()) throw Error(ErrorCode::EmptySet, "no alternatives to score");
  std::size_t hits = 0;
  for (std::size_t k = 0; k < truth.size(); ++k) hits += truth[k] == predicted[k] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  int df = 0;
  bool reject = false;
};

/// One-tailed paired t-test of H0: mean(a) <= mean(b) against mean(a) > mean(b).
inline TTestResult paired_t_test(std::span<const double> a, std::span<const double> b, double alpha = 0.05) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "paired samples differ in length");
  if (a.size() < 2) throw Error(ErrorCode::DegenerateSample, "need at least two pairs");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t k = 0; k < n; ++k) d[k] = a[k] - b[k];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 1e-15 * std::max(1.0, std::abs(mean)))) {
    throw Error(ErrorCode::DegenerateSample, "differences have zero variance");
  }
  TTestResult out;
  out.df = static_cast<int>(n - 1);
  out.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  const boost::math::students_t dist(static_cast<double>(out.df));
  out.p = boost::math::cdf(boost::math::complement(dist, out.t));
  out.reject = out.p < alpha;
  return out;
}

/// Mean and sample standard deviation (0 for a single value).
inline std::pair<double, double> mean_and_sd(std::span<const double> xs) {
  if (xs.empty()) return {std::nan(""), std::nan("")};
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

struct MethodSummary {
  std::string label;
  bool available = true;
  double mean = 0.0;
  double sd = 0.0;
  std::vector<double> dataset_means;  // NaN where every replication failed
  int failures = 0;
};

struct ComparisonTest {
  std::string first;
  std::string second;
  std::optional<TTestResult> test;
  std::string note;
};

struct ExperimentReport {
  std::string metric;  // "accuracy" or "apa"
  SimulationConfig config;
  std::vector<MethodSummary> methods;
  std::vector<ComparisonTest> comparisons;
  /// Reference alternatives a learned model failed to reproduce; 0 on every healthy run.
  int reference_misses = 0;
  std::vector<int> redraws;  // per dataset

  [[nodiscard]] const MethodSummary* find(std::string_view label) const {
    for (const auto& m : methods) {
      if (m.label == label) return &m;
    }
    return nullptr;
  }
};

namespace detail {

/// Runs task(cell, ctx) for cell in [0, count) on a pool of workers, one solver context each.
inline void run_cells(std::size_t count, unsigned jobs, const SolveOptions& options,
                      const std::function<void(std::size_t, SolverContext&)>& task) {
  jobs = std::clamp<unsigned>(jobs, 1u, static_cast<unsigned>(std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    SolverContext ctx(options);
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        task(k, ctx);
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
}

inline std::vector<Dataset> generate_all(const SimulationConfig& config) {
  std::vector<Dataset> out(static_cast<std::size_t>(config.datasets));
  run_cells(out.size(), config.jobs, config.solve, [&](std::size_t d, SolverContext& ctx) {
    Rng rng = make_stream(config.seed, d, 0);
    out[d] = generate(config, rng, ctx);
  });
  return out;
}

inline ProblemInstance reference_instance(const Dataset& d, int q, std::span<const int> reference) {
  ProblemInstance inst;
  inst.matrix = d.matrix;
  inst.criteria = d.scales;
  inst.categories = q;
  for (int i : reference) inst.examples.push_back({i, d.categories[static_cast<std::size_t>(i)]});
  return inst;
}

inline bool applicable(Approach a, const SimulationConfig& config) {
  if (a != Approach::Approach1 && a != Approach::LFP) return true;
  const auto s = config.subintervals_per_criterion();
  return std::any_of(s.begin(), s.end(), [](int x) { return x >= 2; });
}

inline MethodSummary summarize(std::string label, std::vector<std::vector<double>> cells, int failures) {
  MethodSummary out;
  out.label = std::move(label);
  out.failures = failures;
  std::vector<double> finite;
  for (const auto& reps : cells) {
    std::vector<double> ok;
    for (double x : reps) {
      if (!std::isnan(x)) ok.push_back(x);
    }
    const double m = ok.empty() ? std::nan("") : mean_and_sd(ok).first;
    out.dataset_means.push_back(m);
    if (!std::isnan(m)) finite.push_back(m);
  }
  std::tie(out.mean, out.sd) = mean_and_sd(finite);
  return out;
}

}  // namespace detail

/**
 * @brief Accuracy of each learner on the non-reference alternatives.
 *
 * Each replication re-partitions the dataset. Per-dataset means over the
 * replications are aggregated into mean and sample standard deviation; every
 * learner is compared with UTADIS by a paired t-test over the dataset means.
 */
inline ExperimentReport run_comparison(const SimulationConfig& config) {
  config.check();
  const auto datasets = detail::generate_all(config);
  const std::size_t reps = static_cast<std::size_t>(config.replications);
  const std::size_t methods = config.approaches.size();
  // scores[method][dataset][replication]
  std::vector<std::vector<std::vector<double>>> scores(
      methods, std::vector<std::vector<double>>(datasets.size(), std::vector<double>(reps, std::nan(""))));
  std::vector<int> failures(methods, 0);
  std::atomic<int> misses{0};
  std::mutex failure_mutex;

  detail::run_cells(datasets.size() * reps, config.jobs, config.solve, [&](std::size_t cell, SolverContext& ctx) {
    const std::size_t d = cell / reps;
    const std::size_t rep = cell % reps;
    Rng rng = make_stream(config.seed, d, rep + 1);
    const auto& data = datasets[d];
    const auto part = partition_reference(data.categories, config.r, config.balanced, rng);
    const auto inst = detail::reference_instance(data, config.q, part.reference);
    std::vector<int> truth;
    for (int i : part.non_reference) truth.push_back(data.categories[static_cast<std::size_t>(i)]);
    for (std::size_t k = 0; k < methods; ++k) {
      if (!detail::applicable(config.approaches[k], config)) continue;
      LearnConfig lc = config.learn;
      lc.approach = config.approaches[k];
      try {
        const auto outcome = learn(inst, lc, ctx);
        misses += static_cast<int>(misclassified_examples(outcome.model, inst.matrix, inst.examples).size());
        std::vector<int> predicted;
        for (int i : part.non_reference) {
          predicted.push_back(
              assign_category(outcome.model, global_value(outcome.model, data.matrix.row(static_cast<std::size_t>(i)))));
        }
        scores[k][d][rep] = accuracy(truth, predicted);
      } catch (const Error&) {
        std::lock_guard lock(failure_mutex);
        ++failures[k];
      }
    }
  });

  ExperimentReport report;
  report.metric = "accuracy";
  report.config = config;
  report.reference_misses = misses.load();
  for (const auto& d : datasets) report.redraws.push_back(d.redraws);
  for (std::size_t k = 0; k < methods; ++k) {
    auto summary = detail::summarize(std::string(to_string(config.approaches[k])), std::move(scores[k]), failures[k]);
    summary.available = detail::applicable(config.approaches[k], config);
    if (!summary.available) summary.dataset_means.clear();
    report.methods.push_back(std::move(summary));
  }
  const auto* baseline = report.find(to_string(Approach::UTADIS));
  for (const auto& m : report.methods) {
    if (baseline == nullptr || &m == baseline) continue;
    ComparisonTest cmp{m.label, baseline->label, std::nullopt, {}};
    if (!m.available) {
      cmp.note = "not applicable";
    } else {
      try {
        cmp.test = paired_t_test(m.dataset_means, baseline->dataset_means, config.alpha);
      } catch (const Error& e) {
        cmp.note = to_string(e.code());
      }
    }
    report.comparisons.push_back(std::move(cmp));
  }
  return report;
}

/**
 * @brief APA of the possible-assignment sets of the non-reference alternatives.
 *
 * The sets depend only on the examples, so one summary labelled "possible" is reported.
 */
inline ExperimentReport run_robustness_experiment(const SimulationConfig& config) {
  config.check();
  const auto datasets = detail::generate_all(config);
  const std::size_t reps = static_cast<std::size_t>(config.replications);
  std::vector<std::vector<double>> scores(datasets.size(), std::vector<double>(reps, std::nan("")));
  std::atomic<int> failures{0};

  detail::run_cells(datasets.size() * reps, config.jobs, config.solve, [&](std::size_t cell, SolverContext& ctx) {
    const std::size_t d = cell / reps;
    const std::size_t rep = cell % reps;
    Rng rng = make_stream(config.seed, d, rep + 1);
    const auto& data = datasets[d];
    const auto part = partition_reference(data.categories, config.r, config.balanced, rng);
    const auto inst = detail::reference_instance(data, config.q, part.reference);
    try {
      std::vector<PossibleAssignment> sets;
      for (int i : part.non_reference) sets.push_back(possible_assignments(inst, i, config.learn, ctx));
      scores[d][rep] = apa(sets, config.q);
    } catch (const Error&) {
      ++failures;
    }
  });

  ExperimentReport report;
  report.metric = "apa";
  report.config = config;
  for (const auto& d : datasets) report.redraws.push_back(d.redraws);
  report.methods.push_back(detail::summarize("possible", std::move(scores), failures.load()));
  return report;
}

}  // namespace nmsort

#endif  // NMSORT_SIMULATE_HPP
