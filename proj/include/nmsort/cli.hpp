/**
 * @file cli.hpp
 * @brief The nmsort command line: check, adjust, learn, sort, robustness, simulate, compare.
 *
 * dispatch() writes to caller-supplied streams so it can be driven from tests.
 * Exit codes: 0 success, 1 usage or input error, 2 inconsistent examples
 * (check only), 3 solver failure.
 */

#ifndef NMSORT_CLI_HPP
#define NMSORT_CLI_HPP

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nmsort/core.hpp"
#include "nmsort/io.hpp"
#include "nmsort/learn.hpp"
#include "nmsort/robustness.hpp"
#include "nmsort/simulate.hpp"

namespace nmsort::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kInconsistent = 2, kSolverFailure = 3 };

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::BackendFailure:
    case ErrorCode::DegenerateScaling:
    case ErrorCode::InfeasibleAfterAdjustment: return kSolverFailure;
    default: return kUsage;
  }
}

struct ProblemFlags {
  std::string bundle;
  std::string matrix;
  std::string examples;
  std::optional<int> categories;
  std::vector<int> subintervals;
  std::optional<double> epsilon;
  std::string dump_lp;
};

struct SimulationFlags {
  int n = 200;
  int m = 6;
  int q = 4;
  std::vector<int> subintervals{2};
  double r = 0.8;
  int datasets = 10;
  int replications = 20;
  std::uint64_t seed = 1;
  bool balanced = false;
  bool full_scale = false;
  unsigned jobs = 1;
  double alpha = 0.05;
  std::vector<std::string> approaches;
  bool emit_datasets = false;
};

namespace detail {

inline const std::map<std::string, Approach>& approach_names() {
  static const std::map<std::string, Approach> names{
      {"1", Approach::Approach1}, {"2", Approach::Approach2}, {"lfp", Approach::LFP}, {"utadis", Approach::UTADIS}};
  return names;
}

inline void add_problem_flags(CLI::App* cmd, ProblemFlags& f) {
  cmd->add_option("--bundle", f.bundle, "Problem bundle JSON (replaces the next four flags)");
  cmd->add_option("--matrix", f.matrix, "Decision matrix CSV");
  cmd->add_option("--examples", f.examples, "Assignment examples CSV");
  cmd->add_option("--categories,-q", f.categories, "Number of categories")->check(CLI::Range(2, 1000));
  cmd->add_option("--subintervals,-s", f.subintervals, "Subintervals: one value or one per criterion")
      ->delimiter(',')
      ->check(CLI::Range(1, 1000));
  cmd->add_option("--epsilon", f.epsilon, "Fixed epsilon for the consistency and adjustment models")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--dump-lp", f.dump_lp, "Write every solved program to this directory in LP format");
}

inline ProblemInstance load_problem(const ProblemFlags& f) {
  if (!f.bundle.empty()) {
    auto inst = load_bundle(f.bundle);
    if (!f.subintervals.empty() || f.categories) {
      throw Error(ErrorCode::InvalidArgument, "--bundle cannot be combined with --categories/--subintervals");
    }
    return inst;
  }
  if (f.matrix.empty() || !f.categories || f.subintervals.empty()) {
    throw Error(ErrorCode::InvalidArgument, "need --bundle, or --matrix with --categories and --subintervals");
  }
  const auto table = parse_matrix(read_text(f.matrix));
  const std::string examples = f.examples.empty() ? std::string() : read_text(f.examples);
  return make_instance(table, f.subintervals, *f.categories, examples);
}

inline SolveOptions solve_options(const ProblemFlags& f) {
  SolveOptions options;
  if (!f.dump_lp.empty()) options.dump_directory = f.dump_lp;
  return options;
}

inline LearnConfig learn_config(const ProblemFlags& f) {
  LearnConfig config;
  if (f.epsilon) config.eps_fixed = *f.epsilon;
  return config;
}

inline void print_examples(std::ostream& out, const ProblemInstance& inst, const AssignmentExamples& examples) {
  out << write_examples(examples, inst.alternative_ids);
}

inline SimulationConfig simulation_config(const SimulationFlags& f) {
  SimulationConfig c;
  c.n = f.n;
  c.m = f.m;
  c.q = f.q;
  c.subintervals = f.subintervals;
  c.r = f.r;
  c.datasets = f.datasets;
  c.replications = f.full_scale ? 100 : f.replications;
  c.seed = f.seed;
  c.balanced = f.balanced;
  c.jobs = f.jobs;
  c.alpha = f.alpha;
  if (!f.approaches.empty()) {
    c.approaches.clear();
    for (const auto& name : f.approaches) c.approaches.push_back(approach_names().at(name));
  }
  return c;
}

inline void add_simulation_flags(CLI::App* cmd, SimulationFlags& f) {
  cmd->add_option("--alternatives,-n", f.n, "Alternatives per dataset")->check(CLI::Range(2, 100000));
  cmd->add_option("--criteria,-m", f.m, "Criteria per dataset")->check(CLI::Range(1, 1000));
  cmd->add_option("--categories,-q", f.q, "Number of categories")->check(CLI::Range(2, 1000));
  cmd->add_option("--subintervals,-s", f.subintervals, "Subintervals: one value or one per criterion")
      ->delimiter(',')
      ->check(CLI::Range(1, 1000));
  cmd->add_option("--reference-ratio,-r", f.r, "Share of alternatives used as references")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--datasets", f.datasets, "Number of generated datasets")->check(CLI::PositiveNumber);
  cmd->add_option("--replications", f.replications, "Partitions per dataset")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "Seed of the random stream");
  cmd->add_flag("--balanced", f.balanced, "Balanced categories and stratified partitions");
  cmd->add_flag("--paper-scale", f.full_scale, "100 replications per dataset");
  cmd->add_option("--jobs,-j", f.jobs, "Worker threads")->check(CLI::Range(1u, 1024u));
}

inline void write_report(const ExperimentReport& report, const std::string& out_dir, std::ostream& out) {
  out << report_to_csv(report);
  for (const auto& t : report.comparisons) {
    out << "t-test " << t.first << " > " << t.second << ": ";
    if (t.test) {
      out << "t = " << format_number(t.test->t) << ", df = " << t.test->df << ", p = " << format_number(t.test->p)
          << (t.test->reject ? ", reject H0" : ", keep H0") << "\n";
    } else {
      out << t.note << "\n";
    }
  }
  if (!out_dir.empty()) {
    const std::filesystem::path dir(out_dir);
    write_text(dir / "report.json", report_to_json(report).dump(2) + "\n");
    write_text(dir / "summary.csv", report_to_csv(report));
    write_text(dir / "dataset_means.csv", dataset_means_to_csv(report));
  }
}

}  // namespace detail

/// Parses argv, runs one subcommand and returns its exit code.
inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Sorting-model learning for multi-criteria sorting with non-monotonic criteria", "nmsort"};
  app.require_subcommand(1);

  ProblemFlags pf;
  SimulationFlags sf;
  std::string approach = "2";
  std::string out_path;
  std::string model_path;
  double tau = 1e-6;

  auto* check = app.add_subcommand("check", "Minimum slack needed to reproduce the examples");
  detail::add_problem_flags(check, pf);

  auto* adjust = app.add_subcommand("adjust", "Fewest category moves that make the examples consistent");
  detail::add_problem_flags(adjust, pf);
  adjust->add_option("--out,-o", out_path, "Write the adjusted examples CSV here");

  auto* learn_cmd = app.add_subcommand("learn", "Learn a sorting model and sort every alternative");
  detail::add_problem_flags(learn_cmd, pf);
  learn_cmd->add_option("--approach,-a", approach, "1, 2, lfp or utadis")
      ->check(CLI::IsMember({"1", "2", "lfp", "utadis"}));
  learn_cmd->add_option("--out,-o", out_path, "Write the model document here (default: standard output)");

  auto* sort_cmd = app.add_subcommand("sort", "Apply a model document to a decision matrix");
  sort_cmd->add_option("--model", model_path, "Model document")->required();
  sort_cmd->add_option("--matrix", pf.matrix, "Decision matrix CSV")->required();
  sort_cmd->add_option("--categories,-q", pf.categories, "Expected number of categories");
  sort_cmd->add_option("--out,-o", out_path, "Write the assignments CSV here");

  auto* robust = app.add_subcommand("robustness", "Possible assignments of non-reference alternatives and APA");
  detail::add_problem_flags(robust, pf);
  robust->add_option("--tau", tau, "Smallest epsilon that counts as compatible")->check(CLI::NonNegativeNumber);
  robust->add_option("--out,-o", out_path, "Write the possible-assignment CSV here");
  robust->add_option("--jobs,-j", sf.jobs, "Worker threads")->check(CLI::Range(1u, 1024u));

  auto* simulate = app.add_subcommand("simulate", "Robustness experiment on generated datasets");
  detail::add_simulation_flags(simulate, sf);
  simulate->add_option("--tau", tau, "Smallest epsilon that counts as compatible")->check(CLI::NonNegativeNumber);
  simulate->add_flag("--emit-datasets", sf.emit_datasets, "Also write every generated dataset under --out");
  simulate->add_option("--out,-o", out_path, "Output directory for report tables");

  auto* compare = app.add_subcommand("compare", "Accuracy comparison of the learners on generated datasets");
  detail::add_simulation_flags(compare, sf);
  compare->add_option("--approaches", sf.approaches, "Subset of 1, 2, lfp, utadis")
      ->delimiter(',')
      ->check(CLI::IsMember({"1", "2", "lfp", "utadis"}));
  compare->add_option("--alpha", sf.alpha, "Significance level of the t-tests")->check(CLI::Range(0.0, 1.0));
  compare->add_option("--out,-o", out_path, "Output directory for report tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (check->parsed()) {
      const auto inst = detail::load_problem(pf);
      SolverContext ctx(detail::solve_options(pf));
      const auto result = check_consistency(inst, detail::learn_config(pf), ctx);
      out << "consistency optimum: " << format_number(result.optimum) << "\n";
      out << "alternative,category,slack_below,slack_above\n";
      for (std::size_t k = 0; k < inst.examples.size(); ++k) {
        const auto& ex = inst.examples[k];
        out << inst.alternative_label(ex.alternative) << "," << ex.category << ","
            << format_number(result.slacks[k].first) << "," << format_number(result.slacks[k].second) << "\n";
      }
      return result.consistent() ? kOk : kInconsistent;
    }

    if (adjust->parsed()) {
      const auto inst = detail::load_problem(pf);
      SolverContext ctx(detail::solve_options(pf));
      const auto result = minimum_adjustment(inst, detail::learn_config(pf), ctx);
      out << "category moves: " << result.moves << "\n";
      detail::print_examples(out, inst, result.adjusted);
      if (!out_path.empty()) write_text(out_path, write_examples(result.adjusted, inst.alternative_ids));
      return kOk;
    }

    if (learn_cmd->parsed()) {
      const auto inst = detail::load_problem(pf);
      SolverContext ctx(detail::solve_options(pf));
      auto config = detail::learn_config(pf);
      config.approach = detail::approach_names().at(approach);
      const auto result = run_pipeline(inst, config, ctx);
      const std::string doc = emit_model(result.outcome.model);
      std::ostream& info = out_path.empty() ? err : out;
      for (const auto& line : result.outcome.log) info << line << "\n";
      info << "gamma*: " << format_number(result.outcome.gamma_star) << "\n";
      info << "eps*: " << format_number(result.outcome.eps_star) << "\n";
      info << "alternative,value,category,reference\n";
      std::vector<bool> reference(inst.alternatives(), true);
      for (int i : result.non_reference) reference[static_cast<std::size_t>(i)] = false;
      for (std::size_t i = 0; i < inst.alternatives(); ++i) {
        info << inst.alternative_label(static_cast<int>(i)) << "," << format_number(result.global_values[i]) << ","
             << result.assignments[i] << "," << (reference[i] ? 1 : 0) << "\n";
      }
      if (out_path.empty()) {
        out << doc;
      } else {
        write_text(out_path, doc);
      }
      return kOk;
    }

    if (sort_cmd->parsed()) {
      const auto model = parse_model(read_text(model_path));
      const auto table = parse_matrix(read_text(pf.matrix));
      if (pf.categories && *pf.categories != model.categories()) {
        err << "model has " << model.categories() << " categories, expected " << *pf.categories << "\n";
        return kUsage;
      }
      if (table.matrix.cols() != model.marginals.size()) {
        err << "matrix has " << table.matrix.cols() << " criteria, model has " << model.marginals.size() << "\n";
        return kUsage;
      }
      std::string csv = "alternative,value,category,clamped\n";
      for (std::size_t i = 0; i < table.matrix.rows(); ++i) {
        const auto e = evaluate(model.marginals, table.matrix.row(i));
        csv += table.ids[i] + "," + format_number(e.value) + "," + std::to_string(assign_category(model, e.value)) +
               "," + (e.clamped ? "1" : "0") + "\n";
      }
      out << csv;
      if (!out_path.empty()) write_text(out_path, csv);
      return kOk;
    }

    if (robust->parsed()) {
      const auto inst = detail::load_problem(pf);
      auto config = detail::learn_config(pf);
      config.tau = tau;
      SolverContext ctx(detail::solve_options(pf));
      if (!check_consistency(inst, config, ctx).consistent()) {
        err << "examples are inconsistent; run adjust first\n";
        return kInconsistent;
      }
      std::vector<bool> reference(inst.alternatives(), false);
      for (const auto& ex : inst.examples) reference[static_cast<std::size_t>(ex.alternative)] = true;
      std::vector<int> targets;
      for (std::size_t i = 0; i < inst.alternatives(); ++i) {
        if (!reference[i]) targets.push_back(static_cast<int>(i));
      }
      if (targets.empty()) {
        err << "every alternative is a reference; nothing to analyse\n";
        return kUsage;
      }
      const auto sets = possible_assignment_sets(inst, targets, config, sf.jobs, detail::solve_options(pf));
      const std::string csv = possible_assignments_to_csv(sets, inst);
      out << csv;
      out << "APA: " << format_number(apa(sets, inst.categories)) << "\n";
      if (!out_path.empty()) write_text(out_path, csv);
      return kOk;
    }

    if (simulate->parsed()) {
      auto config = detail::simulation_config(sf);
      config.learn.tau = tau;
      const auto report = run_robustness_experiment(config);
      detail::write_report(report, out_path, out);
      if (sf.emit_datasets && !out_path.empty()) {
        SolverContext ctx;
        for (int d = 0; d < config.datasets; ++d) {
          Rng rng = make_stream(config.seed, static_cast<std::uint64_t>(d), 0);
          const auto data = generate(config, rng, ctx);
          MatrixTable table{data.matrix, {}, {}};
          AssignmentExamples truth;
          for (std::size_t i = 0; i < data.matrix.rows(); ++i) {
            table.ids.push_back("a" + std::to_string(i + 1));
            truth.push_back({static_cast<int>(i), data.categories[i]});
          }
          for (std::size_t j = 0; j < data.matrix.cols(); ++j) table.criteria.push_back("g" + std::to_string(j + 1));
          const auto dir = std::filesystem::path(out_path) / ("dataset_" + std::to_string(d + 1));
          write_text(dir / "matrix.csv", write_matrix(table));
          write_text(dir / "categories.csv", write_examples(truth, table.ids));
          write_text(dir / "truth.json", emit_model(data.truth));
        }
      }
      return kOk;
    }

    if (compare->parsed()) {
      const auto report = run_comparison(detail::simulation_config(sf));
      detail::write_report(report, out_path, out);
      return kOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace nmsort::cli

#endif  // NMSORT_CLI_HPP
