/**
 * @file io.hpp
 * @brief CSV decision matrices and examples, JSON model documents, bundles and reports.
 *
 * Field names and layouts are frozen in docs/FORMATS.md. Numbers are written
 * in the shortest form that parses back to the same double and are read
 * with std::from_chars, so nothing depends on the locale.
 */

#ifndef NMSORT_IO_HPP
#define NMSORT_IO_HPP

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "nmsort/core.hpp"
#include "nmsort/learn.hpp"
#include "nmsort/robustness.hpp"
#include "nmsort/simulate.hpp"
#include "nmsort/valuefn.hpp"

namespace nmsort {

using Json = nlohmann::ordered_json;

/// Decision matrix with alternative ids and criterion names.
struct MatrixTable {
  Matrix matrix;
  std::vector<std::string> ids;
  std::vector<std::string> criteria;

  bool operator==(const MatrixTable&) const = default;
};

namespace detail {

/// Splits CSV text into records; double quotes may wrap cells and "" escapes a quote.
inline std::vector<std::vector<std::string>> split_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string cell;
  bool quoted = false;
  bool any = false;
  for (std::size_t k = 0; k < text.size(); ++k) {
    const char c = text[k];
    if (quoted) {
      if (c == '"' && k + 1 < text.size() && text[k + 1] == '"') {
        cell += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
      continue;
    }
    switch (c) {
      case '"': quoted = true; any = true; break;
      case ',':
        record.push_back(std::move(cell));
        cell.clear();
        any = true;
        break;
      case '\r': break;
      case '\n':
        if (any || !cell.empty()) {
          record.push_back(std::move(cell));
          records.push_back(std::move(record));
        }
        record.clear();
        cell.clear();
        any = false;
        break;
      default: cell += c; any = true;
    }
  }
  if (quoted) throw Error(ErrorCode::MalformedDocument, "unterminated quoted cell");
  if (any || !cell.empty()) {
    record.push_back(std::move(cell));
    records.push_back(std::move(record));
  }
  return records;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline bool parse_int(std::string_view s, int& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::string quote_cell(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

/// Shortest decimal text that reads back as exactly @p x.
inline std::string format_number(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw Error(ErrorCode::InvalidArgument, "cannot format number");
  return {buf, ptr};
}

/**
 * @brief Parses "id,crit1,...,critm" followed by one row per alternative.
 */
inline MatrixTable parse_matrix(std::string_view text) {
  const auto records = detail::split_csv(text);
  if (records.empty()) throw Error(ErrorCode::EmptyMatrix, "matrix file has no header");
  const auto& header = records.front();
  if (header.size() < 2) throw Error(ErrorCode::MalformedDocument, "header needs an id column and a criterion");
  MatrixTable out;
  for (std::size_t j = 1; j < header.size(); ++j) out.criteria.emplace_back(detail::trim(header[j]));
  if (records.size() == 1) throw Error(ErrorCode::EmptyMatrix, "matrix file has no rows");
  const std::size_t m = out.criteria.size();
  out.matrix = Matrix(records.size() - 1, m);
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::string where = "row " + std::to_string(r + 1);
    if (rec.size() != m + 1) {
      throw Error(ErrorCode::RaggedRow, where + " has " + std::to_string(rec.size()) + " cells, expected " +
                                            std::to_string(m + 1));
    }
    std::string id(detail::trim(rec[0]));
    if (!seen.insert(id).second) throw Error(ErrorCode::DuplicateAlternativeId, where + ": id '" + id + "' repeats");
    out.ids.push_back(std::move(id));
    for (std::size_t j = 0; j < m; ++j) {
      double x = 0.0;
      if (!detail::parse_double(rec[j + 1], x)) {
        throw Error(ErrorCode::NonNumericCell,
                    where + ", column " + std::to_string(j + 2) + ": '" + rec[j + 1] + "' is not a number");
      }
      out.matrix(r - 1, j) = x;
    }
  }
  return out;
}

inline std::string write_matrix(const MatrixTable& table) {
  std::string out = "id";
  for (const auto& c : table.criteria) out += "," + detail::quote_cell(c);
  out += '\n';
  for (std::size_t i = 0; i < table.matrix.rows(); ++i) {
    out += detail::quote_cell(i < table.ids.size() ? table.ids[i] : "a" + std::to_string(i + 1));
    for (std::size_t j = 0; j < table.matrix.cols(); ++j) out += "," + format_number(table.matrix(i, j));
    out += '\n';
  }
  return out;
}

/**
 * @brief Parses "alternative-id,category" lines against the known ids.
 *
 * An optional first line "alternative,category" is skipped.
 */
inline AssignmentExamples parse_examples(std::string_view text, const std::vector<std::string>& ids, int categories) {
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], static_cast<int>(i));
  AssignmentExamples out;
  std::unordered_set<int> seen;
  const auto records = detail::split_csv(text);
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    const std::string where = "line " + std::to_string(r + 1);
    if (r == 0 && rec.size() == 2 && detail::trim(rec[0]) == "alternative" && detail::trim(rec[1]) == "category") {
      continue;
    }
    if (rec.size() != 2) throw Error(ErrorCode::RaggedRow, where + " needs exactly two cells");
    const std::string id(detail::trim(rec[0]));
    const auto it = index.find(id);
    if (it == index.end()) throw Error(ErrorCode::UnknownAlternative, where + ": unknown alternative '" + id + "'");
    int h = 0;
    if (!detail::parse_int(rec[1], h)) {
      throw Error(ErrorCode::NonNumericCell, where + ": category '" + rec[1] + "' is not an integer");
    }
    if (h < 1 || h > categories) {
      throw Error(ErrorCode::CategoryOutOfRange, where + ": category " + std::to_string(h) + " outside [1, " +
                                                     std::to_string(categories) + "]");
    }
    if (!seen.insert(it->second).second) {
      throw Error(ErrorCode::DuplicateExample, where + ": alternative '" + id + "' already has an example");
    }
    out.push_back({it->second, h});
  }
  return out;
}

inline std::string write_examples(const AssignmentExamples& examples, const std::vector<std::string>& ids) {
  std::string out = "alternative,category\n";
  for (const auto& ex : examples) {
    const auto i = static_cast<std::size_t>(ex.alternative);
    out += detail::quote_cell(i < ids.size() ? ids[i] : "a" + std::to_string(i + 1)) + "," +
           std::to_string(ex.category) + "\n";
  }
  return out;
}

namespace detail {

inline Json number_array(const std::vector<double>& xs) {
  Json out = Json::array();
  for (double x : xs) out.push_back(x);
  return out;
}

inline const Json& field(const Json& doc, const char* name) {
  if (!doc.is_object() || !doc.contains(name)) {
    throw Error(ErrorCode::MalformedDocument, std::string("missing field '") + name + "'");
  }
  return doc.at(name);
}

inline double number_field(const Json& doc, const char* name) {
  const Json& f = field(doc, name);
  if (!f.is_number()) throw Error(ErrorCode::MalformedDocument, std::string("field '") + name + "' is not a number");
  return f.get<double>();
}

inline std::vector<double> number_list(const Json& doc, const char* name) {
  const Json& f = field(doc, name);
  if (!f.is_array()) throw Error(ErrorCode::MalformedDocument, std::string("field '") + name + "' is not an array");
  std::vector<double> out;
  for (const auto& x : f) {
    if (!x.is_number()) throw Error(ErrorCode::MalformedDocument, std::string("non-number in '") + name + "'");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace detail

inline constexpr std::string_view kModelFormat = "nmsort-model";

/**
 * @brief Model document: raw marginals and thresholds plus the normalized form.
 *
 * The normalized section is derived from the raw one and ignored on input.
 */
inline Json model_to_json(const SortingModel& model) {
  if (model.marginals.empty()) throw Error(ErrorCode::InvalidArgument, "model has no marginal functions");
  const TransformedModel t = transform_to_uta(model);
  Json doc;
  doc["format"] = kModelFormat;
  doc["version"] = 1;
  doc["categories"] = model.categories();
  doc["epsilon"] = model.epsilon;
  doc["b0"] = model.b0;
  doc["thresholds"] = detail::number_array(model.thresholds);
  doc["bq"] = model.bq;
  Json criteria = Json::array();
  for (const auto& fn : model.marginals) {
    Json c;
    c["name"] = fn.name;
    c["min"] = fn.scale.min;
    c["max"] = fn.scale.max;
    c["subintervals"] = fn.scale.subintervals;
    c["breakpoints"] = detail::number_array(fn.scale.breakpoints);
    c["values"] = detail::number_array(fn.values);
    criteria.push_back(std::move(c));
  }
  doc["criteria"] = std::move(criteria);
  Json normalized;
  normalized["epsilon"] = t.epsilon;
  normalized["thresholds"] = detail::number_array(t.thresholds);
  normalized["weights"] = detail::number_array(t.weights);
  Json tc = Json::array();
  for (std::size_t j = 0; j < t.marginals.size(); ++j) {
    Json c;
    c["name"] = t.marginals[j].name;
    c["worst_breakpoint"] = t.worst_breakpoint[j] + 1;
    c["best_breakpoint"] = t.best_breakpoint[j] + 1;
    c["values"] = detail::number_array(t.marginals[j].values);
    tc.push_back(std::move(c));
  }
  normalized["criteria"] = std::move(tc);
  doc["normalized"] = std::move(normalized);
  return doc;
}

inline std::string emit_model(const SortingModel& model) { return model_to_json(model).dump(2) + "\n"; }

inline SortingModel model_from_json(const Json& doc) {
  if (!doc.is_object() || doc.value("format", std::string()) != kModelFormat) {
    throw Error(ErrorCode::MalformedDocument, "not a model document");
  }
  SortingModel model;
  model.epsilon = detail::number_field(doc, "epsilon");
  model.b0 = detail::number_field(doc, "b0");
  model.bq = detail::number_field(doc, "bq");
  model.thresholds = detail::number_list(doc, "thresholds");
  const Json& criteria = detail::field(doc, "criteria");
  if (!criteria.is_array() || criteria.empty()) throw Error(ErrorCode::MalformedDocument, "no criteria");
  for (const auto& c : criteria) {
    MarginalFunction fn;
    const Json& name = detail::field(c, "name");
    if (!name.is_string()) throw Error(ErrorCode::MalformedDocument, "criterion name must be a string");
    fn.name = name.get<std::string>();
    const Json& s = detail::field(c, "subintervals");
    if (!s.is_number_integer()) throw Error(ErrorCode::MalformedDocument, "subintervals must be an integer");
    fn.scale.min = detail::number_field(c, "min");
    fn.scale.max = detail::number_field(c, "max");
    fn.scale.subintervals = s.get<int>();
    fn.scale.breakpoints = detail::number_list(c, "breakpoints");
    fn.values = detail::number_list(c, "values");
    if (fn.scale.subintervals < 1 || fn.scale.breakpoints.size() != static_cast<std::size_t>(fn.scale.subintervals) + 1 ||
        fn.values.size() != fn.scale.breakpoints.size()) {
      throw Error(ErrorCode::MalformedDocument, "criterion '" + fn.name + "' has inconsistent lengths");
    }
    model.marginals.push_back(std::move(fn));
  }
  if (doc.contains("categories") && doc.at("categories") != model.categories()) {
    throw Error(ErrorCode::MalformedDocument, "category count disagrees with the threshold list");
  }
  return model;
}

inline SortingModel parse_model(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedDocument, e.what());
  }
  return model_from_json(doc);
}

/**
 * @brief Problem bundle: a JSON file naming the matrix and example files plus options.
 *
 * Relative paths resolve against the bundle's directory.
 */
struct ProblemBundle {
  std::filesystem::path matrix;
  std::filesystem::path examples;
  int categories = 2;
  std::vector<int> subintervals{1};
  std::vector<std::string> criteria;
  double epsilon = 1e-3;
};

inline std::string read_text(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + file.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_text(const std::filesystem::path& file, std::string_view text) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + file.string());
  out << text;
}

inline ProblemBundle parse_bundle(std::string_view text, const std::filesystem::path& base = {}) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedDocument, e.what());
  }
  ProblemBundle out;
  const Json& matrix = detail::field(doc, "matrix");
  if (!matrix.is_string()) throw Error(ErrorCode::MalformedDocument, "'matrix' must be a path");
  out.matrix = base / matrix.get<std::string>();
  if (doc.contains("examples")) out.examples = base / doc.at("examples").get<std::string>();
  const Json& q = detail::field(doc, "categories");
  if (!q.is_number_integer()) throw Error(ErrorCode::MalformedDocument, "'categories' must be an integer");
  out.categories = q.get<int>();
  if (doc.contains("subintervals")) {
    const Json& s = doc.at("subintervals");
    out.subintervals.clear();
    if (s.is_number_integer()) {
      out.subintervals.push_back(s.get<int>());
    } else if (s.is_array()) {
      for (const auto& x : s) out.subintervals.push_back(x.get<int>());
    } else {
      throw Error(ErrorCode::MalformedDocument, "'subintervals' must be an integer or a list");
    }
  }
  if (doc.contains("criteria")) out.criteria = doc.at("criteria").get<std::vector<std::string>>();
  if (doc.contains("epsilon")) out.epsilon = detail::number_field(doc, "epsilon");
  return out;
}

/// Instance built from a matrix table and optional examples text.
inline ProblemInstance make_instance(const MatrixTable& table, std::span<const int> subintervals, int categories,
                                     std::string_view examples_text = {}) {
  auto inst = ProblemInstance::from_matrix(table.matrix, subintervals, categories);
  inst.alternative_ids = table.ids;
  inst.criterion_names = table.criteria;
  if (!examples_text.empty()) inst.examples = parse_examples(examples_text, table.ids, categories);
  require_valid(inst);
  return inst;
}

inline ProblemInstance load_bundle(const std::filesystem::path& file) {
  const auto bundle = parse_bundle(read_text(file), file.parent_path());
  const auto table = parse_matrix(read_text(bundle.matrix));
  if (!bundle.criteria.empty() && bundle.criteria != table.criteria) {
    throw Error(ErrorCode::DimensionMismatch, "bundle criteria do not match the matrix header");
  }
  const std::string examples = bundle.examples.empty() ? std::string() : read_text(bundle.examples);
  return make_instance(table, bundle.subintervals, bundle.categories, examples);
}

/// Report as JSON: configuration, per-method summaries and t-tests.
inline Json report_to_json(const ExperimentReport& report) {
  const auto& c = report.config;
  Json doc;
  doc["metric"] = report.metric;
  Json config;
  config["n"] = c.n;
  config["m"] = c.m;
  config["q"] = c.q;
  config["subintervals"] = c.subintervals;
  config["r"] = c.r;
  config["datasets"] = c.datasets;
  config["replications"] = c.replications;
  config["seed"] = c.seed;
  config["balanced"] = c.balanced;
  config["alpha"] = c.alpha;
  doc["config"] = std::move(config);
  Json methods = Json::array();
  for (const auto& m : report.methods) {
    Json j;
    j["method"] = m.label;
    j["available"] = m.available;
    if (m.available && !std::isnan(m.mean)) {
      j["mean"] = m.mean;
      j["sd"] = m.sd;
    } else {
      j["mean"] = nullptr;
      j["sd"] = nullptr;
    }
    Json means = Json::array();
    for (double x : m.dataset_means) {
      if (std::isnan(x)) {
        means.push_back(nullptr);
      } else {
        means.push_back(x);
      }
    }
    j["dataset_means"] = std::move(means);
    j["failures"] = m.failures;
    methods.push_back(std::move(j));
  }
  doc["methods"] = std::move(methods);
  Json tests = Json::array();
  for (const auto& t : report.comparisons) {
    Json j;
    j["first"] = t.first;
    j["second"] = t.second;
    if (t.test) {
      j["t"] = t.test->t;
      j["df"] = t.test->df;
      j["p"] = t.test->p;
      j["reject"] = t.test->reject;
    } else {
      j["note"] = t.note;
    }
    tests.push_back(std::move(j));
  }
  doc["t_tests"] = std::move(tests);
  doc["reference_misses"] = report.reference_misses;
  doc["redraws"] = report.redraws;
  return doc;
}

/// Summary table: one row per method.
inline std::string report_to_csv(const ExperimentReport& report) {
  std::string out = "method,available,mean,sd,failures\n";
  for (const auto& m : report.methods) {
    out += m.label + "," + (m.available ? "1" : "0") + ",";
    if (m.available && !std::isnan(m.mean)) out += format_number(m.mean) + "," + format_number(m.sd);
    else out += ",";
    out += "," + std::to_string(m.failures) + "\n";
  }
  return out;
}

/// Per-dataset means: one row per dataset, one column per method.
inline std::string dataset_means_to_csv(const ExperimentReport& report) {
  std::string out = "dataset";
  for (const auto& m : report.methods) out += "," + m.label;
  out += '\n';
  for (int d = 0; d < report.config.datasets; ++d) {
    out += std::to_string(d + 1);
    for (const auto& m : report.methods) {
      out += ",";
      const auto k = static_cast<std::size_t>(d);
      if (k < m.dataset_means.size() && !std::isnan(m.dataset_means[k])) out += format_number(m.dataset_means[k]);
    }
    out += '\n';
  }
  return out;
}

inline std::string possible_assignments_to_csv(std::span<const PossibleAssignment> sets, const ProblemInstance& inst) {
  std::string out = "alternative,categories";
  for (int h = 1; h <= inst.categories; ++h) out += ",eps_" + std::to_string(h);
  out += '\n';
  for (const auto& s : sets) {
    out += detail::quote_cell(inst.alternative_label(s.alternative)) + ",";
    std::string cats;
    for (int h : s.categories) cats += (cats.empty() ? "" : " ") + std::to_string(h);
    out += detail::quote_cell(cats);
    for (double e : s.epsilon) out += "," + (std::isnan(e) ? std::string() : format_number(e));
    out += '\n';
  }
  return out;
}

}  // namespace nmsort

#endif  // NMSORT_IO_HPP
