#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "recur/bigint.hpp"
#include "recur/evaluation.hpp"

namespace recur {

struct OeisRecord {
  std::string id;
  std::vector<BigInt> terms;
  std::vector<std::string> keywords;
};

/// "A" followed by exactly six digits.
bool valid_anumber(std::string_view id);

struct Diagnostic {
  std::size_t line = 0;
  std::string message;
};

struct StrippedFile {
  std::vector<OeisRecord> records;
  std::vector<Diagnostic> diagnostics;
};

/// Lines "A000045 ,0,1,1,2,3,5,8,"; '#' starts a comment line. Malformed lines
/// are skipped and reported with their line number.
StrippedFile parse_stripped(std::istream& in);
/// Throws std::runtime_error when the file cannot be read.
StrippedFile parse_stripped(const std::filesystem::path& path);

struct KeywordFile {
  std::map<std::string, std::vector<std::string>> keywords;
  std::vector<Diagnostic> diagnostics;
};

/// Lines "A000045 easy,nonn,core".
KeywordFile parse_keywords(std::istream& in);
KeywordFile parse_keywords(const std::filesystem::path& path);

struct OeisBenchConfig {
  int n_input = 15;
  int n_pred = 10;
  double tau = 1e-10;
  std::size_t subset_size = 10000;
  std::string keyword = "easy";
  int beam_size = 10;
  int workers = 1;

  void validate() const;
};

struct BenchSet {
  std::string keyword;
  std::size_t min_terms = 0;
  std::vector<OeisRecord> records;
  std::vector<Diagnostic> diagnostics;
};

/// Records carrying `keyword`, in ascending A-number order, keeping the first
/// `size` with at least `min_terms` terms. Records without keyword data are
/// excluded with a diagnostic.
BenchSet select_easy(const std::vector<OeisRecord>& records, const std::map<std::string, std::vector<std::string>>& keywords,
                     std::size_t size, std::size_t min_terms, const std::string& keyword = "easy");

/// Deterministic description of a benchmark set (ids and term counts).
nlohmann::json bench_manifest(const BenchSet& set);

/// First n_input terms as input, the next n_pred as ground truth.
EvalSet bench_eval_set(const BenchSet& set, int n_input, int n_pred);

EvalReport run_bench(const Predictor& predictor, const BenchSet& set, const OeisBenchConfig& cfg);

/// One row per model; column groups n_input, columns n_pred. Each (model,
/// n_input) pair is evaluated once at the largest n_pred and read off the
/// n_pred curve, on records that have n_input + max(n_preds) terms.
GridTable bench_grid(const std::vector<std::pair<std::string, const Predictor*>>& models,
                     const std::vector<OeisRecord>& records,
                     const std::map<std::string, std::vector<std::string>>& keywords, const OeisBenchConfig& cfg,
                     const std::vector<int>& n_inputs = {15, 25}, const std::vector<int>& n_preds = {1, 10},
                     const std::function<void(const std::string&, int, const BenchSet&, const EvalReport&)>&
                         on_report = {});

/// Catalog sequence with a known integer recurrence and its first printed terms.
struct CatalogExample {
  std::string id;
  std::string description;
  std::vector<std::int64_t> printed;
  /// Prefix form of the relation.
  std::string relation;
};

const std::vector<CatalogExample>& catalog_examples();

/// Unrolls `rel` from the first d terms of `terms` (index of the first term is
/// `first_index`) and returns the index in `terms` of the first mismatch, or
/// nullopt when every term is reproduced.
std::optional<std::size_t> replay_mismatch(const RecurrenceRelation& rel, const std::vector<BigInt>& terms,
                                           std::int64_t first_index = 0);

}  // namespace recur
