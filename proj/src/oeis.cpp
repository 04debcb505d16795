#include "recur/oeis.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <stdexcept>

namespace recur {

bool valid_anumber(std::string_view id) {
  return id.size() == 7 && id[0] == 'A' &&
         std::all_of(id.begin() + 1, id.end(), [](char c) { return c >= '0' && c <= '9'; });
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) {
      return out;
    }
    start = pos + 1;
  }
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot read " + path.string());
  }
  return in;
}

}  // namespace

StrippedFile parse_stripped(std::istream& in) {
  StrippedFile out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') {
      continue;
    }
    const auto space = line.find_first_of(" \t");
    const std::string_view id = line.substr(0, space);
    if (!valid_anumber(id) || space == std::string_view::npos) {
      out.diagnostics.push_back({line_no, "malformed A-number or missing terms"});
      continue;
    }
    OeisRecord record{std::string(id), {}, {}};
    bool ok = true;
    for (auto field : split(trim(line.substr(space)), ',')) {
      field = trim(field);
      if (field.empty()) {
        continue;
      }
      auto value = parse_bigint(field);
      if (!value) {
        out.diagnostics.push_back({line_no, "non-integer term '" + std::string(field) + "'"});
        ok = false;
        break;
      }
      record.terms.push_back(std::move(*value));
    }
    if (!ok) {
      continue;
    }
    if (record.terms.empty()) {
      out.diagnostics.push_back({line_no, "no terms"});
      continue;
    }
    out.records.push_back(std::move(record));
  }
  return out;
}

StrippedFile parse_stripped(const std::filesystem::path& path) {
  auto in = open(path);
  return parse_stripped(in);
}

KeywordFile parse_keywords(std::istream& in) {
  KeywordFile out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') {
      continue;
    }
    const auto space = line.find_first_of(" \t");
    const std::string_view id = line.substr(0, space);
    if (!valid_anumber(id)) {
      out.diagnostics.push_back({line_no, "malformed A-number"});
      continue;
    }
    std::vector<std::string> words;
    if (space != std::string_view::npos) {
      for (auto w : split(trim(line.substr(space)), ',')) {
        w = trim(w);
        if (!w.empty()) {
          words.emplace_back(w);
        }
      }
    }
    out.keywords[std::string(id)] = std::move(words);
  }
  return out;
}

KeywordFile parse_keywords(const std::filesystem::path& path) {
  auto in = open(path);
  return parse_keywords(in);
}

void OeisBenchConfig::validate() const {
  if (n_input < 1 || n_pred < 1) {
    throw std::invalid_argument("n_input and n_pred must be >= 1");
  }
  if (!(tau >= 0)) {
    throw std::invalid_argument("tau must be >= 0");
  }
  if (beam_size < 1 || workers < 1) {
    throw std::invalid_argument("beam_size and workers must be >= 1");
  }
}

BenchSet select_easy(const std::vector<OeisRecord>& records,
                     const std::map<std::string, std::vector<std::string>>& keywords, std::size_t size,
                     std::size_t min_terms, const std::string& keyword) {
  BenchSet set;
  set.keyword = keyword;
  set.min_terms = min_terms;
  std::vector<const OeisRecord*> sorted;
  for (const auto& r : records) {
    sorted.push_back(&r);
  }
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
  for (const auto* r : sorted) {
    if (set.records.size() >= size) {
      break;
    }
    const auto it = keywords.find(r->id);
    if (it == keywords.end()) {
      set.diagnostics.push_back({0, r->id + ": no keyword data"});
      continue;
    }
    if (std::find(it->second.begin(), it->second.end(), keyword) == it->second.end()) {
      continue;
    }
    if (r->terms.size() < min_terms) {
      continue;
    }
    OeisRecord copy = *r;
    copy.keywords = it->second;
    set.records.push_back(std::move(copy));
  }
  return set;
}

nlohmann::json bench_manifest(const BenchSet& set) {
  auto records = nlohmann::json::array();
  for (const auto& r : set.records) {
    records.push_back({{"id", r.id}, {"terms", r.terms.size()}});
  }
  return {{"keyword", set.keyword}, {"min_terms", set.min_terms}, {"count", set.records.size()}, {"records", records}};
}

EvalSet bench_eval_set(const BenchSet& set, int n_input, int n_pred) {
  EvalSet out;
  out.mode = Mode::integer;
  const auto need = static_cast<std::size_t>(n_input + n_pred);
  for (const auto& r : set.records) {
    if (r.terms.size() < need) {
      continue;
    }
    EvalItem item;
    const auto mid = r.terms.begin() + n_input;
    item.input = single(std::vector<BigInt>(r.terms.begin(), mid));
    item.clean = item.input;
    item.future = single(std::vector<BigInt>(mid, mid + n_pred));
    item.label = r.id;
    out.items.push_back(std::move(item));
  }
  return out;
}

EvalReport run_bench(const Predictor& predictor, const BenchSet& set, const OeisBenchConfig& cfg) {
  cfg.validate();
  EvalConfig ec;
  ec.tau = cfg.tau;
  ec.n_pred = cfg.n_pred;
  ec.beam_size = cfg.beam_size;
  ec.workers = cfg.workers;
  EvalReport report = evaluate(predictor, bench_eval_set(set, cfg.n_input, cfg.n_pred), ec);
  report.protocol = "oeis";
  report.protocol_info = {{"n_input", cfg.n_input}, {"n_pred", cfg.n_pred}, {"keyword", set.keyword}};
  return report;
}

GridTable bench_grid(const std::vector<std::pair<std::string, const Predictor*>>& models,
                     const std::vector<OeisRecord>& records,
                     const std::map<std::string, std::vector<std::string>>& keywords, const OeisBenchConfig& cfg,
                     const std::vector<int>& n_inputs, const std::vector<int>& n_preds,
                     const std::function<void(const std::string&, int, const BenchSet&, const EvalReport&)>&
                         on_report) {
  if (n_preds.empty() || n_inputs.empty()) {
    throw std::invalid_argument("bench_grid needs n_input and n_pred values");
  }
  const int horizon = *std::max_element(n_preds.begin(), n_preds.end());
  GridTable t;
  t.title = "Accuracy (%) on the catalog subset";
  t.row_header = "model";
  for (int ni : n_inputs) {
    t.column_groups.push_back("n_input=" + std::to_string(ni));
    for (int np : n_preds) {
      t.columns.push_back("n_pred=" + std::to_string(np));
    }
  }
  for (const auto& [name, model] : models) {
    t.row_labels.push_back(name);
    std::vector<double> row;
    for (int ni : n_inputs) {
      OeisBenchConfig c = cfg;
      c.n_input = ni;
      c.n_pred = horizon;
      const BenchSet set =
          select_easy(records, keywords, cfg.subset_size, static_cast<std::size_t>(ni + horizon), cfg.keyword);
      const EvalReport report = run_bench(*model, set, c);
      if (on_report) {
        on_report(name, ni, set, report);
      }
      for (int np : n_preds) {
        double acc = 0;
        for (const auto& [k, a] : report.n_pred_curve) {
          if (k == np) {
            acc = a;
          }
        }
        row.push_back(100.0 * acc);
      }
    }
    t.cells.push_back(std::move(row));
  }
  return t;
}

const std::vector<CatalogExample>& catalog_examples() {
  static const std::vector<CatalogExample> examples{
      {"A000792", "a(n) = max{(n - i) a(i), i < n}", {1, 1, 2, 3, 4, 6, 9, 12, 18, 27}, "sub add u1 u3 mod u1 u3"},
      {"A000855", "final two digits of 2^n", {1, 2, 4, 8, 16, 32, 64, 28, 56, 12}, "mod mul 2 u1 mul 10 10"},
      {"A006257", "Josephus sequence", {0, 1, 1, 3, 1, 3, 5, 7, 1, 3}, "sub mod add u1 n sub n 1 1"},
      {"A008954", "final digit of n(n+1)/2", {0, 1, 3, 6, 0, 5, 1, 8, 6, 5}, "mod add u1 n 10"},
      {"A026741", "n if n odd, n/2 if n even", {0, 1, 1, 3, 2, 5, 3, 7, 4, 9}, "add u2 intdiv n add u1 1"},
      {"A035327", "n in binary with 0 and 1 swapped", {1, 0, 1, 0, 3, 2, 1, 0, 7, 6}, "mod sub u1 n sub n 1"},
      {"A062050", "n-th chunk contains 1..2^n", {1, 1, 2, 1, 2, 3, 4, 1, 2, 3}, "add mod n sub n u1 1"},
      {"A074062", "reflected pentanacci numbers", {5, -1, -1, -1, -1, 9, -7, -1, -1, -1}, "sub mul 2 u5 u6"},
  };
  return examples;
}

std::optional<std::size_t> replay_mismatch(const RecurrenceRelation& rel, const std::vector<BigInt>& terms,
                                           std::int64_t first_index) {
  const auto d = static_cast<std::size_t>(rel.degree());
  if (d > terms.size()) {
    return 0;
  }
  UnrollOptions options;
  options.first_index = first_index;
  const auto unrolled = unroll(rel, IntTracks{std::vector<BigInt>(terms.begin(), terms.begin() + d)},
                               static_cast<int>(terms.size() - d), options);
  const auto& got = unrolled.terms.front();
  for (std::size_t i = d; i < terms.size(); ++i) {
    if (i >= got.size() || got[i] != terms[i]) {
      return i;
    }
  }
  return std::nullopt;
}

}  // namespace recur
