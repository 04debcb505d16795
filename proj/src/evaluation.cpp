#include "recur/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "recur/dataset.hpp"
#include "recur/decode.hpp"
#include "recur/metrics.hpp"
#include "recur/trainer.hpp"

namespace recur {

namespace {

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) {
      out += ' ';
    }
    out += t;
  }
  return out;
}

std::optional<RecurrenceRelation> try_decode(const std::vector<std::string>& tokens, Mode mode,
                                             const EncodingConfig& encoding) {
  try {
    return decode_relation(tokens, mode, encoding);
  } catch (const InvalidExpression&) {
    return std::nullopt;
  } catch (const EncodingError&) {
    return std::nullopt;
  }
}

nlohmann::json error_json(double e) { return std::isfinite(e) ? nlohmann::json(e) : nlohmann::json(nullptr); }

double error_from_json(const nlohmann::json& j) { return j.is_null() ? kInfiniteError : j.get<double>(); }

nlohmann::json errors_json(const std::vector<double>& errors) {
  auto out = nlohmann::json::array();
  for (double e : errors) {
    out.push_back(error_json(e));
  }
  return out;
}

std::string format_number(double x) {
  std::ostringstream s;
  s << x;
  return s.str();
}

}  // namespace

ModelPredictor::ModelPredictor(const Transformer<float>& model, const Vocabulary& vocab, Task task,
                               EncodingConfig encoding, int max_len)
    : model_(&model), vocab_(&vocab), task_(task), encoding_(encoding), max_len_(max_len) {
  if (max_len_ <= 0) {
    max_len_ = model.config().max_positions;
  }
}

std::vector<Candidate> ModelPredictor::predict(const SequenceData& observed, int beam_size) const {
  auto source = encode_input(observed, *vocab_, encoding_, model_->config().max_positions);
  if (!source) {
    return {};
  }
  std::vector<Hypothesis> hyps;
  if (beam_size <= 1) {
    hyps.push_back(greedy_decode(*model_, *source, max_len_));
  } else {
    hyps = beam_decode(*model_, *source, beam_size, max_len_);
  }
  std::vector<Candidate> out;
  out.reserve(hyps.size());
  for (const auto& h : hyps) {
    out.push_back({vocab_->to_tokens(h.tokens), h.score});
  }
  return out;
}

std::vector<Candidate> EnumerationPredictor::predict(const SequenceData& observed, int beam_size) const {
  FitOptions options;
  options.tau = tau_;
  options.top_k = static_cast<std::size_t>(std::max(beam_size, 1));
  options.force = force_;
  std::vector<Candidate> out;
  const auto fits = fit_by_enumeration(as_mode(observed, space_.mode), space_, options);
  for (std::size_t i = 0; i < fits.size(); ++i) {
    out.push_back({encode_relation(fits[i].relation), -static_cast<double>(i)});
  }
  return out;
}

Expression integer_expression(const BigInt& value) {
  if (value >= kConstantLow && value <= kConstantHigh) {
    return Expression::leaf(Leaf::constant(static_cast<std::int64_t>(value)));
  }
  if (value < 0) {
    return Expression::binary(Op::mul, Expression::leaf(Leaf::constant(-1)), integer_expression(-value));
  }
  const BigInt q = value / 10;
  const BigInt r = value % 10;
  Expression tens = Expression::binary(Op::mul, integer_expression(q), Expression::leaf(Leaf::constant(10)));
  return r == 0 ? tens : Expression::binary(Op::add, tens, integer_expression(r));
}

std::vector<Candidate> LeadingMonomialPredictor::predict(const SequenceData& observed, int) const {
  const SequenceData typed = as_mode(observed, Mode::integer);
  std::vector<std::vector<BigInt>> levels{std::get<IntTracks>(typed).at(0)};
  auto nonzero = [](const std::vector<BigInt>& v) {
    return std::any_of(v.begin(), v.end(), [](const BigInt& x) { return x != 0; });
  };
  while (levels.back().size() > 1 && nonzero(levels.back())) {
    const auto& prev = levels.back();
    std::vector<BigInt> next;
    for (std::size_t i = 1; i < prev.size(); ++i) {
      next.push_back(prev[i] - prev[i - 1]);
    }
    levels.push_back(std::move(next));
  }
  Expression mono = Expression::leaf(Leaf::constant(0));
  // The deepest level with a nonzero entry is constant and has index k.
  std::size_t k = levels.size() - 1;
  while (k > 0 && !nonzero(levels[k])) {
    --k;
  }
  if (nonzero(levels[k])) {
    BigInt factorial = 1;
    for (std::size_t i = 2; i <= k; ++i) {
      factorial *= static_cast<unsigned>(i);
    }
    mono = integer_expression(levels[k][0] / factorial);
    for (std::size_t i = 0; i < k; ++i) {
      mono = Expression::binary(Op::mul, mono, Expression::leaf(Leaf::index()));
    }
  }
  return {{encode_relation(RecurrenceRelation(Mode::integer, {mono})), 0.0}};
}

SequenceData as_mode(const SequenceData& data, Mode mode) {
  if (data_mode(data) == mode) {
    return data;
  }
  if (mode == Mode::real) {
    return to_real(data);
  }
  IntTracks out;
  for (const auto& track : std::get<RealTracks>(data)) {
    std::vector<BigInt> ints;
    ints.reserve(track.size());
    for (double x : track) {
      ints.push_back(std::isfinite(x) ? BigInt(std::nearbyint(x)) : BigInt(0));
    }
    out.push_back(std::move(ints));
  }
  return out;
}

SequenceData extrapolate(const RecurrenceRelation& rel, const SequenceData& history, int count,
                         std::int64_t first_index) {
  const SequenceData typed = as_mode(history, rel.mode());
  const std::size_t start = length(typed);
  UnrollOptions options;
  options.first_index = first_index;
  return std::visit(
      [&](const auto& tracks) -> SequenceData {
        auto unrolled = unroll(rel, tracks, count, options);
        return slice(SequenceData(std::move(unrolled.terms)), start, unrolled.length());
      },
      typed);
}

double reconstruction_error(const RecurrenceRelation& rel, const SequenceData& observed, std::int64_t first_index) {
  const SequenceData typed = as_mode(observed, rel.mode());
  const std::size_t n = length(typed);
  const auto d = static_cast<std::size_t>(rel.degree());
  if (d >= n || static_cast<std::size_t>(rel.dimension()) != dimensions(typed)) {
    return kInfiniteError;
  }
  UnrollOptions options;
  options.first_index = first_index;
  const SequenceData rebuilt = std::visit(
      [&](const auto& tracks) -> SequenceData {
        auto initial = std::get<std::decay_t<decltype(tracks)>>(slice(typed, 0, d));
        return std::move(unroll(rel, std::move(initial), static_cast<int>(n - d), options).terms);
      },
      typed);
  return max_error(term_errors(rebuilt, typed));
}

Ranking rank_hypotheses(const std::vector<Candidate>& hyps, const SequenceData& observed, Mode mode,
                        const EncodingConfig& encoding, std::int64_t first_index) {
  Ranking out;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    auto rel = try_decode(hyps[i].tokens, mode, encoding);
    if (!rel || static_cast<std::size_t>(rel->dimension()) != dimensions(observed)) {
      ++out.invalid;
      continue;
    }
    const double err = reconstruction_error(*rel, observed, first_index);
    out.candidates.push_back(
        {*rel, to_text(*rel), std::isnan(err) ? kInfiniteError : err, hyps[i].score, hyps[i].tokens.size(), i});
  }
  std::stable_sort(out.candidates.begin(), out.candidates.end(), [](const auto& a, const auto& b) {
    if (a.input_error != b.input_error) {
      return a.input_error < b.input_error;
    }
    if (a.score != b.score) {
      return a.score > b.score;
    }
    return a.length < b.length;
  });
  return out;
}

EvalSet make_eval_set(const GeneratorConfig& gen, int count, std::uint64_t seed, int future_terms) {
  GeneratorConfig g = gen;
  g.extra_terms = std::max(g.extra_terms, future_terms);
  SampleStream stream(g, seed, kEvalWorker);
  EvalSet set;
  set.mode = g.mode;
  set.items.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) {
    GeneratedSample s = stream.next();
    EvalItem item;
    item.input = s.observed();
    item.clean = s.terms;
    item.future = s.future;
    item.ops = s.ops;
    item.degree = s.degree;
    item.length = s.length;
    const auto family = classify_family(s.relation);
    item.family = family ? std::string(family_name(*family)) : "other";
    item.seed = s.seed;
    item.sigma = s.sigma;
    item.relation = std::move(s.relation);
    set.items.push_back(std::move(item));
  }
  return set;
}

void EvalConfig::validate() const {
  if (!(tau >= 0)) {
    throw std::invalid_argument("tau must be >= 0");
  }
  if (n_pred < 1) {
    throw std::invalid_argument("n_pred must be >= 1");
  }
  if (beam_size < 1) {
    throw std::invalid_argument("beam_size must be >= 1");
  }
  if (n_input && *n_input < 1) {
    throw std::invalid_argument("n_input must be >= 1");
  }
  if (!(epsilon > 0)) {
    throw std::invalid_argument("epsilon must be > 0");
  }
  if (workers < 1) {
    throw std::invalid_argument("workers must be >= 1");
  }
  for (double t : tau_sweep) {
    if (!(t >= 0)) {
      throw std::invalid_argument("tau_sweep entries must be >= 0");
    }
  }
}

nlohmann::json eval_config_to_json(const EvalConfig& cfg) {
  nlohmann::json j{{"tau", cfg.tau},       {"n_pred", cfg.n_pred},   {"beam_size", cfg.beam_size},
                   {"rank", cfg.rank},     {"epsilon", cfg.epsilon}, {"tau_sweep", cfg.tau_sweep},
                   {"workers", cfg.workers}};
  j["n_input"] = cfg.n_input ? nlohmann::json(*cfg.n_input) : nlohmann::json(nullptr);
  return j;
}

EvalConfig eval_config_from_json(const nlohmann::json& j, EvalConfig cfg) {
  cfg.tau = j.value("tau", cfg.tau);
  cfg.n_pred = j.value("n_pred", cfg.n_pred);
  cfg.beam_size = j.value("beam_size", cfg.beam_size);
  cfg.rank = j.value("rank", cfg.rank);
  cfg.epsilon = j.value("epsilon", cfg.epsilon);
  cfg.tau_sweep = j.value("tau_sweep", cfg.tau_sweep);
  cfg.workers = j.value("workers", cfg.workers);
  if (j.contains("n_input")) {
    cfg.n_input = j["n_input"].is_null() ? std::nullopt : std::optional<int>(j["n_input"].get<int>());
  }
  cfg.validate();
  return cfg;
}

double round_to_precision(double x, double epsilon) {
  if (x == 0 || !std::isfinite(x)) {
    return x;
  }
  const int digits = std::max(1, static_cast<int>(std::lround(-std::log10(epsilon))) + 1);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", digits - 1, x);
  return std::strtod(buf, nullptr);
}

namespace {

SequenceData round_real(const SequenceData& data, double epsilon) {
  if (data_mode(data) != Mode::real) {
    return data;
  }
  RealTracks out = std::get<RealTracks>(data);
  for (auto& track : out) {
    for (double& x : track) {
      x = round_to_precision(x, epsilon);
    }
  }
  return out;
}

struct PreparedItem {
  SequenceData input, clean, future;
};

PreparedItem prepare(const EvalItem& item, Mode mode, const EvalConfig& cfg) {
  PreparedItem p{as_mode(item.input, mode), item.clean, item.future};
  if (cfg.n_input) {
    const auto n = static_cast<std::size_t>(*cfg.n_input);
    if (n < length(p.clean)) {
      p.future = concat(slice(p.clean, n, length(p.clean)), p.future);
      p.clean = slice(p.clean, 0, n);
      p.input = slice(p.input, 0, n);
    }
  }
  return p;
}

ItemResult evaluate_item(const Predictor& predictor, const EvalItem& item, std::size_t index, Mode mode,
                         const EncodingConfig& encoding, const EvalConfig& cfg) {
  ItemResult r;
  r.index = index;
  r.ops = item.ops;
  r.degree = item.degree;
  r.length = item.length;
  r.family = item.family;
  r.sigma = item.sigma;
  const PreparedItem p = prepare(item, mode, cfg);
  const Task task = predictor.task();

  nlohmann::json& d = r.detail;
  d["seed"] = item.seed;
  if (!item.label.empty()) {
    d["label"] = item.label;
  }
  d["input"] = sequence_to_json(p.input);
  if (p.input != p.clean) {
    d["clean"] = sequence_to_json(p.clean);
  }
  d["future"] = sequence_to_json(p.future);
  if (item.relation) {
    d["true_relation"] = to_text(*item.relation);
  }

  const auto cands = predictor.predict(p.input, cfg.beam_size);
  r.hypotheses = static_cast<int>(cands.size());
  std::optional<SequenceData> predicted;
  auto beam = nlohmann::json::array();

  if (cands.empty()) {
    r.status = "no_hypothesis";
    r.top_invalid = true;
  } else if (task == Task::symbolic) {
    const Ranking ranking = rank_hypotheses(cands, p.input, mode, encoding);
    r.invalid = ranking.invalid;
    r.top_invalid = !try_decode(cands.front().tokens, mode, encoding).has_value();
    for (std::size_t i = 0; i < cands.size(); ++i) {
      nlohmann::json h{{"tokens", join(cands[i].tokens)}, {"score", cands[i].score}, {"valid", false}};
      for (const auto& c : ranking.candidates) {
        if (c.beam_rank == i) {
          h["valid"] = true;
          h["input_error"] = error_json(c.input_error);
        }
      }
      beam.push_back(std::move(h));
    }
    const RankedCandidate* chosen = nullptr;
    if (cfg.rank) {
      if (!ranking.candidates.empty()) {
        chosen = &ranking.candidates.front();
      }
    } else {
      for (const auto& c : ranking.candidates) {
        if (c.beam_rank == 0) {
          chosen = &c;
        }
      }
    }
    if (chosen == nullptr) {
      r.status = "invalid";
    } else {
      r.predicted = chosen->text;
      r.input_error = chosen->input_error;
      predicted = extrapolate(chosen->relation, p.clean, static_cast<int>(length(p.future)));
    }
  } else {
    for (const auto& c : cands) {
      bool ok = true;
      try {
        (void)decode_sequence(c.tokens, mode, static_cast<int>(dimensions(p.input)), encoding);
      } catch (const std::exception&) {
        ok = false;
      }
      r.invalid += ok ? 0 : 1;
      beam.push_back({{"tokens", join(c.tokens)}, {"score", c.score}, {"valid", ok}});
    }
    try {
      predicted = decode_sequence(cands.front().tokens, mode, static_cast<int>(dimensions(p.input)), encoding);
      r.predicted = join(cands.front().tokens);
    } catch (const std::exception&) {
      r.top_invalid = true;
      r.status = "invalid";
    }
  }

  if (predicted) {
    const SequenceData truth = task == Task::numeric ? round_real(p.future, cfg.epsilon) : p.future;
    r.errors = term_errors(*predicted, truth);
    d["predicted_terms"] = sequence_to_json(*predicted);
    r.correct = max_error_prefix(r.errors, static_cast<std::size_t>(cfg.n_pred)) <= cfg.tau;
    if (r.correct) {
      r.status = "correct";
    } else if (length(*predicted) < std::min(length(truth), static_cast<std::size_t>(cfg.n_pred))) {
      r.status = "domain_error";
    } else {
      r.status = "wrong";
    }
  }
  d["beam"] = std::move(beam);
  return r;
}

nlohmann::json item_to_json(const ItemResult& r) {
  nlohmann::json j = r.detail;
  j["index"] = r.index;
  j["status"] = r.status;
  j["chosen"] = r.predicted;
  j["errors"] = errors_json(r.errors);
  j["input_error"] = error_json(r.input_error);
  j["hypotheses"] = r.hypotheses;
  j["invalid"] = r.invalid;
  j["top_invalid"] = r.top_invalid;
  j["correct"] = r.correct;
  j["tags"] = {{"ops", r.ops}, {"degree", r.degree}, {"length", r.length}, {"family", r.family}};
  j["sigma"] = r.sigma;
  return j;
}

}  // namespace

EvalReport aggregate(std::vector<ItemResult> items, const EvalConfig& cfg, Task task) {
  EvalReport report;
  report.config = cfg;
  report.task = task;
  report.count = static_cast<int>(items.size());
  long hyps = 0;
  long bad = 0;
  int top_bad = 0;
  std::size_t horizon = 0;
  for (const auto& r : items) {
    report.correct += r.correct ? 1 : 0;
    hyps += r.hypotheses;
    bad += r.invalid;
    top_bad += r.top_invalid ? 1 : 0;
    horizon = std::max(horizon, r.errors.size());
    auto add = [&](const std::string& bucket, const std::string& key) {
      auto& stat = report.buckets[bucket][key];
      ++stat.count;
      stat.correct += r.correct ? 1 : 0;
    };
    if (r.ops >= 0) {
      add("ops", std::to_string(r.ops));
    }
    if (r.degree >= 0) {
      add("degree", std::to_string(r.degree));
    }
    if (r.length >= 0) {
      add("length", std::to_string(r.length));
    }
    if (!r.family.empty()) {
      add("family", r.family);
    }
  }
  const double n = std::max(report.count, 1);
  report.accuracy = report.correct / n;
  report.invalid_rate = top_bad / n;
  report.hypothesis_invalid_rate = hyps == 0 ? (report.count == 0 ? 0.0 : 1.0) : static_cast<double>(bad) / hyps;
  for (double tau : cfg.tau_sweep) {
    int ok = 0;
    for (const auto& r : items) {
      ok += max_error_prefix(r.errors, static_cast<std::size_t>(cfg.n_pred)) <= tau ? 1 : 0;
    }
    report.tau_curve.emplace_back(tau, ok / n);
  }
  for (std::size_t k = 1; k <= horizon; ++k) {
    int ok = 0;
    for (const auto& r : items) {
      ok += max_error_prefix(r.errors, k) <= cfg.tau ? 1 : 0;
    }
    report.n_pred_curve.emplace_back(static_cast<int>(k), ok / n);
  }
  report.items = std::move(items);
  return report;
}

nlohmann::json EvalReport::summary() const {
  nlohmann::json j{{"protocol", protocol},
                   {"protocol_info", protocol_info},
                   {"task", task_name(task)},
                   {"config", eval_config_to_json(config)},
                   {"count", count},
                   {"correct", correct},
                   {"accuracy", accuracy},
                   {"invalid_rate", invalid_rate},
                   {"hypothesis_invalid_rate", hypothesis_invalid_rate}};
  std::map<std::string, int> statuses;
  for (const auto& r : items) {
    ++statuses[r.status];
  }
  j["status_counts"] = statuses;
  auto b = nlohmann::json::object();
  for (const auto& [name, keys] : buckets) {
    for (const auto& [key, stat] : keys) {
      b[name][key] = {{"count", stat.count}, {"correct", stat.correct}, {"accuracy", stat.accuracy()}};
    }
  }
  j["buckets"] = b;
  j["tau_curve"] = tau_curve;
  j["n_pred_curve"] = n_pred_curve;
  return j;
}

void EvalReport::write_log(std::ostream& out) const {
  for (const auto& r : items) {
    out << item_to_json(r).dump() << '\n';
  }
}

std::vector<ItemResult> read_item_log(std::istream& in) {
  std::vector<ItemResult> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    const auto j = nlohmann::json::parse(line);
    ItemResult r;
    r.index = j.at("index").get<std::size_t>();
    r.status = j.at("status").get<std::string>();
    r.predicted = j.at("chosen").get<std::string>();
    for (const auto& e : j.at("errors")) {
      r.errors.push_back(error_from_json(e));
    }
    r.input_error = error_from_json(j.at("input_error"));
    r.hypotheses = j.at("hypotheses").get<int>();
    r.invalid = j.at("invalid").get<int>();
    r.top_invalid = j.at("top_invalid").get<bool>();
    r.correct = j.at("correct").get<bool>();
    const auto& tags = j.at("tags");
    r.ops = tags.at("ops").get<int>();
    r.degree = tags.at("degree").get<int>();
    r.length = tags.at("length").get<int>();
    r.family = tags.at("family").get<std::string>();
    r.sigma = j.value("sigma", 0.0);
    r.detail = j;
    out.push_back(std::move(r));
  }
  return out;
}

EvalReport evaluate(const Predictor& predictor, const EvalSet& set, const EvalConfig& cfg) {
  cfg.validate();
  const EncodingConfig encoding{};
  std::vector<ItemResult> results(set.items.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < set.items.size(); i = next++) {
      results[i] = evaluate_item(predictor, set.items[i], i, set.mode, encoding, cfg);
    }
  };
  const int workers = std::min<int>(cfg.workers, static_cast<int>(std::max<std::size_t>(set.items.size(), 1)));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back(work);
    }
    for (auto& t : pool) {
      t.join();
    }
  }
  return aggregate(std::move(results), cfg, predictor.task());
}

EvalReport noise_protocol(const Predictor& predictor, const EvalSet& set, double sigma_test, const EvalConfig& cfg,
                          std::uint64_t seed) {
  if (!(sigma_test >= 0)) {
    throw std::invalid_argument("sigma_test must be >= 0");
  }
  EvalSet noisy = set;
  if (sigma_test > 0) {
    for (std::size_t i = 0; i < noisy.items.size(); ++i) {
      Rng rng = make_rng(seed, 3, i);
      auto& item = noisy.items[i];
      item.input = as_mode(SequenceData(corrupt(item.clean, sigma_test, rng)), set.mode);
      item.sigma = sigma_test;
    }
  }
  EvalReport report = evaluate(predictor, noisy, cfg);
  report.protocol = "noise";
  report.protocol_info = {{"sigma_test", sigma_test}, {"seed", seed}};
  return report;
}

EvalReport shift_protocol(const Predictor& predictor, const GeneratorConfig& gen, int count, std::uint64_t seed,
                          double low, double high, EvalConfig cfg) {
  if (!(low <= high)) {
    throw std::invalid_argument("initial-term range must satisfy low <= high");
  }
  GeneratorConfig g = gen;
  g.init_low = low;
  g.init_high = high;
  cfg.tau = 0.01;
  const EvalSet set = make_eval_set(g, count, seed, cfg.n_pred);
  EvalReport report = evaluate(predictor, set, cfg);
  report.protocol = "shift";
  report.protocol_info = {{"init_low", low}, {"init_high", high}, {"seed", seed}};
  return report;
}

nlohmann::json GridTable::to_json() const {
  return {{"title", title},           {"row_header", row_header}, {"column_groups", column_groups},
          {"columns", columns},       {"rows", row_labels},       {"cells", cells}};
}

std::string GridTable::to_text() const {
  std::size_t label_width = row_header.size();
  for (const auto& l : row_labels) {
    label_width = std::max(label_width, l.size());
  }
  std::size_t cell = 7;
  for (const auto& c : columns) {
    cell = std::max(cell, c.size() + 1);
  }
  std::ostringstream out;
  if (!title.empty()) {
    out << title << '\n';
  }
  if (!column_groups.empty() && !columns.empty()) {
    const std::size_t span = columns.size() / column_groups.size();
    out << std::string(label_width, ' ') << " |";
    for (const auto& g : column_groups) {
      const std::size_t width = span * cell;
      std::string text = g.size() > width ? g.substr(0, width) : g;
      const std::size_t pad = width - text.size();
      out << std::string(pad / 2, ' ') << text << std::string(pad - pad / 2, ' ') << '|';
    }
    out << '\n';
  }
  out << std::left << std::setw(static_cast<int>(label_width)) << row_header << " |" << std::right;
  for (const auto& c : columns) {
    out << std::setw(static_cast<int>(cell)) << c;
  }
  out << '\n' << std::string(label_width + 2 + cell * columns.size(), '-') << '\n';
  for (std::size_t r = 0; r < row_labels.size(); ++r) {
    out << std::left << std::setw(static_cast<int>(label_width)) << row_labels[r] << " |" << std::right;
    for (double v : cells.at(r)) {
      out << std::setw(static_cast<int>(cell)) << std::fixed << std::setprecision(1) << v;
    }
    out << '\n';
  }
  return out.str();
}

GridTable noise_grid(const std::vector<std::pair<double, const Predictor*>>& models,
                     const std::vector<double>& sigma_tests, const EvalSet& set, const EvalConfig& cfg,
                     std::uint64_t seed) {
  GridTable t;
  t.title = "Accuracy (%) under input noise";
  t.row_header = "sigma_train";
  for (double s : sigma_tests) {
    t.columns.push_back("sigma_test=" + format_number(s));
  }
  for (const auto& [sigma_train, model] : models) {
    t.row_labels.push_back(format_number(sigma_train));
    std::vector<double> row;
    for (double s : sigma_tests) {
      row.push_back(100.0 * noise_protocol(*model, set, s, cfg, seed).accuracy);
    }
    t.cells.push_back(std::move(row));
  }
  return t;
}

double constant_error(const Expression& expr, double target) {
  const auto value = evaluate_constant(expr);
  return value ? relative_error(*value, target) : kInfiniteError;
}

std::vector<ApproxCandidate> approximate_constant(const Predictor& predictor, double constant, int beam_size,
                                                  const EncodingConfig& encoding) {
  constexpr int kTerms = 25;
  std::vector<double> terms;
  for (int n = 0; n < kTerms; ++n) {
    terms.push_back(constant * n);
  }
  const SequenceData observed = single(terms);
  const Ranking ranking = rank_hypotheses(predictor.predict(observed, beam_size), observed, Mode::real, encoding);
  std::vector<ApproxCandidate> out;
  for (const auto& c : ranking.candidates) {
    ApproxCandidate a;
    a.text = c.text;
    const auto d = static_cast<std::size_t>(c.relation.degree());
    if (d >= terms.size()) {
      out.push_back(a);
      continue;
    }
    auto rebuilt = unroll(c.relation, RealTracks{std::vector<double>(terms.begin(), terms.begin() + d)},
                          kTerms - static_cast<int>(d));
    if (!rebuilt.ok() || rebuilt.length() != terms.size()) {
      out.push_back(a);
      continue;
    }
    const auto& u = rebuilt.terms.front();
    const double slope = u[kTerms - 1] / (kTerms - 1);
    bool linear = true;
    for (int n = 0; n < kTerms; ++n) {
      const double expected = slope * n;
      linear = linear && std::fabs(u[static_cast<std::size_t>(n)] - expected) <= 1e-12 * std::max(1.0, std::fabs(expected));
    }
    a.value = slope;
    if (linear) {
      a.error = relative_error(slope, constant);
    } else {
      a.error = max_error(term_errors(SequenceData(rebuilt.terms), observed));
    }
    out.push_back(a);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.error < b.error; });
  if (out.empty()) {
    throw std::runtime_error("approximate_constant: no valid candidate");
  }
  return out;
}

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, int intervals) {
  intervals += intervals % 2;
  const double h = (b - a) / intervals;
  double sum = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) {
    sum += f(a + i * h) * (i % 2 == 1 ? 4 : 2);
  }
  return sum * h / 3;
}

int simpson_intervals(double x) { return std::max(2000, static_cast<int>(std::ceil(std::fabs(x) * 4000))); }

std::vector<double> parse_coefficients(const std::string& text) {
  std::vector<double> out;
  std::stringstream s(text);
  std::string part;
  while (std::getline(s, part, ',')) {
    std::size_t used = 0;
    out.push_back(std::stod(part, &used));
    if (used != part.size()) {
      throw std::invalid_argument("bad polynomial coefficient: " + part);
    }
  }
  if (out.empty()) {
    throw std::invalid_argument("polynomial needs coefficients");
  }
  return out;
}

}  // namespace

Oracle named_oracle(const std::string& name) {
  const auto colon = name.find(':');
  const std::string head = name.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : name.substr(colon + 1);
  if (head == "polynomial") {
    const auto coeffs = parse_coefficients(arg);
    return [coeffs](double x) {
      double y = 0;
      for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
        y = y * x + *it;
      }
      return y;
    };
  }
  if (head == "hermite" || head == "laguerre" || head == "legendre") {
    const unsigned k = static_cast<unsigned>(std::stoul(arg.empty() ? "2" : arg));
    if (head == "hermite") {
      return [k](double x) { return std::hermite(k, x); };
    }
    if (head == "laguerre") {
      return [k](double x) { return std::laguerre(k, x); };
    }
    // Evaluated by the three-term recurrence so that |x| > 1 is allowed.
    return [k](double x) {
      double p0 = 1, p1 = x;
      if (k == 0) {
        return p0;
      }
      for (unsigned i = 1; i < k; ++i) {
        const double p2 = ((2 * i + 1) * x * p1 - i * p0) / (i + 1);
        p0 = p1;
        p1 = p2;
      }
      return p1;
    };
  }
  if (!arg.empty()) {
    throw std::invalid_argument("oracle takes no argument: " + name);
  }
  if (head == "identity") {
    return [](double x) { return x; };
  }
  if (head == "sinh") {
    return [](double x) { return std::sinh(x); };
  }
  if (head == "cosh") {
    return [](double x) { return std::cosh(x); };
  }
  if (head == "tanh") {
    return [](double x) { return std::tanh(x); };
  }
  if (head == "arcsinh") {
    return [](double x) { return std::asinh(x); };
  }
  if (head == "arccosh") {
    return [](double x) { return std::acosh(x); };
  }
  if (head == "arctanh_inv") {
    return [](double x) { return std::atanh(1 / x); };
  }
  if (head == "catalan") {
    return [](double x) { return std::exp(std::lgamma(2 * x + 1) - 2 * std::lgamma(x + 1)) / (x + 1); };
  }
  if (head == "erf") {
    return [](double x) { return std::erf(x); };
  }
  if (head == "dawson") {
    // exp(-x^2) * integral_0^x exp(t^2) dt, folded so the integrand stays <= 1.
    return [](double x) { return simpson([x](double t) { return std::exp(t * t - x * x); }, 0, x, simpson_intervals(x)); };
  }
  if (head == "fresnel_s") {
    return [](double x) {
      return simpson([](double t) { return std::sin(std::numbers::pi * t * t / 2); }, 0, x, simpson_intervals(x * x));
    };
  }
  if (head == "fresnel_c") {
    return [](double x) {
      return simpson([](double t) { return std::cos(std::numbers::pi * t * t / 2); }, 0, x, simpson_intervals(x * x));
    };
  }
  if (head == "j0") {
    return [](double x) { return std::cyl_bessel_j(0.0, x); };
  }
  if (head == "i0") {
    return [](double x) { return std::cyl_bessel_i(0.0, x); };
  }
  if (head == "y0") {
    return [](double x) { return std::cyl_neumann(0.0, x); };
  }
  if (head == "k0") {
    return [](double x) { return std::cyl_bessel_k(0.0, x); };
  }
  throw std::invalid_argument("unknown oracle: " + name);
}

std::vector<FunctionFit> approximate_function(const Predictor& predictor, const Oracle& oracle, int n_input,
                                              int n_pred, int beam_size, const EncodingConfig& encoding) {
  if (n_input < 1 || n_pred < 1) {
    throw std::invalid_argument("n_input and n_pred must be >= 1");
  }
  std::vector<double> observed_terms, future_terms;
  for (int n = 1; n <= n_input + n_pred; ++n) {
    const double y = oracle(n);
    if (!std::isfinite(y)) {
      throw std::domain_error("oracle is not finite at n = " + std::to_string(n));
    }
    (n <= n_input ? observed_terms : future_terms).push_back(y);
  }
  const SequenceData observed = single(observed_terms);
  const SequenceData future = single(future_terms);
  const Ranking ranking =
      rank_hypotheses(predictor.predict(observed, beam_size), observed, Mode::real, encoding, 1);
  std::vector<FunctionFit> out;
  for (const auto& c : ranking.candidates) {
    FunctionFit f{c.text, c.input_error, kInfiniteError};
    f.extrapolation_error = max_error(term_errors(extrapolate(c.relation, observed, n_pred, 1), future));
    out.push_back(f);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.extrapolation_error != b.extrapolation_error ? a.extrapolation_error < b.extrapolation_error
                                                          : a.input_error < b.input_error;
  });
  return out;
}

ErrorProfile error_profile(const Expression& expr, const Oracle& oracle, std::int64_t from, std::int64_t to) {
  if (expr.degree() != 0) {
    throw std::invalid_argument("error_profile needs a closed-form expression");
  }
  ErrorProfile p;
  const std::vector<std::vector<double>> none(1);
  for (std::int64_t n = from; n <= to; ++n) {
    const auto v = eval_step(expr, n, std::span<const std::vector<double>>(none));
    const double truth = oracle(static_cast<double>(n));
    p.n.push_back(n);
    p.absolute.push_back(v ? std::fabs(*v.value - truth) : kInfiniteError);
    p.relative.push_back(v ? relative_error(*v.value, truth) : kInfiniteError);
  }
  return p;
}

RefinementResult iterative_refinement(const Predictor& predictor, const SequenceData& values, int depth, Mode mode,
                                      std::int64_t first_index, int beam_size, const EncodingConfig& encoding) {
  if (depth < 1) {
    throw std::invalid_argument("refinement depth must be >= 1");
  }
  if (dimensions(values) != 1) {
    throw std::invalid_argument("refinement needs a single-dimension sequence");
  }
  const SequenceData target = as_mode(values, mode);
  const std::size_t count = length(target);
  RefinementResult result;
  SequenceData residual = target;
  for (int round = 0; round < depth; ++round) {
    const Ranking ranking =
        rank_hypotheses(predictor.predict(residual, beam_size), residual, mode, encoding, first_index);
    const RankedCandidate* pick = nullptr;
    for (const auto& c : ranking.candidates) {
      if (c.relation.degree() == 0 && std::isfinite(c.input_error)) {
        pick = &c;
        break;
      }
    }
    if (pick == nullptr) {
      result.stopped_early = true;
      break;
    }
    const Expression& term = pick->relation.expression(0);
    result.total = result.total ? Expression::binary(Op::add, *result.total, term) : term;
    const RecurrenceRelation total_rel(mode, {*result.total});
    const SequenceData fitted = extrapolate(total_rel, slice(target, 0, 0), static_cast<int>(count), first_index);
    const auto errors = term_errors(fitted, target);
    result.rounds.push_back({to_text(term), max_error(errors)});
    if (length(fitted) != count) {
      result.stopped_early = true;
      break;
    }
    residual = std::visit(
        [&](const auto& f) -> SequenceData {
          auto r = std::get<std::decay_t<decltype(f)>>(target);
          for (std::size_t i = 0; i < count; ++i) {
            r[0][i] -= f[0][i];
          }
          return r;
        },
        fitted);
    if (result.rounds.back().max_error == 0) {
      break;
    }
  }
  return result;
}

}  // namespace recur
