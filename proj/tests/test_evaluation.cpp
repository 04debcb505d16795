#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "recur/dataset.hpp"
#include "recur/evaluation.hpp"

using namespace recur;

namespace {

GeneratorConfig small_grammar() {
  GeneratorConfig g;
  g.max_ops = 2;
  g.max_degree = 2;
  g.min_length = 25;
  g.max_length = 25;
  return g;
}

std::string key(const SequenceData& s) { return sequence_to_json(s).dump(); }

// Answers every item of `set` with its true relation.
FunctionPredictor echo_predictor(const EvalSet& set) {
  std::map<std::string, std::vector<std::string>> answers;
  for (const auto& item : set.items) {
    answers[key(item.input)] = encode_relation(*item.relation);
  }
  return FunctionPredictor(Task::symbolic, [answers](const SequenceData& observed, int) {
    auto it = answers.find(key(observed));
    return it == answers.end() ? std::vector<Candidate>{} : std::vector<Candidate>{{it->second, 0.0}};
  });
}

std::vector<std::string> tokens_of(const std::string& prefix, Mode mode) {
  return encode_relation(parse_relation(prefix, mode));
}

FunctionPredictor fixed_predictor(Mode mode, std::vector<std::string> prefixes) {
  return FunctionPredictor(Task::symbolic, [mode, prefixes](const SequenceData&, int) {
    std::vector<Candidate> out;
    for (std::size_t i = 0; i < prefixes.size(); ++i) {
      out.push_back({tokens_of(prefixes[i], mode), -static_cast<double>(i)});
    }
    return out;
  });
}

// Scores a real candidate by stepping eval_step by hand from the first d terms.
double brute_force_error(const RecurrenceRelation& rel, const std::vector<double>& obs) {
  const auto d = static_cast<std::size_t>(rel.degree());
  if (d >= obs.size()) {
    return kInfiniteError;
  }
  std::vector<std::vector<double>> hist{std::vector<double>(obs.begin(), obs.begin() + d)};
  double worst = 0;
  for (std::size_t n = d; n < obs.size(); ++n) {
    const auto v = eval_step(rel.expression(0), static_cast<std::int64_t>(n), std::span<const std::vector<double>>(hist));
    if (!v) {
      return kInfiniteError;
    }
    const double e = obs[n] == 0 ? std::fabs(*v.value) : std::fabs((*v.value - obs[n]) / obs[n]);
    worst = std::max(worst, std::isnan(e) ? kInfiniteError : e);
    hist[0].push_back(*v.value);
  }
  return worst;
}

// Leading monomial a n^k of integer values at n = first, first+1, ... via finite differences.
Expression leading_monomial(std::vector<BigInt> v, std::int64_t first) {
  std::vector<std::vector<BigInt>> levels{v};
  while (levels.back().size() > 1 &&
         std::any_of(levels.back().begin(), levels.back().end(), [](const BigInt& x) { return x != 0; })) {
    const auto& prev = levels.back();
    std::vector<BigInt> next;
    for (std::size_t i = 1; i < prev.size(); ++i) {
      next.push_back(prev[i] - prev[i - 1]);
    }
    levels.push_back(next);
  }
  // levels.back() is all zero (or a single entry); the last nonzero level is constant.
  int k = static_cast<int>(levels.size()) - 2;
  if (k < 0) {
    return Expression::leaf(Leaf::constant(0));
  }
  BigInt factorial = 1;
  for (int i = 2; i <= k; ++i) {
    factorial *= i;
  }
  const BigInt a = levels[static_cast<std::size_t>(k)][0] / factorial;
  (void)first;
  Expression mono = Expression::leaf(Leaf::constant(static_cast<std::int64_t>(a)));
  for (int i = 0; i < k; ++i) {
    mono = Expression::binary(Op::mul, mono, Expression::leaf(Leaf::index()));
  }
  return mono;
}

FunctionPredictor monomial_oracle() {
  return FunctionPredictor(Task::symbolic, [](const SequenceData& observed, int) {
    const auto& v = std::get<IntTracks>(observed)[0];
    const RecurrenceRelation rel(Mode::integer, {leading_monomial(v, 1)});
    return std::vector<Candidate>{{encode_relation(rel), 0.0}};
  });
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("echo model scores 1") {
  const EvalSet set = make_eval_set(small_grammar(), 60, 5, 10);
  REQUIRE(set.items.size() == 60);
  EvalConfig cfg;
  cfg.tau = 0;
  const auto report = evaluate(echo_predictor(set), set, cfg);
  CHECK(report.accuracy == 1.0);
  CHECK(report.invalid_rate == 0.0);
  CHECK(report.count == 60);
  int total = 0;
  for (const auto& [k, stat] : report.buckets.at("ops")) {
    total += stat.count;
  }
  CHECK(total == 60);
}

TEST_CASE("invalid model scores 0") {
  const EvalSet set = make_eval_set(small_grammar(), 20, 5, 10);
  FunctionPredictor junk(Task::symbolic, [](const SequenceData&, int) {
    return std::vector<Candidate>{{{"add", "n"}, -1.0}, {{"EOS"}, -2.0}};
  });
  const auto report = evaluate(junk, set, {});
  CHECK(report.accuracy == 0.0);
  CHECK(report.invalid_rate == 1.0);
  CHECK(report.hypothesis_invalid_rate == 1.0);
  for (const auto& r : report.items) {
    CHECK(r.status == "invalid");
  }
}

TEST_CASE("ranking matches an independent scorer") {
  GeneratorConfig g = small_grammar();
  g.mode = Mode::real;
  g.min_length = 8;
  g.max_length = 12;
  Rng rng = make_rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const auto target = generate_sample(g, rng);
    std::vector<Candidate> beam;
    std::uniform_real_distribution<double> score(-3, 0);
    beam.push_back({encode_relation(target.relation), score(rng)});
    for (int i = 0; i < 8; ++i) {
      beam.push_back({encode_relation(generate_sample(g, rng).relation), score(rng)});
    }
    beam.push_back({{"mul", "n"}, 0.5});
    std::shuffle(beam.begin(), beam.end(), rng);
    const auto ranking = rank_hypotheses(beam, target.terms, Mode::real);
    CHECK(ranking.invalid == 1);

    struct Ref {
      double err, score;
      std::size_t len, idx;
    };
    std::vector<Ref> ref;
    const auto& obs = std::get<RealTracks>(target.terms)[0];
    for (std::size_t i = 0; i < beam.size(); ++i) {
      try {
        const auto rel = decode_relation(beam[i].tokens, Mode::real);
        ref.push_back({brute_force_error(rel, obs), beam[i].score, beam[i].tokens.size(), i});
      } catch (const InvalidExpression&) {
      }
    }
    std::stable_sort(ref.begin(), ref.end(), [](const Ref& a, const Ref& b) {
      if (a.err != b.err) return a.err < b.err;
      if (a.score != b.score) return a.score > b.score;
      return a.len < b.len;
    });
    REQUIRE(ref.size() == ranking.candidates.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      CHECK(ranking.candidates[i].beam_rank == ref[i].idx);
      CHECK(ranking.candidates[i].input_error == ref[i].err);
    }
    CHECK(ranking.candidates.front().input_error == 0.0);
  }
}

TEST_CASE("exact hypothesis ranks first") {
  const SequenceData obs = single(std::vector<BigInt>{1, 2, 4, 7, 11, 16});
  const std::vector<Candidate> beam{{tokens_of("mul 2 u1", Mode::integer), -0.1},
                                    {tokens_of("add u1 n", Mode::integer), -0.9},
                                    {{"sub"}, 0.0}};
  const auto ranking = rank_hypotheses(beam, obs, Mode::integer);
  REQUIRE(ranking.candidates.size() == 2);
  CHECK(ranking.invalid == 1);
  CHECK(ranking.candidates[0].text == "add u1 n");
  CHECK(ranking.candidates[0].input_error == 0.0);
  const auto next = extrapolate(ranking.candidates[0].relation, obs, 3);
  CHECK(std::get<IntTracks>(next)[0] == std::vector<BigInt>{22, 29, 37});
}

TEST_CASE("bucket marginals recompute from the log") {
  const EvalSet set = make_eval_set(small_grammar(), 80, 9, 10);
  // Right on odd operator counts only, so buckets differ.
  std::map<std::string, std::pair<std::vector<std::string>, int>> answers;
  for (const auto& item : set.items) {
    answers[key(item.input)] = {encode_relation(*item.relation), item.ops};
  }
  FunctionPredictor half(Task::symbolic, [answers](const SequenceData& observed, int) {
    const auto& [tokens, ops] = answers.at(key(observed));
    return std::vector<Candidate>{{ops % 2 == 1 ? tokens : tokens_of("n", Mode::integer), 0.0}};
  });
  EvalConfig cfg;
  cfg.workers = 3;
  const auto report = evaluate(half, set, cfg);
  CHECK(report.accuracy > 0.0);
  CHECK(report.accuracy < 1.0);
  std::stringstream log;
  report.write_log(log);
  const auto again = aggregate(read_item_log(log), cfg, Task::symbolic);
  CHECK(again.buckets == report.buckets);
  CHECK(again.accuracy == report.accuracy);
  CHECK(again.tau_curve == report.tau_curve);
  CHECK(again.n_pred_curve == report.n_pred_curve);
  for (const auto& [name, keys] : report.buckets) {
    int total = 0;
    for (const auto& [k, stat] : keys) {
      total += stat.count;
      CHECK(stat.accuracy() >= 0.0);
      CHECK(stat.accuracy() <= 1.0);
    }
    CHECK(total == report.count);
  }
}

TEST_CASE("sweeps are monotone") {
  GeneratorConfig g = small_grammar();
  g.mode = Mode::real;
  const EvalSet set = make_eval_set(g, 60, 2, 10);
  // Perturbed constants give partially correct extrapolations.
  FunctionPredictor near(Task::symbolic, [](const SequenceData& observed, int) {
    const auto& v = std::get<RealTracks>(observed)[0];
    std::vector<Candidate> out;
    out.push_back({tokens_of("mul u1 1.0001", Mode::real), 0.0});
    out.push_back({tokens_of("add u1 " + std::to_string(v[1] - v[0]), Mode::real), -1.0});
    return out;
  });
  EvalConfig cfg;
  cfg.rank = false;
  const auto report = evaluate(near, set, cfg);
  for (std::size_t i = 1; i < report.tau_curve.size(); ++i) {
    CHECK(report.tau_curve[i].second >= report.tau_curve[i - 1].second);
  }
  REQUIRE(report.n_pred_curve.size() == 10);
  for (std::size_t i = 1; i < report.n_pred_curve.size(); ++i) {
    CHECK(report.n_pred_curve[i].second <= report.n_pred_curve[i - 1].second);
  }
}

TEST_CASE("numeric items compare against rounded truth") {
  GeneratorConfig g = small_grammar();
  g.mode = Mode::real;
  const EvalSet set = make_eval_set(g, 30, 4, 10);
  std::map<std::string, SequenceData> futures;
  for (const auto& item : set.items) {
    futures.emplace(key(item.input), slice(item.future, 0, 10));
  }
  FunctionPredictor numeric(Task::numeric, [futures](const SequenceData& observed, int) {
    return std::vector<Candidate>{{encode_sequence(futures.at(key(observed))), 0.0}};
  });
  EvalConfig cfg;
  cfg.tau = 0;
  const auto report = evaluate(numeric, set, cfg);
  CHECK(report.accuracy == 1.0);
  CHECK(round_to_precision(3.14159265, 1e-3) == 3.142);
  CHECK(round_to_precision(-0.000123456, 1e-3) == -0.0001235);
  CHECK(round_to_precision(0.0, 1e-3) == 0.0);
}

TEST_CASE("noise and shift protocols reduce to evaluate") {
  const GeneratorConfig g = small_grammar();
  const EvalSet set = make_eval_set(g, 40, 3, 10);
  const auto echo = echo_predictor(set);
  EvalConfig cfg;
  const auto base = evaluate(echo, set, cfg);
  const auto quiet = noise_protocol(echo, set, 0.0, cfg, 7);
  std::stringstream a, b;
  base.write_log(a);
  quiet.write_log(b);
  CHECK(a.str() == b.str());
  CHECK(quiet.accuracy == base.accuracy);

  EvalConfig loose = cfg;
  loose.tau = 0.01;
  const auto reference = evaluate(echo, make_eval_set(g, 40, 3, cfg.n_pred), loose);
  const auto shifted = shift_protocol(echo, g, 40, 3, g.init_low, g.init_high, cfg);
  std::stringstream c, d;
  reference.write_log(c);
  shifted.write_log(d);
  CHECK(c.str() == d.str());
  CHECK(shifted.summary()["protocol_info"]["init_low"] == g.init_low);
  CHECK(shifted.summary()["config"]["tau"] == 0.01);
}

TEST_CASE("noisy log keeps clean and corrupted inputs") {
  GeneratorConfig g = small_grammar();
  g.mode = Mode::real;
  const EvalSet set = make_eval_set(g, 10, 3, 10);
  const auto report = noise_protocol(fixed_predictor(Mode::real, {"u1"}), set, 0.1, {}, 7);
  std::stringstream log;
  report.write_log(log);
  for (const auto& r : read_item_log(log)) {
    REQUIRE(r.detail.contains("clean"));
    CHECK(r.detail["clean"] != r.detail["input"]);
    CHECK(r.sigma == 0.1);
    CHECK(r.detail["clean"] == sequence_to_json(set.items[r.index].clean));
  }
  const auto again = noise_protocol(fixed_predictor(Mode::real, {"u1"}), set, 0.1, {}, 7);
  std::stringstream log2;
  again.write_log(log2);
  std::stringstream log1;
  report.write_log(log1);
  CHECK(log1.str() == log2.str());
}

TEST_CASE("shift honors the range override") {
  GeneratorConfig g = small_grammar();
  g.init_low = -100;
  g.init_high = 100;
  const EvalSet set = make_eval_set(g, 200, 8, 10);
  bool wide = false;
  for (const auto& item : set.items) {
    const auto& u = std::get<IntTracks>(item.clean)[0];
    for (int i = 0; i < item.degree; ++i) {
      CHECK(abs(u[static_cast<std::size_t>(i)]) <= 100);
      wide = wide || abs(u[static_cast<std::size_t>(i)]) > 10;
    }
  }
  CHECK(wide);
  const auto report = shift_protocol(fixed_predictor(Mode::integer, {"n"}), small_grammar(), 20, 8, -100, 100, {});
  CHECK(report.protocol == "shift");
  CHECK(report.summary()["protocol_info"]["init_high"] == 100.0);
}

TEST_CASE("noise grid has the table layout") {
  GeneratorConfig g = small_grammar();
  g.mode = Mode::real;
  const EvalSet set = make_eval_set(g, 10, 3, 10);
  const auto stub = fixed_predictor(Mode::real, {"u1"});
  const auto grid = noise_grid({{0.0, &stub}, {0.1, &stub}, {0.5, &stub}}, {0.0, 0.1, 0.5}, set, {}, 1);
  CHECK(grid.row_labels == std::vector<std::string>{"0", "0.1", "0.5"});
  CHECK(grid.columns.size() == 3);
  REQUIRE(grid.cells.size() == 3);
  for (const auto& row : grid.cells) {
    CHECK(row.size() == 3);
  }
  const auto j = grid.to_json();
  CHECK(j["rows"].size() == 3);
  CHECK(grid.to_text().find("sigma_train") != std::string::npos);
}

TEST_CASE("config validation and json") {
  EvalConfig cfg;
  cfg.tau = 1e-3;
  cfg.n_input = 15;
  cfg.beam_size = 4;
  const auto back = eval_config_from_json(eval_config_to_json(cfg));
  CHECK(back.tau == cfg.tau);
  CHECK(back.n_input == cfg.n_input);
  CHECK(back.beam_size == 4);
  EvalConfig bad;
  bad.tau = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.n_pred = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("n_input truncation moves terms to the future") {
  const EvalSet set = make_eval_set(small_grammar(), 20, 6, 10);
  EvalConfig cfg;
  cfg.n_input = 15;
  cfg.tau = 0;
  const auto report = evaluate(echo_predictor(set), set, cfg);
  // The echo table is keyed by full inputs, so truncated inputs get no answer.
  CHECK(report.accuracy == 0.0);
  for (const auto& r : report.items) {
    CHECK(r.detail["input"][0].size() == 15);
    const auto& item = set.items[r.index];
    CHECK(r.detail["future"][0].size() == length(item.clean) - 15 + length(item.future));
  }
}

TEST_CASE("enumeration baseline predicts the introductory example") {
  EnumerationPredictor baseline(EnumerationSpace::standard(Mode::integer, 2, 2));
  const SequenceData obs = single(std::vector<BigInt>{1, 2, 4, 7, 11, 16});
  const auto ranking = rank_hypotheses(baseline.predict(obs, 5), obs, Mode::integer);
  REQUIRE(!ranking.candidates.empty());
  const auto& best = ranking.candidates[0].text;
  CHECK((best == "add u1 n" || best == "add n u1"));
  CHECK(ranking.candidates[0].input_error == 0.0);
  CHECK(std::get<IntTracks>(extrapolate(ranking.candidates[0].relation, obs, 1))[0][0] == 22);
}

TEST_CASE("constant approximation") {
  const auto three = approximate_constant(fixed_predictor(Mode::real, {"add u1 2", "mul 3 n", "add u1 3"}), 3.0);
  REQUIRE(three.size() == 3);
  CHECK(three[0].error == 0.0);
  CHECK(three[0].value == 3.0);
  CHECK(three.back().error > 0.0);
  // Non-linear candidates fall back to the max error over all terms.
  const auto curved = approximate_constant(fixed_predictor(Mode::real, {"mul n n"}), 3.0);
  CHECK(curved[0].error == doctest::Approx(7.0));
  CHECK_THROWS(approximate_constant(fixed_predictor(Mode::real, {}), 3.0));

  const double pi = std::numbers::pi;
  const double atan_err = std::fabs(2 * std::atan(std::exp(10.0)) - pi) / pi;
  CHECK(constant_error(parse_prefix("mul 2 atan exp 10", Mode::real), pi) == doctest::Approx(atan_err).epsilon(1e-6));
  CHECK(constant_error(parse_prefix("div sqr pi 6", Mode::real), 1.64493) ==
        doctest::Approx(std::fabs(pi * pi / 6 - 1.64493) / 1.64493).epsilon(1e-9));
  CHECK(constant_error(parse_prefix("div 10 sqr 9", Mode::real), 0.123456789) ==
        doctest::Approx(std::fabs(10.0 / 81 - 0.123456789) / 0.123456789).epsilon(1e-6));
}

TEST_CASE("function approximation") {
  const auto id = approximate_function(fixed_predictor(Mode::real, {"n", "add n 1"}), named_oracle("identity"));
  REQUIRE(id.size() == 2);
  CHECK(id[0].text == "n");
  CHECK(id[0].extrapolation_error == 0.0);
  CHECK(id[0].input_error == 0.0);

  const auto asinh = approximate_function(fixed_predictor(Mode::real, {"log add n sqrt add sqr n 1"}),
                                          named_oracle("arcsinh"), 25, 25);
  REQUIRE(asinh.size() == 1);
  CHECK(asinh[0].extrapolation_error <= 1e-12);
  CHECK(asinh[0].input_error <= 1e-12);

  CHECK_THROWS_AS(approximate_function(fixed_predictor(Mode::real, {"n"}), named_oracle("arctanh_inv"), 5, 1, 1),
                  std::domain_error);
  CHECK(named_oracle("arccosh")(1.0) == 0.0);
  CHECK_THROWS_AS(named_oracle("gamma"), std::invalid_argument);
}

TEST_CASE("special-function oracles") {
  // Reference values computed independently (series and known constants).
  CHECK(named_oracle("catalan")(5) == doctest::Approx(42).epsilon(1e-12));
  CHECK(named_oracle("catalan")(10) == doctest::Approx(16796).epsilon(1e-12));
  CHECK(named_oracle("dawson")(1) == doctest::Approx(0.5380795069127684).epsilon(1e-10));
  CHECK(named_oracle("dawson")(30) == doctest::Approx(0.016676).epsilon(1e-4));
  CHECK(named_oracle("fresnel_s")(1) == doctest::Approx(0.4382591473903548).epsilon(1e-10));
  CHECK(named_oracle("fresnel_c")(1) == doctest::Approx(0.7798934003768228).epsilon(1e-10));
  CHECK(named_oracle("j0")(1) == doctest::Approx(0.7651976865579666).epsilon(1e-12));
  CHECK(named_oracle("i0")(1) == doctest::Approx(1.2660658777520082).epsilon(1e-12));
  CHECK(named_oracle("polynomial:7,5,3")(2) == 29);
  CHECK(named_oracle("legendre:3")(2) == 17);
  CHECK(named_oracle("hermite:2")(3) == 34);
  CHECK(named_oracle("arctanh_inv")(2) == doctest::Approx(std::atanh(0.5)));
}

TEST_CASE("bessel asymptotic error shrinks") {
  const auto expr = parse_prefix("div add sin n cos n sqrt mul pi n", Mode::real);
  const auto profile = error_profile(expr, named_oracle("j0"), 20, 30);
  REQUIRE(profile.n.size() == 11);
  // Absolute error of the leading term is O(n^-3/2): its envelope n^1.5 |err| stays bounded.
  double first = 0, second = 0;
  for (std::size_t i = 0; i < profile.n.size(); ++i) {
    (profile.n[i] <= 25 ? first : second) = std::max(profile.n[i] <= 25 ? first : second, profile.absolute[i]);
  }
  CHECK(second < first);
  CHECK_THROWS(error_profile(parse_prefix("u1", Mode::real), named_oracle("j0"), 1, 2));
}

TEST_CASE("refinement recovers a quadratic") {
  std::vector<BigInt> f;
  for (int n = 1; n <= 12; ++n) {
    f.push_back(3 * n * n + 5 * n + 7);
  }
  const auto result = iterative_refinement(monomial_oracle(), single(f), 3, Mode::integer);
  REQUIRE(result.rounds.size() == 3);
  CHECK_FALSE(result.stopped_early);
  CHECK(result.rounds[0].term == "mul mul 3 n n");
  CHECK(result.rounds[1].term == "mul 5 n");
  CHECK(result.rounds[2].term == "7");
  CHECK(result.rounds[2].max_error == 0.0);
  for (std::size_t i = 1; i < result.rounds.size(); ++i) {
    CHECK(result.rounds[i].max_error <= result.rounds[i - 1].max_error);
  }
  REQUIRE(result.total);
  const RecurrenceRelation total(Mode::integer, {*result.total});
  const auto values = extrapolate(total, single(std::vector<BigInt>{}), 20, 1);
  for (int n = 1; n <= 20; ++n) {
    CHECK(std::get<IntTracks>(values)[0][static_cast<std::size_t>(n - 1)] == 3 * n * n + 5 * n + 7);
  }
}

TEST_CASE("refinement stops on an exact first round") {
  std::vector<BigInt> f;
  for (int n = 1; n <= 8; ++n) {
    f.push_back(4 * n);
  }
  const auto result = iterative_refinement(monomial_oracle(), single(f), 3, Mode::integer);
  REQUIRE(result.rounds.size() == 1);
  CHECK(result.rounds[0].max_error == 0.0);

  FunctionPredictor silent(Task::symbolic, [](const SequenceData&, int) { return std::vector<Candidate>{}; });
  const auto none = iterative_refinement(silent, single(f), 3, Mode::integer);
  CHECK(none.stopped_early);
  CHECK_FALSE(none.total);
}

TEST_CASE("library monomial oracle and integer expressions") {
  for (long v : {0L, 7L, -10L, 11L, 31L, 100L, -437L, 123456789L}) {
    const auto expr = integer_expression(v);
    const RecurrenceRelation rel(Mode::integer, {expr});
    CHECK(std::get<IntTracks>(extrapolate(rel, single(std::vector<BigInt>{}), 1))[0][0] == v);
    CHECK_NOTHROW(encode_relation(rel));
  }
  std::vector<BigInt> f;
  for (int n = 1; n <= 12; ++n) {
    f.push_back(3 * n * n + 5 * n + 7);
  }
  const auto result = iterative_refinement(LeadingMonomialPredictor(), single(f), 3, Mode::integer);
  REQUIRE(result.rounds.size() == 3);
  CHECK(result.rounds[2].max_error == 0.0);
  const auto zero = LeadingMonomialPredictor().predict(single(std::vector<BigInt>{0, 0, 0}), 1);
  CHECK(zero[0].tokens == std::vector<std::string>{"0"});
}

}  // TEST_SUITE
