#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "recur/encoding.hpp"
#include "recur/generator.hpp"
#include "recur/metrics.hpp"
#include "recur/oracle.hpp"
#include "recur/transformer.hpp"

namespace recur {

/// One decoded hypothesis: output tokens (EOS excluded) and its model score.
struct Candidate {
  std::vector<std::string> tokens;
  double score = 0.0;
};

/// Anything that maps an observed sequence to ranked output hypotheses.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual Task task() const = 0;
  /// Hypotheses for `observed`, best model score first. beam_size 1 asks for greedy decoding.
  virtual std::vector<Candidate> predict(const SequenceData& observed, int beam_size) const = 0;
};

/// Transformer-backed predictor. Safe to share across threads.
class ModelPredictor : public Predictor {
 public:
  ModelPredictor(const Transformer<float>& model, const Vocabulary& vocab, Task task, EncodingConfig encoding = {},
                 int max_len = 0);
  Task task() const override { return task_; }
  std::vector<Candidate> predict(const SequenceData& observed, int beam_size) const override;

 private:
  const Transformer<float>* model_;
  const Vocabulary* vocab_;
  Task task_;
  EncodingConfig encoding_;
  int max_len_;
};

/// Predictor defined by a callback (scripted oracles, stubs).
class FunctionPredictor : public Predictor {
 public:
  using Fn = std::function<std::vector<Candidate>(const SequenceData&, int)>;
  FunctionPredictor(Task task, Fn fn) : task_(task), fn_(std::move(fn)) {}
  Task task() const override { return task_; }
  std::vector<Candidate> predict(const SequenceData& observed, int beam_size) const override {
    return fn_(observed, beam_size);
  }

 private:
  Task task_;
  Fn fn_;
};

/// Symbolic baseline: exhaustive enumeration fit over a small space; hypotheses
/// are the top fits in Occam order.
class EnumerationPredictor : public Predictor {
 public:
  explicit EnumerationPredictor(EnumerationSpace space, double tau = 0.0, bool force = false)
      : space_(std::move(space)), tau_(tau), force_(force) {}
  Task task() const override { return Task::symbolic; }
  std::vector<Candidate> predict(const SequenceData& observed, int beam_size) const override;

 private:
  EnumerationSpace space_;
  double tau_;
  bool force_;
};

/// Scripted integer oracle: the leading monomial a n^k of the observed values,
/// read off their finite differences (k-th difference = a k!).
class LeadingMonomialPredictor : public Predictor {
 public:
  Task task() const override { return Task::symbolic; }
  std::vector<Candidate> predict(const SequenceData& observed, int beam_size) const override;
};

/// Expression for an integer built from the constant pool [-10, 10] (e.g. 31 -> add mul 3 10 1).
Expression integer_expression(const BigInt& value);

/// Sequence in the numeric type of `mode` (reals rounded to integers for integer mode).
SequenceData as_mode(const SequenceData& data, Mode mode);

/// `count` terms following `history`, computed by `rel`. Stops early on a domain error.
SequenceData extrapolate(const RecurrenceRelation& rel, const SequenceData& history, int count,
                         std::int64_t first_index = 0);

/// Max relative error of `rel` re-unrolled from the first d observed terms
/// against every observed term. Infinite when d >= observed length or on a domain error.
double reconstruction_error(const RecurrenceRelation& rel, const SequenceData& observed, std::int64_t first_index = 0);

struct RankedCandidate {
  RecurrenceRelation relation;
  std::string text;
  double input_error = 0.0;
  double score = 0.0;
  std::size_t length = 0;
  std::size_t beam_rank = 0;
};

struct Ranking {
  std::vector<RankedCandidate> candidates;
  int invalid = 0;
};

/// Parses every hypothesis as a relation, drops and counts the unparsable ones,
/// and sorts the rest by (reconstruction error, -score, token length).
Ranking rank_hypotheses(const std::vector<Candidate>& hyps, const SequenceData& observed, Mode mode,
                        const EncodingConfig& encoding = {}, std::int64_t first_index = 0);

struct EvalItem {
  /// What the model reads.
  SequenceData input;
  /// Noise-free input terms: initial conditions and history for extrapolation.
  SequenceData clean;
  /// Ground-truth continuation.
  SequenceData future;
  std::optional<RecurrenceRelation> relation;
  int ops = -1;
  int degree = -1;
  int length = -1;
  std::string family;
  std::uint64_t seed = 0;
  double sigma = 0.0;
  /// Optional external id (catalog number), echoed in the log.
  std::string label;
};

struct EvalSet {
  Mode mode = Mode::integer;
  std::vector<EvalItem> items;
};

/// Worker id of held-out streams; training uses workers 0 and 1.
inline constexpr std::uint64_t kEvalWorker = 1000;

/// `count` held-out samples with `future_terms` ground-truth terms each.
EvalSet make_eval_set(const GeneratorConfig& gen, int count, std::uint64_t seed, int future_terms);

struct EvalConfig {
  double tau = 1e-10;
  int n_pred = 10;
  int beam_size = 10;
  /// Symbolic: order the beam by reconstruction error (otherwise by model score).
  bool rank = true;
  /// Truncate inputs to their first n_input terms (the rest joins the future).
  std::optional<int> n_input;
  /// Numeric float model: ground truth is rounded to this relative precision.
  double epsilon = 1e-3;
  std::vector<double> tau_sweep{0.0, 1e-10, 1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 1e-1};
  int workers = 1;

  void validate() const;
};

nlohmann::json eval_config_to_json(const EvalConfig& cfg);
EvalConfig eval_config_from_json(const nlohmann::json& j, EvalConfig base = {});

/// Rounds `x` to the significant digits implied by relative precision `epsilon`.
double round_to_precision(double x, double epsilon);

struct ItemResult {
  std::size_t index = 0;
  std::string status;
  std::string predicted;
  std::vector<double> errors;
  double input_error = kInfiniteError;
  int hypotheses = 0;
  int invalid = 0;
  bool top_invalid = false;
  bool correct = false;
  int ops = -1;
  int degree = -1;
  int length = -1;
  std::string family;
  double sigma = 0.0;
  nlohmann::json detail;
};

struct BucketStat {
  int count = 0;
  int correct = 0;
  double accuracy() const { return count == 0 ? 0.0 : static_cast<double>(correct) / count; }
  bool operator==(const BucketStat&) const = default;
};

struct EvalReport {
  std::string protocol = "evaluate";
  nlohmann::json protocol_info = nlohmann::json::object();
  EvalConfig config;
  Task task = Task::symbolic;
  int count = 0;
  int correct = 0;
  double accuracy = 0.0;
  /// Items whose highest-likelihood hypothesis does not parse.
  double invalid_rate = 0.0;
  /// Unparsable hypotheses over all hypotheses.
  double hypothesis_invalid_rate = 0.0;
  std::map<std::string, std::map<std::string, BucketStat>> buckets;
  std::vector<std::pair<double, double>> tau_curve;
  std::vector<std::pair<int, double>> n_pred_curve;
  std::vector<ItemResult> items;

  nlohmann::json summary() const;
  /// One JSON record per item.
  void write_log(std::ostream& out) const;
};

/// Aggregates per-item results into accuracies, buckets and sweeps.
EvalReport aggregate(std::vector<ItemResult> items, const EvalConfig& cfg, Task task);
/// Reads a per-item log written by EvalReport::write_log.
std::vector<ItemResult> read_item_log(std::istream& in);

EvalReport evaluate(const Predictor& predictor, const EvalSet& set, const EvalConfig& cfg);

/// Inputs corrupted with multiplicative noise sigma_test; scoring uses the clean terms.
EvalReport noise_protocol(const Predictor& predictor, const EvalSet& set, double sigma_test, const EvalConfig& cfg,
                          std::uint64_t seed);

/// Held-out set drawn with initial terms in [low, high], scored at tau = 0.01.
EvalReport shift_protocol(const Predictor& predictor, const GeneratorConfig& gen, int count, std::uint64_t seed,
                          double low, double high, EvalConfig cfg);

/// Row/column accuracy table, values in percent.
struct GridTable {
  std::string title;
  std::string row_header;
  /// Column groups spanning `columns.size() / column_groups.size()` columns each (may be empty).
  std::vector<std::string> column_groups;
  std::vector<std::string> columns;
  std::vector<std::string> row_labels;
  std::vector<std::vector<double>> cells;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

/// sigma_train rows by sigma_test columns.
GridTable noise_grid(const std::vector<std::pair<double, const Predictor*>>& models,
                     const std::vector<double>& sigma_tests, const EvalSet& set, const EvalConfig& cfg,
                     std::uint64_t seed);

/// Relative error of a numeric expression against a target constant.
double constant_error(const Expression& expr, double target);

struct ApproxCandidate {
  std::string text;
  double value = 0.0;
  double error = kInfiniteError;
};

/// Feeds u_n = C n for n = 0..24 and scores each valid hypothesis by the
/// relative error of its slope u_24 / 24 against C (max relative error over
/// all terms for candidates that are not linear in n).
std::vector<ApproxCandidate> approximate_constant(const Predictor& predictor, double constant, int beam_size = 10,
                                                  const EncodingConfig& encoding = {});

using Oracle = std::function<double(double)>;

/// Named oracle families: identity, polynomial:<a0,a1,...>, sinh, cosh, tanh,
/// arcsinh, arccosh, arctanh_inv, catalan, dawson, j0, i0, fresnel_s, fresnel_c.
Oracle named_oracle(const std::string& name);

struct FunctionFit {
  std::string text;
  double input_error = kInfiniteError;
  double extrapolation_error = kInfiniteError;
};

/// Samples u_n = f(n) for n = 1..n_input, predicts, and scores each valid
/// hypothesis by its max relative error at n_input+1..n_input+n_pred.
std::vector<FunctionFit> approximate_function(const Predictor& predictor, const Oracle& oracle, int n_input = 25,
                                              int n_pred = 10, int beam_size = 10,
                                              const EncodingConfig& encoding = {});

/// Per-n absolute and relative error of a closed-form expression against an oracle.
struct ErrorProfile {
  std::vector<std::int64_t> n;
  std::vector<double> absolute;
  std::vector<double> relative;
};
ErrorProfile error_profile(const Expression& expr, const Oracle& oracle, std::int64_t from, std::int64_t to);

struct RefinementRound {
  std::string term;
  double max_error = kInfiniteError;
};

struct RefinementResult {
  std::optional<Expression> total;
  std::vector<RefinementRound> rounds;
  bool stopped_early = false;
};

/// Fits `values` (u_n for n = first_index, first_index+1, ...) `depth` times,
/// each round fitting the residual of the previous sum with the best
/// non-recurrent candidate.
RefinementResult iterative_refinement(const Predictor& predictor, const SequenceData& values, int depth, Mode mode,
                                      std::int64_t first_index = 1, int beam_size = 10,
                                      const EncodingConfig& encoding = {});

}  // namespace recur
