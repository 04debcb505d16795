#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "recur/encoding.hpp"
#include "recur/generator.hpp"
#include "recur/transformer.hpp"

namespace recur {

/// Linear warmup from `initial` to `peak` over `warmup` steps, then peak * sqrt(warmup / step).
struct Schedule {
  double initial = 1e-7;
  double peak = 2e-4;
  std::int64_t warmup = 10000;

  double lr_at(std::int64_t step) const;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Global gradient-norm clip; 0 disables it.
  double clip_norm = 1.0;
};

/// What the model reads and emits.
struct TaskSpec {
  Task task = Task::symbolic;
  EncodingConfig encoding{};
  /// Numeric task: number of future terms in the target.
  int n_pred = 10;
};

/// Output tokens of `spec` for data drawn from `gen` (EOS first).
std::vector<std::string> task_output_tokens(const TaskSpec& spec, const GeneratorConfig& gen);

/// Encoder input of a sequence; nullopt when it cannot be encoded or exceeds max_positions.
std::optional<std::vector<int>> encode_input(const SequenceData& observed, const Vocabulary& vocab,
                                             const EncodingConfig& encoding, int max_positions);

/// Model example of a generated sample: the observed terms as source; the
/// relation (symbolic) or the next n_pred clean terms (numeric) as target.
/// nullopt when the sample does not fit the vocabulary or max_positions.
std::optional<Example> make_example(const GeneratedSample& sample, const Vocabulary& vocab, const TaskSpec& spec,
                                    int max_positions);

struct TrainConfig {
  TaskSpec task{};
  ModelConfig model{};
  GeneratorConfig generator{};
  std::int64_t steps = 20000;
  int batch_size = 32;
  Schedule schedule{1e-7, 1e-3, 2000};
  AdamConfig adam{};
  double sigma_train = 0.0;
  std::uint64_t seed = 0;
  /// Steps per epoch (bookkeeping only).
  std::int64_t epoch_steps = 1000;
  /// Nonzero: materialize this many samples once and cycle over them.
  int corpus_size = 0;
  int log_every = 100;
  int eval_every = 0;
  int checkpoint_every = 0;

  void validate() const;
};

/// Desk preset: small model on integer relations with o <= 2, d <= 2 and l = 25.
TrainConfig toy_preset();
/// Full-scale architecture, default grammar and schedule, batches of 512.
TrainConfig full_preset();

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainHooks {
  /// Held-out evaluation; its fields join the metrics record.
  std::function<nlohmann::json(const Transformer<float>&, std::int64_t step)> evaluate;
  /// Line-delimited metrics records.
  std::ostream* metrics = nullptr;
  /// Written every checkpoint_every steps and at the end of run().
  std::optional<std::filesystem::path> checkpoint;
  /// Called with every metrics record.
  std::function<void(const nlohmann::json&)> on_record;
};

/// Single-writer training state: parameters, Adam moments, step and stream counters.
class Trainer {
 public:
  Trainer(TrainConfig cfg, const Vocabulary& vocab);

  /// Restores a checkpoint; throws CheckpointError when the vocabulary hash differs.
  static Trainer resume(const std::filesystem::path& path, const Vocabulary& vocab);

  /// Draws the next batch and applies one Adam update; returns the batch loss.
  double train_step();
  /// Trains until `config().steps`; returns the last logged mean loss.
  double run(const TrainHooks& hooks = {});

  /// Changes the total step budget, e.g. to continue a finished run.
  void set_steps(std::int64_t steps);

  /// Next batch of the data stream (advances it).
  std::vector<Example> next_batch();

  void save(const std::filesystem::path& path) const;

  const TrainConfig& config() const { return cfg_; }
  const Transformer<float>& model() const { return model_; }
  Transformer<float>& model() { return model_; }
  std::int64_t step() const { return step_; }
  std::int64_t epoch() const { return step_ / cfg_.epoch_steps; }
  const std::string& vocab_hash() const { return vocab_hash_; }
  const std::vector<std::string>& output_tokens() const { return output_tokens_; }
  /// Frozen corpus (empty when streaming).
  const std::vector<Example>& corpus() const { return corpus_; }

 private:
  Trainer(TrainConfig cfg, const Vocabulary& vocab, bool initialize);
  void build_corpus();

  TrainConfig cfg_;
  const Vocabulary* vocab_;
  std::string vocab_hash_;
  std::vector<std::string> output_tokens_;
  Transformer<float> model_;
  ParamVector<float> m_, v_, grad_;
  std::int64_t step_ = 0;
  SampleStream stream_;
  std::vector<Example> corpus_;
};

/// Model and training config of a checkpoint, for inference.
struct LoadedModel {
  TrainConfig config;
  Transformer<float> model;
  std::vector<std::string> output_tokens;
  std::int64_t step = 0;
};
LoadedModel load_model(const std::filesystem::path& path, const Vocabulary& vocab);

/// JSON header of a checkpoint (config, vocab_hash, output_tokens, step, ...).
nlohmann::json read_checkpoint_header(const std::filesystem::path& path);

/// Model sized for `cfg` over `vocab`, parameters zeroed.
Transformer<float> make_model(const TrainConfig& cfg, const Vocabulary& vocab);

}  // namespace recur
