#include "recur/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <set>

#include "recur/dataset.hpp"

namespace recur {

namespace {

constexpr char kMagic[8] = {'R', 'E', 'C', 'U', 'R', 'C', 'K', 'P'};
constexpr std::uint32_t kCheckpointVersion = 1;

nlohmann::json encoding_to_json(const EncodingConfig& e) {
  return {{"base", e.integer.base},
          {"mantissa_tokens", e.real.mantissa_tokens},
          {"min_exponent", e.real.min_exponent},
          {"max_exponent", e.real.max_exponent},
          {"max_degree", e.max_degree}};
}

EncodingConfig encoding_from_json(const nlohmann::json& j, EncodingConfig e) {
  e.integer.base = j.value("base", e.integer.base);
  e.real.mantissa_tokens = j.value("mantissa_tokens", e.real.mantissa_tokens);
  e.real.min_exponent = j.value("min_exponent", e.real.min_exponent);
  e.real.max_exponent = j.value("max_exponent", e.real.max_exponent);
  e.max_degree = j.value("max_degree", e.max_degree);
  e.validate();
  return e;
}

std::vector<int> output_ids(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) {
    ids.push_back(vocab.id(t));
  }
  return ids;
}

SpecialIds special_ids(const Vocabulary& vocab) { return {vocab.pad(), vocab.bos(), vocab.eos()}; }

template <class T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <class T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof value);
  if (!in) {
    throw CheckpointError("checkpoint is truncated");
  }
  return value;
}

void write_floats(std::ostream& out, const ParamVector<float>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
}

void read_floats(std::istream& in, ParamVector<float>& v, std::size_t count) {
  v.resize(count);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count * sizeof(float)));
  if (!in) {
    throw CheckpointError("checkpoint is truncated");
  }
}

struct CheckpointData {
  nlohmann::json header;
  ParamVector<float> params, m, v;
};

nlohmann::json read_header(std::istream& in, const std::filesystem::path& path) {
  if (!in) {
    throw CheckpointError("cannot open checkpoint " + path.string());
  }
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw CheckpointError(path.string() + " is not a checkpoint");
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = read_pod<std::uint64_t>(in);
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) {
    throw CheckpointError("checkpoint is truncated");
  }
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("corrupt checkpoint header: " + std::string(e.what()));
  }
}

CheckpointData read_checkpoint(const std::filesystem::path& path, bool with_moments) {
  std::ifstream in(path, std::ios::binary);
  CheckpointData d;
  d.header = read_header(in, path);
  const auto n = d.header.at("param_count").get<std::size_t>();
  read_floats(in, d.params, n);
  if (with_moments) {
    read_floats(in, d.m, n);
    read_floats(in, d.v, n);
  }
  return d;
}

void check_vocabulary(const nlohmann::json& header, const Vocabulary& vocab) {
  const auto hash = header.at("vocab_hash").get<std::string>();
  if (hash != vocab.hash()) {
    throw CheckpointError("vocabulary hash mismatch: checkpoint " + hash + ", current " + vocab.hash());
  }
}

}  // namespace

double Schedule::lr_at(std::int64_t step) const {
  if (step < 0) {
    throw std::invalid_argument("negative step");
  }
  if (step < warmup) {
    return initial + (peak - initial) * static_cast<double>(step) / static_cast<double>(warmup);
  }
  if (warmup <= 0) {
    return peak;
  }
  return peak * std::sqrt(static_cast<double>(warmup) / static_cast<double>(step));
}

std::vector<std::string> task_output_tokens(const TaskSpec& spec, const GeneratorConfig& gen) {
  if (spec.task == Task::symbolic) {
    return relation_output_tokens(gen.mode, spec.encoding, gen.dimensions, gen.mode == Mode::real && gen.real_prefactors);
  }
  return number_output_tokens(gen.mode, spec.encoding);
}

std::optional<std::vector<int>> encode_input(const SequenceData& observed, const Vocabulary& vocab,
                                             const EncodingConfig& encoding, int max_positions) {
  try {
    auto tokens = encode_sequence(observed, encoding);
    if (tokens.empty() || static_cast<int>(tokens.size()) > max_positions) {
      return std::nullopt;
    }
    return vocab.to_ids(tokens);
  } catch (const EncodingError&) {
    return std::nullopt;
  }
}

std::optional<Example> make_example(const GeneratedSample& sample, const Vocabulary& vocab, const TaskSpec& spec,
                                    int max_positions) {
  auto source = encode_input(sample.observed(), vocab, spec.encoding, max_positions);
  if (!source) {
    return std::nullopt;
  }
  try {
    std::vector<std::string> target;
    if (spec.task == Task::symbolic) {
      target = encode_relation(sample.relation, spec.encoding);
    } else {
      if (length(sample.future) < static_cast<std::size_t>(spec.n_pred)) {
        return std::nullopt;
      }
      target = encode_sequence(slice(sample.future, 0, static_cast<std::size_t>(spec.n_pred)), spec.encoding);
    }
    if (static_cast<int>(target.size()) + 1 > max_positions) {
      return std::nullopt;
    }
    return Example{std::move(*source), vocab.to_ids(target)};
  } catch (const EncodingError&) {
    return std::nullopt;
  }
}

void TrainConfig::validate() const {
  model.validate();
  generator.validate();
  task.encoding.validate();
  if (steps < 0 || batch_size < 1 || epoch_steps < 1 || corpus_size < 0) {
    throw std::invalid_argument("steps, batch_size, epoch_steps and corpus_size must be non-negative (batch >= 1)");
  }
  if (task.task == Task::numeric && task.n_pred < 1) {
    throw std::invalid_argument("n_pred must be at least 1");
  }
  if (!(schedule.peak > 0) || schedule.initial < 0 || schedule.warmup < 0) {
    throw std::invalid_argument("invalid learning-rate schedule");
  }
  if (!(sigma_train >= 0)) {
    throw std::invalid_argument("sigma_train must be non-negative");
  }
}

TrainConfig toy_preset() {
  TrainConfig c;
  c.model = ModelConfig::desk();
  c.generator.mode = Mode::integer;
  c.generator.max_ops = 2;
  c.generator.max_degree = 2;
  c.generator.min_length = 25;
  c.generator.max_length = 25;
  c.steps = 12000;
  c.batch_size = 32;
  c.schedule = {1e-7, 1e-3, 2000};
  c.seed = 1;
  c.log_every = 500;
  c.checkpoint_every = 2000;
  return c;
}

TrainConfig full_preset() {
  TrainConfig c;
  c.model = ModelConfig::full();
  c.schedule = Schedule{};
  c.batch_size = 512;
  c.steps = 250LL * 5'000'000 / 512;
  c.epoch_steps = 5'000'000 / 512;
  return c;
}

nlohmann::json train_config_to_json(const TrainConfig& cfg) {
  return {{"task", std::string(task_name(cfg.task.task))},
          {"n_pred", cfg.task.n_pred},
          {"encoding", encoding_to_json(cfg.task.encoding)},
          {"model", model_config_to_json(cfg.model)},
          {"generator", config_to_json(cfg.generator)},
          {"steps", cfg.steps},
          {"batch_size", cfg.batch_size},
          {"lr_initial", cfg.schedule.initial},
          {"lr_peak", cfg.schedule.peak},
          {"warmup", cfg.schedule.warmup},
          {"beta1", cfg.adam.beta1},
          {"beta2", cfg.adam.beta2},
          {"adam_eps", cfg.adam.eps},
          {"clip_norm", cfg.adam.clip_norm},
          {"sigma_train", cfg.sigma_train},
          {"seed", cfg.seed},
          {"epoch_steps", cfg.epoch_steps},
          {"corpus_size", cfg.corpus_size},
          {"log_every", cfg.log_every},
          {"eval_every", cfg.eval_every},
          {"checkpoint_every", cfg.checkpoint_every}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  if (j.contains("task")) {
    c.task.task = parse_task(j.at("task").get<std::string>());
  }
  c.task.n_pred = j.value("n_pred", c.task.n_pred);
  if (j.contains("encoding")) {
    c.task.encoding = encoding_from_json(j.at("encoding"), c.task.encoding);
  }
  if (j.contains("model")) {
    c.model = model_config_from_json(j.at("model"), c.model);
  }
  if (j.contains("generator")) {
    c.generator = config_from_json(j.at("generator"), c.generator);
  }
  c.steps = j.value("steps", c.steps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.schedule.initial = j.value("lr_initial", c.schedule.initial);
  c.schedule.peak = j.value("lr_peak", c.schedule.peak);
  c.schedule.warmup = j.value("warmup", c.schedule.warmup);
  c.adam.beta1 = j.value("beta1", c.adam.beta1);
  c.adam.beta2 = j.value("beta2", c.adam.beta2);
  c.adam.eps = j.value("adam_eps", c.adam.eps);
  c.adam.clip_norm = j.value("clip_norm", c.adam.clip_norm);
  c.sigma_train = j.value("sigma_train", c.sigma_train);
  c.seed = j.value("seed", c.seed);
  c.epoch_steps = j.value("epoch_steps", c.epoch_steps);
  c.corpus_size = j.value("corpus_size", c.corpus_size);
  c.log_every = j.value("log_every", c.log_every);
  c.eval_every = j.value("eval_every", c.eval_every);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.validate();
  return c;
}

Transformer<float> make_model(const TrainConfig& cfg, const Vocabulary& vocab) {
  return Transformer<float>(cfg.model, vocab.size(), output_ids(task_output_tokens(cfg.task, cfg.generator), vocab),
                            special_ids(vocab));
}

namespace {

GeneratorConfig stream_config(const TrainConfig& cfg) {
  GeneratorConfig g = cfg.generator;
  if (cfg.task.task == Task::numeric) {
    g.extra_terms = std::max(g.extra_terms, cfg.task.n_pred);
  }
  return g;
}

}  // namespace

Trainer::Trainer(TrainConfig cfg, const Vocabulary& vocab) : Trainer(std::move(cfg), vocab, true) {}

Trainer::Trainer(TrainConfig cfg, const Vocabulary& vocab, bool initialize)
    : cfg_((cfg.validate(), std::move(cfg))),
      vocab_(&vocab),
      vocab_hash_(vocab.hash()),
      output_tokens_(task_output_tokens(cfg_.task, cfg_.generator)),
      model_(make_model(cfg_, vocab)),
      stream_(stream_config(cfg_), cfg_.seed, 0) {
  const std::size_t n = model_.parameter_count();
  m_.assign(n, 0.0F);
  v_.assign(n, 0.0F);
  grad_.assign(n, 0.0F);
  if (initialize) {
    model_.init(cfg_.seed);
  }
  build_corpus();
}

void Trainer::build_corpus() {
  if (cfg_.corpus_size == 0) {
    return;
  }
  // Inputs are kept unique so that every corpus entry has a single target.
  SampleStream s(stream_config(cfg_), cfg_.seed, 1);
  std::set<std::vector<int>> seen;
  while (static_cast<int>(corpus_.size()) < cfg_.corpus_size) {
    auto batch = make_training_batch(s, cfg_.sigma_train, 1);
    auto ex = make_example(batch.front(), *vocab_, cfg_.task, cfg_.model.max_positions);
    if (ex && seen.insert(ex->source).second) {
      corpus_.push_back(std::move(*ex));
    }
  }
}

std::vector<Example> Trainer::next_batch() {
  std::vector<Example> batch;
  batch.reserve(static_cast<std::size_t>(cfg_.batch_size));
  if (!corpus_.empty()) {
    const auto start = static_cast<std::size_t>(step_) * static_cast<std::size_t>(cfg_.batch_size);
    for (std::size_t i = 0; i < static_cast<std::size_t>(cfg_.batch_size); ++i) {
      batch.push_back(corpus_[(start + i) % corpus_.size()]);
    }
    return batch;
  }
  while (static_cast<int>(batch.size()) < cfg_.batch_size) {
    auto samples = make_training_batch(stream_, cfg_.sigma_train, 1);
    if (auto ex = make_example(samples.front(), *vocab_, cfg_.task, cfg_.model.max_positions)) {
      batch.push_back(std::move(*ex));
    }
  }
  return batch;
}

double Trainer::train_step() {
  const auto batch = next_batch();
  std::fill(grad_.begin(), grad_.end(), 0.0F);
  Rng dropout_rng = make_rng(cfg_.seed, 2, static_cast<std::uint64_t>(step_));
  const double loss = model_.loss(batch, &grad_, cfg_.model.dropout > 0 ? &dropout_rng : nullptr);
  if (!std::isfinite(loss)) {
    throw TrainingDiverged("loss is " + std::to_string(loss) + " at step " + std::to_string(step_) +
                           "; lower lr_peak or enable clip_norm");
  }
  double norm2 = 0.0;
  for (float g : grad_) {
    norm2 += static_cast<double>(g) * static_cast<double>(g);
  }
  const double norm = std::sqrt(norm2);
  if (!std::isfinite(norm)) {
    throw TrainingDiverged("non-finite gradient at step " + std::to_string(step_));
  }
  const float clip = cfg_.adam.clip_norm > 0 && norm > cfg_.adam.clip_norm
                         ? static_cast<float>(cfg_.adam.clip_norm / norm)
                         : 1.0F;
  const double lr = cfg_.schedule.lr_at(step_);
  const double t = static_cast<double>(step_ + 1);
  const auto b1 = static_cast<float>(cfg_.adam.beta1);
  const auto b2 = static_cast<float>(cfg_.adam.beta2);
  const auto step_size = static_cast<float>(lr / (1.0 - std::pow(cfg_.adam.beta1, t)));
  const auto bc2 = static_cast<float>(1.0 / std::sqrt(1.0 - std::pow(cfg_.adam.beta2, t)));
  const auto eps = static_cast<float>(cfg_.adam.eps);
  auto& p = model_.parameters();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const float g = grad_[i] * clip;
    m_[i] = b1 * m_[i] + (1.0F - b1) * g;
    v_[i] = b2 * v_[i] + (1.0F - b2) * g * g;
    p[i] -= step_size * m_[i] / (std::sqrt(v_[i]) * bc2 + eps);
  }
  ++step_;
  return loss;
}

void Trainer::set_steps(std::int64_t steps) {
  if (steps < 1) {
    throw std::invalid_argument("steps must be >= 1");
  }
  cfg_.steps = steps;
}

double Trainer::run(const TrainHooks& hooks) {
  double window = 0.0;
  int count = 0;
  double last = std::nan("");
  auto t0 = std::chrono::steady_clock::now();
  std::int64_t t0_step = step_;
  while (step_ < cfg_.steps) {
    window += train_step();
    ++count;
    const bool log = cfg_.log_every > 0 && step_ % cfg_.log_every == 0;
    const bool eval = cfg_.eval_every > 0 && step_ % cfg_.eval_every == 0 && hooks.evaluate;
    if (log || eval || step_ == cfg_.steps) {
      const auto now = std::chrono::steady_clock::now();
      const double secs = std::chrono::duration<double>(now - t0).count();
      nlohmann::json rec{{"step", step_},
                         {"epoch", epoch()},
                         {"loss", window / count},
                         {"lr", cfg_.schedule.lr_at(step_ - 1)},
                         {"samples_per_s", secs > 0 ? static_cast<double>((step_ - t0_step) * cfg_.batch_size) / secs
                                                    : 0.0}};
      if (eval) {
        rec["eval"] = hooks.evaluate(model_, step_);
      }
      last = window / count;
      window = 0.0;
      count = 0;
      t0 = std::chrono::steady_clock::now();
      t0_step = step_;
      if (hooks.metrics != nullptr) {
        *hooks.metrics << rec.dump() << '\n';
        hooks.metrics->flush();
      }
      if (hooks.on_record) {
        hooks.on_record(rec);
      }
    }
    if (hooks.checkpoint && cfg_.checkpoint_every > 0 && step_ % cfg_.checkpoint_every == 0) {
      save(*hooks.checkpoint);
    }
  }
  if (hooks.checkpoint) {
    save(*hooks.checkpoint);
  }
  return last;
}

void Trainer::save(const std::filesystem::path& path) const {
  nlohmann::json header{{"config", train_config_to_json(cfg_)},
                        {"vocab_hash", vocab_hash_},
                        {"vocab_size", vocab_->size()},
                        {"output_tokens", output_tokens_},
                        {"step", step_},
                        {"epoch", epoch()},
                        {"stream_counter", stream_.counter()},
                        {"param_count", model_.parameter_count()}};
  const std::string text = header.dump();
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw CheckpointError("cannot write " + tmp);
    }
    out.write(kMagic, sizeof kMagic);
    write_pod(out, kCheckpointVersion);
    write_pod(out, static_cast<std::uint64_t>(text.size()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    write_floats(out, model_.parameters());
    write_floats(out, m_);
    write_floats(out, v_);
    if (!out) {
      throw CheckpointError("failed writing " + tmp);
    }
  }
  std::filesystem::rename(tmp, path);
}

Trainer Trainer::resume(const std::filesystem::path& path, const Vocabulary& vocab) {
  auto data = read_checkpoint(path, true);
  check_vocabulary(data.header, vocab);
  Trainer t(train_config_from_json(data.header.at("config")), vocab, false);
  if (data.params.size() != t.model_.parameter_count()) {
    throw CheckpointError("checkpoint parameter count does not match its config");
  }
  t.model_.parameters() = std::move(data.params);
  t.m_ = std::move(data.m);
  t.v_ = std::move(data.v);
  t.step_ = data.header.at("step").get<std::int64_t>();
  t.stream_.set_counter(data.header.at("stream_counter").get<std::uint64_t>());
  return t;
}

nlohmann::json read_checkpoint_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return read_header(in, path);
}

LoadedModel load_model(const std::filesystem::path& path, const Vocabulary& vocab) {
  auto data = read_checkpoint(path, false);
  check_vocabulary(data.header, vocab);
  TrainConfig cfg = train_config_from_json(data.header.at("config"));
  auto tokens = data.header.at("output_tokens").get<std::vector<std::string>>();
  Transformer<float> model(cfg.model, vocab.size(), output_ids(tokens, vocab), special_ids(vocab));
  if (data.params.size() != model.parameter_count()) {
    throw CheckpointError("checkpoint parameter count does not match its config");
  }
  model.parameters() = std::move(data.params);
  return {std::move(cfg), std::move(model), std::move(tokens), data.header.at("step").get<std::int64_t>()};
}

}  // namespace recur
