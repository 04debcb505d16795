// Command-line entry point: generate, train, predict, evaluate, oeis, approx,
// refine, count, enumerate-fit, embed-sim.

#include <charconv>
#include <cmath>
#include <iomanip>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "recur/dataset.hpp"
#include "recur/decode.hpp"
#include "recur/evaluation.hpp"
#include "recur/oeis.hpp"
#include "recur/oracle.hpp"
#include "recur/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace recur;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;
constexpr const char* kOutputRootVar = "RECUR_OUTPUT_ROOT";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Global {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  json file = json::object();
};

json section(const Global& g, const std::string& name) {
  return g.file.contains(name) ? g.file.at(name) : json::object();
}

fs::path output_dir(const Global& g, const std::string& command) {
  fs::path dir;
  if (!g.out.empty()) {
    dir = g.out;
  } else {
    const char* root = std::getenv(kOutputRootVar);
    dir = fs::path(root != nullptr && *root != '\0' ? root : "runs") / command;
  }
  fs::create_directories(dir);
  return dir;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  out << j.dump(2) << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  out << text;
}

void write_effective(const fs::path& dir, const std::string& command, const json& config) {
  write_json(dir / "config.json", {{"command", command}, {"config", config}});
}

void write_report(const fs::path& dir, const std::string& stem, const EvalReport& report) {
  write_json(dir / (stem + ".summary.json"), report.summary());
  std::ofstream log(dir / (stem + ".items.jsonl"));
  if (!log) {
    throw DataError("cannot write item log in " + dir.string());
  }
  report.write_log(log);
}

std::string percent(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100 * x);
  return buf;
}

std::string format_error(double e) {
  if (!std::isfinite(e)) {
    return "inf";
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", e);
  return buf;
}

// Observed terms from the command line, in the numeric type of `mode`.
SequenceData parse_terms(const std::vector<std::string>& raw, Mode mode) {
  if (raw.empty()) {
    throw UsageError("no terms given");
  }
  if (mode == Mode::integer) {
    std::vector<BigInt> terms;
    for (const auto& t : raw) {
      auto v = parse_bigint(t);
      if (!v) {
        throw UsageError("not an integer: '" + t + "'");
      }
      terms.push_back(*v);
    }
    return single(std::move(terms));
  }
  std::vector<double> terms;
  for (const auto& t : raw) {
    double v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
      throw UsageError("not a number: '" + t + "'");
    }
    terms.push_back(v);
  }
  return single(std::move(terms));
}

std::string terms_text(const SequenceData& data) {
  std::string out;
  std::visit(
      [&](const auto& tracks) {
        for (const auto& x : tracks.at(0)) {
          std::ostringstream s;
          s << std::setprecision(12) << x;
          out += (out.empty() ? "" : " ") + s.str();
        }
      },
      data);
  return out;
}

// A predictor plus whatever it borrows from.
struct Backend {
  std::string name;
  Mode mode = Mode::integer;
  Task task = Task::symbolic;
  std::optional<TrainConfig> config;
  std::unique_ptr<Vocabulary> vocab;
  std::unique_ptr<LoadedModel> loaded;
  std::unique_ptr<Predictor> predictor;
  EncodingConfig encoding;
};

struct BackendOptions {
  std::string kind = "model";
  std::string mode = "int";
  int max_ops = 2;
  int max_degree = 2;
  double tau = 0;
  bool force = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--backend", kind, "model | enumerate | monomial")
        ->check(CLI::IsMember({"model", "enumerate", "monomial"}));
    cmd->add_option("--mode", mode, "int | float (non-model backends)")->check(CLI::IsMember({"int", "float"}));
    cmd->add_option("--enum-max-ops", max_ops, "enumerate backend: operator budget");
    cmd->add_option("--enum-max-degree", max_degree, "enumerate backend: recurrence degree");
    cmd->add_option("--enum-tau", tau, "enumerate backend: fit tolerance");
    cmd->add_flag("--force", force, "enumerate backend: allow spaces above the guard");
  }
};

Backend make_backend(const std::string& checkpoint, const BackendOptions& o) {
  Backend b;
  if (o.kind == "model") {
    if (checkpoint.empty()) {
      throw UsageError("--checkpoint is required with the model backend");
    }
    if (!fs::exists(checkpoint)) {
      throw DataError("checkpoint not found: " + checkpoint);
    }
    const TrainConfig cfg = train_config_from_json(read_checkpoint_header(checkpoint).at("config"));
    b.vocab = std::make_unique<Vocabulary>(cfg.task.encoding);
    b.loaded = std::make_unique<LoadedModel>(load_model(checkpoint, *b.vocab));
    b.mode = cfg.generator.mode;
    b.task = cfg.task.task;
    b.encoding = cfg.task.encoding;
    b.config = cfg;
    b.predictor = std::make_unique<ModelPredictor>(b.loaded->model, *b.vocab, b.task, b.encoding);
    b.name = fs::path(checkpoint).stem().string();
    return b;
  }
  b.mode = parse_mode(o.mode);
  b.name = o.kind;
  if (o.kind == "enumerate") {
    b.predictor = std::make_unique<EnumerationPredictor>(
        EnumerationSpace::standard(b.mode, o.max_ops, o.max_degree), o.tau, o.force);
  } else {
    if (b.mode != Mode::integer) {
      throw UsageError("the monomial backend is integer-only");
    }
    b.predictor = std::make_unique<LeadingMonomialPredictor>();
  }
  return b;
}

json backend_json(const Backend& b, const std::string& checkpoint, const BackendOptions& o) {
  json j{{"backend", o.kind}, {"mode", mode_name(b.mode)}, {"task", task_name(b.task)}};
  if (o.kind == "model") {
    j["checkpoint"] = checkpoint;
    j["train_config"] = train_config_to_json(*b.config);
    j["step"] = b.loaded->step;
  } else if (o.kind == "enumerate") {
    j["enum_max_ops"] = o.max_ops;
    j["enum_max_degree"] = o.max_degree;
    j["enum_tau"] = o.tau;
  }
  return j;
}

// Grammar flags shared by generate, train and evaluate.
struct GrammarFlags {
  std::optional<std::string> mode;
  std::optional<int> min_ops, max_ops, max_degree, min_length, max_length, dimensions;
  std::optional<std::string> family;
  std::optional<double> init_low, init_high;

  void add(CLI::App* cmd, bool with_mode = true) {
    if (with_mode) {
      cmd->add_option("--mode", mode, "int | float")->check(CLI::IsMember({"int", "float", "integer", "real"}));
    }
    cmd->add_option("--min-ops", min_ops);
    cmd->add_option("--max-ops", max_ops);
    cmd->add_option("--max-degree", max_degree);
    cmd->add_option("--min-length", min_length);
    cmd->add_option("--max-length", max_length);
    cmd->add_option("--dimensions", dimensions);
    cmd->add_option("--family", family, "all | base | division | sqrt | exponential | trigonometric");
    cmd->add_option("--init-low", init_low);
    cmd->add_option("--init-high", init_high);
  }

  void apply(GeneratorConfig& g) const {
    if (mode) g.mode = parse_mode(*mode);
    if (min_ops) g.min_ops = *min_ops;
    if (max_ops) g.max_ops = *max_ops;
    if (max_degree) g.max_degree = *max_degree;
    if (min_length) g.min_length = *min_length;
    if (max_length) g.max_length = *max_length;
    if (dimensions) g.dimensions = *dimensions;
    if (family) g.family = parse_family(*family);
    if (init_low) g.init_low = *init_low;
    if (init_high) g.init_high = *init_high;
    g.validate();
  }
};

// ---- generate ----

struct GenerateArgs {
  GrammarFlags grammar;
  int count = 1000;
  double sigma_train = 0;
  int extra_terms = 0;
};

void cmd_generate(const Global& g, const GenerateArgs& a) {
  GeneratorConfig gen = config_from_json(section(g, "generator"));
  a.grammar.apply(gen);
  gen.extra_terms = std::max(gen.extra_terms, a.extra_terms);
  if (a.count < 0 || a.sigma_train < 0) {
    throw UsageError("count and sigma-train must be non-negative");
  }
  const std::uint64_t seed = g.seed.value_or(section(g, "generate").value("seed", std::uint64_t{0}));
  SampleStream stream(gen, seed);
  const auto samples = make_training_batch(stream, a.sigma_train, a.count);
  DatasetStats stats;
  for (const auto& s : samples) {
    stats.add(s);
  }
  const fs::path dir = output_dir(g, "generate");
  write_dataset(dir / "dataset.jsonl", samples);
  const json config{{"generator", config_to_json(gen)}, {"count", a.count}, {"seed", seed}, {"sigma_train", a.sigma_train}};
  write_json(dir / "manifest.json", {{"file", "dataset.jsonl"}, {"config", config}, {"stats", stats.to_json()}});
  write_effective(dir, "generate", config);
  std::cout << "wrote " << samples.size() << " samples to " << (dir / "dataset.jsonl").string() << '\n';
  const auto hist = [](const char* name, const std::map<int, std::size_t>& h) {
    std::cout << name << ':';
    for (const auto& [k, v] : h) {
      std::cout << ' ' << k << '=' << v;
    }
    std::cout << '\n';
  };
  hist("ops", stats.ops);
  hist("degree", stats.degree);
  hist("length", stats.length);
}

// ---- train ----

struct TrainArgs {
  GrammarFlags grammar;
  std::string preset = "toy";
  std::optional<std::string> task;
  std::optional<std::int64_t> steps;
  std::optional<int> batch, eval_every, checkpoint_every, log_every, n_pred, mantissa_tokens;
  std::optional<double> lr, warmup, sigma_train;
  std::string resume;
  int eval_count = 100;
  int eval_beam = 1;
  bool quiet = false;
};

void cmd_train(const Global& g, const TrainArgs& a) {
  const fs::path dir = output_dir(g, "train");
  std::unique_ptr<Vocabulary> vocab;
  std::unique_ptr<Trainer> trainer;
  if (!a.resume.empty()) {
    if (!fs::exists(a.resume)) {
      throw DataError("checkpoint not found: " + a.resume);
    }
    const TrainConfig cfg = train_config_from_json(read_checkpoint_header(a.resume).at("config"));
    vocab = std::make_unique<Vocabulary>(cfg.task.encoding);
    trainer = std::make_unique<Trainer>(Trainer::resume(a.resume, *vocab));
    if (a.steps) {
      trainer->set_steps(*a.steps);
    }
  } else {
    TrainConfig cfg;
    if (a.preset == "toy") {
      cfg = toy_preset();
    } else if (a.preset == "full") {
      cfg = full_preset();
    } else if (a.preset != "default") {
      throw UsageError("unknown preset " + a.preset);
    }
    cfg = train_config_from_json(section(g, "train"), cfg);
    a.grammar.apply(cfg.generator);
    if (a.task) cfg.task.task = parse_task(*a.task);
    if (a.steps) cfg.steps = *a.steps;
    if (a.batch) cfg.batch_size = *a.batch;
    if (a.lr) cfg.schedule.peak = *a.lr;
    if (a.warmup) cfg.schedule.warmup = static_cast<std::int64_t>(*a.warmup);
    if (a.sigma_train) cfg.sigma_train = *a.sigma_train;
    if (a.eval_every) cfg.eval_every = *a.eval_every;
    if (a.checkpoint_every) cfg.checkpoint_every = *a.checkpoint_every;
    if (a.log_every) cfg.log_every = *a.log_every;
    if (a.n_pred) cfg.task.n_pred = *a.n_pred;
    if (a.mantissa_tokens) cfg.task.encoding.real.mantissa_tokens = *a.mantissa_tokens;
    if (g.seed) cfg.seed = *g.seed;
    cfg.validate();
    vocab = std::make_unique<Vocabulary>(cfg.task.encoding);
    trainer = std::make_unique<Trainer>(cfg, *vocab);
  }
  const TrainConfig& cfg = trainer->config();
  write_effective(dir, "train", {{"train", train_config_to_json(cfg)}, {"resume", a.resume},
                                 {"eval_count", a.eval_count}, {"eval_beam", a.eval_beam}});
  vocab->save_manifest(dir / "vocab.txt");

  const EvalSet held_out = make_eval_set(cfg.generator, a.eval_count, cfg.seed, cfg.task.n_pred);
  EvalConfig ec;
  ec.beam_size = a.eval_beam;
  ec.workers = g.workers;
  TrainHooks hooks;
  std::ofstream metrics(dir / "metrics.jsonl", a.resume.empty() ? std::ios::trunc : std::ios::app);
  hooks.metrics = &metrics;
  hooks.checkpoint = dir / "checkpoint.ckpt";
  hooks.evaluate = [&](const Transformer<float>& model, std::int64_t) {
    const ModelPredictor p(model, *vocab, cfg.task.task, cfg.task.encoding);
    const auto r = evaluate(p, held_out, ec);
    return json{{"eval_accuracy", r.accuracy}, {"eval_invalid_rate", r.invalid_rate}};
  };
  if (!a.quiet) {
    hooks.on_record = [](const json& rec) { std::cout << rec.dump() << std::endl; };
  }
  const double loss = trainer->run(hooks);
  std::cout << "finished at step " << trainer->step();
  if (std::isfinite(loss)) {
    std::cout << ", loss " << loss;
  }
  std::cout << ", checkpoint " << hooks.checkpoint->string() << '\n';
}

// ---- predict ----

struct PredictArgs {
  BackendOptions backend;
  std::string checkpoint;
  std::vector<std::string> terms;
  int beam = 10;
  int n_pred = 10;
  std::int64_t first_index = 0;
};

void cmd_predict(const Global& g, const PredictArgs& a) {
  const Backend b = make_backend(a.checkpoint, a.backend);
  const SequenceData observed = parse_terms(a.terms, b.mode);
  if (a.beam < 1 || a.n_pred < 1) {
    throw UsageError("beam and n-pred must be >= 1");
  }
  const auto cands = b.predictor->predict(observed, a.beam);
  json out{{"input", sequence_to_json(observed)}, {"candidates", json::array()}};
  if (b.task == Task::numeric) {
    if (cands.empty()) {
      throw DataError("the model produced no prediction (input cannot be encoded?)");
    }
    const auto next = decode_sequence(cands.front().tokens, b.mode, 1, b.encoding);
    std::cout << "next: " << terms_text(next) << '\n';
    out["next"] = sequence_to_json(next);
  } else {
    const Ranking ranking = rank_hypotheses(cands, observed, b.mode, b.encoding, a.first_index);
    if (ranking.candidates.empty()) {
      throw DataError("no valid candidate among " + std::to_string(cands.size()) + " hypotheses");
    }
    for (std::size_t i = 0; i < ranking.candidates.size(); ++i) {
      const auto& c = ranking.candidates[i];
      const auto next = extrapolate(c.relation, observed, a.n_pred, a.first_index);
      std::cout << i + 1 << ". " << to_infix(c.relation) << "   [" << c.text << "]  input error "
                << format_error(c.input_error) << ", score " << c.score + 0.0 << '\n';
      std::cout << "   next: " << terms_text(next) << '\n';
      out["candidates"].push_back({{"relation", c.text}, {"infix", to_infix(c.relation)},
                                   {"input_error", std::isfinite(c.input_error) ? json(c.input_error) : json()},
                                   {"score", c.score}, {"next", sequence_to_json(next)}});
    }
    out["invalid"] = ranking.invalid;
  }
  const fs::path dir = output_dir(g, "predict");
  write_json(dir / "prediction.json", out);
  write_effective(dir, "predict", {{"backend", backend_json(b, a.checkpoint, a.backend)}, {"beam", a.beam},
                                   {"n_pred", a.n_pred}, {"first_index", a.first_index}, {"terms", a.terms}});
}

// ---- evaluate ----

struct EvaluateArgs {
  BackendOptions backend;
  GrammarFlags grammar;
  std::vector<std::string> checkpoints;
  int count = 1000;
  std::optional<double> tau;
  std::optional<int> n_pred, beam, n_input;
  bool greedy = false;
  bool with_greedy = false;
  std::string sweep;
  std::string protocol = "plain";
  std::vector<double> sigma_test{0.0, 0.1, 0.5};
  std::vector<double> sigma_train;
  std::vector<double> init_range;
};

void print_report(const EvalReport& r, const std::string& label) {
  std::cout << label << ": accuracy " << percent(r.accuracy) << " (" << r.correct << "/" << r.count
            << "), invalid " << percent(r.invalid_rate) << '\n';
}

// Accuracy against tau, n_pred or one of the difficulty tags.
std::string sweep_text(const EvalReport& r, const std::string& sweep) {
  std::ostringstream out;
  if (sweep == "tau") {
    out << "tau sweep:\n";
    for (const auto& [t, acc] : r.tau_curve) {
      out << "  tau=" << t << "  " << percent(acc) << '\n';
    }
  } else if (sweep == "n_pred") {
    out << "n_pred sweep:\n";
    for (const auto& [k, acc] : r.n_pred_curve) {
      out << "  n_pred=" << k << "  " << percent(acc) << '\n';
    }
  } else if (const auto it = r.buckets.find(sweep); it != r.buckets.end()) {
    out << sweep << ":\n";
    for (const auto& [key, stat] : it->second) {
      out << "  " << sweep << "=" << key << "  " << percent(stat.accuracy()) << " (" << stat.count << ")\n";
    }
  }
  return out.str();
}

void cmd_evaluate(const Global& g, const EvaluateArgs& a) {
  EvalConfig cfg = eval_config_from_json(section(g, "eval"));
  if (a.tau) cfg.tau = *a.tau;
  if (a.n_pred) cfg.n_pred = *a.n_pred;
  if (a.beam) cfg.beam_size = *a.beam;
  if (a.n_input) cfg.n_input = *a.n_input;
  if (a.greedy) {
    cfg.beam_size = 1;
    cfg.rank = false;
  }
  cfg.workers = g.workers;
  cfg.validate();
  const std::uint64_t seed = g.seed.value_or(0);
  const fs::path dir = output_dir(g, "evaluate");

  std::vector<Backend> backends;
  if (a.backend.kind == "model") {
    if (a.checkpoints.empty()) {
      throw UsageError("--checkpoint is required with the model backend");
    }
    for (const auto& c : a.checkpoints) {
      backends.push_back(make_backend(c, a.backend));
    }
  } else {
    backends.push_back(make_backend("", a.backend));
  }
  GeneratorConfig gen = backends.front().config ? backends.front().config->generator
                                                : config_from_json(section(g, "generator"));
  if (!backends.front().config) {
    gen.mode = backends.front().mode;
  }
  a.grammar.apply(gen);

  json effective{{"eval", eval_config_to_json(cfg)}, {"generator", config_to_json(gen)}, {"count", a.count},
                 {"seed", seed}, {"protocol", a.protocol}, {"backends", json::array()}};
  for (std::size_t i = 0; i < backends.size(); ++i) {
    effective["backends"].push_back(
        backend_json(backends[i], i < a.checkpoints.size() ? a.checkpoints[i] : "", a.backend));
  }

  const Predictor& main = *backends.front().predictor;
  if (a.protocol == "plain" || a.protocol == "noise" || a.protocol == "shift") {
    EvalReport report;
    if (a.protocol == "shift") {
      if (a.init_range.size() != 2) {
        throw UsageError("--init-range takes two values");
      }
      report = shift_protocol(main, gen, a.count, seed, a.init_range[0], a.init_range[1], cfg);
    } else {
      const EvalSet set = make_eval_set(gen, a.count, seed, std::max(cfg.n_pred, 10));
      if (a.protocol == "noise") {
        if (a.sigma_test.size() != 1) {
          throw UsageError("the noise protocol takes one --sigma-test value");
        }
        report = noise_protocol(main, set, a.sigma_test.front(), cfg, seed);
      } else {
        report = evaluate(main, set, cfg);
      }
      if (a.with_greedy && backends.front().task == Task::symbolic && !a.greedy) {
        EvalConfig greedy = cfg;
        greedy.beam_size = 1;
        greedy.rank = false;
        const EvalReport gr = evaluate(main, set, greedy);
        write_report(dir, "greedy", gr);
        print_report(gr, "greedy");
      }
    }
    write_report(dir, "report", report);
    print_report(report, a.protocol == "plain" ? "evaluate" : a.protocol);
    if (!a.sweep.empty()) {
      std::cout << sweep_text(report, a.sweep);
    }
    std::string table = "accuracy " + percent(report.accuracy) + " (" + std::to_string(report.correct) + "/" +
                        std::to_string(report.count) + "), invalid " + percent(report.invalid_rate) + "\n";
    for (const std::string s : {"tau", "n_pred", "ops", "degree", "length", "family"}) {
      table += sweep_text(report, s);
    }
    write_text(dir / "table.txt", table);
  } else if (a.protocol == "noise-grid") {
    std::vector<std::pair<double, const Predictor*>> rows;
    if (a.sigma_train.size() != backends.size()) {
      throw UsageError("give one --sigma-train value per checkpoint");
    }
    for (std::size_t i = 0; i < backends.size(); ++i) {
      rows.emplace_back(a.sigma_train[i], backends[i].predictor.get());
    }
    const EvalSet set = make_eval_set(gen, a.count, seed, std::max(cfg.n_pred, 10));
    const GridTable grid = noise_grid(rows, a.sigma_test, set, cfg, seed);
    write_json(dir / "grid.json", grid.to_json());
    write_text(dir / "table.txt", grid.to_text());
    std::cout << grid.to_text();
  } else {
    throw UsageError("unknown protocol " + a.protocol);
  }
  write_effective(dir, "evaluate", effective);
}

// ---- oeis ----

struct OeisArgs {
  BackendOptions backend;
  std::vector<std::string> checkpoints;
  std::vector<std::string> names;
  std::string stripped;
  std::string keywords;
  std::vector<int> n_input{15, 25};
  std::vector<int> n_pred{1, 10};
  std::optional<double> tau;
  std::optional<std::size_t> subset;
  std::optional<int> beam;
  std::string keyword = "easy";
};

void cmd_oeis(const Global& g, const OeisArgs& a) {
  OeisBenchConfig cfg;
  const json sec = section(g, "oeis");
  cfg.tau = a.tau.value_or(sec.value("tau", cfg.tau));
  cfg.subset_size = a.subset.value_or(sec.value("subset_size", cfg.subset_size));
  cfg.beam_size = a.beam.value_or(sec.value("beam_size", cfg.beam_size));
  cfg.keyword = a.keyword;
  cfg.workers = g.workers;
  cfg.validate();
  for (const auto& path : {a.stripped, a.keywords}) {
    if (!fs::exists(path)) {
      throw DataError("file not found: " + path);
    }
  }
  const StrippedFile data = parse_stripped(fs::path(a.stripped));
  const KeywordFile keywords = parse_keywords(fs::path(a.keywords));
  for (const auto& d : data.diagnostics) {
    std::cerr << a.stripped << ":" << d.line << ": " << d.message << '\n';
  }
  for (const auto& d : keywords.diagnostics) {
    std::cerr << a.keywords << ":" << d.line << ": " << d.message << '\n';
  }

  std::vector<Backend> backends;
  if (a.backend.kind == "model") {
    if (a.checkpoints.empty()) {
      throw UsageError("--checkpoint is required with the model backend");
    }
    for (const auto& c : a.checkpoints) {
      backends.push_back(make_backend(c, a.backend));
    }
  } else {
    backends.push_back(make_backend("", a.backend));
  }
  std::vector<std::pair<std::string, const Predictor*>> models;
  for (std::size_t i = 0; i < backends.size(); ++i) {
    if (backends[i].mode != Mode::integer) {
      throw UsageError("the catalog benchmark needs integer models");
    }
    models.emplace_back(i < a.names.size() ? a.names[i] : backends[i].name, backends[i].predictor.get());
  }

  const fs::path dir = output_dir(g, "oeis");
  json manifests = json::object();
  const GridTable grid = bench_grid(
      models, data.records, keywords.keywords, cfg, a.n_input, a.n_pred,
      [&](const std::string& name, int n_input, const BenchSet& set, const EvalReport& report) {
        manifests["n_input=" + std::to_string(n_input)] = bench_manifest(set);
        write_report(dir, name + ".n_input" + std::to_string(n_input), report);
      });
  write_json(dir / "manifest.json", manifests);
  write_json(dir / "grid.json", grid.to_json());
  write_text(dir / "table.txt", grid.to_text());
  std::cout << grid.to_text();
  json effective{{"stripped", a.stripped}, {"keywords", a.keywords}, {"keyword", cfg.keyword},
                 {"n_input", a.n_input}, {"n_pred", a.n_pred}, {"tau", cfg.tau}, {"subset_size", cfg.subset_size},
                 {"beam_size", cfg.beam_size}, {"backends", json::array()}};
  for (std::size_t i = 0; i < backends.size(); ++i) {
    effective["backends"].push_back(
        backend_json(backends[i], i < a.checkpoints.size() ? a.checkpoints[i] : "", a.backend));
  }
  write_effective(dir, "oeis", effective);
}

// ---- approx ----

struct ApproxArgs {
  BackendOptions backend;
  std::string checkpoint;
  std::optional<double> constant;
  std::string function;
  std::string expression;
  int n_input = 25;
  int n_pred = 10;
  int beam = 10;
};

void cmd_approx(const Global& g, const ApproxArgs& a) {
  if (a.constant.has_value() == !a.function.empty()) {
    throw UsageError("give exactly one of --constant and --function");
  }
  json out = json::object();
  if (!a.expression.empty()) {
    const Expression expr = parse_prefix(a.expression, Mode::real);
    if (a.constant) {
      const double err = constant_error(expr, *a.constant);
      std::cout << to_infix(expr) << " vs " << *a.constant << ": relative error " << format_error(err) << '\n';
      out["expression"] = {{"text", a.expression}, {"relative_error", std::isfinite(err) ? json(err) : json()}};
    } else {
      const auto profile = error_profile(expr, named_oracle(a.function), 1, a.n_input + a.n_pred);
      out["profile"] = json::array();
      for (std::size_t i = 0; i < profile.n.size(); ++i) {
        std::cout << "n=" << profile.n[i] << "  abs " << format_error(profile.absolute[i]) << "  rel "
                  << format_error(profile.relative[i]) << '\n';
        out["profile"].push_back({{"n", profile.n[i]},
                                  {"absolute", std::isfinite(profile.absolute[i]) ? json(profile.absolute[i]) : json()},
                                  {"relative", std::isfinite(profile.relative[i]) ? json(profile.relative[i]) : json()}});
      }
    }
  } else {
    BackendOptions o = a.backend;
    o.mode = "float";
    const Backend b = make_backend(a.checkpoint, o);
    if (b.mode != Mode::real || b.task != Task::symbolic) {
      throw UsageError("approximation needs a symbolic float model");
    }
    out["candidates"] = json::array();
    if (a.constant) {
      for (const auto& c : approximate_constant(*b.predictor, *a.constant, a.beam, b.encoding)) {
        std::cout << c.text << "  value " << std::setprecision(12) << c.value << "  relative error "
                  << format_error(c.error) << '\n';
        out["candidates"].push_back(
            {{"relation", c.text}, {"value", c.value}, {"error", std::isfinite(c.error) ? json(c.error) : json()}});
      }
    } else {
      for (const auto& f : approximate_function(*b.predictor, named_oracle(a.function), a.n_input, a.n_pred, a.beam,
                                                b.encoding)) {
        std::cout << f.text << "  input error " << format_error(f.input_error) << "  extrapolation error "
                  << format_error(f.extrapolation_error) << '\n';
        out["candidates"].push_back(
            {{"relation", f.text},
             {"input_error", std::isfinite(f.input_error) ? json(f.input_error) : json()},
             {"extrapolation_error", std::isfinite(f.extrapolation_error) ? json(f.extrapolation_error) : json()}});
      }
    }
  }
  const fs::path dir = output_dir(g, "approx");
  write_json(dir / "approx.json", out);
  write_effective(dir, "approx",
                  {{"constant", a.constant ? json(*a.constant) : json()}, {"function", a.function},
                   {"expression", a.expression}, {"n_input", a.n_input}, {"n_pred", a.n_pred}, {"beam", a.beam},
                   {"backend", a.backend.kind}, {"checkpoint", a.checkpoint}});
}

// ---- refine ----

struct RefineArgs {
  BackendOptions backend;
  std::string checkpoint;
  std::vector<std::string> terms;
  std::string function;
  int count = 25;
  int depth = 3;
  std::int64_t first_index = 1;
  int beam = 10;
};

void cmd_refine(const Global& g, const RefineArgs& a) {
  const Backend b = make_backend(a.checkpoint, a.backend);
  SequenceData values;
  if (!a.function.empty()) {
    const Oracle f = named_oracle(a.function);
    std::vector<double> v;
    for (int i = 0; i < a.count; ++i) {
      v.push_back(f(static_cast<double>(a.first_index + i)));
    }
    values = as_mode(single(std::move(v)), b.mode);
  } else {
    values = parse_terms(a.terms, b.mode);
  }
  const auto result = iterative_refinement(*b.predictor, values, a.depth, b.mode, a.first_index, a.beam, b.encoding);
  json out{{"rounds", json::array()}, {"stopped_early", result.stopped_early}};
  for (std::size_t i = 0; i < result.rounds.size(); ++i) {
    const auto& r = result.rounds[i];
    std::cout << "round " << i + 1 << ": + " << r.term << "   max error " << format_error(r.max_error) << '\n';
    out["rounds"].push_back({{"term", r.term}, {"max_error", std::isfinite(r.max_error) ? json(r.max_error) : json()}});
  }
  if (result.total) {
    std::cout << "total: " << to_infix(*result.total) << "   [" << to_text(*result.total) << "]\n";
    out["total"] = to_text(*result.total);
  }
  if (result.stopped_early) {
    std::cout << "stopped early: no usable candidate\n";
  }
  const fs::path dir = output_dir(g, "refine");
  write_json(dir / "refine.json", out);
  write_effective(dir, "refine", {{"backend", backend_json(b, a.checkpoint, a.backend)}, {"depth", a.depth},
                                  {"first_index", a.first_index}, {"function", a.function}, {"count", a.count},
                                  {"terms", a.terms}, {"beam", a.beam}});
}

// ---- count ----

struct CountArgs {
  std::string mode = "int";
  int max_ops = 4;
  int max_degree = 2;
};

void cmd_count(const Global& g, const CountArgs& a) {
  const EnumerationSpace space = EnumerationSpace::standard(parse_mode(a.mode), a.max_ops, a.max_degree);
  json out{{"trees", json::array()}, {"expressions", json::array()}};
  std::cout << "ops  trees  expressions\n";
  for (int o = 0; o <= a.max_ops; ++o) {
    const auto trees = to_string(count_trees(o));
    const auto exprs = to_string(count_expressions(space, o));
    std::cout << o << "  " << trees << "  " << exprs << '\n';
    out["trees"].push_back(trees);
    out["expressions"].push_back(exprs);
  }
  const auto total = to_string(count_expressions(space));
  std::cout << "total expressions: " << total << '\n';
  out["total"] = total;
  const fs::path dir = output_dir(g, "count");
  write_json(dir / "count.json", out);
  write_effective(dir, "count", {{"mode", a.mode}, {"max_ops", a.max_ops}, {"max_degree", a.max_degree}});
}

// ---- enumerate-fit ----

struct FitArgs {
  std::vector<std::string> terms;
  std::string mode = "int";
  int max_ops = 2;
  int max_degree = 2;
  double tau = 0;
  std::size_t top_k = 10;
  int n_pred = 10;
  bool force = false;
};

void cmd_fit(const Global& g, const FitArgs& a) {
  const Mode mode = parse_mode(a.mode);
  const SequenceData observed = parse_terms(a.terms, mode);
  FitOptions options;
  options.tau = a.tau;
  options.top_k = a.top_k;
  options.force = a.force;
  const auto fits = fit_by_enumeration(observed, EnumerationSpace::standard(mode, a.max_ops, a.max_degree), options);
  json out = json::array();
  if (fits.empty()) {
    std::cout << "no relation in the space fits the terms\n";
  }
  for (std::size_t i = 0; i < fits.size(); ++i) {
    const auto& f = fits[i];
    const auto next = extrapolate(f.relation, observed, a.n_pred);
    std::cout << i + 1 << ". " << to_infix(f.relation) << "   [" << to_text(f.relation) << "]  ops " << f.ops
              << ", max error " << format_error(f.max_error) << '\n';
    std::cout << "   next: " << terms_text(next) << '\n';
    out.push_back({{"relation", to_text(f.relation)}, {"ops", f.ops}, {"max_error", f.max_error},
                   {"next", sequence_to_json(next)}});
  }
  const fs::path dir = output_dir(g, "enumerate-fit");
  write_json(dir / "fits.json", out);
  write_effective(dir, "enumerate-fit", {{"terms", a.terms}, {"mode", a.mode}, {"max_ops", a.max_ops},
                                         {"max_degree", a.max_degree}, {"tau", a.tau}, {"top_k", a.top_k}});
}

// ---- embed-sim ----

struct EmbedArgs {
  std::string checkpoint;
  int from = 0;
  int to = 100;
  std::vector<std::string> tokens;
};

void cmd_embed(const Global& g, const EmbedArgs& a) {
  BackendOptions o;
  const Backend b = make_backend(a.checkpoint, o);
  std::vector<std::string> labels = a.tokens;
  if (labels.empty()) {
    for (int k = a.from; k <= a.to; ++k) {
      labels.push_back(std::to_string(k));
    }
  }
  std::vector<int> ids;
  for (const auto& t : labels) {
    const auto id = b.vocab->find(t);
    if (!id) {
      throw UsageError("token not in the vocabulary: " + t);
    }
    ids.push_back(*id);
  }
  const auto sim = embedding_similarity(b.loaded->model, ids);
  const fs::path dir = output_dir(g, "embed-sim");
  write_similarity_csv(dir / "similarity.csv", labels, sim);
  write_effective(dir, "embed-sim", {{"checkpoint", a.checkpoint}, {"tokens", labels}});
  std::cout << "wrote " << labels.size() << "x" << labels.size() << " similarity matrix to "
            << (dir / "similarity.csv").string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symbolic and numeric recurrence prediction with transformers"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--config", g.config_path, "JSON config file (sections: generator, train, eval, oeis)");
  app.add_option("--out", g.out, std::string("output directory (default $") + kOutputRootVar + "/<command> or runs/<command>)");
  app.add_option("--seed", g.seed, "global seed");
  app.add_option("--workers", g.workers, "worker threads; 1 is bit-reproducible")->check(CLI::PositiveNumber);

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "sample a dataset of recurrence sequences");
  gen.grammar.add(c_gen);
  c_gen->add_option("--count", gen.count);
  c_gen->add_option("--sigma-train", gen.sigma_train, "corrupt with sigma ~ U(0, sigma_train)");
  c_gen->add_option("--extra-terms", gen.extra_terms, "ground-truth terms stored past each sequence");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "train a model (resumable)");
  tr.grammar.add(c_train);
  c_train->add_option("--preset", tr.preset, "toy | full | default");
  c_train->add_option("--task", tr.task, "symbolic | numeric");
  c_train->add_option("--steps", tr.steps);
  c_train->add_option("--batch", tr.batch);
  c_train->add_option("--lr", tr.lr, "peak learning rate");
  c_train->add_option("--warmup", tr.warmup);
  c_train->add_option("--sigma-train", tr.sigma_train);
  c_train->add_option("--n-pred", tr.n_pred, "numeric task: predicted terms");
  c_train->add_option("--mantissa-tokens", tr.mantissa_tokens);
  c_train->add_option("--eval-every", tr.eval_every);
  c_train->add_option("--eval-count", tr.eval_count);
  c_train->add_option("--eval-beam", tr.eval_beam);
  c_train->add_option("--checkpoint-every", tr.checkpoint_every);
  c_train->add_option("--log-every", tr.log_every);
  c_train->add_option("--resume", tr.resume, "continue from a checkpoint");
  c_train->add_flag("--quiet", tr.quiet);

  PredictArgs pr;
  auto* c_pred = app.add_subcommand("predict", "predict a relation and the next terms");
  pr.backend.add(c_pred);
  c_pred->add_option("--checkpoint", pr.checkpoint);
  c_pred->add_option("--beam", pr.beam);
  c_pred->add_option("--n-pred", pr.n_pred);
  c_pred->add_option("--first-index", pr.first_index);
  c_pred->add_option("terms", pr.terms, "observed terms")->required();

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "held-out accuracy and robustness protocols");
  ev.backend.add(c_eval);
  ev.grammar.add(c_eval, false);
  c_eval->add_option("--checkpoint", ev.checkpoints, "checkpoint(s); several for noise-grid");
  c_eval->add_option("--count", ev.count);
  c_eval->add_option("--tau", ev.tau);
  c_eval->add_option("--n-pred", ev.n_pred);
  c_eval->add_option("--beam", ev.beam);
  c_eval->add_option("--n-input", ev.n_input);
  c_eval->add_flag("--greedy", ev.greedy, "top hypothesis of greedy decoding, no ranking");
  c_eval->add_flag("--with-greedy", ev.with_greedy, "also report greedy decoding");
  c_eval->add_option("--sweep", ev.sweep, "tau | n_pred | ops | degree | length | family")
      ->check(CLI::IsMember({"tau", "n_pred", "ops", "degree", "length", "family"}));
  c_eval->add_option("--protocol", ev.protocol, "plain | noise | shift | noise-grid");
  c_eval->add_option("--sigma-test", ev.sigma_test);
  c_eval->add_option("--sigma-train", ev.sigma_train, "noise-grid row labels, one per checkpoint");
  c_eval->add_option("--init-range", ev.init_range, "shift protocol: low high")->expected(2);

  OeisArgs oe;
  auto* c_oeis = app.add_subcommand("oeis", "catalog benchmark (n_input x n_pred grid)");
  oe.backend.add(c_oeis);
  c_oeis->add_option("--checkpoint", oe.checkpoints);
  c_oeis->add_option("--name", oe.names, "row label per checkpoint");
  c_oeis->add_option("--stripped", oe.stripped, "catalog terms file")->required();
  c_oeis->add_option("--keywords", oe.keywords, "keyword file (A000045 easy,nonn,core)")->required();
  c_oeis->add_option("--n-input", oe.n_input);
  c_oeis->add_option("--n-pred", oe.n_pred);
  c_oeis->add_option("--tau", oe.tau);
  c_oeis->add_option("--subset", oe.subset);
  c_oeis->add_option("--beam", oe.beam);
  c_oeis->add_option("--keyword", oe.keyword);

  ApproxArgs ap;
  auto* c_approx = app.add_subcommand("approx", "approximate a constant or a function");
  ap.backend.add(c_approx);
  c_approx->add_option("--checkpoint", ap.checkpoint);
  c_approx->add_option("--constant", ap.constant);
  c_approx->add_option("--function", ap.function, "oracle name, e.g. arcsinh, j0, polynomial:1,2,3");
  c_approx->add_option("--expression", ap.expression, "score this prefix expression instead of predicting");
  c_approx->add_option("--n-input", ap.n_input);
  c_approx->add_option("--n-pred", ap.n_pred);
  c_approx->add_option("--beam", ap.beam);

  RefineArgs rf;
  auto* c_refine = app.add_subcommand("refine", "iterative refinement of a closed-form fit");
  rf.backend.add(c_refine);
  c_refine->add_option("--checkpoint", rf.checkpoint);
  c_refine->add_option("--function", rf.function, "oracle sampled at n = first-index ...");
  c_refine->add_option("--count", rf.count);
  c_refine->add_option("--depth", rf.depth);
  c_refine->add_option("--first-index", rf.first_index);
  c_refine->add_option("--beam", rf.beam);
  c_refine->add_option("terms", rf.terms);

  CountArgs co;
  auto* c_count = app.add_subcommand("count", "tree and expression counts");
  c_count->add_option("--mode", co.mode)->check(CLI::IsMember({"int", "float"}));
  c_count->add_option("--max-ops", co.max_ops);
  c_count->add_option("--max-degree", co.max_degree);

  FitArgs fi;
  auto* c_fit = app.add_subcommand("enumerate-fit", "exhaustive search for a fitting relation");
  c_fit->add_option("--mode", fi.mode)->check(CLI::IsMember({"int", "float"}));
  c_fit->add_option("--max-ops", fi.max_ops);
  c_fit->add_option("--max-degree", fi.max_degree);
  c_fit->add_option("--tau", fi.tau);
  c_fit->add_option("--top-k", fi.top_k);
  c_fit->add_option("--n-pred", fi.n_pred);
  c_fit->add_flag("--force", fi.force);
  c_fit->add_option("terms", fi.terms)->required();

  EmbedArgs em;
  auto* c_embed = app.add_subcommand("embed-sim", "export token embedding similarities as CSV");
  c_embed->add_option("--checkpoint", em.checkpoint)->required();
  c_embed->add_option("--from", em.from);
  c_embed->add_option("--to", em.to);
  c_embed->add_option("--tokens", em.tokens);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (!g.config_path.empty()) {
      std::ifstream in(g.config_path);
      if (!in) {
        throw UsageError("cannot read config " + g.config_path);
      }
      try {
        g.file = json::parse(in);
      } catch (const json::exception& e) {
        throw UsageError("bad config " + g.config_path + ": " + e.what());
      }
      if (!g.file.is_object()) {
        throw UsageError("config must be a JSON object");
      }
      if (!g.seed && g.file.contains("seed")) {
        g.seed = g.file.at("seed").get<std::uint64_t>();
      }
      if (g.workers == 1 && g.file.contains("workers")) {
        g.workers = g.file.at("workers").get<int>();
      }
    }
    if (c_gen->parsed()) cmd_generate(g, gen);
    if (c_train->parsed()) cmd_train(g, tr);
    if (c_pred->parsed()) cmd_predict(g, pr);
    if (c_eval->parsed()) cmd_evaluate(g, ev);
    if (c_oeis->parsed()) cmd_oeis(g, oe);
    if (c_approx->parsed()) cmd_approx(g, ap);
    if (c_refine->parsed()) cmd_refine(g, rf);
    if (c_count->parsed()) cmd_count(g, co);
    if (c_fit->parsed()) cmd_fit(g, fi);
    if (c_embed->parsed()) cmd_embed(g, em);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const CheckpointError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const EncodingError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
