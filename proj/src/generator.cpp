#include "recur/generator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace recur {

namespace {

const std::vector<Op>& family_members(OperatorFamily family) {
  static const std::vector<Op> base{Op::add, Op::sub, Op::mul};
  static const std::vector<Op> division{Op::add, Op::sub, Op::mul, Op::div, Op::inv, Op::intdiv, Op::mod};
  static const std::vector<Op> sqrt{Op::add, Op::sub, Op::mul, Op::sqrt};
  static const std::vector<Op> exponential{Op::add, Op::sub, Op::mul, Op::exp, Op::log};
  static const std::vector<Op> trigonometric{Op::add, Op::sub, Op::mul, Op::sin, Op::cos, Op::tan, Op::atan};
  static const std::vector<Op> all = [] {
    std::vector<Op> ops;
    for (const auto& spec : all_operators()) {
      ops.push_back(spec.op);
    }
    return ops;
  }();
  switch (family) {
    case OperatorFamily::base: return base;
    case OperatorFamily::division: return division;
    case OperatorFamily::sqrt: return sqrt;
    case OperatorFamily::exponential: return exponential;
    case OperatorFamily::trigonometric: return trigonometric;
    case OperatorFamily::all: break;
  }
  return all;
}

std::vector<Op> filter_arity(const std::vector<Op>& ops, int arity) {
  std::vector<Op> out;
  std::copy_if(ops.begin(), ops.end(), std::back_inserter(out),
               [&](Op op) { return operator_spec(op).arity == arity; });
  return out;
}

const TreeSampler& uniform_sampler() {
  static const TreeSampler sampler(16);
  return sampler;
}

Leaf sample_constant(const GeneratorConfig& cfg, Rng& rng) {
  if (cfg.mode == Mode::real && cfg.real_prefactors) {
    std::uniform_real_distribution<double> dist(cfg.const_low, cfg.const_high);
    return Leaf::real_constant(dist(rng));
  }
  const int integers = cfg.const_high - cfg.const_low + 1;
  const int named = (cfg.mode == Mode::real && cfg.named_constants) ? 3 : 0;
  std::uniform_int_distribution<int> pick(0, integers + named - 1);
  const int k = pick(rng);
  if (k < integers) {
    return Leaf::constant(cfg.const_low + k);
  }
  return Leaf::named_constant(static_cast<NamedConstant>(k - integers));
}

Expression label_shape(const GeneratorConfig& cfg, const TreeShape& shape, int degree, const std::vector<Op>& unary,
                       const std::vector<Op>& binary, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> offset(1, degree);
  std::uniform_int_distribution<int> dim(0, cfg.dimensions - 1);
  const double total = cfg.p_const + cfg.p_index + cfg.p_var;
  std::vector<Node> nodes;
  nodes.reserve(shape.size());
  for (const auto arity : shape) {
    if (arity == 1) {
      std::uniform_int_distribution<std::size_t> pick(0, unary.size() - 1);
      nodes.emplace_back(unary[pick(rng)]);
    } else if (arity == 2) {
      std::uniform_int_distribution<std::size_t> pick(0, binary.size() - 1);
      nodes.emplace_back(binary[pick(rng)]);
    } else {
      if (cfg.noise_leaf_prob > 0 && unit(rng) < cfg.noise_leaf_prob) {
        nodes.emplace_back(Leaf::noise());
        continue;
      }
      const double u = unit(rng) * total;
      if (u < cfg.p_const) {
        nodes.emplace_back(sample_constant(cfg, rng));
      } else if (u < cfg.p_const + cfg.p_index) {
        nodes.emplace_back(Leaf::index());
      } else {
        const int d = dim(rng);
        nodes.emplace_back(Leaf::term(d, offset(rng)));
      }
    }
  }
  return Expression::from_prefix_nodes(std::move(nodes));
}

template <class T>
Tracks<T> sample_initial(const GeneratorConfig& cfg, int degree, Rng& rng) {
  Tracks<T> initial(static_cast<std::size_t>(cfg.dimensions));
  for (auto& track : initial) {
    for (int i = 0; i < degree; ++i) {
      if constexpr (std::is_same_v<T, BigInt>) {
        std::uniform_int_distribution<long long> dist(static_cast<long long>(std::ceil(cfg.init_low)),
                                                      static_cast<long long>(std::floor(cfg.init_high)));
        track.emplace_back(dist(rng));
      } else {
        std::uniform_real_distribution<double> dist(cfg.init_low, cfg.init_high);
        track.push_back(dist(rng));
      }
    }
  }
  return initial;
}

template <class T>
std::optional<GeneratedSample> attempt(const GeneratorConfig& cfg, Rng& rng) {
  RecurrenceRelation rel = sample_relation(cfg, rng);
  const int degree = rel.degree();
  Tracks<T> initial = sample_initial<T>(cfg, degree, rng);
  std::uniform_int_distribution<int> length_dist(cfg.min_length, cfg.max_length);
  const int l = length_dist(rng);
  UnrollOptions options;
  std::normal_distribution<double> normal(0.0, 1.0);
  if (rel.has_noise()) {
    options.noise = [&] { return normal(rng); };
  }
  auto unrolled = unroll(rel, std::move(initial), l + cfg.extra_terms, options);
  if (!unrolled.ok()) {
    return std::nullopt;
  }
  const auto split = static_cast<std::size_t>(degree + l);
  SequenceData all = std::move(unrolled.terms);
  GeneratedSample sample{.relation = std::move(rel), .terms = slice(all, 0, split), .future = slice(all, split, length(all))};
  sample.ops = sample.relation.operator_count();
  sample.degree = degree;
  sample.length = l;
  return sample;
}

}  // namespace

std::string_view family_name(OperatorFamily family) {
  switch (family) {
    case OperatorFamily::all: return "all";
    case OperatorFamily::base: return "base";
    case OperatorFamily::division: return "division";
    case OperatorFamily::sqrt: return "sqrt";
    case OperatorFamily::exponential: return "exponential";
    case OperatorFamily::trigonometric: return "trigonometric";
  }
  return "?";
}

OperatorFamily parse_family(std::string_view text) {
  for (auto f : {OperatorFamily::all, OperatorFamily::base, OperatorFamily::division, OperatorFamily::sqrt,
                 OperatorFamily::exponential, OperatorFamily::trigonometric}) {
    if (family_name(f) == text) {
      return f;
    }
  }
  throw std::invalid_argument("unknown operator family '" + std::string(text) + "'");
}

std::vector<Op> family_operators(OperatorFamily family, Mode mode) {
  std::vector<Op> out;
  for (Op op : family_members(family)) {
    if (allowed_in(op, mode)) {
      out.push_back(op);
    }
  }
  return out;
}

std::optional<OperatorFamily> classify_family(const RecurrenceRelation& rel) {
  for (auto f : {OperatorFamily::base, OperatorFamily::division, OperatorFamily::sqrt, OperatorFamily::exponential,
                 OperatorFamily::trigonometric}) {
    const auto& members = family_members(f);
    bool inside = true;
    for (const auto& expr : rel.expressions()) {
      for (const Node& node : expr.nodes()) {
        const auto* op = std::get_if<Op>(&node);
        if (op != nullptr && std::find(members.begin(), members.end(), *op) == members.end()) {
          inside = false;
        }
      }
    }
    if (inside) {
      return f;
    }
  }
  return std::nullopt;
}

void GeneratorConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("generator config: " + what); };
  if (min_ops < 1 || max_ops < min_ops) {
    fail("need 1 <= min_ops <= max_ops");
  }
  if (max_ops > 16) {
    fail("max_ops above 16 is not supported");
  }
  if (max_degree < 1) {
    fail("need max_degree >= 1");
  }
  if (min_length < 1 || max_length < min_length) {
    fail("need 1 <= min_length <= max_length");
  }
  if (p_const < 0 || p_index < 0 || p_var < 0 || std::fabs(p_const + p_index + p_var - 1.0) > 1e-9) {
    fail("leaf probabilities must be non-negative and sum to 1");
  }
  if (init_high < init_low) {
    fail("empty initial-term range");
  }
  if (const_high < const_low) {
    fail("empty constant range");
  }
  if (noise_leaf_prob < 0 || noise_leaf_prob > 1) {
    fail("noise_leaf_prob must lie in [0,1]");
  }
  if (noise_leaf_prob > 0 && mode == Mode::integer) {
    fail("the noise leaf requires float mode");
  }
  if (dimensions < 1 || dimensions > kMaxDimensions) {
    fail("dimensions must be 1, 2 or 3");
  }
  if (family_operators(family, mode).empty() || filter_arity(family_operators(family, mode), 2).empty()) {
    fail("operator family has no binary operator in this mode");
  }
  if (extra_terms < 0 || max_attempts < 1) {
    fail("extra_terms must be >= 0 and max_attempts >= 1");
  }
}

TreeSampler::TreeSampler(int max_ops, double unary_weight, double binary_weight)
    : max_ops_(max_ops), unary_weight_(unary_weight), binary_weight_(binary_weight) {
  const int max_empty = max_ops + 2;
  table_.assign(static_cast<std::size_t>(max_empty + 1), std::vector<long double>(static_cast<std::size_t>(max_ops + 1), 0));
  for (int e = 0; e <= max_empty; ++e) {
    table_[static_cast<std::size_t>(e)][0] = 1;  // leaf weight 1
  }
  for (int n = 1; n <= max_ops; ++n) {
    for (int e = 1; e <= max_empty; ++e) {
      long double v = table_[static_cast<std::size_t>(e - 1)][static_cast<std::size_t>(n)] +
                      unary_weight * table_[static_cast<std::size_t>(e)][static_cast<std::size_t>(n - 1)];
      if (e + 1 <= max_empty) {
        v += binary_weight * table_[static_cast<std::size_t>(e + 1)][static_cast<std::size_t>(n - 1)];
      }
      table_[static_cast<std::size_t>(e)][static_cast<std::size_t>(n)] = v;
    }
  }
}

long double TreeSampler::count(int empty, int ops) const {
  return table_.at(static_cast<std::size_t>(empty)).at(static_cast<std::size_t>(ops));
}

TreeShape TreeSampler::sample(int ops, Rng& rng) const {
  if (ops < 0 || ops > max_ops_) {
    throw std::invalid_argument("tree size out of sampler range");
  }
  TreeShape shape;
  shape.reserve(static_cast<std::size_t>(2 * ops + 1));
  int empty = 1;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int left = ops; left > 0; --left) {
    // Choose how many pending slots become leaves (k) and the arity of the next operator.
    const long double total = count(empty, left);
    long double u = static_cast<long double>(unit(rng)) * total;
    int chosen_k = empty - 1;
    int chosen_arity = 2;
    bool found = false;
    for (int k = 0; k < empty && !found; ++k) {
      for (int arity = 1; arity <= 2; ++arity) {
        const long double w = (arity == 1 ? unary_weight_ : binary_weight_) * count(empty - k - 1 + arity, left - 1);
        if (w <= 0) {
          continue;
        }
        chosen_k = k;
        chosen_arity = arity;
        if (u < w) {
          found = true;
          break;
        }
        u -= w;
      }
    }
    shape.insert(shape.end(), static_cast<std::size_t>(chosen_k), 0);
    shape.push_back(static_cast<std::uint8_t>(chosen_arity));
    empty = empty - chosen_k - 1 + chosen_arity;
  }
  shape.insert(shape.end(), static_cast<std::size_t>(empty), 0);
  return shape;
}

TreeShape sample_tree(int ops, Rng& rng) { return uniform_sampler().sample(ops, rng); }

RecurrenceRelation sample_relation(const GeneratorConfig& cfg, Rng& rng) {
  const auto ops = family_operators(cfg.family, cfg.mode);
  const auto unary = filter_arity(ops, 1);
  const auto binary = filter_arity(ops, 2);
  static const TreeSampler binary_only(16, 0.0, 1.0);
  const TreeSampler& sampler = unary.empty() ? binary_only : uniform_sampler();
  std::uniform_int_distribution<int> op_count(cfg.min_ops, cfg.max_ops);
  std::uniform_int_distribution<int> degree_dist(1, cfg.max_degree);
  const int degree = degree_dist(rng);
  std::vector<Expression> exprs;
  for (int d = 0; d < cfg.dimensions; ++d) {
    const TreeShape shape = sampler.sample(op_count(rng), rng);
    exprs.push_back(label_shape(cfg, shape, degree, unary, binary, rng));
  }
  return RecurrenceRelation(cfg.mode, std::move(exprs));
}

SequenceData GeneratedSample::observed() const {
  if (noisy) {
    return *noisy;
  }
  return terms;
}

GeneratedSample generate_sample(const GeneratorConfig& cfg, Rng& rng) {
  cfg.validate();
  for (int attempt_no = 1; attempt_no <= cfg.max_attempts; ++attempt_no) {
    std::optional<GeneratedSample> sample =
        cfg.mode == Mode::integer ? attempt<BigInt>(cfg, rng) : attempt<double>(cfg, rng);
    if (sample) {
      sample->attempts = attempt_no;
      return std::move(*sample);
    }
  }
  throw GenerationFailure("no valid sequence after " + std::to_string(cfg.max_attempts) + " attempts");
}

GeneratedSample generate_sample(const GeneratorConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  GeneratedSample sample = generate_sample(cfg, rng);
  sample.seed = seed;
  return sample;
}

std::vector<double> corrupt(const std::vector<double>& terms, double sigma, Rng& rng) {
  if (sigma < 0) {
    throw std::invalid_argument("noise level must be >= 0");
  }
  if (sigma == 0) {
    return terms;
  }
  std::normal_distribution<double> factor(1.0, sigma);
  std::vector<double> out;
  out.reserve(terms.size());
  for (double u : terms) {
    out.push_back(u * factor(rng));
  }
  return out;
}

RealTracks corrupt(const SequenceData& data, double sigma, Rng& rng) {
  RealTracks out;
  for (const auto& track : to_real(data)) {
    out.push_back(corrupt(track, sigma, rng));
  }
  return out;
}

SampleStream::SampleStream(GeneratorConfig cfg, std::uint64_t base_seed, std::uint64_t worker)
    : cfg_(std::move(cfg)), base_seed_(base_seed), worker_(worker) {
  cfg_.validate();
}

GeneratedSample SampleStream::next() {
  const std::uint64_t seed = derive_seed(base_seed_, worker_, counter_++);
  return generate_sample(cfg_, seed);
}

std::vector<GeneratedSample> make_training_batch(SampleStream& stream, double sigma_train, int count) {
  if (sigma_train < 0) {
    throw std::invalid_argument("sigma_train must be >= 0");
  }
  std::vector<GeneratedSample> batch;
  batch.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) {
    GeneratedSample sample = stream.next();
    if (sigma_train > 0) {
      Rng rng = make_rng(sample.seed, 1);
      std::uniform_real_distribution<double> level(0.0, sigma_train);
      sample.sigma = level(rng);
      sample.noisy = corrupt(sample.terms, sample.sigma, rng);
    }
    batch.push_back(std::move(sample));
  }
  return batch;
}

}  // namespace recur
