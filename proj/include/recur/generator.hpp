#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "recur/expression.hpp"
#include "recur/random.hpp"
#include "recur/sequence.hpp"

namespace recur {

/// Operator groups used for difficulty buckets and restricted generation.
enum class OperatorFamily : std::uint8_t { all, base, division, sqrt, exponential, trigonometric };

std::string_view family_name(OperatorFamily family);
OperatorFamily parse_family(std::string_view text);
/// Operators of `family` that exist in `mode` (base = add, sub, mul).
std::vector<Op> family_operators(OperatorFamily family, Mode mode);
/// Smallest non-`all` family containing every operator of `rel`; nullopt when none does.
std::optional<OperatorFamily> classify_family(const RecurrenceRelation& rel);

struct GeneratorConfig {
  Mode mode = Mode::integer;
  int min_ops = 1;
  int max_ops = 10;
  int max_degree = 6;
  int min_length = 5;
  int max_length = 30;
  double p_const = 1.0 / 3.0;
  double p_index = 1.0 / 3.0;
  double p_var = 1.0 / 3.0;
  /// Initial terms are uniform on [init_low, init_high] (integers in integer mode).
  double init_low = -10;
  double init_high = 10;
  int const_low = -10;
  int const_high = 10;
  /// Float mode only: e, pi, gamma join the constant pool.
  bool named_constants = true;
  /// Float mode only: constants drawn uniformly from the real interval [const_low, const_high].
  bool real_prefactors = false;
  /// Probability that a leaf draw yields the noise leaf xi (float mode).
  double noise_leaf_prob = 0.0;
  int dimensions = 1;
  OperatorFamily family = OperatorFamily::all;
  /// Terms computed past the sequence and stored separately (ground truth for extrapolation).
  int extra_terms = 0;
  int max_attempts = 64;

  /// Throws std::invalid_argument describing the first violated bound.
  void validate() const;
};

/// Prefix arities of an unlabeled unary-binary tree: 0 leaf, 1 unary, 2 binary.
using TreeShape = std::vector<std::uint8_t>;

/// Samples unary-binary trees with a fixed number of internal nodes. With unit
/// weights every shape is equally likely; zero unary weight yields binary trees.
class TreeSampler {
 public:
  explicit TreeSampler(int max_ops, double unary_weight = 1.0, double binary_weight = 1.0);

  TreeShape sample(int ops, Rng& rng) const;
  /// Number of weighted trees with `empty` pending slots and `ops` operators left to place.
  long double count(int empty, int ops) const;

 private:
  int max_ops_;
  double unary_weight_;
  double binary_weight_;
  std::vector<std::vector<long double>> table_;  // table_[empty][ops]
};

/// Uniform unary-binary shape with exactly `ops` internal nodes.
TreeShape sample_tree(int ops, Rng& rng);

RecurrenceRelation sample_relation(const GeneratorConfig& cfg, Rng& rng);

struct GeneratedSample {
  RecurrenceRelation relation;
  /// Initial terms followed by the l computed terms.
  SequenceData terms{};
  /// `extra_terms` further terms of the same relation.
  SequenceData future{};
  int ops = 0;
  int degree = 0;
  int length = 0;  // l, the number of computed terms
  std::uint64_t seed = 0;
  int attempts = 1;
  /// Present when the sample was corrupted with multiplicative noise.
  std::optional<RealTracks> noisy{};
  double sigma = 0.0;

  /// Sequence the model sees: the noisy copy when present.
  SequenceData observed() const;
};

class GenerationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

GeneratedSample generate_sample(const GeneratorConfig& cfg, Rng& rng);
/// Reproducible sample: same (cfg, seed) gives the same sample.
GeneratedSample generate_sample(const GeneratorConfig& cfg, std::uint64_t seed);

/// Each term becomes u * xi with xi ~ Normal(1, sigma).
std::vector<double> corrupt(const std::vector<double>& terms, double sigma, Rng& rng);
RealTracks corrupt(const SequenceData& data, double sigma, Rng& rng);

/// Deterministic stream of samples seeded as (base_seed, worker, counter).
class SampleStream {
 public:
  SampleStream(GeneratorConfig cfg, std::uint64_t base_seed, std::uint64_t worker = 0);

  GeneratedSample next();
  std::uint64_t counter() const { return counter_; }
  void set_counter(std::uint64_t counter) { counter_ = counter; }
  const GeneratorConfig& config() const { return cfg_; }

 private:
  GeneratorConfig cfg_;
  std::uint64_t base_seed_;
  std::uint64_t worker_;
  std::uint64_t counter_ = 0;
};

/// Stochastic training batch: each sample draws sigma ~ U(0, sigma_train) and is
/// corrupted with it. Labels (relation, clean terms) stay untouched. With
/// sigma_train == 0 this is exactly the plain stream.
std::vector<GeneratedSample> make_training_batch(SampleStream& stream, double sigma_train, int count);

}  // namespace recur
