#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "recur/bigint.hpp"
#include "recur/expression.hpp"
#include "recur/generator.hpp"
#include "recur/sequence.hpp"

namespace recur {

/// Number of unary-binary tree shapes with `ops` internal nodes (1, 2, 6, 22, 90, ...).
BigInt count_trees(int ops);

/// Every shape with `ops` internal nodes, in canonical order.
std::vector<TreeShape> enumerate_shapes(int ops);

/// Finite expression space: all trees with min_ops..max_ops operators labeled from the pools.
struct EnumerationSpace {
  Mode mode = Mode::integer;
  int min_ops = 0;
  int max_ops = 2;
  std::vector<Leaf> leaves;
  std::vector<Op> unary;
  std::vector<Op> binary;

  /// Leaves n, u1..u_degree and the integer constants [const_low, const_high];
  /// the full operator set of `mode`.
  static EnumerationSpace standard(Mode mode, int max_ops, int max_degree, int const_low = -10, int const_high = 10);
  /// The space the generator draws from under `cfg` (single dimension, no noise leaf).
  static EnumerationSpace from_generator(const GeneratorConfig& cfg);

  int max_degree() const;
};

BigInt count_expressions(const EnumerationSpace& space, int ops);
BigInt count_expressions(const EnumerationSpace& space);

class SpaceTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t kEnumerationGuard = 10'000'000;

/// Calls `visit` on every expression of the space exactly once in canonical
/// order (operator count, shape, labels); stops early when `visit` returns false.
/// Spaces above kEnumerationGuard expressions throw SpaceTooLarge unless `force`.
void for_each_expression(const EnumerationSpace& space, const std::function<bool(const Expression&)>& visit,
                         bool force = false);
std::vector<Expression> enumerate_expressions(const EnumerationSpace& space, bool force = false);

struct FitCandidate {
  RecurrenceRelation relation;
  double max_error = 0;
  int ops = 0;
  std::uint64_t rank = 0;  // position in canonical enumeration order
};

struct FitOptions {
  double tau = 0;
  std::size_t top_k = 10;
  bool force = false;
};

/// Unrolls every candidate of degree d <= observed length - 1 from the first d
/// observed terms and keeps those matching all observed terms within tau,
/// ordered by (operator count, max error, degree, enumeration order). Single dimension.
std::vector<FitCandidate> fit_by_enumeration(const SequenceData& observed, const EnumerationSpace& space,
                                             const FitOptions& options = {});

}  // namespace recur
