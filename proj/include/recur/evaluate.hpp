#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "recur/bigint.hpp"
#include "recur/expression.hpp"

namespace recur {

enum class DomainFault : std::uint8_t {
  division_by_zero,
  outside_domain,   // log/sqrt of an out-of-range argument
  overflow,         // |value| > 10^100
  not_finite,
  missing_history,  // referenced a term before the start of the sequence
};

std::string_view fault_name(DomainFault fault);

struct DomainError {
  DomainFault fault;
  std::int64_t index;  // index n of the term being computed
};

/// One vector of terms per dimension.
template <class T>
using Tracks = std::vector<std::vector<T>>;
using IntTracks = Tracks<BigInt>;
using RealTracks = Tracks<double>;

template <class T>
struct Evaluated {
  std::optional<T> value;
  DomainError error{DomainFault::not_finite, 0};

  explicit operator bool() const { return value.has_value(); }
};

/// Evaluates `expr` for index `n`. history[d].back() is the previous term of
/// dimension d. Integer expressions evaluate exactly with floored intdiv/mod;
/// real expressions in double precision. A noise leaf takes `noise`, or 0 when
/// no draw is supplied (the deterministic part of the relation).
Evaluated<BigInt> eval_step(const Expression& expr, std::int64_t n, std::span<const std::vector<BigInt>> history,
                            std::optional<double> noise = std::nullopt);
Evaluated<double> eval_step(const Expression& expr, std::int64_t n, std::span<const std::vector<double>> history,
                            std::optional<double> noise = std::nullopt);

struct UnrollOptions {
  /// Index n of the first term of the sequence.
  std::int64_t first_index = 0;
  /// Source of noise draws for xi leaves; empty means xi evaluates to 0.
  std::function<double()> noise;
};

template <class T>
struct Unrolled {
  Tracks<T> terms;  // initial terms followed by every successfully computed term
  std::optional<DomainError> error;

  bool ok() const { return !error.has_value(); }
  /// Number of terms per dimension.
  std::size_t length() const { return terms.empty() ? 0 : terms.front().size(); }
};

/// Appends `count` terms to every dimension of `initial`, one step at a time.
/// All dimensions of a step are computed from the same (strictly prior) history.
/// Stops at the first domain error, keeping the terms computed so far.
Unrolled<BigInt> unroll(const RecurrenceRelation& rel, IntTracks initial, int count, const UnrollOptions& options = {});
Unrolled<double> unroll(const RecurrenceRelation& rel, RealTracks initial, int count, const UnrollOptions& options = {});

/// Value of a degree-0 real expression (no index dependence assumed: n = 0).
std::optional<double> evaluate_constant(const Expression& expr);

}  // namespace recur
