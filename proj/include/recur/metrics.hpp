#pragma once

#include <limits>
#include <vector>

#include "recur/bigint.hpp"
#include "recur/sequence.hpp"

namespace recur {

/// |pred - truth| / |truth|, or |pred - truth| when truth is 0.
double relative_error(const BigInt& pred, const BigInt& truth);
double relative_error(double pred, double truth);

/// Error per time step (max over dimensions), one entry per true term.
/// Missing predicted terms count as infinite error.
std::vector<double> term_errors(const SequenceData& pred, const SequenceData& truth);
/// Largest entry, 0 for an empty list.
double max_error(const std::vector<double>& errors);
/// Largest error among the first `count` entries, infinity when fewer exist.
double max_error_prefix(const std::vector<double>& errors, std::size_t count);

/// 1 iff every predicted term is within relative tolerance tau (inclusive) of the truth.
int accuracy_one(const std::vector<BigInt>& pred, const std::vector<BigInt>& truth, double tau);
int accuracy_one(const std::vector<double>& pred, const std::vector<double>& truth, double tau);
int accuracy_one(const SequenceData& pred, const SequenceData& truth, double tau);

inline constexpr double kInfiniteError = std::numeric_limits<double>::infinity();

}  // namespace recur
