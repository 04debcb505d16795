#pragma once

#include <cstddef>
#include <variant>

#include "recur/evaluate.hpp"

namespace recur {

/// Multi-dimensional sequence in either numeric domain.
using SequenceData = std::variant<IntTracks, RealTracks>;

Mode data_mode(const SequenceData& data);
std::size_t dimensions(const SequenceData& data);
/// Terms per dimension.
std::size_t length(const SequenceData& data);
/// Terms [begin, end) of every dimension.
SequenceData slice(const SequenceData& data, std::size_t begin, std::size_t end);
/// `a` followed by `b`, dimension by dimension.
SequenceData concat(const SequenceData& a, const SequenceData& b);
RealTracks to_real(const SequenceData& data);
/// Single-dimension helpers.
SequenceData single(std::vector<BigInt> terms);
SequenceData single(std::vector<double> terms);

}  // namespace recur
