#include "recur/sequence.hpp"

#include <stdexcept>

namespace recur {

Mode data_mode(const SequenceData& data) {
  return std::holds_alternative<IntTracks>(data) ? Mode::integer : Mode::real;
}

std::size_t dimensions(const SequenceData& data) {
  return std::visit([](const auto& t) { return t.size(); }, data);
}

std::size_t length(const SequenceData& data) {
  return std::visit([](const auto& t) { return t.empty() ? std::size_t{0} : t.front().size(); }, data);
}

SequenceData slice(const SequenceData& data, std::size_t begin, std::size_t end) {
  return std::visit(
      [&](const auto& tracks) -> SequenceData {
        std::decay_t<decltype(tracks)> out;
        for (const auto& t : tracks) {
          if (end > t.size() || begin > end) {
            throw std::out_of_range("sequence slice out of range");
          }
          out.emplace_back(t.begin() + static_cast<std::ptrdiff_t>(begin), t.begin() + static_cast<std::ptrdiff_t>(end));
        }
        return out;
      },
      data);
}

SequenceData concat(const SequenceData& a, const SequenceData& b) {
  if (a.index() != b.index() || dimensions(a) != dimensions(b)) {
    throw std::invalid_argument("cannot concatenate sequences of different shape");
  }
  return std::visit(
      [&](const auto& ta) -> SequenceData {
        auto out = ta;
        const auto& tb = std::get<std::decay_t<decltype(ta)>>(b);
        for (std::size_t d = 0; d < out.size(); ++d) {
          out[d].insert(out[d].end(), tb[d].begin(), tb[d].end());
        }
        return out;
      },
      a);
}

RealTracks to_real(const SequenceData& data) {
  if (const auto* real = std::get_if<RealTracks>(&data)) {
    return *real;
  }
  RealTracks out;
  for (const auto& track : std::get<IntTracks>(data)) {
    auto& t = out.emplace_back();
    t.reserve(track.size());
    for (const auto& v : track) {
      t.push_back(to_double(v));
    }
  }
  return out;
}

SequenceData single(std::vector<BigInt> terms) { return IntTracks{std::move(terms)}; }

SequenceData single(std::vector<double> terms) { return RealTracks{std::move(terms)}; }

}  // namespace recur
