#include "recur/decode.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace recur {

namespace {

double normalized(double log_prob, std::size_t emitted) {
  return emitted == 0 ? log_prob : log_prob / static_cast<double>(emitted);
}

int clamp_len(int max_len, int max_positions) { return std::clamp(max_len, 0, max_positions); }

}  // namespace

template <class S>
Hypothesis greedy_decode(const Transformer<S>& model, std::span<const int> source, int max_len) {
  const auto& sp = model.special();
  const auto src = strip_padding(source, sp.pad);
  max_len = clamp_len(max_len, model.config().max_positions);
  const auto memory = model.encode(src);
  auto cache = model.start();
  Hypothesis h;
  int token = sp.bos;
  for (int t = 0; t < max_len; ++t) {
    const auto logp = model.step(memory, cache, token);
    Eigen::Index best = 0;
    logp.maxCoeff(&best);
    h.log_prob += static_cast<double>(logp(best));
    const int id = model.output_ids()[static_cast<std::size_t>(best)];
    if (id == sp.eos) {
      h.finished = true;
      break;
    }
    h.tokens.push_back(id);
    token = id;
  }
  h.score = normalized(h.log_prob, h.tokens.size() + (h.finished ? 1 : 0));
  return h;
}

template <class S>
std::vector<Hypothesis> beam_decode(const Transformer<S>& model, std::span<const int> source, int beam_size,
                                    int max_len) {
  if (beam_size < 1) {
    throw std::invalid_argument("beam size must be at least 1");
  }
  using Cache = typename Transformer<S>::Cache;
  using Vec = typename Transformer<S>::Vec;
  struct Beam {
    std::vector<int> tokens;
    double log_prob = 0.0;
    Cache cache;
    Vec next;
  };
  struct Candidate {
    double log_prob;
    std::size_t beam;
    Eigen::Index out;
  };

  const auto& sp = model.special();
  const auto src = strip_padding(source, sp.pad);
  max_len = clamp_len(max_len, model.config().max_positions);
  const auto memory = model.encode(src);
  std::vector<Hypothesis> finished;
  if (max_len == 0) {
    return {Hypothesis{}};
  }

  std::vector<Beam> alive(1);
  alive[0].cache = model.start();
  alive[0].next = model.step(memory, alive[0].cache, sp.bos);
  const auto width = static_cast<std::size_t>(beam_size);

  for (int t = 1; t <= max_len; ++t) {
    std::vector<Candidate> cands;
    for (std::size_t b = 0; b < alive.size(); ++b) {
      for (Eigen::Index k = 0; k < alive[b].next.size(); ++k) {
        cands.push_back({alive[b].log_prob + static_cast<double>(alive[b].next(k)), b, k});
      }
    }
    const std::size_t keep = std::min(cands.size(), 2 * width);
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.log_prob != b.log_prob) {
                          return a.log_prob > b.log_prob;
                        }
                        return a.beam != b.beam ? a.beam < b.beam : a.out < b.out;
                      });

    std::vector<Beam> next;
    for (std::size_t rank = 0; rank < keep; ++rank) {
      const Candidate& c = cands[rank];
      const int id = model.output_ids()[static_cast<std::size_t>(c.out)];
      const Beam& parent = alive[c.beam];
      if (id == sp.eos || t == max_len) {
        if (rank < width) {
          Hypothesis h;
          h.tokens = parent.tokens;
          h.finished = id == sp.eos;
          if (!h.finished) {
            h.tokens.push_back(id);
          }
          h.log_prob = c.log_prob;
          h.score = normalized(h.log_prob, static_cast<std::size_t>(t));
          finished.push_back(std::move(h));
        }
        continue;
      }
      if (next.size() < width) {
        Beam nb;
        nb.tokens = parent.tokens;
        nb.tokens.push_back(id);
        nb.log_prob = c.log_prob;
        nb.cache = parent.cache;
        next.push_back(std::move(nb));
      }
    }
    if (finished.size() >= width || next.empty()) {
      break;
    }
    for (auto& b : next) {
      b.next = model.step(memory, b.cache, b.tokens.back());
    }
    alive = std::move(next);
  }
  std::stable_sort(finished.begin(), finished.end(),
                   [](const Hypothesis& a, const Hypothesis& b) { return a.score > b.score; });
  if (finished.size() > width) {
    finished.resize(width);
  }
  return finished;
}

template <class S>
Eigen::MatrixXd embedding_similarity(const Transformer<S>& model, std::span<const int> ids) {
  const auto k = static_cast<Eigen::Index>(ids.size());
  Eigen::MatrixXd unit(k, model.config().dim);
  for (Eigen::Index i = 0; i < k; ++i) {
    Eigen::RowVectorXd e = model.embedding(ids[static_cast<std::size_t>(i)]).template cast<double>();
    const double norm = e.norm();
    unit.row(i) = norm > 0 ? Eigen::RowVectorXd(e / norm) : e;
  }
  Eigen::MatrixXd sim(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    sim(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < k; ++j) {
      sim(i, j) = sim(j, i) = unit.row(i).dot(unit.row(j));
    }
  }
  return sim;
}

void write_similarity_csv(const std::filesystem::path& path, const std::vector<std::string>& labels,
                          const Eigen::MatrixXd& matrix) {
  if (static_cast<Eigen::Index>(labels.size()) != matrix.rows() || matrix.rows() != matrix.cols()) {
    throw std::invalid_argument("similarity matrix and labels disagree in size");
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << "token";
  for (const auto& l : labels) {
    out << ',' << l;
  }
  out << '\n';
  char buf[64];
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    out << labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      auto res = std::to_chars(buf, buf + sizeof buf, matrix(i, j));
      out << ',' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

std::pair<std::vector<std::string>, Eigen::MatrixXd> read_similarity_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot read " + path.string());
  }
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cells.push_back(cell);
    }
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("empty similarity file");
  }
  auto header = split(line);
  if (header.empty() || header[0] != "token") {
    throw std::runtime_error("similarity file lacks its header");
  }
  std::vector<std::string> labels(header.begin() + 1, header.end());
  const auto k = static_cast<Eigen::Index>(labels.size());
  Eigen::MatrixXd m(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!std::getline(in, line)) {
      throw std::runtime_error("similarity file is truncated");
    }
    auto cells = split(line);
    if (static_cast<Eigen::Index>(cells.size()) != k + 1 || cells[0] != labels[static_cast<std::size_t>(i)]) {
      throw std::runtime_error("malformed similarity row");
    }
    for (Eigen::Index j = 0; j < k; ++j) {
      const auto& c = cells[static_cast<std::size_t>(j + 1)];
      auto res = std::from_chars(c.data(), c.data() + c.size(), m(i, j));
      if (res.ec != std::errc()) {
        throw std::runtime_error("malformed similarity value: " + c);
      }
    }
  }
  return {std::move(labels), std::move(m)};
}

template Hypothesis greedy_decode<float>(const Transformer<float>&, std::span<const int>, int);
template Hypothesis greedy_decode<double>(const Transformer<double>&, std::span<const int>, int);
template std::vector<Hypothesis> beam_decode<float>(const Transformer<float>&, std::span<const int>, int, int);
template std::vector<Hypothesis> beam_decode<double>(const Transformer<double>&, std::span<const int>, int, int);
template Eigen::MatrixXd embedding_similarity<float>(const Transformer<float>&, std::span<const int>);
template Eigen::MatrixXd embedding_similarity<double>(const Transformer<double>&, std::span<const int>);

}  // namespace recur
