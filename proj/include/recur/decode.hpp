#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "recur/transformer.hpp"

namespace recur {

struct Hypothesis {
  /// Emitted vocabulary ids, EOS excluded.
  std::vector<int> tokens;
  /// Sum of token log-probabilities, EOS included when emitted.
  double log_prob = 0.0;
  /// log_prob divided by the number of emitted tokens (EOS counts).
  double score = 0.0;
  /// True when the hypothesis ended with EOS rather than at max_len.
  bool finished = false;
};

/// Argmax token per step until EOS or `max_len` emitted tokens.
template <class S>
Hypothesis greedy_decode(const Transformer<S>& model, std::span<const int> source, int max_len);

/// Length-normalized beam search. Per step the 2 * beam_size best extensions by
/// cumulative log-probability are considered; an extension ending in EOS (or
/// reaching max_len) is kept only when it ranks within the first beam_size.
/// Search stops once beam_size hypotheses have finished. Returns at most
/// beam_size hypotheses sorted by descending score.
template <class S>
std::vector<Hypothesis> beam_decode(const Transformer<S>& model, std::span<const int> source, int beam_size,
                                    int max_len);

/// Cosine similarity between the input embeddings of `ids`.
template <class S>
Eigen::MatrixXd embedding_similarity(const Transformer<S>& model, std::span<const int> ids);

/// CSV: header "token,<t1>,...,<tk>", then one row per token with its label first.
void write_similarity_csv(const std::filesystem::path& path, const std::vector<std::string>& labels,
                          const Eigen::MatrixXd& matrix);
std::pair<std::vector<std::string>, Eigen::MatrixXd> read_similarity_csv(const std::filesystem::path& path);

}  // namespace recur
