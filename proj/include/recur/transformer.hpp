#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "recur/random.hpp"

namespace recur {

/// Parameter storage aligned for the widest SIMD width, so reductions do not
/// depend on where the heap places the buffer.
template <class S>
using ParamVector = std::vector<S, Eigen::aligned_allocator<S>>;

enum class Task : std::uint8_t { symbolic, numeric };

std::string_view task_name(Task task);
Task parse_task(std::string_view text);

struct ModelConfig {
  int encoder_layers = 2;
  int decoder_layers = 2;
  int heads = 4;
  int dim = 64;
  int ffn_dim = 256;
  double dropout = 0.0;
  int max_positions = 256;

  /// Default desk-scale model.
  static ModelConfig desk() { return {}; }
  /// 8 layers, 8 heads, width 512.
  static ModelConfig full();

  void validate() const;
};

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {});

/// Source and target as vocabulary ids, without BOS/EOS. Trailing PAD ids are ignored.
struct Example {
  std::vector<int> source;
  std::vector<int> target;
};

struct SpecialIds {
  int pad = 0;
  int bos = 1;
  int eos = 2;
};

/// Pre-LN encoder-decoder transformer with learned absolute positions. The
/// embedding table spans the whole vocabulary; the output layer covers only
/// `output_ids` (the tokens the task can emit, EOS included).
template <class S>
class Transformer {
 public:
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

  Transformer(ModelConfig cfg, std::size_t vocab_size, std::vector<int> output_ids, SpecialIds special);

  /// Xavier-uniform weights, N(0, 0.02) embeddings, unit LayerNorm gains.
  void init(std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  std::size_t vocab_size() const { return vocab_size_; }
  const std::vector<int>& output_ids() const { return output_ids_; }
  /// Output index of a vocabulary id, or -1 when the model cannot emit it.
  int output_index(int vocab_id) const;
  const SpecialIds& special() const { return special_; }

  std::size_t parameter_count() const { return params_.size(); }
  ParamVector<S>& parameters() { return params_; }
  const ParamVector<S>& parameters() const { return params_; }
  /// Zeroes the output projection (uniform predictive distribution).
  void zero_output_layer();

  /// Mean token cross-entropy over every target position of the batch (target
  /// tokens plus the final EOS). When `grad` is given, d(loss)/d(params) is
  /// added into it. Dropout is active only when `dropout_rng` is given.
  S loss(std::span<const Example> batch, ParamVector<S>* grad = nullptr, Rng* dropout_rng = nullptr) const;

  /// Teacher-forced log-probability of each target token and the final EOS.
  std::vector<S> target_log_probs(const Example& example) const;

  /// Cross-attention keys and values per decoder layer.
  struct Memory {
    std::vector<Mat> keys;
    std::vector<Mat> values;
  };
  /// Self-attention keys and values of the tokens fed so far, per decoder layer.
  struct Cache {
    std::vector<Mat> keys;
    std::vector<Mat> values;
    int length = 0;
  };

  Memory encode(std::span<const int> source) const;
  Cache start() const;
  /// Feeds `token` at the next decoder position; returns log-probabilities over output_ids.
  Vec step(const Memory& memory, Cache& cache, int token) const;

  /// Input embedding row of a vocabulary id.
  Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>> embedding(int vocab_id) const;

  /// Copies parameters from a model of the same shape in another precision.
  template <class T>
  void assign_from(const Transformer<T>& other) {
    const auto& src = other.parameters();
    params_.assign(src.begin(), src.end());
  }

  struct Linear {
    std::size_t w = 0;
    std::size_t b = 0;
    int in = 0;
    int out = 0;
  };
  struct Norm {
    std::size_t g = 0;
    std::size_t b = 0;
  };
  struct Attention {
    Linear q, k, v, o;
  };
  struct EncoderLayer {
    Norm ln1;
    Attention att;
    Norm ln2;
    Linear ff1, ff2;
  };
  struct DecoderLayer {
    Norm ln1;
    Attention self;
    Norm ln2;
    Attention cross;
    Norm ln3;
    Linear ff1, ff2;
  };
  struct Layout {
    std::size_t tokens = 0;
    std::size_t enc_pos = 0;
    std::size_t dec_pos = 0;
    std::vector<EncoderLayer> encoder;
    Norm enc_norm;
    std::vector<DecoderLayer> decoder;
    Norm dec_norm;
    Linear out;
  };
  const Layout& layout() const { return layout_; }

 private:
  ModelConfig cfg_;
  std::size_t vocab_size_;
  std::vector<int> output_ids_;
  std::vector<int> output_index_;
  SpecialIds special_;
  Layout layout_;
  ParamVector<S> params_;
};

extern template class Transformer<float>;
extern template class Transformer<double>;

/// Mean cross-entropy of rows of `logits` against `labels`; fills `dlogits` when non-null.
template <class S>
S cross_entropy(const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& logits,
                std::span<const int> labels,
                Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>* dlogits = nullptr);

/// Removes trailing PAD ids.
std::vector<int> strip_padding(std::span<const int> ids, int pad);

}  // namespace recur
