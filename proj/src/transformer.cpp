#include "recur/transformer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace recur {

std::string_view task_name(Task task) { return task == Task::symbolic ? "symbolic" : "numeric"; }

Task parse_task(std::string_view text) {
  if (text == "symbolic") {
    return Task::symbolic;
  }
  if (text == "numeric") {
    return Task::numeric;
  }
  throw std::invalid_argument("unknown task: " + std::string(text));
}

ModelConfig ModelConfig::full() {
  ModelConfig c;
  c.encoder_layers = 8;
  c.decoder_layers = 8;
  c.heads = 8;
  c.dim = 512;
  c.ffn_dim = 2048;
  c.max_positions = 1024;
  return c;
}

void ModelConfig::validate() const {
  if (encoder_layers < 1 || decoder_layers < 1) {
    throw std::invalid_argument("model needs at least one encoder and one decoder layer");
  }
  if (heads < 1 || dim < 1 || dim % heads != 0) {
    throw std::invalid_argument("model dim must be a positive multiple of heads");
  }
  if (ffn_dim < 1) {
    throw std::invalid_argument("ffn_dim must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw std::invalid_argument("dropout must lie in [0, 1)");
  }
  if (max_positions < 2) {
    throw std::invalid_argument("max_positions must be at least 2");
  }
}

nlohmann::json model_config_to_json(const ModelConfig& cfg) {
  return {{"encoder_layers", cfg.encoder_layers}, {"decoder_layers", cfg.decoder_layers},
          {"heads", cfg.heads},                   {"dim", cfg.dim},
          {"ffn_dim", cfg.ffn_dim},               {"dropout", cfg.dropout},
          {"max_positions", cfg.max_positions}};
}

ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base) {
  base.encoder_layers = j.value("encoder_layers", base.encoder_layers);
  base.decoder_layers = j.value("decoder_layers", base.decoder_layers);
  base.heads = j.value("heads", base.heads);
  base.dim = j.value("dim", base.dim);
  base.ffn_dim = j.value("ffn_dim", base.ffn_dim);
  base.dropout = j.value("dropout", base.dropout);
  base.max_positions = j.value("max_positions", base.max_positions);
  base.validate();
  return base;
}

std::vector<int> strip_padding(std::span<const int> ids, int pad) {
  std::size_t n = ids.size();
  while (n > 0 && ids[n - 1] == pad) {
    --n;
  }
  return {ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n)};
}

namespace {

using Eigen::Index;

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using RowV = Eigen::Matrix<S, 1, Eigen::Dynamic>;
template <class S>
using ColV = Eigen::Matrix<S, Eigen::Dynamic, 1>;

constexpr double kNormEps = 1e-5;

template <class S>
Eigen::Map<const Mat<S>> cmat(const S* base, std::size_t offset, Index rows, Index cols) {
  return Eigen::Map<const Mat<S>>(base + offset, rows, cols);
}

template <class S>
Eigen::Map<Mat<S>> gmat(S* base, std::size_t offset, Index rows, Index cols) {
  return Eigen::Map<Mat<S>>(base + offset, rows, cols);
}

template <class S>
Eigen::Map<const RowV<S>> crow(const S* base, std::size_t offset, Index n) {
  return Eigen::Map<const RowV<S>>(base + offset, n);
}

template <class S>
Eigen::Map<RowV<S>> grow(S* base, std::size_t offset, Index n) {
  return Eigen::Map<RowV<S>>(base + offset, n);
}

template <class S>
struct NormCache {
  Mat<S> xhat;
  ColV<S> rstd;
};

template <class S, class N>
Mat<S> norm_fwd(const Mat<S>& x, const S* p, const N& n, NormCache<S>* cache) {
  const Index rows = x.rows();
  const Index d = x.cols();
  auto g = crow(p, n.g, d);
  auto b = crow(p, n.b, d);
  Mat<S> y(rows, d);
  if (cache != nullptr) {
    cache->xhat.resize(rows, d);
    cache->rstd.resize(rows);
  }
  for (Index i = 0; i < rows; ++i) {
    const S mean = x.row(i).mean();
    RowV<S> centered = x.row(i).array() - mean;
    const S var = centered.squaredNorm() / static_cast<S>(d);
    const S rstd = S(1) / std::sqrt(var + static_cast<S>(kNormEps));
    centered *= rstd;
    y.row(i) = centered.cwiseProduct(g) + b;
    if (cache != nullptr) {
      cache->xhat.row(i) = centered;
      cache->rstd(i) = rstd;
    }
  }
  return y;
}

template <class S, class N>
Mat<S> norm_bwd(const Mat<S>& dy, const S* p, S* grad, const N& n, const NormCache<S>& cache) {
  const Index rows = dy.rows();
  const Index d = dy.cols();
  auto g = crow(p, n.g, d);
  grow(grad, n.g, d) += dy.cwiseProduct(cache.xhat).colwise().sum();
  grow(grad, n.b, d) += dy.colwise().sum();
  Mat<S> dx(rows, d);
  for (Index i = 0; i < rows; ++i) {
    RowV<S> dxh = dy.row(i).cwiseProduct(g);
    const S m1 = dxh.mean();
    const S m2 = dxh.cwiseProduct(cache.xhat.row(i)).mean();
    dx.row(i) = cache.rstd(i) * (dxh.array() - m1 - cache.xhat.row(i).array() * m2).matrix();
  }
  return dx;
}

template <class S, class L>
Mat<S> lin_fwd(const Mat<S>& x, const S* p, const L& l) {
  Mat<S> y = x * cmat(p, l.w, l.in, l.out);
  y.rowwise() += crow(p, l.b, l.out);
  return y;
}

// Accumulates weight gradients; returns dx.
template <class S, class L>
Mat<S> lin_bwd(const Mat<S>& dy, const Mat<S>& x, const S* p, S* grad, const L& l) {
  gmat(grad, l.w, l.in, l.out).noalias() += x.transpose() * dy;
  grow(grad, l.b, l.out) += dy.colwise().sum();
  return dy * cmat(p, l.w, l.in, l.out).transpose();
}

template <class S>
void softmax_rows(Mat<S>& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    const S mx = m.row(i).maxCoeff();
    m.row(i) = (m.row(i).array() - mx).exp();
    m.row(i) /= m.row(i).sum();
  }
}

struct Span {
  Index q_start;
  Index q_len;
  Index k_start;
  Index k_len;
};

template <class S>
struct AttnCache {
  Mat<S> q, k, v, ctx;
  std::vector<Mat<S>> probs;
};

template <class S, class A>
Mat<S> attn_fwd(const Mat<S>& xq, const Mat<S>& xkv, const S* p, const A& a, const std::vector<Span>& spans,
                bool causal, int heads, AttnCache<S>& c) {
  c.q = lin_fwd(xq, p, a.q);
  c.k = lin_fwd(xkv, p, a.k);
  c.v = lin_fwd(xkv, p, a.v);
  const Index dim = c.q.cols();
  const Index dh = dim / heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));
  c.ctx = Mat<S>::Zero(xq.rows(), dim);
  c.probs.assign(spans.size() * static_cast<std::size_t>(heads), Mat<S>());
  for (std::size_t s = 0; s < spans.size(); ++s) {
    const Span& sp = spans[s];
    for (int h = 0; h < heads; ++h) {
      const Index col = h * dh;
      Mat<S> sc = (c.q.block(sp.q_start, col, sp.q_len, dh) * c.k.block(sp.k_start, col, sp.k_len, dh).transpose()) * scale;
      if (causal) {
        for (Index i = 0; i < sp.q_len; ++i) {
          for (Index j = i + 1; j < sp.k_len; ++j) {
            sc(i, j) = -std::numeric_limits<S>::infinity();
          }
        }
      }
      softmax_rows(sc);
      c.ctx.block(sp.q_start, col, sp.q_len, dh).noalias() = sc * c.v.block(sp.k_start, col, sp.k_len, dh);
      c.probs[s * static_cast<std::size_t>(heads) + static_cast<std::size_t>(h)] = std::move(sc);
    }
  }
  return lin_fwd(c.ctx, p, a.o);
}

// Returns (d xq, d xkv).
template <class S, class A>
std::pair<Mat<S>, Mat<S>> attn_bwd(const Mat<S>& dy, const Mat<S>& xq, const Mat<S>& xkv, const S* p, S* grad,
                                   const A& a, const std::vector<Span>& spans, int heads, const AttnCache<S>& c) {
  const Mat<S> dctx = lin_bwd(dy, c.ctx, p, grad, a.o);
  const Index dim = c.q.cols();
  const Index dh = dim / heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));
  Mat<S> dq = Mat<S>::Zero(c.q.rows(), dim);
  Mat<S> dk = Mat<S>::Zero(c.k.rows(), dim);
  Mat<S> dv = Mat<S>::Zero(c.v.rows(), dim);
  for (std::size_t s = 0; s < spans.size(); ++s) {
    const Span& sp = spans[s];
    for (int h = 0; h < heads; ++h) {
      const Index col = h * dh;
      const Mat<S>& pr = c.probs[s * static_cast<std::size_t>(heads) + static_cast<std::size_t>(h)];
      const auto d_out = dctx.block(sp.q_start, col, sp.q_len, dh);
      Mat<S> dp = d_out * c.v.block(sp.k_start, col, sp.k_len, dh).transpose();
      dv.block(sp.k_start, col, sp.k_len, dh).noalias() += pr.transpose() * d_out;
      const ColV<S> dot = dp.cwiseProduct(pr).rowwise().sum();
      Mat<S> ds = pr.cwiseProduct((dp.colwise() - dot).eval()) * scale;
      dq.block(sp.q_start, col, sp.q_len, dh).noalias() = ds * c.k.block(sp.k_start, col, sp.k_len, dh);
      dk.block(sp.k_start, col, sp.k_len, dh).noalias() += ds.transpose() * c.q.block(sp.q_start, col, sp.q_len, dh);
    }
  }
  Mat<S> dxq = lin_bwd(dq, xq, p, grad, a.q);
  Mat<S> dxkv = lin_bwd(dk, xkv, p, grad, a.k);
  dxkv += lin_bwd(dv, xkv, p, grad, a.v);
  return {std::move(dxq), std::move(dxkv)};
}

template <class S>
Mat<S> dropout_mask(Index rows, Index cols, double rate, Rng& rng) {
  std::bernoulli_distribution keep(1.0 - rate);
  const S scale = static_cast<S>(1.0 / (1.0 - rate));
  Mat<S> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) {
    m.data()[i] = keep(rng) ? scale : S(0);
  }
  return m;
}

template <class S>
struct EncoderCache {
  NormCache<S> n1;
  Mat<S> a;
  AttnCache<S> att;
  Mat<S> m1;
  NormCache<S> n2;
  Mat<S> b, hpre, h;
  Mat<S> m2;
};

template <class S>
struct DecoderCache {
  NormCache<S> n1;
  Mat<S> a;
  AttnCache<S> self;
  Mat<S> m1;
  NormCache<S> n2;
  Mat<S> c;
  AttnCache<S> cross;
  Mat<S> m2;
  NormCache<S> n3;
  Mat<S> e, hpre, h;
  Mat<S> m3;
};

template <class S>
void add_dropout(Mat<S>& y, Mat<S>& mask, double rate, Rng* rng) {
  if (rng != nullptr && rate > 0.0) {
    mask = dropout_mask<S>(y.rows(), y.cols(), rate, *rng);
    y.array() *= mask.array();
  } else {
    mask.resize(0, 0);
  }
}

template <class S>
void apply_mask(Mat<S>& dy, const Mat<S>& mask) {
  if (mask.size() > 0) {
    dy.array() *= mask.array();
  }
}

template <class S>
Mat<S> relu(const Mat<S>& x) {
  return x.cwiseMax(S(0));
}

template <class S>
Mat<S> relu_bwd(const Mat<S>& dy, const Mat<S>& pre) {
  return (pre.array() > S(0)).select(dy, S(0));
}

// One packed forward pass over a batch, keeping what the backward pass needs.
template <class S>
class Pass {
 public:
  using Model = Transformer<S>;

  Pass(const Model& model, std::span<const Example> batch) : model_(model), p_(model.parameters().data()) {
    if (batch.empty()) {
      throw std::invalid_argument("empty batch");
    }
    const auto& cfg = model.config();
    const auto& sp = model.special();
    Index enc_rows = 0;
    Index dec_rows = 0;
    for (const Example& ex : batch) {
      auto src = strip_padding(ex.source, sp.pad);
      auto tgt = strip_padding(ex.target, sp.pad);
      if (src.empty()) {
        throw std::invalid_argument("empty source sequence");
      }
      if (static_cast<int>(src.size()) > cfg.max_positions || static_cast<int>(tgt.size()) + 1 > cfg.max_positions) {
        throw std::invalid_argument("sequence longer than max_positions");
      }
      const auto sl = static_cast<Index>(src.size());
      const auto tl = static_cast<Index>(tgt.size()) + 1;
      for (std::size_t i = 0; i < src.size(); ++i) {
        check_id(src[i]);
        enc_ids_.push_back(src[i]);
        enc_pos_.push_back(static_cast<int>(i));
      }
      dec_ids_.push_back(sp.bos);
      dec_pos_.push_back(0);
      for (std::size_t i = 0; i < tgt.size(); ++i) {
        check_id(tgt[i]);
        const int out = model.output_index(tgt[i]);
        if (out < 0) {
          throw std::invalid_argument("target token outside the model's output set");
        }
        labels_.push_back(out);
        dec_ids_.push_back(tgt[i]);
        dec_pos_.push_back(static_cast<int>(i + 1));
      }
      labels_.push_back(model.output_index(sp.eos));
      enc_spans_.push_back({enc_rows, sl, enc_rows, sl});
      dec_spans_.push_back({dec_rows, tl, dec_rows, tl});
      cross_spans_.push_back({dec_rows, tl, enc_rows, sl});
      enc_rows += sl;
      dec_rows += tl;
    }
  }

  // Returns the logits over output tokens for every decoder row.
  Mat<S> forward(Rng* rng) {
    const auto& cfg = model_.config();
    const auto& lay = model_.layout();
    const double rate = cfg.dropout;

    Mat<S> x = embed(enc_ids_, enc_pos_, lay.enc_pos);
    enc_.resize(lay.encoder.size());
    for (std::size_t l = 0; l < lay.encoder.size(); ++l) {
      const auto& L = lay.encoder[l];
      auto& c = enc_[l];
      c.a = norm_fwd(x, p_, L.ln1, &c.n1);
      Mat<S> o = attn_fwd(c.a, c.a, p_, L.att, enc_spans_, false, cfg.heads, c.att);
      add_dropout(o, c.m1, rate, rng);
      x += o;
      c.b = norm_fwd(x, p_, L.ln2, &c.n2);
      c.hpre = lin_fwd(c.b, p_, L.ff1);
      c.h = relu(c.hpre);
      Mat<S> f = lin_fwd(c.h, p_, L.ff2);
      add_dropout(f, c.m2, rate, rng);
      x += f;
    }
    memory_ = norm_fwd(x, p_, lay.enc_norm, &enc_norm_);

    Mat<S> y = embed(dec_ids_, dec_pos_, lay.dec_pos);
    dec_.resize(lay.decoder.size());
    for (std::size_t l = 0; l < lay.decoder.size(); ++l) {
      const auto& L = lay.decoder[l];
      auto& c = dec_[l];
      c.a = norm_fwd(y, p_, L.ln1, &c.n1);
      Mat<S> o = attn_fwd(c.a, c.a, p_, L.self, dec_spans_, true, cfg.heads, c.self);
      add_dropout(o, c.m1, rate, rng);
      y += o;
      c.c = norm_fwd(y, p_, L.ln2, &c.n2);
      Mat<S> r = attn_fwd(c.c, memory_, p_, L.cross, cross_spans_, false, cfg.heads, c.cross);
      add_dropout(r, c.m2, rate, rng);
      y += r;
      c.e = norm_fwd(y, p_, L.ln3, &c.n3);
      c.hpre = lin_fwd(c.e, p_, L.ff1);
      c.h = relu(c.hpre);
      Mat<S> f = lin_fwd(c.h, p_, L.ff2);
      add_dropout(f, c.m3, rate, rng);
      y += f;
    }
    z_ = norm_fwd(y, p_, lay.dec_norm, &dec_norm_);
    return lin_fwd(z_, p_, lay.out);
  }

  void backward(const Mat<S>& dlogits, S* g) {
    const auto& cfg = model_.config();
    const auto& lay = model_.layout();

    Mat<S> dy = norm_bwd(lin_bwd(dlogits, z_, p_, g, lay.out), p_, g, lay.dec_norm, dec_norm_);
    Mat<S> dmem = Mat<S>::Zero(memory_.rows(), memory_.cols());
    for (std::size_t l = lay.decoder.size(); l-- > 0;) {
      const auto& L = lay.decoder[l];
      const auto& c = dec_[l];
      Mat<S> df = dy;
      apply_mask(df, c.m3);
      Mat<S> de = lin_bwd(relu_bwd(lin_bwd(df, c.h, p_, g, L.ff2), c.hpre), c.e, p_, g, L.ff1);
      dy += norm_bwd(de, p_, g, L.ln3, c.n3);

      Mat<S> dr = dy;
      apply_mask(dr, c.m2);
      auto [dc, dm] = attn_bwd(dr, c.c, memory_, p_, g, L.cross, cross_spans_, cfg.heads, c.cross);
      dmem += dm;
      dy += norm_bwd(dc, p_, g, L.ln2, c.n2);

      Mat<S> d_o = dy;
      apply_mask(d_o, c.m1);
      auto [dq, dkv] = attn_bwd(d_o, c.a, c.a, p_, g, L.self, dec_spans_, cfg.heads, c.self);
      dq += dkv;
      dy += norm_bwd(dq, p_, g, L.ln1, c.n1);
    }
    embed_bwd(dy, dec_ids_, dec_pos_, lay.dec_pos, g);

    Mat<S> dx = norm_bwd(dmem, p_, g, lay.enc_norm, enc_norm_);
    for (std::size_t l = lay.encoder.size(); l-- > 0;) {
      const auto& L = lay.encoder[l];
      const auto& c = enc_[l];
      Mat<S> df = dx;
      apply_mask(df, c.m2);
      Mat<S> db = lin_bwd(relu_bwd(lin_bwd(df, c.h, p_, g, L.ff2), c.hpre), c.b, p_, g, L.ff1);
      dx += norm_bwd(db, p_, g, L.ln2, c.n2);

      Mat<S> d_o = dx;
      apply_mask(d_o, c.m1);
      auto [dq, dkv] = attn_bwd(d_o, c.a, c.a, p_, g, L.att, enc_spans_, cfg.heads, c.att);
      dq += dkv;
      dx += norm_bwd(dq, p_, g, L.ln1, c.n1);
    }
    embed_bwd(dx, enc_ids_, enc_pos_, lay.enc_pos, g);
  }

  const std::vector<int>& labels() const { return labels_; }
  const Mat<S>& memory() const { return memory_; }

 private:
  void check_id(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= model_.vocab_size()) {
      throw std::invalid_argument("token id outside the vocabulary");
    }
  }

  Mat<S> embed(const std::vector<int>& ids, const std::vector<int>& pos, std::size_t pos_offset) const {
    const Index d = model_.config().dim;
    const auto& lay = model_.layout();
    Mat<S> x(static_cast<Index>(ids.size()), d);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      x.row(static_cast<Index>(r)) = crow(p_, lay.tokens + static_cast<std::size_t>(ids[r] * d), d) +
                                     crow(p_, pos_offset + static_cast<std::size_t>(pos[r] * d), d);
    }
    return x;
  }

  void embed_bwd(const Mat<S>& dx, const std::vector<int>& ids, const std::vector<int>& pos, std::size_t pos_offset,
                 S* g) const {
    const Index d = model_.config().dim;
    const auto& lay = model_.layout();
    for (std::size_t r = 0; r < ids.size(); ++r) {
      grow(g, lay.tokens + static_cast<std::size_t>(ids[r] * d), d) += dx.row(static_cast<Index>(r));
      grow(g, pos_offset + static_cast<std::size_t>(pos[r] * d), d) += dx.row(static_cast<Index>(r));
    }
  }

  const Model& model_;
  const S* p_;
  std::vector<int> enc_ids_, enc_pos_, dec_ids_, dec_pos_, labels_;
  std::vector<Span> enc_spans_, dec_spans_, cross_spans_;
  std::vector<EncoderCache<S>> enc_;
  std::vector<DecoderCache<S>> dec_;
  NormCache<S> enc_norm_, dec_norm_;
  Mat<S> memory_, z_;
};

// Single-query attention of one row against cached keys and values.
template <class S>
RowV<S> attend_row(const RowV<S>& q, const Mat<S>& k, const Mat<S>& v, Index rows, int heads) {
  const Index dim = q.cols();
  const Index dh = dim / heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));
  RowV<S> out(dim);
  for (int h = 0; h < heads; ++h) {
    const Index col = h * dh;
    RowV<S> sc = (q.segment(col, dh) * k.block(0, col, rows, dh).transpose()) * scale;
    const S mx = sc.maxCoeff();
    sc = (sc.array() - mx).exp();
    sc /= sc.sum();
    out.segment(col, dh).noalias() = sc * v.block(0, col, rows, dh);
  }
  return out;
}

template <class S>
void append_row(Mat<S>& m, Index row, const Mat<S>& value) {
  if (m.rows() <= row) {
    m.conservativeResize(std::max<Index>(row + 1, 2 * m.rows()), value.cols());
  }
  m.row(row) = value.row(0);
}

}  // namespace

template <class S>
S cross_entropy(const Mat<S>& logits, std::span<const int> labels, Mat<S>* dlogits) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size()) {
    throw std::invalid_argument("logit rows and labels differ in count");
  }
  if (labels.empty()) {
    throw std::invalid_argument("no target positions");
  }
  const auto n = static_cast<S>(labels.size());
  if (dlogits != nullptr) {
    dlogits->resize(logits.rows(), logits.cols());
  }
  double total = 0.0;
  for (Index i = 0; i < logits.rows(); ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    if (label < 0 || label >= logits.cols()) {
      throw std::invalid_argument("label outside the logit range");
    }
    const S mx = logits.row(i).maxCoeff();
    const S lse = mx + std::log((logits.row(i).array() - mx).exp().sum());
    total += static_cast<double>(lse - logits(i, label));
    if (dlogits != nullptr) {
      dlogits->row(i) = (logits.row(i).array() - lse).exp() / n;
      (*dlogits)(i, label) -= S(1) / n;
    }
  }
  return static_cast<S>(total / static_cast<double>(labels.size()));
}

template float cross_entropy<float>(const Mat<float>&, std::span<const int>, Mat<float>*);
template double cross_entropy<double>(const Mat<double>&, std::span<const int>, Mat<double>*);

template <class S>
Transformer<S>::Transformer(ModelConfig cfg, std::size_t vocab_size, std::vector<int> output_ids, SpecialIds special)
    : cfg_(cfg), vocab_size_(vocab_size), output_ids_(std::move(output_ids)), special_(special) {
  cfg_.validate();
  if (vocab_size_ == 0) {
    throw std::invalid_argument("empty vocabulary");
  }
  output_index_.assign(vocab_size_, -1);
  for (std::size_t i = 0; i < output_ids_.size(); ++i) {
    const int id = output_ids_[i];
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size_) {
      throw std::invalid_argument("output token outside the vocabulary");
    }
    if (output_index_[static_cast<std::size_t>(id)] >= 0) {
      throw std::invalid_argument("duplicate output token");
    }
    output_index_[static_cast<std::size_t>(id)] = static_cast<int>(i);
  }
  if (output_index(special_.eos) < 0) {
    throw std::invalid_argument("EOS must be an output token");
  }

  std::size_t n = 0;
  auto alloc = [&n](std::size_t count) {
    const std::size_t at = n;
    n += count;
    return at;
  };
  const auto d = static_cast<std::size_t>(cfg_.dim);
  const auto f = static_cast<std::size_t>(cfg_.ffn_dim);
  auto linear = [&](std::size_t in, std::size_t out) {
    Linear l;
    l.in = static_cast<int>(in);
    l.out = static_cast<int>(out);
    l.w = alloc(in * out);
    l.b = alloc(out);
    return l;
  };
  auto norm = [&]() {
    Norm nm;
    nm.g = alloc(d);
    nm.b = alloc(d);
    return nm;
  };
  auto attention = [&]() { return Attention{linear(d, d), linear(d, d), linear(d, d), linear(d, d)}; };

  layout_.tokens = alloc(vocab_size_ * d);
  layout_.enc_pos = alloc(static_cast<std::size_t>(cfg_.max_positions) * d);
  layout_.dec_pos = alloc(static_cast<std::size_t>(cfg_.max_positions) * d);
  for (int l = 0; l < cfg_.encoder_layers; ++l) {
    EncoderLayer e;
    e.ln1 = norm();
    e.att = attention();
    e.ln2 = norm();
    e.ff1 = linear(d, f);
    e.ff2 = linear(f, d);
    layout_.encoder.push_back(e);
  }
  layout_.enc_norm = norm();
  for (int l = 0; l < cfg_.decoder_layers; ++l) {
    DecoderLayer e;
    e.ln1 = norm();
    e.self = attention();
    e.ln2 = norm();
    e.cross = attention();
    e.ln3 = norm();
    e.ff1 = linear(d, f);
    e.ff2 = linear(f, d);
    layout_.decoder.push_back(e);
  }
  layout_.dec_norm = norm();
  layout_.out = linear(d, output_ids_.size());
  params_.assign(n, S(0));
}

template <class S>
void Transformer<S>::init(std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x1417);
  std::normal_distribution<double> emb(0.0, 0.02);
  const auto d = static_cast<std::size_t>(cfg_.dim);
  auto fill_normal = [&](std::size_t at, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      params_[at + i] = static_cast<S>(emb(rng));
    }
  };
  auto init_linear = [&](const Linear& l) {
    const double a = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
    std::uniform_real_distribution<double> u(-a, a);
    const auto count = static_cast<std::size_t>(l.in) * static_cast<std::size_t>(l.out);
    for (std::size_t i = 0; i < count; ++i) {
      params_[l.w + i] = static_cast<S>(u(rng));
    }
    std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(l.b), l.out, S(0));
  };
  auto init_norm = [&](const Norm& nm) {
    std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(nm.g), d, S(1));
    std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(nm.b), d, S(0));
  };
  auto init_attention = [&](const Attention& a) {
    for (const Linear* l : {&a.q, &a.k, &a.v, &a.o}) {
      init_linear(*l);
    }
  };
  fill_normal(layout_.tokens, vocab_size_ * d);
  fill_normal(layout_.enc_pos, static_cast<std::size_t>(cfg_.max_positions) * d);
  fill_normal(layout_.dec_pos, static_cast<std::size_t>(cfg_.max_positions) * d);
  for (const auto& e : layout_.encoder) {
    init_norm(e.ln1);
    init_attention(e.att);
    init_norm(e.ln2);
    init_linear(e.ff1);
    init_linear(e.ff2);
  }
  init_norm(layout_.enc_norm);
  for (const auto& e : layout_.decoder) {
    init_norm(e.ln1);
    init_attention(e.self);
    init_norm(e.ln2);
    init_attention(e.cross);
    init_norm(e.ln3);
    init_linear(e.ff1);
    init_linear(e.ff2);
  }
  init_norm(layout_.dec_norm);
  init_linear(layout_.out);
}

template <class S>
int Transformer<S>::output_index(int vocab_id) const {
  if (vocab_id < 0 || static_cast<std::size_t>(vocab_id) >= vocab_size_) {
    return -1;
  }
  return output_index_[static_cast<std::size_t>(vocab_id)];
}

template <class S>
void Transformer<S>::zero_output_layer() {
  const auto count = static_cast<std::size_t>(layout_.out.in) * static_cast<std::size_t>(layout_.out.out);
  std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(layout_.out.w), count, S(0));
  std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(layout_.out.b), layout_.out.out, S(0));
}

template <class S>
S Transformer<S>::loss(std::span<const Example> batch, ParamVector<S>* grad, Rng* dropout_rng) const {
  Pass<S> pass(*this, batch);
  const Mat logits = pass.forward(dropout_rng);
  if (grad == nullptr) {
    return cross_entropy<S>(logits, pass.labels());
  }
  if (grad->size() != params_.size()) {
    grad->assign(params_.size(), S(0));
  }
  Mat dlogits;
  const S value = cross_entropy<S>(logits, pass.labels(), &dlogits);
  pass.backward(dlogits, grad->data());
  return value;
}

template <class S>
std::vector<S> Transformer<S>::target_log_probs(const Example& example) const {
  Pass<S> pass(*this, std::span<const Example>(&example, 1));
  const Mat logits = pass.forward(nullptr);
  std::vector<S> out;
  for (Index i = 0; i < logits.rows(); ++i) {
    const S mx = logits.row(i).maxCoeff();
    const S lse = mx + std::log((logits.row(i).array() - mx).exp().sum());
    out.push_back(logits(i, pass.labels()[static_cast<std::size_t>(i)]) - lse);
  }
  return out;
}

template <class S>
typename Transformer<S>::Memory Transformer<S>::encode(std::span<const int> source) const {
  Example ex{std::vector<int>(source.begin(), source.end()), {}};
  Pass<S> pass(*this, std::span<const Example>(&ex, 1));
  pass.forward(nullptr);
  Memory m;
  for (const auto& L : layout_.decoder) {
    m.keys.push_back(lin_fwd(pass.memory(), params_.data(), L.cross.k));
    m.values.push_back(lin_fwd(pass.memory(), params_.data(), L.cross.v));
  }
  return m;
}

template <class S>
typename Transformer<S>::Cache Transformer<S>::start() const {
  Cache c;
  c.keys.assign(layout_.decoder.size(), Mat(0, cfg_.dim));
  c.values.assign(layout_.decoder.size(), Mat(0, cfg_.dim));
  return c;
}

template <class S>
typename Transformer<S>::Vec Transformer<S>::step(const Memory& memory, Cache& cache, int token) const {
  if (cache.length >= cfg_.max_positions) {
    throw std::out_of_range("decoder ran past max_positions");
  }
  if (token < 0 || static_cast<std::size_t>(token) >= vocab_size_) {
    throw std::invalid_argument("token id outside the vocabulary");
  }
  const S* p = params_.data();
  const Index d = cfg_.dim;
  const Index t = cache.length;
  Mat x = crow(p, layout_.tokens + static_cast<std::size_t>(token * d), d) +
             crow(p, layout_.dec_pos + static_cast<std::size_t>(t * d), d);
  for (std::size_t l = 0; l < layout_.decoder.size(); ++l) {
    const auto& L = layout_.decoder[l];
    Mat a = norm_fwd<S>(x, p, L.ln1, nullptr);
    append_row(cache.keys[l], t, lin_fwd(a, p, L.self.k));
    append_row(cache.values[l], t, lin_fwd(a, p, L.self.v));
    Mat ctx = attend_row<S>(lin_fwd(a, p, L.self.q), cache.keys[l], cache.values[l], t + 1, cfg_.heads);
    x += lin_fwd(ctx, p, L.self.o);
    Mat c = norm_fwd<S>(x, p, L.ln2, nullptr);
    ctx = attend_row<S>(lin_fwd(c, p, L.cross.q), memory.keys[l], memory.values[l], memory.keys[l].rows(), cfg_.heads);
    x += lin_fwd(ctx, p, L.cross.o);
    Mat e = norm_fwd<S>(x, p, L.ln3, nullptr);
    x += lin_fwd(relu(lin_fwd(e, p, L.ff1)), p, L.ff2);
  }
  cache.length = static_cast<int>(t + 1);
  Mat logits = lin_fwd(norm_fwd<S>(x, p, layout_.dec_norm, nullptr), p, layout_.out);
  const S mx = logits.maxCoeff();
  const S lse = mx + std::log((logits.array() - mx).exp().sum());
  return (logits.row(0).array() - lse).matrix().transpose();
}

template <class S>
Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>> Transformer<S>::embedding(int vocab_id) const {
  if (vocab_id < 0 || static_cast<std::size_t>(vocab_id) >= vocab_size_) {
    throw std::invalid_argument("token id outside the vocabulary");
  }
  return crow(params_.data(), layout_.tokens + static_cast<std::size_t>(vocab_id) * static_cast<std::size_t>(cfg_.dim),
              cfg_.dim);
}

template class Transformer<float>;
template class Transformer<double>;

}  // namespace recur
