// Copyright 2026 The Crossguard Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CROSSGUARD__NN_HPP_
#define CROSSGUARD__NN_HPP_

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crossguard/common.hpp"
#include "crossguard/features.hpp"
#include "crossguard/tensor_store.hpp"

namespace crossguard
{
namespace nn
{

inline Eigen::MatrixXd sigmoid(const Eigen::MatrixXd & z)
{
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

inline double glorot_limit(int fan_in, int fan_out)
{
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

inline Eigen::MatrixXd glorot_uniform(int rows, int cols, int fan_in, int fan_out, rng::Engine & g)
{
  const double lim = glorot_limit(fan_in, fan_out);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng::uniform(g, -lim, lim);
  }
  return m;
}

/// Long short-term memory cell with fused gate weights, gate order
/// [input, forget, candidate, output] along the row dimension.
struct LstmWeights
{
  Eigen::MatrixXd W;  // 4H x D
  Eigen::MatrixXd U;  // 4H x H
  Eigen::VectorXd b;  // 4H

  int hidden_dim() const { return static_cast<int>(U.cols()); }
  int input_dim() const { return static_cast<int>(W.cols()); }

  void init(int input_dim, int hidden_dim, rng::Engine & g)
  {
    W = glorot_uniform(4 * hidden_dim, input_dim, input_dim, 4 * hidden_dim, g);
    U = glorot_uniform(4 * hidden_dim, hidden_dim, hidden_dim, 4 * hidden_dim, g);
    b = Eigen::VectorXd::Zero(4 * hidden_dim);
    // Forget gate opens at init so early gradients flow through time.
    b.segment(hidden_dim, hidden_dim).setOnes();
  }
};

struct LstmGrads
{
  Eigen::MatrixXd W, U;
  Eigen::VectorXd b;

  void zero_like(const LstmWeights & w)
  {
    W = Eigen::MatrixXd::Zero(w.W.rows(), w.W.cols());
    U = Eigen::MatrixXd::Zero(w.U.rows(), w.U.cols());
    b = Eigen::VectorXd::Zero(w.b.size());
  }
};

/// Activations kept from one forward step for the backward pass.
struct LstmStepCache
{
  Eigen::MatrixXd x;       // D x B
  Eigen::MatrixXd h_prev;  // H x B
  Eigen::MatrixXd c_prev;  // H x B
  Eigen::MatrixXd i, f, g, o;  // H x B, post-activation
  Eigen::MatrixXd tanh_c;  // H x B, tanh of the new cell state
};

/// Advances (h, c) one step. When cache is non-null the activations needed
/// for backpropagation are recorded.
inline void lstm_forward_step(
  const LstmWeights & w, const Eigen::MatrixXd & x, Eigen::MatrixXd & h, Eigen::MatrixXd & c,
  LstmStepCache * cache)
{
  const int H = w.hidden_dim();
  Eigen::MatrixXd z = w.W * x + w.U * h;
  z.colwise() += w.b;
  const Eigen::MatrixXd i = sigmoid(z.topRows(H));
  const Eigen::MatrixXd f = sigmoid(z.middleRows(H, H));
  const Eigen::MatrixXd g = z.middleRows(2 * H, H).array().tanh().matrix();
  const Eigen::MatrixXd o = sigmoid(z.bottomRows(H));
  Eigen::MatrixXd c_new = f.cwiseProduct(c) + i.cwiseProduct(g);
  const Eigen::MatrixXd tanh_c = c_new.array().tanh().matrix();
  if (cache != nullptr) {
    cache->x = x;
    cache->h_prev = h;
    cache->c_prev = c;
    cache->i = i;
    cache->f = f;
    cache->g = g;
    cache->o = o;
    cache->tanh_c = tanh_c;
  }
  c = std::move(c_new);
  h = o.cwiseProduct(tanh_c);
}

/// One step of backpropagation through time. On entry dh holds the total
/// gradient at h_t and dc the carry arriving from step t+1; on exit they hold
/// the recurrent gradients for step t-1. dx receives the input gradient.
inline void lstm_backward_step(
  const LstmWeights & w, const LstmStepCache & cc, Eigen::MatrixXd & dh, Eigen::MatrixXd & dc,
  LstmGrads & grads, Eigen::MatrixXd & dx)
{
  const int H = w.hidden_dim();
  const Eigen::MatrixXd do_ = dh.cwiseProduct(cc.tanh_c);
  Eigen::MatrixXd dc_total =
    dh.cwiseProduct(cc.o).cwiseProduct((1.0 - cc.tanh_c.array().square()).matrix()) + dc;
  const Eigen::MatrixXd di = dc_total.cwiseProduct(cc.g);
  const Eigen::MatrixXd df = dc_total.cwiseProduct(cc.c_prev);
  const Eigen::MatrixXd dg = dc_total.cwiseProduct(cc.i);

  Eigen::MatrixXd dz(4 * H, dh.cols());
  dz.topRows(H) = di.cwiseProduct(cc.i).cwiseProduct((1.0 - cc.i.array()).matrix());
  dz.middleRows(H, H) = df.cwiseProduct(cc.f).cwiseProduct((1.0 - cc.f.array()).matrix());
  dz.middleRows(2 * H, H) = dg.cwiseProduct((1.0 - cc.g.array().square()).matrix());
  dz.bottomRows(H) = do_.cwiseProduct(cc.o).cwiseProduct((1.0 - cc.o.array()).matrix());

  grads.W.noalias() += dz * cc.x.transpose();
  grads.U.noalias() += dz * cc.h_prev.transpose();
  grads.b += dz.rowwise().sum();

  dx.noalias() = w.W.transpose() * dz;
  dh.noalias() = w.U.transpose() * dz;
  dc = dc_total.cwiseProduct(cc.f);
}

struct DenseWeights
{
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;  // out

  void init(int input_dim, int output_dim, rng::Engine & g)
  {
    W = glorot_uniform(output_dim, input_dim, input_dim, output_dim, g);
    b = Eigen::VectorXd::Zero(output_dim);
  }
};

struct DenseGrads
{
  Eigen::MatrixXd W;
  Eigen::VectorXd b;

  void zero_like(const DenseWeights & w)
  {
    W = Eigen::MatrixXd::Zero(w.W.rows(), w.W.cols());
    b = Eigen::VectorXd::Zero(w.b.size());
  }
};

/// Adam with bias correction. One shared step counter; per-parameter moment
/// buffers live beside the parameter they track.
struct AdamMoments
{
  Eigen::MatrixXd m, v;

  void zero(Eigen::Index rows, Eigen::Index cols)
  {
    m = Eigen::MatrixXd::Zero(rows, cols);
    v = Eigen::MatrixXd::Zero(rows, cols);
  }
};

class AdamOptimizer
{
public:
  AdamOptimizer(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
  : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps)
  {
  }

  void begin_step() { ++t_; }

  template <typename Param, typename Grad>
  void update(Param & p, const Grad & g, AdamMoments & st) const
  {
    st.m = beta1_ * st.m + (1.0 - beta1_) * g;
    st.v = beta2_ * st.v.array().matrix() + (1.0 - beta2_) * g.array().square().matrix();
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    p.array() -=
      lr_ * (st.m.array() / bc1) / ((st.v.array() / bc2).sqrt() + eps_);
  }

private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

/// Encoder-decoder with autoregressive decoding: the decoder consumes its own
/// previous head output. The head is a tanh dense layer followed by a linear
/// output layer, applied at every decoder step. With residual_head the head
/// emits the increment added to the previous output, so the bounded
/// activations only ever have to represent one-step displacements.
struct Seq2SeqDims
{
  int input_dim = 0;
  int hidden = 0;
  int dense_units = 0;
  int out_dim = 0;
  bool residual_head = true;
};

struct Seq2SeqGrads
{
  LstmGrads enc, dec;
  DenseGrads d1, d2;
};

struct Seq2SeqWorkspace
{
  std::vector<LstmStepCache> enc_caches;
  std::vector<LstmStepCache> dec_caches;
  std::vector<Eigen::MatrixXd> dec_h;    // L of H x B (head inputs)
  std::vector<Eigen::MatrixXd> d1_act;   // L of dense x B (tanh outputs)
  std::vector<Eigen::MatrixXd> head;     // L of out x B
};

class Seq2Seq
{
public:
  LstmWeights enc, dec;
  DenseWeights d1, d2;
  bool residual_head = true;

  void init(const Seq2SeqDims & dims, std::uint64_t seed)
  {
    if (dims.input_dim <= 0 || dims.hidden <= 0 || dims.dense_units <= 0 || dims.out_dim <= 0) {
      throw ConfigError("model dimensions must be positive");
    }
    residual_head = dims.residual_head;
    auto g = rng::derive(seed, 0x11);
    enc.init(dims.input_dim, dims.hidden, g);
    dec.init(dims.out_dim, dims.hidden, g);
    d1.init(dims.hidden, dims.dense_units, g);
    d2.init(dims.dense_units, dims.out_dim, g);
  }

  Seq2SeqDims dims() const
  {
    return Seq2SeqDims{
      enc.input_dim(), enc.hidden_dim(), static_cast<int>(d1.W.rows()),
      static_cast<int>(d2.W.rows()), residual_head};
  }

  /// Forward over a batch. inputs: T matrices of D x B; bootstrap: out x B
  /// first decoder token; decode_len: L. Head outputs per step are returned;
  /// when ws is non-null every activation needed for backward is cached.
  std::vector<Eigen::MatrixXd> forward(
    const std::vector<Eigen::MatrixXd> & inputs, const Eigen::MatrixXd & bootstrap,
    int decode_len, Seq2SeqWorkspace * ws) const
  {
    if (inputs.empty()) throw ContractError("empty input sequence");
    const int H = enc.hidden_dim();
    const Eigen::Index B = inputs.front().cols();
    if (inputs.front().rows() != enc.input_dim()) {
      throw ContractError("input feature dimension mismatch");
    }
    if (bootstrap.rows() != d2.W.rows() || bootstrap.cols() != B) {
      throw ContractError("bootstrap shape mismatch");
    }
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(H, B);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(H, B);
    if (ws != nullptr) {
      ws->enc_caches.resize(inputs.size());
      ws->dec_caches.resize(static_cast<std::size_t>(decode_len));
      ws->dec_h.resize(static_cast<std::size_t>(decode_len));
      ws->d1_act.resize(static_cast<std::size_t>(decode_len));
      ws->head.resize(static_cast<std::size_t>(decode_len));
    }
    for (std::size_t t = 0; t < inputs.size(); ++t) {
      lstm_forward_step(enc, inputs[t], h, c, ws != nullptr ? &ws->enc_caches[t] : nullptr);
    }
    std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(decode_len));
    Eigen::MatrixXd x = bootstrap;
    for (int j = 0; j < decode_len; ++j) {
      lstm_forward_step(dec, x, h, c, ws != nullptr ? &ws->dec_caches[j] : nullptr);
      Eigen::MatrixXd a1 = (d1.W * h).colwise() + d1.b;
      a1 = a1.array().tanh().matrix();
      Eigen::MatrixXd y = (d2.W * a1).colwise() + d2.b;
      if (residual_head) y += x;
      if (ws != nullptr) {
        ws->dec_h[j] = h;
        ws->d1_act[j] = a1;
        ws->head[j] = y;
      }
      out[j] = y;
      x = std::move(y);
    }
    return out;
  }

  /// Backpropagation. dhead[j] is dLoss/d(head output j) from the loss alone;
  /// the autoregressive feedback path into step j+1 is handled here.
  void backward(const Seq2SeqWorkspace & ws, const std::vector<Eigen::MatrixXd> & dhead,
    Seq2SeqGrads & grads) const
  {
    const int L = static_cast<int>(ws.dec_caches.size());
    if (static_cast<int>(dhead.size()) != L) throw ContractError("dhead length mismatch");
    const Eigen::Index B = dhead.front().cols();
    const int H = enc.hidden_dim();
    Eigen::MatrixXd dh_carry = Eigen::MatrixXd::Zero(H, B);
    Eigen::MatrixXd dc_carry = Eigen::MatrixXd::Zero(H, B);
    Eigen::MatrixXd dfb;  // gradient into the decoder input of the step after j
    Eigen::MatrixXd dx;
    for (int j = L - 1; j >= 0; --j) {
      Eigen::MatrixXd dout = dhead[static_cast<std::size_t>(j)];
      if (j < L - 1) dout += dfb;
      grads.d2.W.noalias() += dout * ws.d1_act[static_cast<std::size_t>(j)].transpose();
      grads.d2.b += dout.rowwise().sum();
      Eigen::MatrixXd da1 = d2.W.transpose() * dout;
      da1 = da1.cwiseProduct(
        (1.0 - ws.d1_act[static_cast<std::size_t>(j)].array().square()).matrix());
      grads.d1.W.noalias() += da1 * ws.dec_h[static_cast<std::size_t>(j)].transpose();
      grads.d1.b += da1.rowwise().sum();
      Eigen::MatrixXd dh = d1.W.transpose() * da1 + dh_carry;
      lstm_backward_step(dec, ws.dec_caches[static_cast<std::size_t>(j)], dh, dc_carry, grads.dec, dx);
      dh_carry = std::move(dh);
      dfb = dx;  // decoder input at j is head output at j-1 (bootstrap at j=0)
      // Residual identity: the previous output also enters this step's output
      // directly, not only through the recurrence.
      if (residual_head) dfb += dout;
    }
    for (int t = static_cast<int>(ws.enc_caches.size()) - 1; t >= 0; --t) {
      Eigen::MatrixXd dh = dh_carry;
      lstm_backward_step(enc, ws.enc_caches[static_cast<std::size_t>(t)], dh, dc_carry, grads.enc, dx);
      dh_carry = std::move(dh);
    }
  }

  void zero_grads(Seq2SeqGrads & g) const
  {
    g.enc.zero_like(enc);
    g.dec.zero_like(dec);
    g.d1.zero_like(d1);
    g.d2.zero_like(d2);
  }

  void save_params(TensorStore & store, const std::string & prefix) const
  {
    store.put(prefix + "enc_W", enc.W);
    store.put(prefix + "enc_U", enc.U);
    store.put(prefix + "enc_b", enc.b);
    store.put(prefix + "dec_W", dec.W);
    store.put(prefix + "dec_U", dec.U);
    store.put(prefix + "dec_b", dec.b);
    store.put(prefix + "d1_W", d1.W);
    store.put(prefix + "d1_b", d1.b);
    store.put(prefix + "d2_W", d2.W);
    store.put(prefix + "d2_b", d2.b);
  }

  void load_params(const TensorStore & store, const std::string & prefix)
  {
    enc.W = store.get(prefix + "enc_W");
    enc.U = store.get(prefix + "enc_U");
    enc.b = store.get(prefix + "enc_b");
    dec.W = store.get(prefix + "dec_W");
    dec.U = store.get(prefix + "dec_U");
    dec.b = store.get(prefix + "dec_b");
    d1.W = store.get(prefix + "d1_W");
    d1.b = store.get(prefix + "d1_b");
    d2.W = store.get(prefix + "d2_W");
    d2.b = store.get(prefix + "d2_b");
  }
};

/// Moment buffers for every Seq2Seq parameter.
struct Seq2SeqAdam
{
  AdamMoments enc_W, enc_U, enc_b, dec_W, dec_U, dec_b, d1_W, d1_b, d2_W, d2_b;

  void zero_like(const Seq2Seq & net)
  {
    enc_W.zero(net.enc.W.rows(), net.enc.W.cols());
    enc_U.zero(net.enc.U.rows(), net.enc.U.cols());
    enc_b.zero(net.enc.b.size(), 1);
    dec_W.zero(net.dec.W.rows(), net.dec.W.cols());
    dec_U.zero(net.dec.U.rows(), net.dec.U.cols());
    dec_b.zero(net.dec.b.size(), 1);
    d1_W.zero(net.d1.W.rows(), net.d1.W.cols());
    d1_b.zero(net.d1.b.size(), 1);
    d2_W.zero(net.d2.W.rows(), net.d2.W.cols());
    d2_b.zero(net.d2.b.size(), 1);
  }

  void apply(Seq2Seq & net, const Seq2SeqGrads & g, AdamOptimizer & opt)
  {
    opt.begin_step();
    opt.update(net.enc.W, g.enc.W, enc_W);
    opt.update(net.enc.U, g.enc.U, enc_U);
    opt.update(net.enc.b, g.enc.b, enc_b);
    opt.update(net.dec.W, g.dec.W, dec_W);
    opt.update(net.dec.U, g.dec.U, dec_U);
    opt.update(net.dec.b, g.dec.b, dec_b);
    opt.update(net.d1.W, g.d1.W, d1_W);
    opt.update(net.d1.b, g.d1.b, d1_b);
    opt.update(net.d2.W, g.d2.W, d2_W);
    opt.update(net.d2.b, g.d2.b, d2_b);
  }
};

/// Minibatch of training windows in model layout: encoder inputs are
/// standardized feature columns, targets raw positions in meters.
struct WindowBatch
{
  std::vector<Eigen::MatrixXd> inputs;   // T of D x B
  Eigen::MatrixXd bootstrap;             // 2 x B standardized (lat, lon) at the last input row
  std::vector<Eigen::MatrixXd> targets;  // L of 2 x B raw meters (lat, lon)
};

inline WindowBatch make_window_batch(
  const std::vector<FeatureTrack> & tracks, const Scaler & scaler,
  const std::vector<WindowRef> & windows, std::size_t from, std::size_t to, int input_len,
  int horizon_len)
{
  if (to <= from || to > windows.size()) throw ContractError("bad batch range");
  const auto B = static_cast<Eigen::Index>(to - from);
  const int D = scaler.info.dim();
  WindowBatch batch;
  batch.inputs.assign(
    static_cast<std::size_t>(input_len), Eigen::MatrixXd(D, B));
  batch.targets.assign(static_cast<std::size_t>(horizon_len), Eigen::MatrixXd(2, B));
  batch.bootstrap.resize(2, B);
  for (std::size_t wi = from; wi < to; ++wi) {
    const auto col = static_cast<Eigen::Index>(wi - from);
    const auto & ref = windows[wi];
    const auto & trk = tracks[ref.track_idx];
    for (int t = 0; t < input_len; ++t) {
      const Eigen::RowVectorXd raw = trk.feats.row(ref.start + t);
      Eigen::RowVectorXd std_row =
        ((raw.array() - scaler.mean.transpose().array()) / scaler.std.transpose().array())
          .matrix();
      batch.inputs[static_cast<std::size_t>(t)].col(col) = std_row.transpose();
      if (t == input_len - 1) {
        batch.bootstrap(0, col) = std_row(0);
        batch.bootstrap(1, col) = std_row(1);
      }
    }
    for (int j = 0; j < horizon_len; ++j) {
      batch.targets[static_cast<std::size_t>(j)].col(col) =
        trk.pos.row(ref.start + input_len + j).transpose();
    }
  }
  return batch;
}

/// Training history recorded into checkpoints.
struct TrainHistory
{
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  int epochs = 0;
  std::string stop_reason;
};

/// Improvement-based early stopping: stop after `patience` consecutive epochs
/// whose validation loss improves on the best seen by less than min_delta.
class EarlyStopper
{
public:
  EarlyStopper(double min_delta, int patience) : min_delta_(min_delta), patience_(patience) {}

  bool update(double val_loss)
  {
    const double improvement = best_ - val_loss;
    if (improvement < min_delta_) {
      ++streak_;
    } else {
      streak_ = 0;
    }
    best_ = std::min(best_, val_loss);
    return streak_ >= patience_;
  }

private:
  double min_delta_;
  int patience_;
  double best_ = std::numeric_limits<double>::infinity();
  int streak_ = 0;
};

/// FNV-1a over the scaler's byte content, recorded in checkpoints so a model
/// is never fed windows standardized with a different scaler.
inline std::uint64_t scaler_hash(const Scaler & sc)
{
  std::uint64_t h = 1469598103934665603ull;
  const auto mix = [&h](const double * data, Eigen::Index n) {
    const auto * bytes = reinterpret_cast<const unsigned char *>(data);
    for (Eigen::Index i = 0; i < n * static_cast<Eigen::Index>(sizeof(double)); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  };
  mix(sc.mean.data(), sc.mean.size());
  mix(sc.std.data(), sc.std.size());
  return h;
}

}  // namespace nn
}  // namespace crossguard

#endif  // CROSSGUARD__NN_HPP_
