#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "desmoke/layers.hpp"

namespace desmoke {

// U-Net generator configuration. depth == 0 means log2(resolution).
// Encoder widths are base_width * min(2^(i-1), 8) * width_scale.
struct GeneratorSpec {
  int resolution = 256;
  int input_channels = 4;
  int output_channels = 3;
  int base_width = 64;
  double width_scale = 1.0;
  int depth = 0;
  float dropout_rate = 0.5f;
};

// PatchGAN discriminator configuration; input is the 4-channel conditioned
// stack concatenated with the 3-channel candidate image.
struct DiscriminatorSpec {
  int resolution = 256;
  int input_channels = 7;
  int base_width = 64;
  double width_scale = 1.0;
  int n_down = 3;
};

struct Shape3 {
  int h = 0, w = 0, c = 0;
  bool operator==(const Shape3&) const = default;
};

int scaled_width(int w, double scale);
int generator_depth(const GeneratorSpec& spec);
void validate(const GeneratorSpec& spec);
void validate(const DiscriminatorSpec& spec);

// Layer-by-layer output shapes: encoder rows, decoder rows (deconv outputs,
// before the skip concatenation), final output row. 2*depth+1 rows.
std::vector<Shape3> generator_shape_trace(const GeneratorSpec& spec);
// n_down conv rows, pad row, stride-1 conv row, pad row, final conv row.
std::vector<Shape3> discriminator_shape_trace(const DiscriminatorSpec& spec);

enum class Mode { Train, EvalStochastic, EvalDeterministic };

namespace detail {

template <class T>
struct EncStage {
  Conv2d<T> conv;
  BatchNorm2d<T> bn;
  LeakyRelu<T> act{T(0.2)};

  EncStage(int in_c, int out_c) : conv(in_c, out_c, 4, 2, 1), bn(out_c) {}

  Tensor4<T> forward(const Tensor4<T>& x, bool batch_stats) {
    return act.forward(bn.forward(conv.forward(x), batch_stats));
  }
  Tensor4<T> backward(const Tensor4<T>& dy) {
    return conv.backward(bn.backward(act.backward(dy)));
  }
};

template <class T>
struct DecStage {
  ConvTranspose2d<T> deconv;
  BatchNorm2d<T> bn;
  LeakyRelu<T> act{T(0)};  // plain ReLU
  Dropout<T> drop;
  bool has_dropout;

  DecStage(int in_c, int out_c, int pad, int opad, bool dropout, T rate)
      : deconv(in_c, out_c, 4, 2, pad, opad), bn(out_c), drop(rate), has_dropout(dropout) {}

  Tensor4<T> forward(const Tensor4<T>& x, Mode mode, std::uint64_t seed) {
    Tensor4<T> y = act.forward(bn.forward(deconv.forward(x), mode == Mode::Train));
    const bool active = has_dropout && mode != Mode::EvalDeterministic;
    return drop.forward(y, active, seed);
  }
  Tensor4<T> backward(const Tensor4<T>& dy) {
    return deconv.backward(bn.backward(act.backward(drop.backward(dy))));
  }
};

}  // namespace detail

// The conditioned U-Net. Input and output live in [0,1]; the [-1,1] mapping
// happens at the boundary. Skips concatenate encoder k's activation onto the
// output of decoder stage depth+1-k.
template <class T>
class Generator {
 public:
  Generator(const GeneratorSpec& spec, std::uint64_t init_seed);

  Tensor4<T> forward(const Tensor4<T>& x01, Mode mode, std::uint64_t seed = 0);
  // dy is w.r.t. the [0,1] output; returns gradient w.r.t. the [0,1] input.
  Tensor4<T> backward(const Tensor4<T>& dy01);

  std::vector<ParamRef<T>> params();
  std::vector<BufferRef<T>> buffers();
  void zero_grad();

  const GeneratorSpec& spec() const { return spec_; }

  // Test instrumentation: record per-row activations / zero one skip branch.
  void set_record_rows(bool on) { record_rows_ = on; }
  const std::vector<Tensor4<T>>& recorded_rows() const { return rows_; }
  void set_probe_zero_skip(int encoder_index_1based) { probe_zero_skip_ = encoder_index_1based; }

 private:
  GeneratorSpec spec_;
  int depth_;
  std::vector<detail::EncStage<T>> enc_;
  std::vector<detail::DecStage<T>> dec_;
  ConvTranspose2d<T> final_deconv_;
  Tanh<T> tanh_;

  std::vector<Tensor4<T>> enc_out_;
  std::vector<int> dec_out_c_;
  bool record_rows_ = false;
  std::vector<Tensor4<T>> rows_;
  int probe_zero_skip_ = 0;
};

template <class T>
class Discriminator {
 public:
  Discriminator(const DiscriminatorSpec& spec, std::uint64_t init_seed);

  // Raw (pre-sigmoid) patch scores.
  Tensor4<T> forward(const Tensor4<T>& conditioned01, const Tensor4<T>& candidate01, Mode mode);
  // Gradients w.r.t. the [0,1] inputs, split back into (conditioned, candidate).
  std::pair<Tensor4<T>, Tensor4<T>> backward(const Tensor4<T>& dscores);

  std::vector<ParamRef<T>> params();
  std::vector<BufferRef<T>> buffers();
  void zero_grad();

  const DiscriminatorSpec& spec() const { return spec_; }

 private:
  DiscriminatorSpec spec_;
  std::vector<detail::EncStage<T>> down_;  // conv+bn+lrelu rows
  ZeroPad2d<T> pad1_{1};
  Conv2d<T> mid_conv_;
  BatchNorm2d<T> mid_bn_;
  LeakyRelu<T> mid_act_{T(0.2)};
  ZeroPad2d<T> pad2_{1};
  Conv2d<T> out_conv_;
  int cond_channels_ = 0;
};

// ---- template definitions ----

template <class T>
Generator<T>::Generator(const GeneratorSpec& spec, std::uint64_t init_seed)
    : spec_(spec),
      depth_(generator_depth(spec)),
      final_deconv_(0, 0, 4, 2, 1) {
  validate(spec);
  const int e = depth_;
  auto width = [&](int stage_1based) {
    const int mult = stage_1based >= 4 ? 8 : (1 << (stage_1based - 1));
    return scaled_width(spec.base_width * mult, spec.width_scale);
  };

  int in_c = spec.input_channels;
  for (int i = 1; i <= e; ++i) {
    enc_.emplace_back(in_c, width(i));
    in_c = width(i);
  }
  // D1 widens channels at 1x1 (pad 2, output padding 1 keeps the size);
  // D2..DE double the spatial size, each seeing the previous stage's output
  // plus the skip appended after it.
  dec_.emplace_back(width(e), 2 * width(e), 2, 1, true, T(spec.dropout_rate));
  for (int m = 2; m <= e; ++m) {
    const int dec_in = m == 2 ? 2 * width(e) : 3 * width(e - m + 2);
    const int dec_out = 2 * width(e - m + 1);
    dec_.emplace_back(dec_in, dec_out, 1, 0, m <= 3, T(spec.dropout_rate));
  }
  final_deconv_ = ConvTranspose2d<T>(3 * width(1), spec.output_channels, 4, 2, 1);

  Rng rng(init_seed);
  const T stddev = T(0.02);
  for (auto& s : enc_) {
    s.conv.init(rng, stddev);
    s.bn.init(rng, stddev);
  }
  for (auto& s : dec_) {
    s.deconv.init(rng, stddev);
    s.bn.init(rng, stddev);
  }
  final_deconv_.init(rng, stddev);
}

template <class T>
Tensor4<T> Generator<T>::forward(const Tensor4<T>& x01, Mode mode, std::uint64_t seed) {
  if (x01.c != spec_.input_channels || x01.h != spec_.resolution || x01.w != spec_.resolution)
    throw ShapeError("Generator: input shape does not match spec");
  rows_.clear();
  Tensor4<T> cur = x01;
  for (T& v : cur.v) v = T(2) * v - T(1);

  enc_out_.clear();
  enc_out_.reserve(depth_);
  for (int i = 0; i < depth_; ++i) {
    cur = enc_[i].forward(cur, mode == Mode::Train);
    enc_out_.push_back(cur);
    if (record_rows_) rows_.push_back(cur);
  }

  dec_out_c_.assign(depth_, 0);
  for (int m = 1; m <= depth_; ++m) {
    cur = dec_[m - 1].forward(cur, mode, mix(seed, static_cast<std::uint64_t>(m)));
    dec_out_c_[m - 1] = cur.c;
    if (record_rows_) rows_.push_back(cur);
    if (m >= 2) {
      Tensor4<T> skip = enc_out_[depth_ - m];  // encoder depth+1-m, 1-based
      if (probe_zero_skip_ == depth_ - m + 1)
        for (T& v : skip.v) v = T(0);
      cur = concat_channels(cur, skip);
    }
  }

  cur = tanh_.forward(final_deconv_.forward(cur));
  for (T& v : cur.v) v = T(0.5) * v + T(0.5);
  if (record_rows_) rows_.push_back(cur);
  return cur;
}

template <class T>
Tensor4<T> Generator<T>::backward(const Tensor4<T>& dy01) {
  Tensor4<T> d = dy01;
  for (T& v : d.v) v *= T(0.5);
  d = final_deconv_.backward(tanh_.backward(d));

  std::vector<Tensor4<T>> skip_grad(depth_);
  for (int m = depth_; m >= 1; --m) {
    if (m >= 2) {
      auto [d_dec, d_skip] = split_channels(d, dec_out_c_[m - 1]);
      skip_grad[depth_ - m] = std::move(d_skip);
      d = dec_[m - 1].backward(d_dec);
    } else {
      d = dec_[0].backward(d);
    }
  }

  for (int i = depth_ - 1; i >= 0; --i) {
    d = enc_[i].backward(d);
    if (i - 1 >= 0) {
      for (std::size_t j = 0; j < d.v.size(); ++j) d.v[j] += skip_grad[i - 1].v[j];
    }
  }
  for (T& v : d.v) v *= T(2);
  return d;
}

template <class T>
std::vector<ParamRef<T>> Generator<T>::params() {
  std::vector<ParamRef<T>> out;
  for (std::size_t i = 0; i < enc_.size(); ++i) {
    const std::string p = "g.enc" + std::to_string(i + 1);
    enc_[i].conv.collect(p + ".conv", out);
    enc_[i].bn.collect(p + ".bn", out);
  }
  for (std::size_t i = 0; i < dec_.size(); ++i) {
    const std::string p = "g.dec" + std::to_string(i + 1);
    dec_[i].deconv.collect(p + ".deconv", out);
    dec_[i].bn.collect(p + ".bn", out);
  }
  final_deconv_.collect("g.final.deconv", out);
  return out;
}

template <class T>
std::vector<BufferRef<T>> Generator<T>::buffers() {
  std::vector<BufferRef<T>> out;
  for (std::size_t i = 0; i < enc_.size(); ++i)
    enc_[i].bn.collect_buffers("g.enc" + std::to_string(i + 1) + ".bn", out);
  for (std::size_t i = 0; i < dec_.size(); ++i)
    dec_[i].bn.collect_buffers("g.dec" + std::to_string(i + 1) + ".bn", out);
  return out;
}

template <class T>
void Generator<T>::zero_grad() {
  for (auto& p : params()) std::fill(p.grad->begin(), p.grad->end(), T(0));
}

template <class T>
Discriminator<T>::Discriminator(const DiscriminatorSpec& spec, std::uint64_t init_seed)
    : spec_(spec), mid_conv_(0, 0, 4, 1, 0), mid_bn_(1), out_conv_(0, 0, 4, 1, 0) {
  validate(spec);
  auto width = [&](int mult) { return scaled_width(spec.base_width * mult, spec.width_scale); };

  int in_c = spec.input_channels;
  for (int j = 0; j < spec.n_down; ++j) {
    const int w = width(std::min(1 << j, 8));
    down_.emplace_back(in_c, w);
    in_c = w;
  }
  const int mid_w = width(8);
  mid_conv_ = Conv2d<T>(in_c, mid_w, 4, 1, 0);
  mid_bn_ = BatchNorm2d<T>(mid_w);
  out_conv_ = Conv2d<T>(mid_w, 1, 4, 1, 0);

  Rng rng(init_seed);
  const T stddev = T(0.02);
  for (auto& s : down_) {
    s.conv.init(rng, stddev);
    s.bn.init(rng, stddev);
  }
  mid_conv_.init(rng, stddev);
  mid_bn_.init(rng, stddev);
  out_conv_.init(rng, stddev);
}

template <class T>
Tensor4<T> Discriminator<T>::forward(const Tensor4<T>& conditioned01,
                                     const Tensor4<T>& candidate01, Mode mode) {
  cond_channels_ = conditioned01.c;
  Tensor4<T> x = concat_channels(conditioned01, candidate01);
  if (x.c != spec_.input_channels || x.h != spec_.resolution || x.w != spec_.resolution)
    throw ShapeError("Discriminator: input shape does not match spec");
  for (T& v : x.v) v = T(2) * v - T(1);
  const bool batch_stats = mode == Mode::Train;
  for (auto& s : down_) x = s.forward(x, batch_stats);
  x = pad1_.forward(x);
  x = mid_conv_.forward(x);
  x = pad2_.forward(mid_act_.forward(mid_bn_.forward(x, batch_stats)));
  return out_conv_.forward(x);
}

template <class T>
std::pair<Tensor4<T>, Tensor4<T>> Discriminator<T>::backward(const Tensor4<T>& dscores) {
  Tensor4<T> d = out_conv_.backward(dscores);
  d = mid_bn_.backward(mid_act_.backward(pad2_.backward(d)));
  d = mid_conv_.backward(d);
  d = pad1_.backward(d);
  for (int j = static_cast<int>(down_.size()) - 1; j >= 0; --j) d = down_[j].backward(d);
  for (T& v : d.v) v *= T(2);
  return split_channels(d, cond_channels_);
}

template <class T>
std::vector<ParamRef<T>> Discriminator<T>::params() {
  std::vector<ParamRef<T>> out;
  for (std::size_t i = 0; i < down_.size(); ++i) {
    const std::string p = "d.down" + std::to_string(i + 1);
    down_[i].conv.collect(p + ".conv", out);
    down_[i].bn.collect(p + ".bn", out);
  }
  mid_conv_.collect("d.mid.conv", out);
  mid_bn_.collect("d.mid.bn", out);
  out_conv_.collect("d.out.conv", out);
  return out;
}

template <class T>
std::vector<BufferRef<T>> Discriminator<T>::buffers() {
  std::vector<BufferRef<T>> out;
  for (std::size_t i = 0; i < down_.size(); ++i)
    down_[i].bn.collect_buffers("d.down" + std::to_string(i + 1) + ".bn", out);
  mid_bn_.collect_buffers("d.mid.bn", out);
  return out;
}

template <class T>
void Discriminator<T>::zero_grad() {
  for (auto& p : params()) std::fill(p.grad->begin(), p.grad->end(), T(0));
}

}  // namespace desmoke
