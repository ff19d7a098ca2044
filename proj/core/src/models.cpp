// SPDX-License-Identifier: Apache-2.0
#include "boolgan/models.hpp"

#include <cmath>

namespace boolgan {

namespace {

LayerSpec conv(std::size_t in, std::size_t out, std::size_t k, std::size_t s, std::size_t p) {
  LayerSpec l;
  l.kind = LayerKind::Conv;
  l.geom = {k, s, p, in, out};
  return l;
}

LayerSpec convT(std::size_t in, std::size_t out, std::size_t k, std::size_t s, std::size_t p) {
  LayerSpec l = conv(in, out, k, s, p);
  l.kind = LayerKind::ConvTranspose;
  return l;
}

LayerSpec batchnorm(std::size_t channels) {
  LayerSpec l;
  l.kind = LayerKind::BatchNorm;
  l.channels = channels;
  return l;
}

LayerSpec act(ActivationKind kind) {
  LayerSpec l;
  l.kind = LayerKind::Activation;
  l.act = {kind, kLeakySlope};
  return l;
}

LayerSpec drop(double p) {
  LayerSpec l;
  l.kind = LayerKind::Dropout;
  l.dropout_p = p;
  return l;
}

void check_widths(std::size_t z_dim, std::size_t base_width) {
  require(z_dim >= 1, ErrorKind::InvalidArgument, "generator: z_dim must be >= 1");
  require(base_width >= 1, ErrorKind::InvalidArgument, "model: base_width must be >= 1");
}

std::vector<LayerSpec> dcgan_generator_trunk(std::size_t z_dim, std::size_t w) {
  return {
      convT(z_dim, 8 * w, 4, 1, 0), batchnorm(8 * w), act(ActivationKind::Relu),
      convT(8 * w, 4 * w, 4, 2, 1), batchnorm(4 * w), act(ActivationKind::Relu),
      convT(4 * w, 2 * w, 4, 2, 1), batchnorm(2 * w), act(ActivationKind::Relu),
      convT(2 * w, w, 4, 2, 1),     batchnorm(w),     act(ActivationKind::Relu),
      convT(w, kImageChannels, 4, 2, 1),
  };
}

[[noreturn]] void rethrow_at_layer(const Error& e, std::size_t index, LayerKind kind) {
  throw Error(e.kind(), "layer " + std::to_string(index) + " (" + std::string(to_string(kind)) +
                            "): " + e.what());
}

template <typename T>
struct LayerParams {
  const Tensor<T>* weight = nullptr;
  const Tensor<T>* bias = nullptr;
  const Tensor<T>* gamma = nullptr;
  const Tensor<T>* beta = nullptr;
  const Tensor<T>* running_mean = nullptr;
  const Tensor<T>* running_var = nullptr;
};

template <typename T>
std::vector<LayerParams<T>> index_params(const ModelSpec& spec, const ParamSet<T>& params) {
  std::vector<LayerParams<T>> out(spec.layers.size());
  for (const auto& p : params.entries) {
    require(p.layer < out.size(), ErrorKind::ShapeMismatch,
            "parameter '" + p.name + "' refers to a layer outside the model");
    auto& slot = out[p.layer];
    switch (p.role) {
      case ParamRole::Weight: slot.weight = &p.value; break;
      case ParamRole::Bias: slot.bias = &p.value; break;
      case ParamRole::Gamma: slot.gamma = &p.value; break;
      case ParamRole::Beta: slot.beta = &p.value; break;
      case ParamRole::RunningMean: slot.running_mean = &p.value; break;
      case ParamRole::RunningVar: slot.running_var = &p.value; break;
    }
  }
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto kind = spec.layers[i].kind;
    const auto& s = out[i];
    const bool conv_like = kind == LayerKind::Conv || kind == LayerKind::ConvTranspose;
    if (conv_like && (!s.weight || !s.bias))
      fail(ErrorKind::ShapeMismatch, "layer " + std::to_string(i) + ": missing conv parameters");
    if (kind == LayerKind::BatchNorm &&
        (!s.gamma || !s.beta || !s.running_mean || !s.running_var))
      fail(ErrorKind::ShapeMismatch, "layer " + std::to_string(i) + ": missing batchnorm parameters");
  }
  return out;
}

template <typename T>
BatchNormState<T> bn_state(const LayerParams<T>& lp) {
  BatchNormState<T> s;
  s.gamma = *lp.gamma;
  s.beta = *lp.beta;
  s.running_mean = *lp.running_mean;
  s.running_var = *lp.running_var;
  return s;
}

}  // namespace

std::string_view to_string(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::Conv: return "conv2d";
    case LayerKind::ConvTranspose: return "convtranspose2d";
    case LayerKind::BatchNorm: return "batchnorm2d";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::Activation: return "activation";
  }
  return "unknown";
}

std::string_view to_string(ParamRole role) noexcept {
  switch (role) {
    case ParamRole::Weight: return "weight";
    case ParamRole::Bias: return "bias";
    case ParamRole::Gamma: return "gamma";
    case ParamRole::Beta: return "beta";
    case ParamRole::RunningMean: return "running_mean";
    case ParamRole::RunningVar: return "running_var";
  }
  return "unknown";
}

std::string param_name(std::size_t layer, ParamRole role) {
  return "layer" + std::to_string(layer) + "." + std::string(to_string(role));
}

std::vector<Shape> trace_shapes(const ModelSpec& spec) {
  require(spec.input.size() == 3, ErrorKind::ShapeMismatch, "model input must be [C,H,W]");
  std::vector<Shape> shapes;
  Shape cur = spec.input;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    try {
      switch (l.kind) {
        case LayerKind::Conv:
          require(cur[0] == l.geom.in_channels, ErrorKind::ShapeMismatch,
                  "expected " + std::to_string(l.geom.in_channels) + " input channels, got " +
                      std::to_string(cur[0]));
          cur = {l.geom.out_channels, conv_output_extent(cur[1], l.geom),
                 conv_output_extent(cur[2], l.geom)};
          break;
        case LayerKind::ConvTranspose:
          require(cur[0] == l.geom.in_channels, ErrorKind::ShapeMismatch,
                  "expected " + std::to_string(l.geom.in_channels) + " input channels, got " +
                      std::to_string(cur[0]));
          cur = {l.geom.out_channels, convtranspose_output_extent(cur[1], l.geom),
                 convtranspose_output_extent(cur[2], l.geom)};
          break;
        case LayerKind::BatchNorm:
          require(cur[0] == l.channels, ErrorKind::ShapeMismatch, "batchnorm channel mismatch");
          break;
        case LayerKind::Dropout:
          require(l.dropout_p >= 0.0 && l.dropout_p < 1.0, ErrorKind::InvalidArgument,
                  "dropout probability must lie in [0, 1)");
          break;
        case LayerKind::Activation:
          break;
      }
    } catch (const Error& e) {
      rethrow_at_layer(e, i, l.kind);
    }
    shapes.push_back(cur);
  }
  if (!spec.output.empty() && cur != spec.output)
    fail(ErrorKind::ShapeMismatch, spec.name + ": layer chain ends at " + shape_string(cur) +
                                       ", declared output " + shape_string(spec.output));
  return shapes;
}

ModelSpec build_dcgan_generator(std::size_t z_dim, std::size_t base_width) {
  check_widths(z_dim, base_width);
  ModelSpec spec{"dcgan_generator", dcgan_generator_trunk(z_dim, base_width), {z_dim, 1, 1},
                 {kImageChannels, kImageSize, kImageSize}};
  spec.layers.push_back(act(ActivationKind::Tanh));
  trace_shapes(spec);
  return spec;
}

ModelSpec build_boolgan_generator(std::size_t z_dim, std::size_t base_width) {
  check_widths(z_dim, base_width);
  ModelSpec spec{"boolgan_generator", dcgan_generator_trunk(z_dim, base_width), {z_dim, 1, 1},
                 {kImageChannels, kImageSize, kImageSize}};
  // 64x64x3 -> 128x128x3 -> 64x64x6 -> 64x64x3, tanh only at the very end.
  const std::vector<LayerSpec> head = {
      convT(kImageChannels, kImageChannels, 4, 2, 1), batchnorm(kImageChannels),
      act(ActivationKind::Relu),
      conv(kImageChannels, 2 * kImageChannels, 4, 2, 1), batchnorm(2 * kImageChannels),
      act(ActivationKind::Relu),
      conv(2 * kImageChannels, kImageChannels, 1, 1, 0),
      act(ActivationKind::Tanh),
  };
  spec.layers.insert(spec.layers.end(), head.begin(), head.end());
  trace_shapes(spec);
  return spec;
}

ModelSpec build_discriminator(bool critic_mode, double dropout_p, std::size_t base_width) {
  require(dropout_p >= 0.0 && dropout_p < 1.0, ErrorKind::InvalidArgument,
          "discriminator: dropout_p must lie in [0, 1), got " + std::to_string(dropout_p));
  check_widths(1, base_width);
  const std::size_t w = base_width;
  ModelSpec spec;
  spec.name = critic_mode ? "critic" : "discriminator";
  spec.input = {kImageChannels, kImageSize, kImageSize};
  spec.output = {1, 1, 1};
  spec.layers = {
      conv(kImageChannels, w, 4, 2, 1), act(ActivationKind::LeakyRelu),
      conv(w, 2 * w, 4, 2, 1),     batchnorm(2 * w), act(ActivationKind::LeakyRelu),
      conv(2 * w, 4 * w, 4, 2, 1), batchnorm(4 * w), act(ActivationKind::LeakyRelu),
      conv(4 * w, 8 * w, 4, 2, 1), batchnorm(8 * w), act(ActivationKind::LeakyRelu),
  };
  if (dropout_p > 0.0) spec.layers.push_back(drop(dropout_p));
  spec.layers.push_back(conv(8 * w, 1, 4, 1, 0));
  if (!critic_mode) spec.layers.push_back(act(ActivationKind::Sigmoid));
  trace_shapes(spec);
  return spec;
}

std::size_t parameter_count(const ModelSpec& spec) {
  std::size_t total = 0;
  for (const auto& l : spec.layers) {
    if (l.kind == LayerKind::Conv || l.kind == LayerKind::ConvTranspose)
      total += l.geom.in_channels * l.geom.out_channels * l.geom.kernel * l.geom.kernel +
               l.geom.out_channels;
    else if (l.kind == LayerKind::BatchNorm)
      total += 2 * l.channels;
  }
  return total;
}

template <typename T>
Param<T>* ParamSet<T>::find(std::string_view name) noexcept {
  for (auto& p : entries)
    if (p.name == name) return &p;
  return nullptr;
}

template <typename T>
const Param<T>* ParamSet<T>::find(std::string_view name) const noexcept {
  for (const auto& p : entries)
    if (p.name == name) return &p;
  return nullptr;
}

template <typename T>
const Tensor<T>& ParamSet<T>::get(std::string_view name) const {
  const auto* p = find(name);
  if (!p) fail(ErrorKind::InvalidArgument, "no parameter named '" + std::string(name) + "'");
  return p->value;
}

template <typename T>
ParamSet<T> ParamSet<T>::zeros_like() const {
  ParamSet out;
  for (const auto& p : entries) out.entries.push_back({p.name, p.layer, p.role, Tensor<T>(p.value.shape())});
  return out;
}

template <typename T>
ParamSet<T> init_params(const ModelSpec& spec, RngStream& rng) {
  ParamSet<T> ps;
  auto add = [&](std::size_t i, ParamRole role, Tensor<T> value) {
    ps.entries.push_back({param_name(i, role), i, role, std::move(value)});
  };
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    switch (l.kind) {
      case LayerKind::Conv:
        add(i, ParamRole::Weight, randn<T>(conv_weight_shape(l.geom), rng, 0.0, 0.02));
        add(i, ParamRole::Bias, Tensor<T>({l.geom.out_channels}));
        break;
      case LayerKind::ConvTranspose:
        add(i, ParamRole::Weight, randn<T>(convtranspose_weight_shape(l.geom), rng, 0.0, 0.02));
        add(i, ParamRole::Bias, Tensor<T>({l.geom.out_channels}));
        break;
      case LayerKind::BatchNorm:
        add(i, ParamRole::Gamma, randn<T>({l.channels}, rng, 1.0, 0.02));
        add(i, ParamRole::Beta, Tensor<T>({l.channels}));
        add(i, ParamRole::RunningMean, Tensor<T>({l.channels}));
        add(i, ParamRole::RunningVar, Tensor<T>({l.channels}, T{1}));
        break;
      case LayerKind::Dropout:
      case LayerKind::Activation:
        break;
    }
  }
  return ps;
}

template <typename T>
ForwardResult<T> forward(const ModelSpec& spec, const ParamSet<T>& params, const Tensor<T>& x,
                         Mode mode, RngStream& rng) {
  const auto lp = index_params(spec, params);
  if (x.rank() != 4 || Shape{x.dim(1), x.dim(2), x.dim(3)} != spec.input)
    fail(ErrorKind::ShapeMismatch, spec.name + ": input " + shape_string(x.shape()) +
                                       " does not match [N," + shape_string(spec.input).substr(1));

  ForwardResult<T> r;
  auto& cache = r.cache;
  cache.mode = mode;
  cache.inputs.reserve(spec.layers.size() + 1);
  cache.dropout_masks.resize(spec.layers.size());
  cache.bn_updates.resize(spec.layers.size());
  cache.inputs.push_back(x);

  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    const Tensor<T>& in = cache.inputs.back();
    Tensor<T> out;
    try {
      switch (l.kind) {
        case LayerKind::Conv:
          out = conv2d(in, *lp[i].weight, *lp[i].bias, l.geom);
          break;
        case LayerKind::ConvTranspose:
          out = convtranspose2d(in, *lp[i].weight, *lp[i].bias, l.geom);
          break;
        case LayerKind::BatchNorm: {
          auto bn = batchnorm2d(in, bn_state(lp[i]), mode);
          out = std::move(bn.y);
          if (mode == Mode::Train) cache.bn_updates[i] = std::move(bn.state);
          break;
        }
        case LayerKind::Dropout: {
          auto d = dropout(in, l.dropout_p, mode, rng);
          out = std::move(d.y);
          cache.dropout_masks[i] = std::move(d.mask);
          break;
        }
        case LayerKind::Activation:
          out = activation(in, l.act);
          break;
      }
    } catch (const Error& e) {
      rethrow_at_layer(e, i, l.kind);
    }
    cache.inputs.push_back(std::move(out));
  }
  r.y = cache.inputs.back();
  return r;
}

template <typename T>
void apply_running_stats(const ModelSpec& spec, ParamSet<T>& params, const ForwardCache<T>& cache) {
  for (std::size_t i = 0; i < spec.layers.size() && i < cache.bn_updates.size(); ++i) {
    if (!cache.bn_updates[i]) continue;
    if (auto* m = params.find(param_name(i, ParamRole::RunningMean)))
      m->value = cache.bn_updates[i]->running_mean;
    if (auto* v = params.find(param_name(i, ParamRole::RunningVar)))
      v->value = cache.bn_updates[i]->running_var;
  }
}

template <typename T>
BackwardResult<T> backward(const ModelSpec& spec, const ParamSet<T>& params,
                           const ForwardCache<T>& cache, const Tensor<T>& dy,
                           GradRequest request) {
  const auto lp = index_params(spec, params);
  require(cache.inputs.size() == spec.layers.size() + 1, ErrorKind::InvalidArgument,
          spec.name + ": forward cache does not match the model");
  require_shape(dy, cache.inputs.back().shape(), spec.name + " backward dy");

  BackwardResult<T> r;
  r.grads = params.zeros_like();
  auto grad_of = [&](std::size_t layer, ParamRole role) -> Tensor<T>& {
    return r.grads.find(param_name(layer, role))->value;
  };

  Tensor<T> g = dy;
  for (std::size_t idx = spec.layers.size(); idx-- > 0;) {
    const auto& l = spec.layers[idx];
    const Tensor<T>& in = cache.inputs[idx];
    const bool need_dx = idx > 0 || request.input;
    try {
      switch (l.kind) {
        case LayerKind::Conv:
        case LayerKind::ConvTranspose: {
          const GradRequest req{need_dx, request.params};
          auto cg = l.kind == LayerKind::Conv
                        ? conv2d_grads(in, *lp[idx].weight, l.geom, g, req)
                        : convtranspose2d_grads(in, *lp[idx].weight, l.geom, g, req);
          if (request.params) {
            grad_of(idx, ParamRole::Weight) = std::move(cg.dw);
            grad_of(idx, ParamRole::Bias) = std::move(cg.db);
          }
          g = std::move(cg.dx);
          break;
        }
        case LayerKind::BatchNorm: {
          const auto state = bn_state(lp[idx]);
          if (cache.mode == Mode::Train) {
            auto bg = batchnorm2d_grads(in, state, g);
            if (request.params) {
              grad_of(idx, ParamRole::Gamma) = std::move(bg.dgamma);
              grad_of(idx, ParamRole::Beta) = std::move(bg.dbeta);
            }
            g = std::move(bg.dx);
          } else {
            // Eval mode is a per-channel affine map.
            const std::size_t N = in.dim(0), C = in.dim(1), plane = in.dim(2) * in.dim(3);
            Tensor<T> dx(in.shape());
            Tensor<T> dgamma({C}), dbeta({C});
            for (std::size_t c = 0; c < C; ++c) {
              const double inv_std = 1.0 / std::sqrt(double(state.running_var[c]) + state.eps);
              double sg = 0.0, sb = 0.0;
              for (std::size_t n = 0; n < N; ++n)
                for (std::size_t k = 0; k < plane; ++k) {
                  const std::size_t at = (n * C + c) * plane + k;
                  sb += g[at];
                  sg += g[at] * (in[at] - state.running_mean[c]) * inv_std;
                  dx[at] = static_cast<T>(g[at] * state.gamma[c] * inv_std);
                }
              dgamma[c] = static_cast<T>(sg);
              dbeta[c] = static_cast<T>(sb);
            }
            if (request.params) {
              grad_of(idx, ParamRole::Gamma) = std::move(dgamma);
              grad_of(idx, ParamRole::Beta) = std::move(dbeta);
            }
            g = std::move(dx);
          }
          break;
        }
        case LayerKind::Dropout:
          g = dropout_grad(g, cache.dropout_masks[idx]);
          break;
        case LayerKind::Activation:
          g = activation_grad(in, cache.inputs[idx + 1], g, l.act);
          break;
      }
    } catch (const Error& e) {
      rethrow_at_layer(e, idx, l.kind);
    }
    if (!need_dx) break;
  }
  if (request.input) r.dx = std::move(g);
  return r;
}

#define BOOLGAN_INSTANTIATE_MODELS(T)                                                           \
  template struct ParamSet<T>;                                                                  \
  template ParamSet<T> init_params<T>(const ModelSpec&, RngStream&);                            \
  template ForwardResult<T> forward<T>(const ModelSpec&, const ParamSet<T>&, const Tensor<T>&,  \
                                       Mode, RngStream&);                                       \
  template void apply_running_stats<T>(const ModelSpec&, ParamSet<T>&, const ForwardCache<T>&); \
  template BackwardResult<T> backward<T>(const ModelSpec&, const ParamSet<T>&,                  \
                                         const ForwardCache<T>&, const Tensor<T>&, GradRequest);

BOOLGAN_INSTANTIATE_MODELS(float)
BOOLGAN_INSTANTIATE_MODELS(double)

#undef BOOLGAN_INSTANTIATE_MODELS

}  // namespace boolgan
