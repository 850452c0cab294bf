#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "tensor.hpp"

namespace spikeforge {

struct Linear {
  Tensor weight;  // [out, in]
  Tensor bias;    // [out]
};
struct ReLU {};
/// tanh approximation: 0.5·x·(1 + tanh(√(2/π)·(x + 0.044715·x³))).
struct GELU {};
struct SoftMax {
  int axis = -1;
};
/// Single-head, un-batched self-attention over [tokens, d].
struct AttentionHead {
  Tensor wq;  // [d_k, d]
  Tensor wk;  // [d_k, d]
  Tensor wv;  // [d_v, d]
  Tensor wo;  // [d_out, d_v]
  double scale = 1.0;
  // Optional neuron slot applied to the attention probabilities.
  std::string softmax_slot;
};
struct NeuronSlot {
  std::string id;
};

using LayerKind = std::variant<Linear, ReLU, GELU, SoftMax, AttentionHead, NeuronSlot>;

struct LayerSpec {
  std::string name;
  LayerKind kind;

  bool is_slot() const { return std::holds_alternative<NeuronSlot>(kind); }
  const std::string& slot_id() const { return std::get<NeuronSlot>(kind).id; }
};

inline const char* kind_name(const LayerKind& k) {
  constexpr const char* names[] = {"linear", "relu", "gelu", "softmax", "attention", "neuron"};
  return names[k.index()];
}

inline double gelu(double x) {
  constexpr double c = 0.7978845608028654;  // sqrt(2/pi)
  return 0.5 * x * (1.0 + std::tanh(c * (x + 0.044715 * x * x * x)));
}

struct SlotInfo {
  std::string id;
  std::size_t layer_index;  // index of the NeuronSlot layer, or of the owning attention layer
  bool in_attention = false;
  bool follows_softmax = false;
};

struct NetworkSpec {
  std::size_t input_dim = 0;
  std::vector<LayerSpec> layers;

  bool has_attention() const {
    for (const auto& l : layers)
      if (std::holds_alternative<AttentionHead>(l.kind)) return true;
    return false;
  }

  /// Every neuron slot in execution order, including attention-internal ones.
  std::vector<SlotInfo> slots() const {
    std::vector<SlotInfo> out;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (const auto* a = std::get_if<AttentionHead>(&l.kind); a && !a->softmax_slot.empty())
        out.push_back({a->softmax_slot, i, true, true});
      if (l.is_slot()) {
        const bool after_softmax = i > 0 && std::holds_alternative<SoftMax>(layers[i - 1].kind);
        out.push_back({l.slot_id(), i, false, after_softmax});
      }
    }
    return out;
  }

  /// Throws ValidationError on any structural inconsistency.
  void validate() const {
    if (input_dim == 0) throw ValidationError("input_dim must be positive");
    std::size_t dim = input_dim;
    std::set<std::string> ids;
    auto add_id = [&](const std::string& id, const std::string& where) {
      if (id.empty()) throw ValidationError(where + ": neuron slot id is empty");
      if (!ids.insert(id).second) throw ValidationError(where + ": duplicate neuron slot id '" + id + "'");
    };
    auto need = [](bool ok, const std::string& msg) {
      if (!ok) throw ValidationError(msg);
    };
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      const std::string where = "layers[" + std::to_string(i) + "] '" + l.name + "'";
      std::visit(
          [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, Linear>) {
              need(k.weight.rank() == 2, where + ": weight must be 2-D");
              need(k.weight.dim(1) == dim, where + ": weight " + shape_str(k.weight.shape()) +
                                               " expects input dim " + std::to_string(k.weight.dim(1)) +
                                               ", previous layer gives " + std::to_string(dim));
              need(k.bias.rank() == 1 && k.bias.dim(0) == k.weight.dim(0),
                   where + ": bias " + shape_str(k.bias.shape()) + " does not match weight rows");
              need(k.weight.all_finite() && k.bias.all_finite(), where + ": non-finite parameter");
              dim = k.weight.dim(0);
            } else if constexpr (std::is_same_v<K, SoftMax>) {
              need(k.axis == -1, where + ": only the last axis (-1) is supported");
            } else if constexpr (std::is_same_v<K, AttentionHead>) {
              for (const Tensor* t : {&k.wq, &k.wk, &k.wv, &k.wo}) {
                need(t->rank() == 2, where + ": projection weights must be 2-D");
                need(t->all_finite(), where + ": non-finite parameter");
              }
              need(k.wq.dim(1) == dim && k.wk.dim(1) == dim && k.wv.dim(1) == dim,
                   where + ": q/k/v projections must take input dim " + std::to_string(dim));
              need(k.wq.dim(0) == k.wk.dim(0), where + ": q and k projections differ in width");
              need(k.wo.dim(1) == k.wv.dim(0), where + ": output projection must take d_v inputs");
              need(k.scale > 0.0 && std::isfinite(k.scale), where + ": scale must be positive");
              if (!k.softmax_slot.empty()) add_id(k.softmax_slot, where);
              dim = k.wo.dim(0);
            } else if constexpr (std::is_same_v<K, NeuronSlot>) {
              add_id(k.id, where);
              need(i == 0 || !layers[i - 1].is_slot(),
                   where + ": neuron slot must follow a non-neuron layer");
            }
          },
          l.kind);
    }
  }

  std::size_t output_dim() const {
    std::size_t dim = input_dim;
    for (const auto& l : layers) {
      if (const auto* lin = std::get_if<Linear>(&l.kind)) dim = lin->weight.dim(0);
      if (const auto* a = std::get_if<AttentionHead>(&l.kind)) dim = a->wo.dim(0);
    }
    return dim;
  }
};

/// Neuron behaviour at a slot: receives the pre-neuron tensor, returns the post-neuron tensor.
using SlotFn = std::function<Tensor(const std::string& slot, const Tensor& pre)>;

struct LayerEvent {
  std::size_t index;
  const LayerSpec& layer;
  const Tensor& input;
  const Tensor& output;
};
using LayerHook = std::function<void(const LayerEvent&)>;

struct ExecOptions {
  // Spiking executions replace a ReLU that directly feeds a neuron slot with the neuron itself.
  bool absorb_relu_before_slot = false;
};

inline Tensor identity_slot(const std::string&, const Tensor& pre) { return pre; }

/// Wo · (SoftMax(scale · Q Kᵀ) · V), row-major over tokens.
inline Tensor attention_forward(const AttentionHead& head, const Tensor& tokens, const SlotFn& slot_fn = {}) {
  if (tokens.rank() != 2) throw DimensionError("attention expects [tokens, d], got " + shape_str(tokens.shape()));
  if (!(head.scale > 0.0)) throw DimensionError("attention scale must be positive");
  const Tensor q = affine_last_axis(tokens, head.wq, nullptr);
  const Tensor k = affine_last_axis(tokens, head.wk, nullptr);
  const Tensor v = affine_last_axis(tokens, head.wv, nullptr);
  if (q.last_dim() != k.last_dim()) throw DimensionError("attention q/k width mismatch");
  const std::size_t n = tokens.dim(0), dk = q.last_dim(), dv = v.last_dim();
  Tensor scores(Shape{n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < dk; ++c) acc += q.at(i, c) * k.at(j, c);
      scores.at(i, j) = head.scale * acc;
    }
  Tensor probs = softmax_last_axis(scores);
  if (slot_fn && !head.softmax_slot.empty()) probs = slot_fn(head.softmax_slot, probs);
  Tensor mixed(Shape{n, dv});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < dv; ++c) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += probs.at(i, j) * v.at(j, c);
      mixed.at(i, c) = acc;
    }
  return affine_last_axis(mixed, head.wo, nullptr);
}

/// Applies one non-neuron layer. Neuron slots go through `slot_fn`.
inline Tensor apply_layer(const LayerSpec& layer, const Tensor& x, const SlotFn& slot_fn) {
  return std::visit(
      [&](const auto& k) -> Tensor {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Linear>) {
          return affine_last_axis(x, k.weight, &k.bias);
        } else if constexpr (std::is_same_v<K, ReLU>) {
          return x.map([](double v) { return v > 0.0 ? v : 0.0; });
        } else if constexpr (std::is_same_v<K, GELU>) {
          return x.map(gelu);
        } else if constexpr (std::is_same_v<K, SoftMax>) {
          return softmax_last_axis(x);
        } else if constexpr (std::is_same_v<K, AttentionHead>) {
          return attention_forward(k, x, slot_fn);
        } else {
          return slot_fn ? slot_fn(k.id, x) : x;
        }
      },
      layer.kind);
}

/// Runs the layer sequence with caller-defined neuron behaviour.
inline Tensor execute(const NetworkSpec& net, const Tensor& input, const SlotFn& slot_fn,
                      const LayerHook& hook = {}, ExecOptions opts = {}) {
  if (input.last_dim() != net.input_dim)
    throw DimensionError("input last axis " + std::to_string(input.last_dim()) + " but network expects " +
                         std::to_string(net.input_dim));
  Tensor x = input;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& layer = net.layers[i];
    if (opts.absorb_relu_before_slot && std::holds_alternative<ReLU>(layer.kind) &&
        i + 1 < net.layers.size() && net.layers[i + 1].is_slot())
      continue;
    Tensor y = apply_layer(layer, x, slot_fn);
    if (!y.all_finite()) throw NumericError("non-finite value after layer '" + layer.name + "'");
    if (hook) hook(LayerEvent{i, layer, x, y});
    x = std::move(y);
  }
  return x;
}

struct ForwardResult {
  Tensor output;
  std::map<std::string, Tensor> recorded;
};

/// Pure ANN pass: slots are identity. `record` selects slots by id or by slot-layer name;
/// the recorded tensor is the one entering the slot.
inline ForwardResult forward(const NetworkSpec& net, const Tensor& input, const std::set<std::string>& record = {}) {
  std::map<std::string, std::string> layer_name_of;
  for (const auto& l : net.layers)
    if (l.is_slot()) layer_name_of[l.slot_id()] = l.name;
  ForwardResult res;
  auto slot = [&](const std::string& id, const Tensor& pre) {
    if (record.count(id)) {
      res.recorded[id] = pre;
    } else if (auto it = layer_name_of.find(id); it != layer_name_of.end() && record.count(it->second)) {
      res.recorded[it->second] = pre;
    }
    return pre;
  };
  res.output = execute(net, input, slot);
  return res;
}

/// f(a·x + b·y) == a·f(x) + b·f(y) within tol.
inline bool probe_linearity(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, const Tensor& y,
                            double a, double b, double tol = 1e-9) {
  const Tensor lhs = f(a * x + b * y);
  const Tensor rhs = a * f(x) + b * f(y);
  return max_abs_diff(lhs, rhs) <= tol;
}

/// Linearity of f(x) − f(0): the property the layer-wise averaging argument needs
/// (bias terms commute with averaging over timesteps).
inline bool probe_affine(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, const Tensor& y, double a,
                         double b, double tol = 1e-9) {
  const Tensor f0 = f(Tensor(x.shape(), 0.0));
  auto g = [&](const Tensor& t) { return f(t) - f0; };
  return probe_linearity(g, x, y, a, b, tol);
}

/// Numerical affine probe of one non-neuron layer on seeded random inputs of the given shape.
inline bool layer_is_affine(const LayerSpec& layer, const Shape& input_shape, std::uint64_t seed = 1,
                            int probes = 4, double tol = 1e-9) {
  if (layer.is_slot()) return true;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  auto f = [&](const Tensor& t) { return apply_layer(layer, t, {}); };
  for (int p = 0; p < probes; ++p) {
    Tensor x(input_shape), y(input_shape);
    for (auto& v : x.data()) v = u(rng);
    for (auto& v : y.data()) v = u(rng);
    if (!probe_affine(f, x, y, u(rng), u(rng), tol)) return false;
  }
  return true;
}

}  // namespace spikeforge
