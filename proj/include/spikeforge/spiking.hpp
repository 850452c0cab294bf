#pragma once

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "network.hpp"

namespace spikeforge {

/// Exact operation tallies for one or more runs.
struct OpCounts {
  std::uint64_t ac_snn = 0;   // accumulates driven by spikes
  std::uint64_t mac_snn = 0;  // multiply-accumulates on non-spike operands
  std::uint64_t mac_ann = 0;
  std::uint64_t neuron_updates = 0;  // fire-function evaluations
  std::uint64_t layer_passes = 0;    // non-neuron layer traversals

  OpCounts& operator+=(const OpCounts& o) {
    ac_snn += o.ac_snn;
    mac_snn += o.mac_snn;
    mac_ann += o.mac_ann;
    neuron_updates += o.neuron_updates;
    layer_passes += o.layer_passes;
    return *this;
  }
  friend OpCounts operator+(OpCounts a, const OpCounts& b) { return a += b; }
  bool operator==(const OpCounts&) const = default;
};

/// Output of a spiking neuron slot: the value passed on and the number of spikes per element.
struct SlotResult {
  Tensor value;
  std::vector<std::int64_t> spikes;
};

using SpikingSlotFn = std::function<SlotResult(const std::string& slot, const Tensor& pre)>;

/// Counts operations of a spiking execution. A layer whose input comes straight from a neuron
/// slot costs one accumulate per spike per fan-out; everything else is a multiply-accumulate.
class OpCounter {
 public:
  explicit OpCounter(const NetworkSpec& net) : net_(&net) {}

  void record_slot(const std::string& slot, const std::vector<std::int64_t>& spikes) {
    last_spikes_[slot] = spikes;
    counts_.neuron_updates += spikes.size();
    std::uint64_t total = 0;
    for (auto s : spikes) total += static_cast<std::uint64_t>(std::llabs(s));
    slot_spikes_[slot] += total;
    slot_elements_[slot] += spikes.size();
  }

  void on_layer(const LayerEvent& e) {
    if (e.layer.is_slot()) return;
    ++counts_.layer_passes;
    const std::vector<std::int64_t>* in_spikes = nullptr;
    if (e.index > 0 && net_->layers[e.index - 1].is_slot()) {
      auto it = last_spikes_.find(net_->layers[e.index - 1].slot_id());
      if (it != last_spikes_.end()) in_spikes = &it->second;
    }
    if (const auto* lin = std::get_if<Linear>(&e.layer.kind)) {
      const std::uint64_t out = lin->weight.dim(0), in = lin->weight.dim(1);
      if (in_spikes)
        counts_.ac_snn += spike_total(*in_spikes) * out;
      else
        counts_.mac_snn += e.input.rows() * out * in;
    } else if (const auto* a = std::get_if<AttentionHead>(&e.layer.kind)) {
      const std::uint64_t n = e.input.dim(0), d = e.input.last_dim();
      const std::uint64_t dk = a->wq.dim(0), dv = a->wv.dim(0), dout = a->wo.dim(0);
      if (in_spikes)
        counts_.ac_snn += spike_total(*in_spikes) * (2 * dk + dv);
      else
        counts_.mac_snn += n * d * (2 * dk + dv);
      counts_.mac_snn += n * n * dk;  // QKᵀ
      auto pit = a->softmax_slot.empty() ? last_spikes_.end() : last_spikes_.find(a->softmax_slot);
      if (pit != last_spikes_.end())
        counts_.ac_snn += spike_total(pit->second) * dv;
      else
        counts_.mac_snn += n * n * dv;
      counts_.mac_snn += n * dv * dout;
    }
  }

  const OpCounts& counts() const { return counts_; }
  OpCounts& counts() { return counts_; }
  const std::map<std::string, std::uint64_t>& slot_spikes() const { return slot_spikes_; }
  const std::map<std::string, std::uint64_t>& slot_elements() const { return slot_elements_; }

 private:
  static std::uint64_t spike_total(const std::vector<std::int64_t>& s) {
    std::uint64_t t = 0;
    for (auto v : s) t += static_cast<std::uint64_t>(std::llabs(v));
    return t;
  }

  const NetworkSpec* net_;
  OpCounts counts_;
  std::map<std::string, std::vector<std::int64_t>> last_spikes_;
  std::map<std::string, std::uint64_t> slot_spikes_;
  std::map<std::string, std::uint64_t> slot_elements_;
};

/// One spiking timestep through the network. ReLUs feeding a slot are absorbed by the neuron.
inline Tensor run_spiking_step(const NetworkSpec& net, const Tensor& input, const SpikingSlotFn& slot_fn,
                               OpCounter* counter = nullptr) {
  SlotFn plain = [&](const std::string& slot, const Tensor& pre) {
    SlotResult r = slot_fn(slot, pre);
    if (counter) counter->record_slot(slot, r.spikes);
    return std::move(r.value);
  };
  LayerHook hook;
  if (counter) hook = [counter](const LayerEvent& e) { counter->on_layer(e); };
  return execute(net, input, plain, hook, ExecOptions{.absorb_relu_before_slot = true});
}

/// Base thresholds of one slot. Slots without a negative threshold are positive-only.
struct SlotThreshold {
  double theta_pos = 1.0;
  std::optional<double> theta_neg;
};
using SlotThresholds = std::map<std::string, SlotThreshold>;

}  // namespace spikeforge
