#pragma once

#include <cstdint>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "converter.hpp"
#include "equivalence.hpp"
#include "io.hpp"
#include "spiking.hpp"

namespace spikeforge {

inline constexpr double kEnergyAC = 0.9;   // pJ per accumulate
inline constexpr double kEnergyMAC = 4.6;  // pJ per multiply-accumulate

/// Multiply-accumulates of one layer applied to an input of the given shape.
inline std::uint64_t layer_macs(const LayerSpec& layer, const Shape& in) {
  if (const auto* lin = std::get_if<Linear>(&layer.kind)) {
    const std::uint64_t rows = in.size() == 2 ? in[0] : 1;
    return rows * lin->weight.dim(0) * lin->weight.dim(1);
  }
  if (const auto* a = std::get_if<AttentionHead>(&layer.kind)) {
    const std::uint64_t n = in[0], d = in[1];
    const std::uint64_t dk = a->wq.dim(0), dv = a->wv.dim(0), dout = a->wo.dim(0);
    return n * d * (2 * dk + dv) + n * n * dk + n * n * dv + n * dv * dout;
  }
  return 0;
}

/// Exact MAC count of a dense forward pass.
inline std::uint64_t count_ann(const NetworkSpec& net, const Tensor& input) {
  std::uint64_t macs = 0;
  execute(net, input, identity_slot, [&](const LayerEvent& e) { macs += layer_macs(e.layer, e.input.shape()); });
  return macs;
}

/// Operation counts of a single-timestep spiking pass, with the dense ANN cost filled in.
inline OpCounts count_snn(const ConvertedNetwork& cn, const Tensor& input) {
  OpCounter counter(cn.base);
  snn_forward(cn, input, &counter);
  OpCounts c = counter.counts();
  c.mac_ann = count_ann(cn.base, input);
  return c;
}

/// Operation counts of the multi-timestep IF baseline fed the same input for T steps.
inline OpCounts count_if_snn(const NetworkSpec& net, const SlotIFMap& slots, const Tensor& input, std::size_t T) {
  OpCounter counter(net);
  if_network_run(net, slots, std::vector<Tensor>(T, input), &counter);
  OpCounts c = counter.counts();
  c.mac_ann = count_ann(net, input);
  return c;
}

inline double energy_ratio(const OpCounts& c) {
  if (c.mac_ann == 0) throw NumericError("energy ratio is undefined when the ANN performs no MACs");
  return (double(c.ac_snn) * kEnergyAC) / (double(c.mac_ann) * kEnergyMAC);
}

/// Mean Σ|level| per neuron per sample, for every slot.
using FiringRates = std::map<std::string, double>;

struct EnergyReport {
  OpCounts counts;
  double ratio = 0.0;
  FiringRates per_slot_rates;

  json to_json() const {
    return json{{"ac_snn", counts.ac_snn},
                {"mac_snn", counts.mac_snn},
                {"mac_ann", counts.mac_ann},
                {"neuron_updates", counts.neuron_updates},
                {"layer_passes", counts.layer_passes},
                {"e_ac_pj", kEnergyAC},
                {"e_mac_pj", kEnergyMAC},
                {"ratio", ratio},
                {"per_slot_rates", per_slot_rates}};
  }
};

/// Aggregates counts over every sample in `data` and reports the dataset-level ratio.
inline EnergyReport energy_report(const ConvertedNetwork& cn, const Dataset& data) {
  if (data.size() == 0) throw ValidationError("energy report needs a non-empty dataset");
  OpCounter counter(cn.base);
  EnergyReport rep;
  for (const auto& f : data.features) {
    const Tensor x = sample_tensor(cn.base, f);
    snn_forward(cn, x, &counter);
    rep.counts.mac_ann += count_ann(cn.base, x);
  }
  const auto ann = rep.counts.mac_ann;
  rep.counts = counter.counts();
  rep.counts.mac_ann = ann;
  rep.ratio = energy_ratio(rep.counts);
  for (const auto& [id, spikes] : counter.slot_spikes()) {
    const auto n = counter.slot_elements().at(id);
    rep.per_slot_rates[id] = n ? double(spikes) / double(n) : 0.0;
  }
  return rep;
}

inline FiringRates firing_rate_report(const ConvertedNetwork& cn, const Dataset& data) {
  return energy_report(cn, data).per_slot_rates;
}

struct LambdaSweepRow {
  double lambda;
  double accuracy;
  double energy_ratio;
};

/// Evaluates λ_k = k/steps for k = 1..steps.
inline std::vector<LambdaSweepRow> sweep_lambda(const NetworkSpec& net, const CalibrationProfile& prof,
                                                const Dataset& data, int M, std::size_t steps,
                                                LevelSchedule schedule = LevelSchedule::SFormer) {
  if (steps == 0) throw ValidationError("sweep needs at least one step");
  std::vector<LambdaSweepRow> rows;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double lambda = double(k) / double(steps);
    const auto cn = convert(net, prof, lambda, M, schedule);
    rows.push_back({lambda, snn_accuracy(cn, data), energy_report(cn, data).ratio});
  }
  return rows;
}

inline std::string sweep_lambda_csv(const std::vector<LambdaSweepRow>& rows) {
  std::ostringstream os;
  os << std::setprecision(10) << "lambda,accuracy,energy_ratio\n";
  for (const auto& r : rows) os << r.lambda << ',' << r.accuracy << ',' << r.energy_ratio << '\n';
  return os.str();
}

}  // namespace spikeforge
