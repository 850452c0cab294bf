#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bayes_opt.hpp"
#include "io.hpp"
#include "network.hpp"
#include "neurons.hpp"
#include "spiking.hpp"

namespace spikeforge {

inline constexpr const char* kProfileFormat = "spikeforge.calibration";
inline constexpr const char* kConvertedFormat = "spikeforge.converted";

struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  std::vector<std::uint64_t> counts;

  std::vector<double> edges() const {
    std::vector<double> e;
    const double w = (hi - lo) / double(counts.size());
    for (std::size_t i = 0; i <= counts.size(); ++i) e.push_back(i == counts.size() ? hi : lo + w * double(i));
    return e;
  }

  /// Uniform bins over [min, max] of `values`.
  static Histogram of(const std::vector<double>& values, std::size_t bins) {
    Histogram h;
    h.counts.assign(bins, 0);
    if (values.empty()) return h;
    auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    h.lo = *mn;
    h.hi = *mx > *mn ? *mx : *mn + 1.0;
    const double w = (h.hi - h.lo) / double(bins);
    for (double v : values) {
      auto b = static_cast<std::size_t>((v - h.lo) / w);
      h.counts[std::min(b, bins - 1)]++;
    }
    return h;
  }

  bool operator==(const Histogram&) const = default;
};

struct SlotProfile {
  std::optional<double> theta_pos;
  std::optional<double> theta_neg;    // set only when negative activations were seen
  std::optional<double> softmax_max;  // set only for slots fed by a SoftMax
  std::size_t n_values = 0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  Histogram histogram;
  std::vector<double> raw;  // optional full retention

  bool operator==(const SlotProfile&) const = default;
};

struct CalibrationProfile {
  double p = 1.0;  // percentile parameter, percent
  std::size_t n_samples = 0;
  std::map<std::string, SlotProfile> slots;

  bool operator==(const CalibrationProfile&) const = default;
};

/// Nearest-rank order statistic at rank ⌈(1 − p/100)·n⌉ of the (unsorted) magnitudes.
inline double top_percentile(std::vector<double> values, double p) {
  if (values.empty()) throw ValidationError("percentile of an empty set");
  if (!(p > 0.0 && p <= 50.0)) throw ValidationError("p must lie in (0, 50]");
  const double n = double(values.size());
  auto rank = static_cast<std::size_t>(std::ceil((100.0 - p) * n / 100.0 - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1), values.end());
  return values[rank - 1];
}

struct CalibrationOptions {
  std::size_t bins = 256;
  bool keep_raw = false;
};

/// Records the tensor entering every neuron slot over the samples and derives per-slot thresholds.
inline CalibrationProfile calibrate(const NetworkSpec& net, const std::vector<Tensor>& samples, double p,
                                    CalibrationOptions opt = {}) {
  if (samples.empty()) throw ValidationError("calibration needs at least one sample");
  if (!(p > 0.0 && p <= 50.0)) throw ValidationError("p must lie in (0, 50]");
  const auto infos = net.slots();
  std::set<std::string> ids;
  for (const auto& s : infos) ids.insert(s.id);
  std::map<std::string, std::vector<double>> pooled;
  for (const auto& x : samples) {
    auto res = forward(net, x, ids);
    for (auto& [id, t] : res.recorded) {
      auto& v = pooled[id];
      v.insert(v.end(), t.data().begin(), t.data().end());
    }
  }
  CalibrationProfile prof;
  prof.p = p;
  prof.n_samples = samples.size();
  for (const auto& info : infos) {
    const auto& vals = pooled[info.id];
    SlotProfile sp;
    std::vector<double> pos, neg;
    for (double v : vals) {
      if (v > 0.0) pos.push_back(v);
      if (v < 0.0) neg.push_back(-v);
    }
    sp.n_values = vals.size();
    sp.n_pos = pos.size();
    sp.n_neg = neg.size();
    if (!pos.empty()) sp.theta_pos = top_percentile(pos, p);
    if (!neg.empty()) sp.theta_neg = top_percentile(neg, p);
    if (info.follows_softmax && !vals.empty()) sp.softmax_max = *std::max_element(vals.begin(), vals.end());
    sp.histogram = Histogram::of(vals, opt.bins);
    if (opt.keep_raw) sp.raw = vals;
    prof.slots[info.id] = std::move(sp);
  }
  return prof;
}

inline CalibrationProfile calibrate(const NetworkSpec& net, const Dataset& data, double p, CalibrationOptions opt = {}) {
  std::vector<Tensor> xs;
  for (const auto& f : data.features) xs.push_back(sample_tensor(net, f));
  return calibrate(net, xs, p, opt);
}

/// Base thresholds for spiking runs that reuse the calibrated percentile thresholds.
inline SlotThresholds thresholds_from_profile(const CalibrationProfile& prof) {
  SlotThresholds th;
  for (const auto& [id, sp] : prof.slots) {
    if (!sp.theta_pos) throw ValidationError("slot '" + id + "' has no positive activations to set a threshold");
    th[id] = SlotThreshold{*sp.theta_pos, sp.theta_neg};
  }
  return th;
}

// ---------------------------------------------------------------------------
// SFN construction

inline SFNParams make_sfn(const SlotProfile& entry, double lambda, int M, LevelSchedule schedule = LevelSchedule::SFormer) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw ValidationError("lambda must lie in (0, 1]");
  if (!entry.theta_pos) throw ValidationError("slot has no positive threshold");
  return make_sfn_params(make_levels(schedule, M), lambda, *entry.theta_pos, entry.theta_neg);
}

/// Post-SoftMax neuron: θ = max / top level, λ fixed at 1, positive-only.
inline SFNParams make_softmax_sfn(double softmax_max, int M, LevelSchedule schedule = LevelSchedule::SFormer) {
  if (!(softmax_max > 0.0) || !std::isfinite(softmax_max)) throw ValidationError("SoftMax maximum must be positive");
  const Levels levels = make_levels(schedule, M);
  return make_sfn_params(levels, 1.0, softmax_max / double(levels.back()), std::nullopt);
}

struct ConvertedNetwork {
  NetworkSpec base;
  double lambda = 1.0;
  int M = 8;
  LevelSchedule schedule = LevelSchedule::SFormer;
  std::map<std::string, SFNParams> slots;
  std::string profile_digest;

  bool operator==(const ConvertedNetwork& o) const {
    return lambda == o.lambda && M == o.M && schedule == o.schedule && slots == o.slots &&
           profile_digest == o.profile_digest;
  }
};

inline json profile_to_json(const CalibrationProfile& prof);

/// FNV-1a 64 of the canonical profile document, hex encoded.
inline std::string profile_digest(const CalibrationProfile& prof) {
  const std::string s = profile_to_json(prof).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

/// Binds an SFN to every slot. Slots after a SoftMax scale to the recorded maximum, the rest use percentiles.
inline ConvertedNetwork convert(const NetworkSpec& net, const CalibrationProfile& prof, double lambda, int M,
                                LevelSchedule schedule = LevelSchedule::SFormer) {
  net.validate();
  const auto infos = net.slots();
  std::vector<std::string> missing;
  for (const auto& s : infos)
    if (!prof.slots.count(s.id)) missing.push_back(s.id);
  if (!missing.empty()) {
    std::string msg = "calibration profile does not cover slot(s):";
    for (const auto& m : missing) msg += " " + m;
    throw ValidationError(msg);
  }
  ConvertedNetwork cn;
  cn.base = net;
  cn.lambda = lambda;
  cn.M = M;
  cn.schedule = schedule;
  cn.profile_digest = profile_digest(prof);
  for (const auto& s : infos) {
    const auto& entry = prof.slots.at(s.id);
    try {
      if (s.follows_softmax) {
        if (!entry.softmax_max) throw ValidationError("no SoftMax maximum recorded");
        cn.slots[s.id] = make_softmax_sfn(*entry.softmax_max, M, schedule);
      } else {
        cn.slots[s.id] = make_sfn(entry, lambda, M, schedule);
      }
    } catch (const ValidationError& e) {
      throw ValidationError("slot '" + s.id + "': " + e.what());
    }
  }
  return cn;
}

inline ConvertedNetwork convert(const ConvertedNetwork& cn, const CalibrationProfile& prof, double lambda, int M,
                                LevelSchedule schedule = LevelSchedule::SFormer) {
  return convert(cn.base, prof, lambda, M, schedule);
}

struct SNNResult {
  Tensor output;
  std::map<std::string, std::uint64_t> spike_stats;  // Σ|level| per slot
};

/// Single-timestep spiking inference: every slot applies its SFN elementwise.
inline SNNResult snn_forward(const ConvertedNetwork& cn, const Tensor& input, OpCounter* counter = nullptr) {
  SNNResult res;
  SpikingSlotFn fn = [&](const std::string& id, const Tensor& pre) {
    auto it = cn.slots.find(id);
    if (it == cn.slots.end()) throw ValidationError("slot '" + id + "' is not bound to a neuron");
    SlotResult r{Tensor(pre.shape()), std::vector<std::int64_t>(pre.size(), 0)};
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < pre.size(); ++i) {
      const auto f = sfn_fire_level(it->second, pre[i]);
      r.value[i] = f.value;
      r.spikes[i] = f.level;
      total += static_cast<std::uint64_t>(std::llabs(f.level));
    }
    res.spike_stats[id] += total;
    return r;
  };
  res.output = run_spiking_step(cn.base, input, fn, counter);
  return res;
}

inline double ann_accuracy(const NetworkSpec& net, const Dataset& data) {
  if (!data.labeled()) throw ValidationError("accuracy needs a labelled dataset");
  std::size_t hit = 0;
  for (std::size_t s = 0; s < data.size(); ++s)
    hit += predict_class(forward(net, sample_tensor(net, data.features[s])).output) == std::size_t(data.labels[s]);
  return double(hit) / double(data.size());
}

inline double snn_accuracy(const ConvertedNetwork& cn, const Dataset& data) {
  if (!data.labeled()) throw ValidationError("accuracy needs a labelled dataset");
  std::size_t hit = 0;
  for (std::size_t s = 0; s < data.size(); ++s)
    hit += predict_class(snn_forward(cn, sample_tensor(cn.base, data.features[s])).output) == std::size_t(data.labels[s]);
  return double(hit) / double(data.size());
}

// ---------------------------------------------------------------------------
// λ search

struct TuneResult {
  double lambda_star = 1.0;
  std::vector<bo::Trial> trials;  // (lambda, score)
  double best_score = 0.0;
  std::uint64_t seed = 0;
};

inline TuneResult tune_lambda(const std::function<double(double)>& objective, std::size_t trials, std::uint64_t seed) {
  bo::Options opt;
  opt.trials = trials;
  opt.seed = seed;
  auto r = bo::maximize_unit_interval(objective, opt);
  return TuneResult{r.best_x, std::move(r.trials), r.best_score, seed};
}

using Metric = std::function<double(const ConvertedNetwork&, const Dataset&)>;

inline TuneResult tune_lambda(const NetworkSpec& net, const CalibrationProfile& prof, const Dataset& val,
                              const Metric& metric, int M, std::size_t trials, std::uint64_t seed,
                              LevelSchedule schedule = LevelSchedule::SFormer) {
  if (val.size() == 0) throw ValidationError("validation set is empty");
  return tune_lambda([&](double lambda) { return metric(convert(net, prof, lambda, M, schedule), val); }, trials, seed);
}

// ---------------------------------------------------------------------------
// Serialization

inline const char* schedule_name(LevelSchedule s) {
  switch (s) {
    case LevelSchedule::Linear: return "linear";
    case LevelSchedule::Exponential: return "exponential";
    default: return "sformer";
  }
}

inline LevelSchedule parse_schedule(const std::string& s) {
  if (s == "sformer") return LevelSchedule::SFormer;
  if (s == "linear") return LevelSchedule::Linear;
  if (s == "exponential") return LevelSchedule::Exponential;
  throw ParseError("unknown level schedule '" + s + "'");
}

namespace detail {
inline void put_opt(json& j, const char* key, const std::optional<double>& v) {
  if (v) j[key] = *v;
}
inline std::optional<double> get_opt(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return number_at(j[key], path + "." + key);
}
}  // namespace detail

inline json profile_to_json(const CalibrationProfile& prof) {
  json slots = json::object();
  for (const auto& [id, sp] : prof.slots) {
    json e{{"n_values", sp.n_values},
           {"n_pos", sp.n_pos},
           {"n_neg", sp.n_neg},
           {"histogram", {{"edges", sp.histogram.edges()}, {"counts", sp.histogram.counts}}}};
    detail::put_opt(e, "theta_pos", sp.theta_pos);
    detail::put_opt(e, "theta_neg", sp.theta_neg);
    detail::put_opt(e, "softmax_max", sp.softmax_max);
    if (!sp.raw.empty()) e["raw"] = sp.raw;
    slots[id] = std::move(e);
  }
  return json{{"format", kProfileFormat}, {"version", kSchemaVersion}, {"p", prof.p},
              {"n_samples", prof.n_samples}, {"slots", slots}};
}

inline CalibrationProfile profile_from_json(const json& j, const std::string& root = "$") {
  using namespace detail;
  check_header(j, kProfileFormat, root);
  CalibrationProfile prof;
  prof.p = number_at(field(j, "p", root), root + ".p");
  const json& ns = field(j, "n_samples", root);
  if (!ns.is_number_unsigned()) throw ParseError(root + ".n_samples: expected a non-negative integer");
  prof.n_samples = ns.get<std::size_t>();
  const json& slots = field(j, "slots", root);
  if (!slots.is_object()) throw ParseError(root + ".slots: expected an object");
  for (auto it = slots.begin(); it != slots.end(); ++it) {
    const std::string p = root + ".slots." + it.key();
    const json& e = it.value();
    SlotProfile sp;
    sp.theta_pos = get_opt(e, "theta_pos", p);
    sp.theta_neg = get_opt(e, "theta_neg", p);
    sp.softmax_max = get_opt(e, "softmax_max", p);
    sp.n_values = field(e, "n_values", p).get<std::size_t>();
    sp.n_pos = field(e, "n_pos", p).get<std::size_t>();
    sp.n_neg = field(e, "n_neg", p).get<std::size_t>();
    const json& h = field(e, "histogram", p);
    const json& edges = field(h, "edges", p + ".histogram");
    const json& counts = field(h, "counts", p + ".histogram");
    if (!edges.is_array() || !counts.is_array() || edges.size() != counts.size() + 1 || counts.empty())
      throw ParseError(p + ".histogram: edges must have one more entry than counts");
    sp.histogram.lo = number_at(edges.front(), p + ".histogram.edges[0]");
    sp.histogram.hi = number_at(edges.back(), p + ".histogram.edges[-1]");
    for (const auto& c : counts) sp.histogram.counts.push_back(c.get<std::uint64_t>());
    if (e.contains("raw")) sp.raw = e["raw"].get<std::vector<double>>();
    if (sp.theta_pos && !(*sp.theta_pos > 0.0)) throw ParseError(p + ".theta_pos: must be positive");
    if (sp.theta_neg && !(*sp.theta_neg > 0.0)) throw ParseError(p + ".theta_neg: must be positive");
    prof.slots[it.key()] = std::move(sp);
  }
  return prof;
}

inline json converted_to_json(const ConvertedNetwork& cn) {
  json slots = json::object();
  for (const auto& [id, s] : cn.slots) {
    json e{{"lambda", s.lambda}, {"theta_pos", s.theta_pos}, {"levels", s.fire_pos.levels()},
           {"unit_pos", s.fire_pos.unit()}};
    if (s.theta_neg) {
      e["theta_neg"] = *s.theta_neg;
      e["unit_neg"] = s.fire_neg->unit();
    }
    slots[id] = std::move(e);
  }
  return json{{"format", kConvertedFormat}, {"version", kSchemaVersion}, {"lambda", cn.lambda}, {"M", cn.M},
              {"schedule", schedule_name(cn.schedule)}, {"profile_digest", cn.profile_digest},
              {"network", network_to_json(cn.base)}, {"slots", slots}};
}

inline ConvertedNetwork converted_from_json(const json& j, const std::string& root = "$") {
  using namespace detail;
  check_header(j, kConvertedFormat, root);
  ConvertedNetwork cn;
  cn.lambda = number_at(field(j, "lambda", root), root + ".lambda");
  cn.M = field(j, "M", root).get<int>();
  cn.schedule = parse_schedule(string_at(field(j, "schedule", root), root + ".schedule"));
  cn.profile_digest = string_at(field(j, "profile_digest", root), root + ".profile_digest");
  cn.base = network_from_json(field(j, "network", root), root + ".network");
  const json& slots = field(j, "slots", root);
  for (const auto& info : cn.base.slots())
    if (!slots.contains(info.id)) throw ParseError(root + ".slots." + info.id + ": missing neuron binding");
  for (auto it = slots.begin(); it != slots.end(); ++it) {
    const std::string p = root + ".slots." + it.key();
    const json& e = it.value();
    const Levels levels = field(e, "levels", p).get<Levels>();
    const double lambda = number_at(field(e, "lambda", p), p + ".lambda");
    try {
      cn.slots[it.key()] = make_sfn_params(levels, lambda, number_at(field(e, "theta_pos", p), p + ".theta_pos"),
                                           get_opt(e, "theta_neg", p));
    } catch (const ValidationError& err) {
      throw ParseError(p + ": " + err.what());
    }
  }
  return cn;
}

inline void save_profile(const CalibrationProfile& prof, const std::filesystem::path& path) {
  write_file_atomic(path, dump_json(profile_to_json(prof)));
}
inline CalibrationProfile load_profile(const std::filesystem::path& path) {
  return profile_from_json(parse_json_text(read_file(path), path.string()), path.string());
}
inline void save_converted(const ConvertedNetwork& cn, const std::filesystem::path& path) {
  write_file_atomic(path, dump_json(converted_to_json(cn)));
}
inline ConvertedNetwork load_converted(const std::filesystem::path& path) {
  return converted_from_json(parse_json_text(read_file(path), path.string()), path.string());
}

/// CSV `slot,bin_left,bin_right,count` of every slot histogram.
inline std::string distribution_csv(const CalibrationProfile& prof) {
  std::ostringstream os;
  os << std::setprecision(17) << "slot,bin_left,bin_right,count\n";
  for (const auto& [id, sp] : prof.slots) {
    const auto e = sp.histogram.edges();
    for (std::size_t b = 0; b < sp.histogram.counts.size(); ++b)
      os << id << ',' << e[b] << ',' << e[b + 1] << ',' << sp.histogram.counts[b] << '\n';
  }
  return os.str();
}

}  // namespace spikeforge
