#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "io.hpp"
#include "network.hpp"
#include "neurons.hpp"
#include "spiking.hpp"

namespace spikeforge {

/// Theorem-2 precondition failure or a nonlinear layer inside a network that must be affine.
struct NonlinearLayerError : ValidationError {
  std::string layer;
  explicit NonlinearLayerError(std::string name)
      : ValidationError("layer '" + name + "' is not linear; network-level equivalence requires every "
                        "non-neuron operation to be linear"),
        layer(std::move(name)) {}
};

// ---------------------------------------------------------------------------
// Single-neuron equivalence

/// MTN reproducing T steps of an IF neuron: θ_M = θ/T, v_M(0) = v(0)/T, N = T + 1.
inline MTNParams build_equivalent_mtn(double theta, double v0, std::size_t T) {
  if (!(theta > 0.0)) throw ValidationError("theta must be positive");
  if (!(v0 >= 0.0 && v0 < theta)) throw ValidationError("v0 must lie in [0, theta)");
  if (T < 1) throw ValidationError("T must be >= 1");
  return MTNParams{theta / double(T), static_cast<std::int64_t>(T) + 1, v0 / double(T)};
}

inline DualParams build_equivalent_dual_mtn(const DualParams& dual_if, std::size_t T) {
  if (T < 1) throw ValidationError("T must be >= 1");
  const double t = double(T);
  return DualParams{{dual_if.pos.theta / t, dual_if.pos.v0 / t},
                    {dual_if.neg.theta / t, dual_if.neg.v0 / t},
                    static_cast<std::int64_t>(T) + 1};
}

inline double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / double(xs.size());
}

struct EquivCase {
  std::size_t T = 1;
  double theta = 1.0;
  double v0 = 0.0;
  std::vector<double> xs;
  std::uint64_t seed = 0;

  bool preconditions_hold() const {
    if (!(theta > 0.0 && v0 >= 0.0 && v0 < theta) || xs.size() != T || T == 0) return false;
    return std::all_of(xs.begin(), xs.end(), [&](double x) { return x >= 0.0 && x <= theta; });
  }
};

struct Theorem1Result {
  bool equal = false;
  double o_bar_if = 0.0;
  double o_mtn = 0.0;
  double discrepancy = 0.0;
};

inline Theorem1Result check_theorem1(const EquivCase& c, double tol = 1e-12) {
  if (!c.preconditions_hold()) throw ValidationError("case violates the IF/MTN equivalence preconditions");
  const auto run = if_run(IFParams{c.theta, c.v0}, c.xs, c.T);
  const auto mtn = build_equivalent_mtn(c.theta, c.v0, c.T);
  Theorem1Result r;
  r.o_bar_if = run.o_bar;
  r.o_mtn = mtn_fire(mtn, mean(c.xs));
  r.discrepancy = std::abs(r.o_bar_if - r.o_mtn);
  r.equal = r.discrepancy <= tol;
  return r;
}

struct BoundReport {
  double discrepancy = 0.0;
  double bound = 0.0;
  double c_v = 0.0;
  bool passed = false;
  double o_bar_if = 0.0;
  double o_m = 0.0;
};

/// Dual-IF over T steps against the single-step dual-MTN built from it.
/// Bound (|C_v| + θ_branch)/T with C_v = v⁺(T) + v⁻(0) − v⁻(T) on the positive branch, mirrored
/// on the negative branch.
inline BoundReport check_theorem3(const DualParams& params, std::span<const double> xs, std::size_t T) {
  params.validate();
  const auto run = dual_if_run(params, xs, T);
  const auto mtn = build_equivalent_dual_mtn(params, T);
  const double x_m = mean(xs);
  BoundReport r;
  r.o_bar_if = run.o_bar;
  r.o_m = dual_mtn_fire(mtn, x_m);
  r.discrepancy = std::abs(r.o_bar_if - r.o_m);
  double theta_branch;
  if (x_m >= 0.0) {
    r.c_v = run.v_pos + params.neg.v0 - run.v_neg;
    theta_branch = params.pos.theta;
  } else {
    r.c_v = run.v_neg + params.pos.v0 - run.v_pos;
    theta_branch = params.neg.theta;
  }
  r.bound = (std::abs(r.c_v) + theta_branch) / double(T);
  r.passed = r.discrepancy <= r.bound + 1e-12;
  return r;
}

// ---------------------------------------------------------------------------
// Seeded random cases. All values are multiples of 2⁻²⁰ so IF arithmetic stays exact.

inline constexpr double kDyadicQuantum = 0x1p-20;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of case `case_id` in a sweep seeded with `seed`; replaying a case needs only this value.
inline std::uint64_t case_seed(std::uint64_t seed, std::uint64_t case_id) {
  return splitmix64(splitmix64(seed) ^ case_id);
}

class CaseRng {
 public:
  explicit CaseRng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() { return splitmix64(state_++); }
  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  /// Multiple of 2⁻²⁰ in [0, hi] (inclusive) or [0, hi) when `open`.
  double dyadic(double hi, bool open = false) {
    const auto steps = static_cast<std::int64_t>(std::floor(hi / kDyadicQuantum));
    const std::int64_t top = open && double(steps) * kDyadicQuantum >= hi ? steps - 1 : steps;
    return double(uniform_int(0, top)) * kDyadicQuantum;
  }
  /// Threshold k·2⁻⁸ in [0.25, 4].
  double threshold() { return double(uniform_int(64, 1024)) * 0x1p-8; }

 private:
  std::uint64_t state_;
};

struct CaseOptions {
  std::size_t t_min = 1;
  std::size_t t_max = 64;
};

inline EquivCase random_theorem1_case(std::uint64_t cseed, CaseOptions opt = {}) {
  CaseRng rng(cseed);
  EquivCase c;
  c.seed = cseed;
  c.T = static_cast<std::size_t>(rng.uniform_int(std::int64_t(opt.t_min), std::int64_t(opt.t_max)));
  c.theta = rng.threshold();
  c.v0 = rng.dyadic(c.theta, true);
  for (std::size_t t = 0; t < c.T; ++t) c.xs.push_back(rng.dyadic(c.theta));
  return c;
}

struct SignedCase {
  std::size_t T = 1;
  DualParams params;
  std::vector<double> xs;
  std::uint64_t seed = 0;
};

/// Signed inputs in [−θ⁻, θ⁺] with independent branch thresholds and initial potentials.
inline SignedCase random_theorem3_case(std::uint64_t cseed, CaseOptions opt = {}) {
  CaseRng rng(cseed);
  SignedCase c;
  c.seed = cseed;
  c.T = static_cast<std::size_t>(rng.uniform_int(std::int64_t(opt.t_min), std::int64_t(opt.t_max)));
  c.params.pos.theta = rng.threshold();
  c.params.neg.theta = rng.threshold();
  c.params.pos.v0 = rng.dyadic(c.params.pos.theta, true);
  c.params.neg.v0 = rng.dyadic(c.params.neg.theta, true);
  c.params.n_max = static_cast<std::int64_t>(c.T) + 1;
  for (std::size_t t = 0; t < c.T; ++t) {
    if (rng.next() & 1)
      c.xs.push_back(rng.dyadic(c.params.pos.theta));
    else
      c.xs.push_back(-rng.dyadic(c.params.neg.theta));
  }
  return c;
}

struct SweepSummary {
  std::string name;
  std::size_t n_cases = 0;
  std::size_t n_passed = 0;
  double max_discrepancy = 0.0;
  std::uint64_t worst_case_id = 0;
  std::uint64_t worst_case_seed = 0;

  bool passed() const { return n_cases == n_passed; }

  void record(bool ok, double disc, std::uint64_t id, std::uint64_t cseed, bool worst_so_far) {
    ++n_cases;
    if (ok) ++n_passed;
    max_discrepancy = std::max(max_discrepancy, disc);
    if (worst_so_far) {
      worst_case_id = id;
      worst_case_seed = cseed;
    }
  }

  json to_json() const {
    return json{{"name", name},
                {"n_cases", n_cases},
                {"n_passed", n_passed},
                {"max_discrepancy", max_discrepancy},
                {"worst_case_id", worst_case_id},
                {"worst_case_seed", worst_case_seed}};
  }
};

namespace detail {
// Failures rank above passes; within a class the larger score wins.
struct WorstTracker {
  bool seen = false;
  bool any_fail = false;
  double worst = 0.0;
  bool update(bool ok, double score) {
    if (!seen || (!ok && !any_fail) || (ok != any_fail && score > worst)) {
      seen = true;
      any_fail = any_fail || !ok;
      worst = score;
      return true;
    }
    return false;
  }
};
}  // namespace detail

inline SweepSummary sweep_theorem1(std::uint64_t seed, std::size_t trials, CaseOptions opt = {}) {
  SweepSummary s{"theorem1"};
  detail::WorstTracker w;
  for (std::size_t i = 0; i < trials; ++i) {
    const auto cs = case_seed(seed, i);
    const auto r = check_theorem1(random_theorem1_case(cs, opt));
    s.record(r.equal, r.discrepancy, i, cs, w.update(r.equal, r.discrepancy));
  }
  return s;
}

inline SweepSummary sweep_theorem3(std::uint64_t seed, std::size_t trials, CaseOptions opt = {}) {
  SweepSummary s{"theorem3"};
  detail::WorstTracker w;
  for (std::size_t i = 0; i < trials; ++i) {
    const auto cs = case_seed(seed, i);
    const auto c = random_theorem3_case(cs, opt);
    const auto r = check_theorem3(c.params, c.xs, c.T);
    // Worst case is the one closest to (or furthest past) its bound.
    s.record(r.passed, r.discrepancy, i, cs, w.update(r.passed, r.discrepancy - r.bound));
  }
  return s;
}

/// Rate-gap identity x̄ − ō == (v(T) − v(0))/T on unconstrained signed dyadic inputs,
/// compared bit-for-bit.
inline SweepSummary sweep_rate_gap_identity(std::uint64_t seed, std::size_t trials, CaseOptions opt = {}) {
  SweepSummary s{"rate_gap_identity"};
  detail::WorstTracker w;
  for (std::size_t i = 0; i < trials; ++i) {
    const auto cs = case_seed(seed, i);
    CaseRng rng(cs);
    const auto T = static_cast<std::size_t>(rng.uniform_int(std::int64_t(opt.t_min), std::int64_t(opt.t_max)));
    const double theta = rng.threshold();
    const double v0 = rng.dyadic(theta, true);
    std::vector<double> xs;
    for (std::size_t t = 0; t < T; ++t) xs.push_back(rng.dyadic(3.0 * theta) - 1.5 * theta);
    const auto run = if_run(IFParams{theta, v0}, xs, T);
    const double lhs = run.rate_gap();
    const double rhs = (run.final_v - v0) / double(T);
    const bool ok = lhs == rhs;
    const double disc = std::abs(lhs - rhs);
    s.record(ok, disc, i, cs, w.update(ok, disc));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Traces for replaying a single case

inline std::string trace_theorem1(const EquivCase& c) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "case seed " << c.seed << ": T=" << c.T << " theta=" << c.theta << " v0=" << c.v0 << "\n";
  os << "t,x,h,o,v\n";
  IFParams p{c.theta, c.v0};
  IFState s{c.v0};
  double sum_o = 0.0;
  for (std::size_t t = 0; t < c.xs.size(); ++t) {
    const double h = s.v + c.xs[t];
    auto step = if_step(p, s, c.xs[t]);
    os << t + 1 << ',' << c.xs[t] << ',' << h << ',' << step.o << ',' << step.next.v << "\n";
    sum_o += step.o;
    s = step.next;
  }
  const auto mtn = build_equivalent_mtn(c.theta, c.v0, c.T);
  const double xm = mean(c.xs);
  os << "IF mean rate " << sum_o / double(c.T) << "\n";
  os << "MTN theta_m=" << mtn.theta_m << " v_m0=" << mtn.v0 << " N=" << mtn.n_max << " x_m=" << xm
     << " spikes=" << mtn_count(mtn, xm) << " output=" << mtn_fire(mtn, xm) << "\n";
  return os.str();
}

inline std::string trace_theorem3(const SignedCase& c) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "case seed " << c.seed << ": T=" << c.T << " theta+=" << c.params.pos.theta << " theta-=" << c.params.neg.theta
     << " v+0=" << c.params.pos.v0 << " v-0=" << c.params.neg.v0 << "\n";
  os << "t,x,o_pos,v_pos,o_neg,v_neg\n";
  const auto run = dual_if_run(c.params, c.xs, c.T);
  for (std::size_t t = 0; t < c.T; ++t)
    os << t + 1 << ',' << c.xs[t] << ',' << run.pos_run.spikes[t] << ',' << run.pos_run.potentials[t] << ','
       << run.neg_run.spikes[t] << ',' << run.neg_run.potentials[t] << "\n";
  const auto r = check_theorem3(c.params, c.xs, c.T);
  os << "dual-IF mean rate " << r.o_bar_if << ", dual-MTN output " << r.o_m << "\n";
  os << "discrepancy " << r.discrepancy << " C_v " << r.c_v << " bound " << r.bound
     << (r.passed ? " (within bound)" : " (BOUND VIOLATED)") << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Network-level runs

/// IF parameters of one slot; a slot with a negative branch runs dual neurons.
struct SlotIF {
  BranchParams pos;
  std::optional<BranchParams> neg;
};
using SlotIFMap = std::map<std::string, SlotIF>;

/// IF slots with initial potential `v0_fraction`·θ on each branch.
inline SlotIFMap slot_if_from_thresholds(const SlotThresholds& th, double v0_fraction) {
  SlotIFMap m;
  for (const auto& [id, t] : th) {
    SlotIF s{{t.theta_pos, v0_fraction * t.theta_pos}, std::nullopt};
    if (t.theta_neg) s.neg = BranchParams{*t.theta_neg, v0_fraction * *t.theta_neg};
    m[id] = s;
  }
  return m;
}

using SlotObserver = std::function<void(const std::string& slot, const Tensor& in, const Tensor& out)>;

inline const SlotIF& find_slot(const SlotIFMap& m, const std::string& id) {
  auto it = m.find(id);
  if (it == m.end()) throw ValidationError("no neuron parameters for slot '" + id + "'");
  return it->second;
}

/// Multi-timestep IF network: feeds inputs[t] at step t and returns the time-averaged output.
inline Tensor if_network_run(const NetworkSpec& net, const SlotIFMap& slots, const std::vector<Tensor>& inputs,
                             OpCounter* counter = nullptr, const SlotObserver& observe = {}) {
  if (inputs.empty()) throw ValidationError("IF network run needs at least one timestep");
  struct State {
    std::vector<double> vp, vn;
  };
  std::map<std::string, State> state;
  SpikingSlotFn fn = [&](const std::string& id, const Tensor& pre) {
    const SlotIF& p = find_slot(slots, id);
    auto [it, fresh] = state.try_emplace(id);
    if (fresh) {
      it->second.vp.assign(pre.size(), p.pos.v0);
      if (p.neg) it->second.vn.assign(pre.size(), p.neg->v0);
    }
    State& st = it->second;
    SlotResult r{Tensor(pre.shape()), std::vector<std::int64_t>(pre.size(), 0)};
    for (std::size_t i = 0; i < pre.size(); ++i) {
      if (p.neg) {
        auto [xp, xn] = dual_decompose(pre[i]);
        auto sp = if_step(IFParams{p.pos.theta, 0.0}, IFState{st.vp[i]}, xp);
        auto sn = if_step(IFParams{p.neg->theta, 0.0}, IFState{st.vn[i]}, xn);
        st.vp[i] = sp.next.v;
        st.vn[i] = sn.next.v;
        r.value[i] = sp.o - sn.o;
        r.spikes[i] = (sp.o > 0.0 ? 1 : 0) + (sn.o > 0.0 ? 1 : 0);
      } else {
        auto sp = if_step(IFParams{p.pos.theta, 0.0}, IFState{st.vp[i]}, pre[i]);
        st.vp[i] = sp.next.v;
        r.value[i] = sp.o;
        r.spikes[i] = sp.o > 0.0 ? 1 : 0;
      }
    }
    if (observe) observe(id, pre, r.value);
    return r;
  };
  Tensor sum;
  for (const auto& x : inputs) {
    Tensor y = run_spiking_step(net, x, fn, counter);
    sum = sum.size() ? sum + y : y;
  }
  return (1.0 / double(inputs.size())) * sum;
}

/// Single-step MTN network whose slots are built from the IF parameters for a T-step horizon:
/// θ_M = θ/T, v_M(0) = v(0)/T, at most `n_max` spikes.
inline Tensor mtn_network_run(const NetworkSpec& net, const SlotIFMap& slots, const Tensor& input, std::size_t T,
                              std::int64_t n_max, OpCounter* counter = nullptr, const SlotObserver& observe = {}) {
  const double t = double(T);
  SpikingSlotFn fn = [&](const std::string& id, const Tensor& pre) {
    const SlotIF& p = find_slot(slots, id);
    SlotResult r{Tensor(pre.shape()), std::vector<std::int64_t>(pre.size(), 0)};
    if (p.neg) {
      const DualParams d{{p.pos.theta / t, p.pos.v0 / t}, {p.neg->theta / t, p.neg->v0 / t}, n_max};
      for (std::size_t i = 0; i < pre.size(); ++i) {
        const auto k = dual_mtn_count(d, pre[i]);
        r.value[i] = dual_mtn_fire(d, pre[i]);
        r.spikes[i] = k;
      }
    } else {
      const MTNParams m{p.pos.theta / t, n_max, p.pos.v0 / t};
      for (std::size_t i = 0; i < pre.size(); ++i) {
        r.spikes[i] = mtn_count(m, pre[i]);
        r.value[i] = m.theta_m * double(r.spikes[i]);
      }
    }
    if (observe) observe(id, pre, r.value);
    return r;
  };
  return run_spiking_step(net, input, fn, counter);
}

struct Theorem2Report {
  bool equal = false;
  bool preconditions_ok = true;
  double max_deviation = 0.0;
  std::map<std::string, double> slot_deviation;  // max |mean IF output − MTN output| per slot
  std::vector<std::string> warnings;
};

/// Throws NonlinearLayerError naming the first non-neuron layer that fails the affine probe.
inline void require_affine_layers(const NetworkSpec& net) {
  std::size_t dim = net.input_dim;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    if (l.is_slot()) continue;
    if (!layer_is_affine(l, Shape{2, dim}, 0x5eed + i)) throw NonlinearLayerError(l.name);
    if (const auto* lin = std::get_if<Linear>(&l.kind)) dim = lin->weight.dim(0);
  }
}

/// Model I (IF at every slot for T = inputs.size() steps) against Model II (equivalent MTNs on the
/// time-averaged input). Per-slot preconditions are checked at every step; a violation is reported
/// as a warning and equality is then informational only.
inline Theorem2Report check_theorem2(const NetworkSpec& net, const SlotIFMap& slots, const std::vector<Tensor>& inputs,
                                     double tol = 1e-9) {
  net.validate();
  require_affine_layers(net);
  const std::size_t T = inputs.size();
  if (T == 0) throw ValidationError("need at least one timestep of input");
  for (const auto& s : net.slots()) {
    const auto& p = find_slot(slots, s.id);
    if (p.neg) throw ValidationError("slot '" + s.id + "': network equivalence is checked on single-branch neurons");
  }

  Theorem2Report rep;
  std::set<std::string> warned;
  std::map<std::string, Tensor> if_out_sum;
  auto observe_if = [&](const std::string& id, const Tensor& in, const Tensor& out) {
    const auto& p = find_slot(slots, id).pos;
    bool ok = p.v0 >= 0.0 && p.v0 < p.theta;
    for (double x : in.data()) ok = ok && x >= 0.0 && x <= p.theta;
    if (!ok && warned.insert(id).second) {
      rep.preconditions_ok = false;
      rep.warnings.push_back("slot '" + id + "': input outside [0, theta] or v0 outside [0, theta)");
    }
    auto [it, fresh] = if_out_sum.try_emplace(id, out);
    if (!fresh) it->second = it->second + out;
  };
  const Tensor out_if = if_network_run(net, slots, inputs, nullptr, observe_if);

  Tensor mean_in = inputs.front();
  for (std::size_t t = 1; t < T; ++t) mean_in = mean_in + inputs[t];
  mean_in = (1.0 / double(T)) * mean_in;

  std::map<std::string, Tensor> mtn_out;
  auto observe_mtn = [&](const std::string& id, const Tensor&, const Tensor& out) { mtn_out[id] = out; };
  const Tensor out_mtn =
      mtn_network_run(net, slots, mean_in, T, static_cast<std::int64_t>(T) + 1, nullptr, observe_mtn);

  for (const auto& [id, sum] : if_out_sum) rep.slot_deviation[id] = max_abs_diff((1.0 / double(T)) * sum, mtn_out.at(id));
  rep.max_deviation = max_abs_diff(out_if, out_mtn);
  rep.equal = rep.max_deviation <= tol;
  return rep;
}

// ---------------------------------------------------------------------------
// IF versus MTN across horizons on a labelled dataset

struct SweepTRow {
  std::size_t T = 1;
  double acc_if = 0.0;
  double acc_mtn = 0.0;
  double mean_disc = 0.0;
  double max_disc = 0.0;
};

struct SweepTOptions {
  double v0_fraction = 0.5;  // initial potential as a fraction of each branch threshold
};

/// For every T: IF network over T constant-input steps against the single-step MTN network with
/// N = T. Accuracy and mean discrepancy are averaged over the threshold sets (one per calibration
/// seed); max discrepancy is the maximum over all of them.
inline std::vector<SweepTRow> sweep_T(const NetworkSpec& net, const std::vector<SlotThresholds>& threshold_sets,
                                      const Dataset& data, const std::vector<std::size_t>& Ts, SweepTOptions opt = {}) {
  if (!data.labeled()) throw ValidationError("sweep over T needs a labelled dataset");
  if (threshold_sets.empty()) throw ValidationError("sweep over T needs at least one threshold set");
  std::vector<SweepTRow> rows;
  for (auto T : Ts) {
    if (T < 1) throw ValidationError("T must be >= 1");
    SweepTRow row{T};
    for (const auto& th : threshold_sets) {
      const auto slots = slot_if_from_thresholds(th, opt.v0_fraction);
      std::size_t hit_if = 0, hit_mtn = 0, elems = 0;
      double disc_sum = 0.0;
      for (std::size_t s = 0; s < data.size(); ++s) {
        const Tensor x = sample_tensor(net, data.features[s]);
        const Tensor y_if = if_network_run(net, slots, std::vector<Tensor>(T, x));
        const Tensor y_mtn = mtn_network_run(net, slots, x, T, static_cast<std::int64_t>(T));
        hit_if += predict_class(y_if) == std::size_t(data.labels[s]);
        hit_mtn += predict_class(y_mtn) == std::size_t(data.labels[s]);
        for (std::size_t i = 0; i < y_if.size(); ++i) {
          const double d = std::abs(y_if[i] - y_mtn[i]);
          disc_sum += d;
          row.max_disc = std::max(row.max_disc, d);
        }
        elems += y_if.size();
      }
      row.acc_if += double(hit_if) / double(data.size());
      row.acc_mtn += double(hit_mtn) / double(data.size());
      row.mean_disc += disc_sum / double(elems);
    }
    const double k = double(threshold_sets.size());
    row.acc_if /= k;
    row.acc_mtn /= k;
    row.mean_disc /= k;
    rows.push_back(row);
  }
  return rows;
}

inline std::string sweep_T_csv(const std::vector<SweepTRow>& rows) {
  std::ostringstream os;
  os << std::setprecision(17) << "T,acc_if,acc_mtn,mean_disc,max_disc\n";
  for (const auto& r : rows) os << r.T << ',' << r.acc_if << ',' << r.acc_mtn << ',' << r.mean_disc << ',' << r.max_disc << '\n';
  return os.str();
}

}  // namespace spikeforge
