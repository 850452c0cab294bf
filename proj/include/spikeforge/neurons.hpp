#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tensor.hpp"

namespace spikeforge {

// ---------------------------------------------------------------------------
// Soft-reset integrate-and-fire

struct IFParams {
  double theta = 1.0;  // firing threshold, > 0
  double v0 = 0.0;     // initial membrane potential

  void validate() const {
    if (!(theta > 0.0) || !std::isfinite(theta)) throw ValidationError("IF threshold must be positive");
    if (!std::isfinite(v0)) throw ValidationError("IF initial potential must be finite");
  }
};

struct IFState {
  double v = 0.0;
};

struct IFStep {
  double o;
  IFState next;
};

/// h = v + x; fires θ when h ≥ θ (ties fire); soft reset v' = h − o.
inline IFStep if_step(const IFParams& p, IFState s, double x) {
  const double h = s.v + x;
  const double o = h >= p.theta ? p.theta : 0.0;
  return {o, IFState{h - o}};
}

struct IFRun {
  double o_bar = 0.0;
  double final_v = 0.0;
  std::vector<double> spikes;  // o(t), each 0 or θ
  std::vector<double> potentials;  // v(t) after each step
  double sum_x = 0.0;
  double sum_o = 0.0;

  /// x̄ − ō, computed as (Σx − Σo)/T.
  double rate_gap() const { return (sum_x - sum_o) / double(spikes.size()); }
};

inline IFRun if_run(const IFParams& p, std::span<const double> xs, std::size_t T) {
  p.validate();
  if (T == 0) throw ValidationError("IF run needs T >= 1");
  if (xs.size() != T)
    throw DimensionError("IF run: " + std::to_string(xs.size()) + " inputs for T=" + std::to_string(T));
  IFRun r;
  IFState s{p.v0};
  r.spikes.reserve(T);
  r.potentials.reserve(T);
  for (double x : xs) {
    auto step = if_step(p, s, x);
    r.spikes.push_back(step.o);
    r.potentials.push_back(step.next.v);
    r.sum_x += x;
    r.sum_o += step.o;
    s = step.next;
  }
  r.final_v = s.v;
  r.o_bar = r.sum_o / double(T);
  return r;
}

// ---------------------------------------------------------------------------
// Multi-threshold neuron

struct MTNParams {
  double theta_m = 1.0;    // base threshold
  std::int64_t n_max = 1;  // max spikes per step
  double v0 = 0.0;

  void validate() const {
    if (!(theta_m > 0.0)) throw ValidationError("MTN base threshold must be positive");
    if (n_max < 1) throw ValidationError("MTN needs n_max >= 1");
  }
};

/// clip(⌊(x + v0)/θ_M⌋, 0, N)
inline std::int64_t mtn_count(const MTNParams& p, double x) {
  const double k = std::floor((x + p.v0) / p.theta_m);
  if (!(k > 0.0)) return 0;
  return k >= double(p.n_max) ? p.n_max : static_cast<std::int64_t>(k);
}

inline double mtn_fire(const MTNParams& p, double x) { return p.theta_m * double(mtn_count(p, x)); }

// ---------------------------------------------------------------------------
// Dual (signed) variants

struct BranchParams {
  double theta = 1.0;
  double v0 = 0.0;
};

struct DualParams {
  BranchParams pos;
  BranchParams neg;
  std::int64_t n_max = 1;

  void validate() const {
    for (const auto* b : {&pos, &neg}) {
      if (!(b->theta > 0.0)) throw ValidationError("dual branch threshold must be positive");
      if (!(b->v0 >= 0.0 && b->v0 < b->theta))
        throw ValidationError("dual branch initial potential must lie in [0, threshold)");
    }
    if (n_max < 1) throw ValidationError("dual neuron needs n_max >= 1");
  }
};

/// (max{0,x}, −min{0,x})
inline std::pair<double, double> dual_decompose(double x) {
  return {x > 0.0 ? x : 0.0, x < 0.0 ? -x : 0.0};
}

struct DualIFRun {
  double o_bar = 0.0;  // ō⁺ − ō⁻
  double o_bar_pos = 0.0;
  double o_bar_neg = 0.0;
  double v_pos = 0.0;  // v⁺(T)
  double v_neg = 0.0;  // v⁻(T)
  IFRun pos_run;
  IFRun neg_run;
};

inline DualIFRun dual_if_run(const DualParams& p, std::span<const double> xs, std::size_t T) {
  if (xs.size() != T)
    throw DimensionError("dual IF run: " + std::to_string(xs.size()) + " inputs for T=" + std::to_string(T));
  std::vector<double> xp(T), xn(T);
  for (std::size_t t = 0; t < T; ++t) std::tie(xp[t], xn[t]) = dual_decompose(xs[t]);
  DualIFRun r;
  r.pos_run = if_run(IFParams{p.pos.theta, p.pos.v0}, xp, T);
  r.neg_run = if_run(IFParams{p.neg.theta, p.neg.v0}, xn, T);
  r.o_bar_pos = r.pos_run.o_bar;
  r.o_bar_neg = r.neg_run.o_bar;
  r.o_bar = r.o_bar_pos - r.o_bar_neg;
  r.v_pos = r.pos_run.final_v;
  r.v_neg = r.neg_run.final_v;
  return r;
}

/// Signed spike count: positive branch for x ≥ 0, negative branch otherwise.
inline std::int64_t dual_mtn_count(const DualParams& p, double x) {
  if (x >= 0.0) return mtn_count(MTNParams{p.pos.theta, p.n_max, p.pos.v0}, x);
  return -mtn_count(MTNParams{p.neg.theta, p.n_max, p.neg.v0}, -x);
}

inline double dual_mtn_fire(const DualParams& p, double x) {
  const auto k = dual_mtn_count(p, x);
  return k >= 0 ? p.pos.theta * double(k) : p.neg.theta * double(k);
}

// ---------------------------------------------------------------------------
// Fire functions and the scale-and-fire neuron

using Levels = std::vector<std::int64_t>;

/// Monotone step map from latent potential to integer level: thresholds θᵢ = unit·yᵢ.
class FireFunction {
 public:
  FireFunction() = default;

  FireFunction(Levels levels, double unit) : levels_(std::move(levels)), unit_(unit) {
    if (levels_.empty()) throw ValidationError("fire function needs at least one level");
    if (!(unit_ > 0.0) || !std::isfinite(unit_)) throw ValidationError("fire function unit must be positive");
    for (std::size_t i = 0; i < levels_.size(); ++i) {
      if (levels_[i] < 1) throw ValidationError("fire function levels must be positive integers");
      if (i && levels_[i] <= levels_[i - 1]) throw ValidationError("fire function levels must strictly increase");
      thresholds_.push_back(unit_ * double(levels_[i]));
    }
  }

  const Levels& levels() const noexcept { return levels_; }
  const std::vector<double>& thresholds() const noexcept { return thresholds_; }
  double unit() const noexcept { return unit_; }
  std::int64_t top_level() const { return levels_.back(); }

  /// G(h): 0 below θ₁, yᵢ on [θᵢ, θᵢ₊₁), y_N from θ_N upward.
  std::int64_t level_for_latent(double h) const {
    auto it = std::upper_bound(thresholds_.begin(), thresholds_.end(), h);
    if (it == thresholds_.begin()) return 0;
    return levels_[static_cast<std::size_t>(std::distance(thresholds_.begin(), it)) - 1];
  }

  /// Single-step level with the half-unit initial potential folded in.
  std::int64_t level(double x) const { return level_for_latent(x + 0.5 * unit_); }

  /// Decision boundaries on the input: unit·(yᵢ − ½).
  std::vector<double> input_boundaries() const {
    std::vector<double> b;
    for (auto y : levels_) b.push_back(unit_ * (double(y) - 0.5));
    return b;
  }

  bool operator==(const FireFunction& o) const { return levels_ == o.levels_ && unit_ == o.unit_; }

 private:
  Levels levels_;
  double unit_ = 1.0;
  std::vector<double> thresholds_;
};

struct SFNParams {
  double lambda = 1.0;
  double theta_pos = 1.0;
  std::optional<double> theta_neg;  // absent for positive-only slots
  FireFunction fire_pos;
  std::optional<FireFunction> fire_neg;

  void validate() const {
    if (!(lambda > 0.0 && lambda <= 1.0)) throw ValidationError("lambda must lie in (0, 1]");
    if (!(theta_pos > 0.0)) throw ValidationError("positive base threshold must be positive");
    if (fire_pos.unit() != lambda * theta_pos) throw ValidationError("positive fire unit must equal lambda*theta+");
    if (theta_neg.has_value() != fire_neg.has_value())
      throw ValidationError("negative threshold and negative fire function must be set together");
    if (theta_neg) {
      if (!(*theta_neg > 0.0)) throw ValidationError("negative base threshold must be positive");
      if (fire_neg->unit() != lambda * *theta_neg) throw ValidationError("negative fire unit must equal lambda*theta-");
    }
  }

  bool operator==(const SFNParams&) const = default;
};

struct Fired {
  double value;
  std::int64_t level;  // signed
};

/// Signed single-step quantization. The negative branch mirrors the positive one with its own unit;
/// positive-only neurons output 0 for negative input.
inline Fired sfn_fire_level(const SFNParams& p, double x) {
  if (x >= 0.0) {
    const auto y = p.fire_pos.level(x);
    return {p.fire_pos.unit() * double(y), y};
  }
  if (!p.fire_neg) return {0.0, 0};
  const auto y = p.fire_neg->level(-x);
  return {-(p.fire_neg->unit() * double(y)), -y};
}

inline double sfn_fire(const SFNParams& p, double x) { return sfn_fire_level(p, x).value; }

inline SFNParams make_sfn_params(const Levels& levels, double lambda, double theta_pos, std::optional<double> theta_neg) {
  SFNParams p;
  p.lambda = lambda;
  p.theta_pos = theta_pos;
  p.fire_pos = FireFunction(levels, lambda * theta_pos);
  if (theta_neg) {
    p.theta_neg = theta_neg;
    p.fire_neg = FireFunction(levels, lambda * *theta_neg);
  }
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// Level schedules

/// y_k = k for k ≤ M, then M − 1 + 2^(k−M) up to k = 2M.
inline Levels sformer_levels(int M) {
  if (M < 1) throw ValidationError("M must be >= 1");
  if (M > 60) throw ValidationError("M too large for 64-bit levels");
  Levels y;
  for (int k = 1; k <= M; ++k) y.push_back(k);
  for (int k = M + 1; k <= 2 * M; ++k) y.push_back(std::int64_t{M} - 1 + (std::int64_t{1} << (k - M)));
  return y;
}

/// Ablation schedule: y_k = k, k = 1..2M.
inline Levels linear_levels(int M) {
  if (M < 1) throw ValidationError("M must be >= 1");
  Levels y;
  for (int k = 1; k <= 2 * M; ++k) y.push_back(k);
  return y;
}

/// Ablation schedule: y_k = 2^(k−1), k = 1..2M.
inline Levels exponential_levels(int M) {
  if (M < 1) throw ValidationError("M must be >= 1");
  if (2 * M > 62) throw ValidationError("M too large for 64-bit levels");
  Levels y;
  for (int k = 1; k <= 2 * M; ++k) y.push_back(std::int64_t{1} << (k - 1));
  return y;
}

enum class LevelSchedule { SFormer, Linear, Exponential };

inline Levels make_levels(LevelSchedule s, int M) {
  switch (s) {
    case LevelSchedule::Linear: return linear_levels(M);
    case LevelSchedule::Exponential: return exponential_levels(M);
    default: return sformer_levels(M);
  }
}

struct SignedThresholds {
  std::vector<double> pos;  // λθ⁺·y_k
  std::vector<double> neg;  // −λθ⁻·y_k
  std::size_t count() const { return pos.size() + neg.size(); }
};

inline SignedThresholds sformer_thresholds(const Levels& levels, double lambda, double theta_pos, double theta_neg) {
  SignedThresholds t;
  for (auto y : levels) {
    t.pos.push_back(lambda * theta_pos * double(y));
    t.neg.push_back(-lambda * theta_neg * double(y));
  }
  return t;
}

}  // namespace spikeforge
