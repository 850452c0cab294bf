#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "tensor.hpp"

namespace spikeforge::bo {

struct Options {
  std::size_t trials = 50;
  std::size_t initial = 10;  // seeded uniform probes before the surrogate takes over
  std::uint64_t seed = 0;
  std::size_t grid = 1000;   // acquisition is maximised over {k/grid : k = 1..grid}
  double xi = 0.01;          // EI exploration margin, in standardised score units
  double noise = 1e-4;     // nugget on the standardised scale
};

struct Trial {
  double x;
  double score;
};

struct Result {
  double best_x = 0.0;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<Trial> trials;
};

/// Zero-mean GP on standardised scores with a squared-exponential kernel.
class GaussianProcess1D {
 public:
  GaussianProcess1D(std::vector<double> xs, std::vector<double> ys, double length_scale, double noise)
      : xs_(std::move(xs)), ls_(length_scale) {
    const auto n = static_cast<Eigen::Index>(xs_.size());
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) K(i, j) = kernel(xs_[i], xs_[j]) + (i == j ? noise : 0.0);
    llt_.compute(K);
    y_ = Eigen::Map<const Eigen::VectorXd>(ys.data(), n);
    alpha_ = llt_.solve(y_);
  }

  double kernel(double a, double b) const {
    const double d = (a - b) / ls_;
    return std::exp(-0.5 * d * d);
  }

  /// log p(y | X) up to the constant term.
  double log_marginal_likelihood() const {
    const Eigen::MatrixXd L = llt_.matrixL();
    return -0.5 * y_.dot(alpha_) - L.diagonal().array().log().sum();
  }

  void predict(double x, double& mu, double& sigma) const {
    const auto n = static_cast<Eigen::Index>(xs_.size());
    Eigen::VectorXd k(n);
    for (Eigen::Index i = 0; i < n; ++i) k(i) = kernel(x, xs_[i]);
    mu = k.dot(alpha_);
    const Eigen::VectorXd v = llt_.matrixL().solve(k);
    sigma = std::sqrt(std::max(1.0 - v.squaredNorm(), 1e-12));
  }

 private:
  std::vector<double> xs_;
  double ls_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd y_, alpha_;
};

inline double expected_improvement(double mu, double sigma, double best, double xi) {
  const double z = (mu - best - xi) / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return (mu - best - xi) * cdf + sigma * pdf;
}

/// Uniform double in (0, 1] from the top 53 bits of a 64-bit generator.
inline double unit_open_closed(std::uint64_t bits) { return 1.0 - double(bits >> 11) * 0x1p-53; }

/// Maximises f over (0, 1]. Failing evaluations (exceptions or non-finite scores) count as −∞.
/// Ties keep the earliest trial.
inline Result maximize_unit_interval(const std::function<double(double)>& f, const Options& opt) {
  if (opt.trials < 2) throw ValidationError("Bayesian search needs at least 2 trials");
  if (opt.grid < 2) throw ValidationError("acquisition grid needs at least 2 points");
  Result res;
  std::uint64_t state = opt.seed;
  auto next_bits = [&state] {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  auto evaluate = [&](double x) {
    double s;
    try {
      s = f(x);
    } catch (const std::exception&) {
      s = -std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(s)) s = -std::numeric_limits<double>::infinity();
    res.trials.push_back({x, s});
    if (res.trials.size() == 1 || s > res.best_score) {
      res.best_score = s;
      res.best_x = x;
    }
  };

  const std::size_t n_init = std::min(opt.initial, opt.trials);
  for (std::size_t i = 0; i < n_init; ++i) evaluate(unit_open_closed(next_bits()));

  std::vector<bool> used(opt.grid + 1, false);
  auto grid_index = [&](double x) { return static_cast<std::size_t>(std::llround(x * double(opt.grid))); };
  for (const auto& t : res.trials) used[std::min(grid_index(t.x), opt.grid)] = true;

  while (res.trials.size() < opt.trials) {
    // Standardise finite scores; failed trials sit one spread below the worst finite score.
    std::vector<double> xs, ys;
    double lo = std::numeric_limits<double>::infinity(), sum = 0.0, sq = 0.0;
    std::size_t nf = 0;
    for (const auto& t : res.trials)
      if (std::isfinite(t.score)) {
        lo = std::min(lo, t.score);
        sum += t.score;
        sq += t.score * t.score;
        ++nf;
      }
    const double m = nf ? sum / double(nf) : 0.0;
    double sd = nf ? std::sqrt(std::max(sq / double(nf) - m * m, 0.0)) : 0.0;
    if (!(sd > 1e-12)) sd = 1.0;
    for (const auto& t : res.trials) {
      xs.push_back(t.x);
      ys.push_back(std::isfinite(t.score) ? (t.score - m) / sd : (nf ? (lo - m) / sd - 1.0 : -1.0));
    }
    const double best = *std::max_element(ys.begin(), ys.end());

    std::optional<GaussianProcess1D> gp;
    double best_lml = -std::numeric_limits<double>::infinity();
    for (double ls : {0.03, 0.06, 0.12, 0.25, 0.5}) {
      GaussianProcess1D cand(xs, ys, ls, opt.noise);
      const double lml = cand.log_marginal_likelihood();
      if (!std::isfinite(lml)) continue;
      if (!gp || lml > best_lml) {
        best_lml = lml;
        gp.emplace(std::move(cand));
      }
    }

    if (!gp) gp.emplace(xs, ys, 0.03, 1e-2);

    std::size_t pick = 0;
    double best_ei = -1.0;
    for (std::size_t k = 1; k <= opt.grid; ++k) {
      if (used[k]) continue;
      const double x = double(k) / double(opt.grid);
      double mu, sigma;
      gp->predict(x, mu, sigma);
      const double ei = expected_improvement(mu, sigma, best, opt.xi);
      if (ei > best_ei) {
        best_ei = ei;
        pick = k;
      }
    }
    if (pick == 0) break;  // grid exhausted
    used[pick] = true;
    evaluate(double(pick) / double(opt.grid));
  }
  return res;
}

}  // namespace spikeforge::bo
