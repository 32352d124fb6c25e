#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>

#include "pnnqp/dde.hpp"
#include "pnnqp/network.hpp"

namespace pnnqp {

/// Outcome of the exponential-stability test
///   (|kappa - 1| + 1) ||I - alpha W|| - kappa < 0.
/// margin_alpha_form is the same expression with alpha as the subtrahend,
/// reported alongside because both variants appear in the underlying method;
/// `stable` is decided by `margin` (strict inequality; margin 0 is unstable).
struct StabilityReport {
  double norm_I_minus_alphaW = 0.0;
  double margin = 0.0;
  bool stable = false;
  double alpha_used = 0.0;
  double kappa_used = 0.0;
  double margin_alpha_form = 0.0;
};

/// Largest singular value by power iteration on S^T S with a deterministic
/// start vector (1,..,1)/sqrt(k) plus one fixed-seed random restart to guard
/// against an orthogonal start. Relative convergence 1e-12.
inline double spectral_norm(const Eigen::MatrixXd& s) {
  if (s.size() == 0) return 0.0;
  const Eigen::Index k = s.cols();
  const Eigen::MatrixXd gram = s.transpose() * s;

  const auto iterate = [&gram](Eigen::VectorXd u) {
    double lambda = -1.0;
    for (int it = 0; it < 100000; ++it) {
      const Eigen::VectorXd w = gram * u;
      const double rayleigh = u.dot(w);
      const double nw = w.norm();
      if (nw == 0.0) return 0.0;
      u = w / nw;
      if (std::abs(rayleigh - lambda) <= 1e-12 * std::max(std::abs(rayleigh), 1e-300)) {
        lambda = rayleigh;
        break;
      }
      lambda = rayleigh;
    }
    return std::sqrt(std::max(lambda, 0.0));
  };

  const double s1 = iterate(Eigen::VectorXd::Constant(k, 1.0 / std::sqrt(double(k))));

  std::uint64_t st = 0x9e3779b97f4a7c15ull;
  Eigen::VectorXd u(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    st ^= st >> 12;
    st ^= st << 25;
    st ^= st >> 27;
    u[i] = 2.0 * (static_cast<double>((st * 0x2545f4914f6cdd1dull) >> 11) * 0x1.0p-53) - 1.0;
  }
  const double un = u.norm();
  const double s2 = un > 0.0 ? iterate(u / un) : 0.0;
  return std::max(s1, s2);
}

inline StabilityReport stability_margin(const Eigen::MatrixXd& w, double alpha,
                                        double kappa) {
  const Eigen::Index k = w.rows();
  const double norm =
      spectral_norm(Eigen::MatrixXd::Identity(k, k) - alpha * w);
  StabilityReport rep;
  rep.norm_I_minus_alphaW = norm;
  rep.alpha_used = alpha;
  rep.kappa_used = kappa;
  rep.margin = (std::abs(kappa - 1.0) + 1.0) * norm - kappa;
  rep.margin_alpha_form = (std::abs(kappa - 1.0) + 1.0) * norm - alpha;
  rep.stable = rep.margin < 0.0;
  return rep;
}

inline StabilityReport stability_margin(const ProjectionNetwork& net) {
  return stability_margin(net.W, net.params.alpha, net.params.kappa);
}

/// Log-spaced search grid for alpha.
struct AlphaGrid {
  double lo = 1e-4;
  double hi = 2.0;
  int count = 200;
};

/// Scans the grid for the alpha with the smallest margin (W itself does not
/// depend on alpha, only I - alpha W does). Returns nullopt when no grid
/// point is stable.
inline std::optional<std::pair<double, StabilityReport>> search_alpha(
    const Eigen::MatrixXd& w, double kappa, const AlphaGrid& grid = {}) {
  std::optional<std::pair<double, StabilityReport>> best;
  for (int i = 0; i < grid.count; ++i) {
    const double a =
        grid.count == 1
            ? grid.lo
            : grid.lo * std::pow(grid.hi / grid.lo, double(i) / double(grid.count - 1));
    const StabilityReport rep = stability_margin(w, a, kappa);
    if (!best || rep.margin < best->second.margin) best = {{a, rep}};
  }
  if (!best || best->second.margin >= 0.0) return std::nullopt;
  return best;
}

/// Least-squares slope of log ||y(t) - y*|| over the window where the norm
/// lies in [1e-10, 1e-1] * initial. Returns nullopt when the trajectory is
/// already at equilibrium (all norms below 1e-12) or no usable window exists.
inline std::optional<double> fit_decay_rate(const Trajectory& traj,
                                            const Eigen::VectorXd& y_star) {
  const Eigen::Index ns = traj.samples();
  Eigen::VectorXd norms(ns);
  for (Eigen::Index i = 0; i < ns; ++i)
    norms[i] = (traj.state_at(i) - y_star).norm();
  const double init = norms[0];
  if (norms.maxCoeff() < 1e-12) return std::nullopt;

  double st = 0, sn = 0, stt = 0, stn = 0;
  Eigen::Index count = 0;
  const auto accumulate = [&](double lo, double hi) {
    st = sn = stt = stn = 0;
    count = 0;
    for (Eigen::Index i = 0; i < ns; ++i) {
      if (norms[i] < lo || norms[i] > hi) continue;
      const double t = traj.times[i], ln = std::log(norms[i]);
      st += t;
      sn += ln;
      stt += t * t;
      stn += t * ln;
      ++count;
    }
  };
  accumulate(1e-10 * init, 1e-1 * init);
  if (count < 2) accumulate(1e-12, std::numeric_limits<double>::infinity());
  if (count < 2) return std::nullopt;
  const double denom = double(count) * stt - st * st;
  if (denom == 0.0) return std::nullopt;
  return (double(count) * stn - st * sn) / denom;
}

}  // namespace pnnqp
