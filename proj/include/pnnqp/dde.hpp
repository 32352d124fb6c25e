#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pnnqp/errors.hpp"
#include "pnnqp/network.hpp"

namespace pnnqp {

/// Transmission delay tau(t), constant or sinusoidal. tau(t) must stay in
/// [0, tau_max] for all t, which requires amplitude <= tau0.
struct DelaySpec {
  enum class Kind { constant, sinusoidal };
  Kind kind = Kind::constant;
  double tau0 = 0.0;
  double amplitude = 0.0;
  double omega = 0.0;

  double tau(double t) const {
    return kind == Kind::constant ? tau0 : tau0 + amplitude * std::sin(omega * t);
  }
  double tau_max() const { return kind == Kind::constant ? tau0 : tau0 + amplitude; }

  void check() const {
    if (tau0 < 0.0) throw ValidationError("tau0 must be nonnegative");
    if (kind == Kind::sinusoidal && (amplitude < 0.0 || amplitude > tau0))
      throw ValidationError("sinusoidal delay requires 0 <= amplitude <= tau0 so tau(t) >= 0");
  }
};

/// Initial function phi(t) on [-tau_max, 0]: a constant vector or a sampled
/// table evaluated by linear interpolation (clamped at the table ends).
struct HistoryFn {
  enum class Kind { constant_vector, sampled };
  Kind kind = Kind::constant_vector;
  Eigen::VectorXd value;
  std::vector<double> sample_times;  // ascending
  std::vector<Eigen::VectorXd> sample_states;

  static HistoryFn constant(Eigen::VectorXd v) {
    HistoryFn f;
    f.kind = Kind::constant_vector;
    f.value = std::move(v);
    return f;
  }

  static HistoryFn sampled(std::vector<double> times, std::vector<Eigen::VectorXd> states) {
    if (times.size() != states.size() || times.size() < 2)
      throw ValidationError("sampled history needs >= 2 matching time/state pairs");
    HistoryFn f;
    f.kind = Kind::sampled;
    f.sample_times = std::move(times);
    f.sample_states = std::move(states);
    return f;
  }

  Eigen::Index dim() const {
    return kind == Kind::constant_vector ? value.size() : sample_states.front().size();
  }

  Eigen::VectorXd operator()(double t) const {
    if (kind == Kind::constant_vector) return value;
    if (t <= sample_times.front()) return sample_states.front();
    if (t >= sample_times.back()) return sample_states.back();
    size_t i = 1;
    while (sample_times[i] < t) ++i;
    const double t0 = sample_times[i - 1], t1 = sample_times[i];
    const double s = (t - t0) / (t1 - t0);
    return (1.0 - s) * sample_states[i - 1] + s * sample_states[i];
  }
};

/// Densely sampled solution with derivatives for cubic Hermite interpolation.
/// Rows of `states`/`derivatives` correspond to entries of `times`.
struct Trajectory {
  std::vector<double> times;   // 0, step, 2 step, ...
  Eigen::MatrixXd states;      // samples x dim
  Eigen::MatrixXd derivatives; // samples x dim
  Eigen::VectorXd residuals;   // fixed-point residual at each sample
  HistoryFn history;           // answers queries in [-tau_bar, 0]
  double tau_bar = 0.0;
  double step = 0.0;

  Eigen::Index samples() const { return static_cast<Eigen::Index>(times.size()); }
  Eigen::Index dim() const { return states.cols(); }
  double t_end() const { return times.back(); }
  Eigen::VectorXd state_at(Eigen::Index i) const { return states.row(i).transpose(); }
  Eigen::VectorXd final_state() const { return state_at(samples() - 1); }
};

struct IntegrationConfig {
  double step = 0.005;
  double t_end = 10.0;
  double converge_tol = 1e-8;
  double stall_window = 1.0;
};

/// f(t, y(t), y(t - tau(t))).
using DdeRhs =
    std::function<Eigen::VectorXd(double, const Eigen::VectorXd&, const Eigen::VectorXd&)>;
/// Convergence metric; early stop triggers when it stays below converge_tol
/// for stall_window time units. Pass nullptr to always run to t_end.
using ResidualFn = std::function<double(const Eigen::VectorXd&)>;

namespace detail {

/// Cubic Hermite evaluation over stored samples [0 .. upto]; queries beyond
/// times[upto] are clamped to it (can only happen when tau(t) < step).
inline Eigen::VectorXd hermite_eval(const Trajectory& traj, Eigen::Index upto, double t) {
  if (t >= traj.times[upto]) return traj.states.row(upto).transpose();
  Eigen::Index i = static_cast<Eigen::Index>(t / traj.step);
  if (i > upto - 1) i = upto - 1;
  if (i < 0) i = 0;
  if (t < traj.times[i]) --i;  // guard against rounding in the division
  const double t0 = traj.times[i], t1 = traj.times[i + 1];
  const double dt = t1 - t0;
  const double s = (t - t0) / dt;
  const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
  const double h10 = s * (1.0 - s) * (1.0 - s);
  const double h01 = s * s * (3.0 - 2.0 * s);
  const double h11 = s * s * (s - 1.0);
  return h00 * traj.states.row(i).transpose() +
         (h10 * dt) * traj.derivatives.row(i).transpose() +
         h01 * traj.states.row(i + 1).transpose() +
         (h11 * dt) * traj.derivatives.row(i + 1).transpose();
}

inline Eigen::VectorXd past_state(const Trajectory& traj, Eigen::Index upto, double t) {
  if (t <= 0.0) return traj.history(std::max(t, -traj.tau_bar));
  return hermite_eval(traj, upto, t);
}

}  // namespace detail

/// Integrates dy/dt = f(t, y(t), y(t - tau(t))) by classical RK4 with fixed
/// step and method of steps: delayed values come from the initial function
/// for t <= 0 and from cubic Hermite interpolation over completed samples
/// afterwards. Deterministic: identical inputs give bit-identical output.
inline Trajectory integrate_field(const DdeRhs& field, Eigen::Index dim,
                                  const DelaySpec& delay, const HistoryFn& history,
                                  const IntegrationConfig& cfg,
                                  const ResidualFn& residual = nullptr) {
  delay.check();
  if (cfg.step <= 0.0) throw ValidationError("step must be positive");
  if (cfg.t_end <= 0.0) throw ValidationError("t_end must be positive");
  if (delay.tau0 > 0.0 && cfg.step > delay.tau0 / 4.0)
    throw ValidationError("step too large relative to tau0 (need step <= tau0/4)");
  if (history.dim() != dim) throw ValidationError("history dimension mismatch");
  if (history.kind == HistoryFn::Kind::sampled &&
      (history.sample_times.front() > -delay.tau_max() || history.sample_times.back() < 0.0))
    throw ValidationError("sampled history must cover [-tau_max, 0]");

  const Eigen::Index nsteps =
      static_cast<Eigen::Index>(std::ceil(cfg.t_end / cfg.step - 1e-12));

  Trajectory traj;
  traj.history = history;
  traj.tau_bar = delay.tau_max();
  traj.step = cfg.step;
  traj.times.resize(nsteps + 1);
  traj.states.resize(nsteps + 1, dim);
  traj.derivatives.resize(nsteps + 1, dim);
  traj.residuals = Eigen::VectorXd::Zero(nsteps + 1);

  const auto rhs_at = [&](double t, const Eigen::VectorXd& y, Eigen::Index completed) {
    const Eigen::VectorXd yd = detail::past_state(traj, completed, t - delay.tau(t));
    return field(t, y, yd);
  };

  const Eigen::VectorXd y0 = history(0.0);
  traj.times[0] = 0.0;
  traj.states.row(0) = y0.transpose();
  traj.derivatives.row(0) = rhs_at(0.0, y0, 0).transpose();
  if (residual) traj.residuals[0] = residual(y0);

  double stalled = (residual && traj.residuals[0] <= cfg.converge_tol) ? cfg.step : 0.0;
  Eigen::Index last = nsteps;

  const double dt = cfg.step;
  for (Eigen::Index k = 0; k < nsteps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const Eigen::VectorXd y = traj.states.row(k).transpose();
    const Eigen::VectorXd k1 = traj.derivatives.row(k).transpose();
    const Eigen::VectorXd k2 = rhs_at(t + 0.5 * dt, y + (0.5 * dt) * k1, k);
    const Eigen::VectorXd k3 = rhs_at(t + 0.5 * dt, y + (0.5 * dt) * k2, k);
    const Eigen::VectorXd k4 = rhs_at(t + dt, y + dt * k3, k);
    const Eigen::VectorXd ynew = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    const double tnew = static_cast<double>(k + 1) * dt;
    if (!ynew.allFinite())
      throw DivergenceError("non-finite state at t = " + std::to_string(tnew), tnew);

    traj.times[k + 1] = tnew;
    traj.states.row(k + 1) = ynew.transpose();
    traj.derivatives.row(k + 1) = rhs_at(tnew, ynew, k + 1).transpose();

    if (residual) {
      traj.residuals[k + 1] = residual(ynew);
      stalled = traj.residuals[k + 1] <= cfg.converge_tol ? stalled + dt : 0.0;
      if (stalled >= cfg.stall_window) {
        last = k + 1;
        break;
      }
    }
  }

  if (last != nsteps) {
    traj.times.resize(last + 1);
    traj.states.conservativeResize(last + 1, Eigen::NoChange);
    traj.derivatives.conservativeResize(last + 1, Eigen::NoChange);
    traj.residuals.conservativeResize(last + 1);
  }
  return traj;
}

/// Integrates the projection network dynamics; convergence is detected on the
/// fixed-point residual, the quantity whose zero set is the equilibrium set.
inline Trajectory integrate(const ProjectionNetwork& net, const DelaySpec& delay,
                            const HistoryFn& history, const IntegrationConfig& cfg) {
  const DdeRhs field = [&net](double t, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& yd) {
    return network_rhs(t, y, yd, net);
  };
  const ResidualFn res = [&net](const Eigen::VectorXd& y) {
    return fixed_point_residual(y, net);
  };
  return integrate_field(field, net.dim(), delay, history, cfg, res);
}

/// Dense output: history for t in [-tau_bar, 0], cubic Hermite on the stored
/// samples for t in [0, t_end]. Exact at sample points.
inline Eigen::VectorXd sample_state(const Trajectory& traj, double t) {
  if (t < -traj.tau_bar || t > traj.times.back())
    throw ValidationError("sample_state: t = " + std::to_string(t) +
                          " outside [-tau_bar, t_end]");
  return detail::past_state(traj, traj.samples() - 1, t);
}

/// Constant random histories, components uniform in [-range, range].
/// v-components are intentionally not clipped to the box; the dynamics
/// handles infeasible starts. Deterministic in `seed` across platforms.
inline std::vector<HistoryFn> random_histories(int count, Eigen::Index n, Eigen::Index h,
                                               double range, std::uint64_t seed) {
  if (count < 1) throw ValidationError("history count must be >= 1");
  std::vector<HistoryFn> out;
  out.reserve(count);
  std::uint64_t state = seed ? seed : 0x9e3779b97f4a7c15ull;
  const auto next_unit = [&state]() {
    // xorshift64*; top 53 bits to a double in [0, 1)
    state ^= state >> 12;
    state ^= state << 25;
    state ^= state >> 27;
    const std::uint64_t z = state * 0x2545f4914f6cdd1dull;
    return static_cast<double>(z >> 11) * 0x1.0p-53;
  };
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd v(n + h);
    for (Eigen::Index j = 0; j < n + h; ++j)
      v[j] = range * (2.0 * next_unit() - 1.0);
    out.push_back(HistoryFn::constant(std::move(v)));
  }
  return out;
}

}  // namespace pnnqp
