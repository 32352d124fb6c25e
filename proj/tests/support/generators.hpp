#pragma once

// Test-only generators and brute-force oracles. These stay independent of the
// implementation paths they are used to check.

#include <Eigen/Dense>

#include <limits>
#include <random>

#include "pnnqp/qp_problem.hpp"

namespace pnnqp::testing {

struct Rng {
  std::mt19937_64 eng;
  explicit Rng(std::uint64_t seed) : eng(seed) {}
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(eng);
  }
  int uniform_int(int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(eng);
  }
  Eigen::MatrixXd matrix(Eigen::Index r, Eigen::Index c, double lo = -1.0, double hi = 1.0) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = uniform(lo, hi);
    return m;
  }
  Eigen::VectorXd vector(Eigen::Index k, double lo = -1.0, double hi = 1.0) {
    Eigen::VectorXd v(k);
    for (Eigen::Index i = 0; i < k; ++i) v[i] = uniform(lo, hi);
    return v;
  }
};

inline Eigen::MatrixXd random_full_row_rank(Rng& rng, Eigen::Index m, Eigen::Index n) {
  for (;;) {
    Eigen::MatrixXd a = rng.matrix(m, n);
    if (matrix_rank(a) == m) return a;
  }
}

/// Strictly convex feasible QP: Q = R^T R + 0.5 I, b/d chosen so a random
/// interior point x0 is feasible (slacks in [0, 2]).
inline QpProblem random_problem(Rng& rng, int n, int m, int h) {
  QpProblem p;
  const Eigen::MatrixXd r = rng.matrix(n, n);
  p.Q = r.transpose() * r + 0.5 * Eigen::MatrixXd::Identity(n, n);
  p.c = rng.vector(n, -2.0, 2.0);
  p.A = random_full_row_rank(rng, m, n);
  const Eigen::VectorXd x0 = rng.vector(n, -2.0, 2.0);
  p.b = p.A * x0;
  p.B = rng.matrix(h, n);
  Eigen::VectorXd slack(h);
  for (int i = 0; i < h; ++i) slack[i] = rng.uniform(0.0, 2.0);
  p.d = p.B * x0 + slack;
  return p;
}

/// Random dims with n >= h so both selectors apply.
inline QpProblem random_problem(Rng& rng) {
  const int n = rng.uniform_int(2, 4);
  const int m = rng.uniform_int(1, n - 1);
  const int h = rng.uniform_int(1, std::min(3, n));
  return random_problem(rng, n, m, h);
}

/// Brute-force minimum for n=2, m=1 problems: the equality constraint is a
/// line; discretize the feasible segment (grid_points samples) and take the
/// best feasible objective.
inline double segment_search_min(const QpProblem& p, int grid_points = 2000) {
  const Eigen::Vector2d a = p.A.row(0).transpose();
  const Eigen::Vector2d x_part = a * (p.b[0] / a.squaredNorm());  // min-norm solution
  const Eigen::Vector2d dir(-a[1], a[0]);                         // null space of A

  // unconstrained minimizer along the line
  const double qdd = dir.dot(p.Q * dir);
  const double t_star = -(dir.dot(p.Q * x_part) + p.c.dot(dir)) / qdd;

  // feasible t-interval from B (x_part + t dir) <= d
  double t_lo = -std::numeric_limits<double>::infinity();
  double t_hi = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < p.B.rows(); ++i) {
    const double coef = p.B.row(i).dot(dir);
    const double rhs = p.d[i] - p.B.row(i).dot(x_part);
    if (std::abs(coef) < 1e-14) continue;  // constraint parallel to the line
    if (coef > 0)
      t_hi = std::min(t_hi, rhs / coef);
    else
      t_lo = std::max(t_lo, rhs / coef);
  }
  // the minimizer is the projection of t_star onto [t_lo, t_hi]; discretize a
  // unit window around it so the grid resolves the objective to well below 1e-4
  const double t_opt = std::min(std::max(t_star, t_lo), t_hi);
  const double lo = std::max(t_lo, t_opt - 1.0);
  const double hi = std::min(t_hi, t_opt + 1.0);

  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_points; ++i) {
    const double t = lo + (hi - lo) * double(i) / double(grid_points - 1);
    const Eigen::Vector2d x = x_part + t * dir;
    if (((p.B * x - p.d).array() > 1e-9).any()) continue;
    best = std::min(best, p.objective(x));
  }
  return best;
}

}  // namespace pnnqp::testing
