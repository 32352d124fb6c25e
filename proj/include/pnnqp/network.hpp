#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <limits>
#include <string>
#include <utility>

#include "pnnqp/errors.hpp"
#include "pnnqp/qp_problem.hpp"

namespace pnnqp {

/// Resolution of the h-row selection applied to the n-row blocks of the
/// coupled dynamics. Any linear selector preserves the equilibrium set (the
/// selected expression vanishes at KKT points), but it changes W and hence
/// the stability margin, so the choice is explicit.
enum class HSelector {
  zero,          ///< selected blocks are zero; equivalent to gamma = 0
  first_h_rows,  ///< take the first h of the n rows; requires n >= h
};

inline std::string to_string(HSelector s) {
  return s == HSelector::zero ? "zero" : "first_h_rows";
}

struct NetworkParams {
  double alpha = 0.45;  ///< projection step scale, > 0
  double gamma = 0.0;   ///< coupling scale for the selected rows
  double kappa = 2.0;   ///< time scale, > 0
};

/// Box U = { y : lower <= y <= upper } with +-infinity sentinels.
struct BoxSet {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  /// The box used by the network: x-components free, v-components >= 0.
  static BoxSet free_x_nonneg_v(Eigen::Index n, Eigen::Index h) {
    const double inf = std::numeric_limits<double>::infinity();
    BoxSet box;
    box.lower = Eigen::VectorXd::Constant(n + h, -inf);
    box.lower.tail(h).setZero();
    box.upper = Eigen::VectorXd::Constant(n + h, inf);
    return box;
  }
};

/// Componentwise clamp onto the box.
inline Eigen::VectorXd project_box(const Eigen::VectorXd& s, const BoxSet& box) {
  Eigen::VectorXd out(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    double v = s[i];
    if (v < box.lower[i]) v = box.lower[i];
    if (v > box.upper[i]) v = box.upper[i];
    out[i] = v;
  }
  return out;
}

/// The assembled projection network: state y = (x; v) of dimension n+h,
/// fixed-point equation y = P_U(y - alpha (W y + p)).
struct ProjectionNetwork {
  Eigen::MatrixXd M;  ///< orthogonal projector onto range(A^T), n x n
  Eigen::MatrixXd N;  ///< A^T (A A^T)^{-1}, n x m
  Eigen::MatrixXd W;  ///< (n+h) x (n+h)
  Eigen::VectorXd p;  ///< n+h
  BoxSet box;
  NetworkParams params;
  HSelector selector = HSelector::zero;
  Eigen::Index n = 0, m = 0, h = 0;

  Eigen::Index dim() const { return n + h; }

  /// P_U(y - alpha (W y + p)), the map whose fixed points are equilibria.
  Eigen::VectorXd projected_step(const Eigen::VectorXd& y) const {
    return project_box(y - params.alpha * (W * y + p), box);
  }
};

/// M = A^T (A A^T)^{-1} A and N = A^T (A A^T)^{-1}, realized as a Cholesky
/// solve of (A A^T) N^T = A; no explicit inverse.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> build_projectors(const QpProblem& p) {
  const Eigen::MatrixXd aat = p.A * p.A.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(aat);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-12)
    throw ValidationError("rank-deficient A (A A^T condition estimate exceeds 1e12)");
  const Eigen::MatrixXd nt = llt.solve(p.A);  // (A A^T)^{-1} A, m x n
  Eigen::MatrixXd n_mat = nt.transpose();
  Eigen::MatrixXd m_mat = n_mat * p.A;
  return {std::move(m_mat), std::move(n_mat)};
}

namespace detail {

/// Apply the h-row selector to an n-row block.
inline Eigen::MatrixXd select_h(const Eigen::MatrixXd& block, Eigen::Index h,
                                HSelector selector) {
  if (selector == HSelector::zero)
    return Eigen::MatrixXd::Zero(h, block.cols());
  return block.topRows(h);
}

}  // namespace detail

inline ProjectionNetwork build_network(const QpProblem& prob, const NetworkParams& params,
                                       HSelector selector = HSelector::zero) {
  if (params.alpha <= 0.0) throw ValidationError("alpha must be positive");
  if (params.kappa <= 0.0) throw ValidationError("kappa must be positive");
  const Eigen::Index n = prob.n(), m = prob.m(), h = prob.h();
  if (selector == HSelector::first_h_rows && n < h)
    throw ValidationError("selector first_h_rows requires n >= h");

  ProjectionNetwork net;
  net.n = n;
  net.m = m;
  net.h = h;
  net.params = params;
  net.selector = selector;
  std::tie(net.M, net.N) = build_projectors(prob);

  const Eigen::MatrixXd imm = Eigen::MatrixXd::Identity(n, n) - net.M;
  const Eigen::MatrixXd top_left = imm * prob.Q + net.M;
  const Eigen::MatrixXd top_right = imm * prob.B.transpose();
  const Eigen::VectorXd p_top = imm * prob.c - net.N * prob.b;

  net.W.resize(n + h, n + h);
  net.W.topLeftCorner(n, n) = top_left;
  net.W.topRightCorner(n, h) = top_right;
  net.W.bottomLeftCorner(h, n) =
      params.gamma * detail::select_h(top_left, h, selector) - prob.B;
  net.W.bottomRightCorner(h, h) =
      params.gamma * detail::select_h(top_right, h, selector);

  net.p.resize(n + h);
  net.p.head(n) = p_top;
  net.p.tail(h) =
      prob.d + params.gamma * detail::select_h(p_top, h, selector).col(0);

  net.box = BoxSet::free_x_nonneg_v(n, h);
  return net;
}

/// || y - P_U(y - alpha (W y + p)) ||_2; zero exactly at equilibria.
inline double fixed_point_residual(const Eigen::VectorXd& y, const ProjectionNetwork& net) {
  return (y - net.projected_step(y)).norm();
}

/// Right-hand side of the delayed dynamics:
///   dy/dt = -kappa y + (kappa-1) P_U(y_d - alpha (W y_d + p))
///                    + P_U(y - alpha (W y + p)).
inline Eigen::VectorXd network_rhs(double /*t*/, const Eigen::VectorXd& y_now,
                                   const Eigen::VectorXd& y_delayed,
                                   const ProjectionNetwork& net) {
  const double kappa = net.params.kappa;
  return -kappa * y_now + (kappa - 1.0) * net.projected_step(y_delayed) +
         net.projected_step(y_now);
}

}  // namespace pnnqp
