#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "pnnqp/errors.hpp"
#include "pnnqp/network.hpp"
#include "pnnqp/qp_problem.hpp"

namespace pnnqp {

/// Ground-truth primal/dual solution from exhaustive active-set enumeration.
struct KktSolution {
  Eigen::VectorXd x_star;
  Eigen::VectorXd u_star;          ///< equality multipliers
  Eigen::VectorXd v_star;          ///< inequality multipliers, >= 0
  std::vector<int> active_set;     ///< 1-based indices into 1..h
  double objective = 0.0;
  std::vector<std::string> notes;  ///< subsets skipped for singular KKT systems

  Eigen::VectorXd stacked() const {
    Eigen::VectorXd y(x_star.size() + v_star.size());
    y << x_star, v_star;
    return y;
  }
};

struct KktResiduals {
  double stationarity = 0.0;            ///< ||Q x + c - A^T u + B^T v||
  double primal_eq = 0.0;               ///< ||A x - b||
  double primal_ineq = 0.0;             ///< ||max(B x - d, 0)||
  double comp_slack = 0.0;              ///< max_i |v_i (d - B x)_i|
  double dual_feas = 0.0;               ///< max_i max(-v_i, 0)
  double projected_stationarity = 0.0;  ///< ||(I-M)(Qx+c+B^T v) + N(Ax-b)||
};

namespace detail {

struct Candidate {
  Eigen::VectorXd x, u, v;
  std::vector<int> active;  // 0-based, ascending
  double objective = 0.0;
};

inline bool lex_less(const std::vector<int>& a, const std::vector<int>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace detail

/// Solves the QP by enumerating all 2^h active sets and solving, for each
/// subset S, the KKT system
///   [ Q    A^T  B_S^T ] [ x  ]   [ -c  ]
///   [ A    0    0     ] [ -u ] = [  b  ]
///   [ B_S  0    0     ] [ v_S]   [ d_S ]
/// A candidate is accepted when inactive constraints are satisfied and
/// v_S >= -1e-10; the least-objective candidate wins, ties broken by the
/// lexicographically smallest active set. Requires Q positive definite.
inline KktSolution kkt_solve(const QpProblem& prob) {
  const Eigen::Index n = prob.n(), m = prob.m(), h = prob.h();
  const double min_eig = eigenvalues_symmetric(0.5 * (prob.Q + prob.Q.transpose())).minCoeff();
  if (min_eig < 1e-10)
    throw ValidationError(
        "oracle requires positive definite Q (smallest eigenvalue " +
        std::to_string(min_eig) + ")");

  std::vector<std::string> notes;
  std::vector<detail::Candidate> accepted;

  for (unsigned long mask = 0; mask < (1ul << h); ++mask) {
    std::vector<int> active;
    for (int i = 0; i < h; ++i)
      if (mask & (1ul << i)) active.push_back(i);
    const Eigen::Index q = static_cast<Eigen::Index>(active.size());

    Eigen::MatrixXd bs(q, n);
    Eigen::VectorXd ds(q);
    for (Eigen::Index i = 0; i < q; ++i) {
      bs.row(i) = prob.B.row(active[i]);
      ds[i] = prob.d[active[i]];
    }

    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m + q, n + m + q);
    kkt.topLeftCorner(n, n) = prob.Q;
    kkt.block(0, n, n, m) = prob.A.transpose();
    kkt.block(n, 0, m, n) = prob.A;
    kkt.block(0, n + m, n, q) = bs.transpose();
    kkt.block(n + m, 0, q, n) = bs;

    Eigen::VectorXd rhs(n + m + q);
    rhs << -prob.c, prob.b, ds;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) {
      std::string s = "singular KKT system for active set {";
      for (size_t i = 0; i < active.size(); ++i)
        s += (i ? "," : "") + std::to_string(active[i] + 1);
      notes.push_back(s + "}; subset skipped");
      continue;
    }
    const Eigen::VectorXd sol = lu.solve(rhs);

    detail::Candidate cand;
    cand.x = sol.head(n);
    cand.u = -sol.segment(n, m);
    cand.v = Eigen::VectorXd::Zero(h);
    for (Eigen::Index i = 0; i < q; ++i) cand.v[active[i]] = sol[n + m + i];
    cand.active = active;

    const Eigen::VectorXd slack = prob.d - prob.B * cand.x;
    bool ok = true;
    for (int i = 0; i < h && ok; ++i) {
      const bool in_set = std::find(active.begin(), active.end(), i) != active.end();
      if (!in_set && slack[i] < -1e-10) ok = false;
      if (in_set && cand.v[i] < -1e-10) ok = false;
    }
    if (!ok) continue;

    cand.objective = prob.objective(cand.x);
    accepted.push_back(std::move(cand));
  }

  if (accepted.empty())
    throw ValidationError("infeasible or unbounded: no active set yields a KKT point");

  const detail::Candidate* best = &accepted.front();
  for (const auto& c : accepted) {
    if (c.objective < best->objective - 1e-10) {
      best = &c;
    } else if (std::abs(c.objective - best->objective) <= 1e-10 &&
               detail::lex_less(c.active, best->active)) {
      best = &c;
    }
  }

  KktSolution out;
  out.x_star = best->x;
  out.u_star = best->u;
  out.v_star = best->v.cwiseMax(0.0);  // clamp tiny negative multipliers
  for (int i : best->active) out.active_set.push_back(i + 1);
  out.objective = best->objective;
  out.notes = std::move(notes);
  return out;
}

inline KktResiduals kkt_residuals(const QpProblem& prob, const KktSolution& sol) {
  KktResiduals r;
  const Eigen::VectorXd grad_lag =
      prob.Q * sol.x_star + prob.c - prob.A.transpose() * sol.u_star +
      prob.B.transpose() * sol.v_star;
  r.stationarity = grad_lag.norm();
  r.primal_eq = (prob.A * sol.x_star - prob.b).norm();
  r.primal_ineq = (prob.B * sol.x_star - prob.d).cwiseMax(0.0).norm();
  const Eigen::VectorXd slack = prob.d - prob.B * sol.x_star;
  r.comp_slack = (sol.v_star.array() * slack.array()).abs().maxCoeff();
  r.dual_feas = (-sol.v_star).cwiseMax(0.0).maxCoeff();

  const auto [m_mat, n_mat] = build_projectors(prob);
  const Eigen::Index n = prob.n();
  const Eigen::VectorXd proj =
      (Eigen::MatrixXd::Identity(n, n) - m_mat) *
          (prob.Q * sol.x_star + prob.c + prob.B.transpose() * sol.v_star) +
      n_mat * (prob.A * sol.x_star - prob.b);
  r.projected_stationarity = proj.norm();
  return r;
}

}  // namespace pnnqp
