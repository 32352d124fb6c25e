#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pnnqp/errors.hpp"

namespace pnnqp {

/// Convex quadratic program
///   min  1/2 x^T Q x + c^T x
///   s.t. A x = b,  B x <= d
/// with Q (n x n) positive semidefinite, A (m x n) full row rank, B (h x n).
struct QpProblem {
  Eigen::MatrixXd Q;
  Eigen::VectorXd c;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::MatrixXd B;
  Eigen::VectorXd d;

  Eigen::Index n() const { return Q.rows(); }
  Eigen::Index m() const { return A.rows(); }
  Eigen::Index h() const { return B.rows(); }

  double objective(const Eigen::VectorXd& x) const {
    return 0.5 * x.dot(Q * x) + c.dot(x);
  }

  /// Replaces Q by its symmetric part. Only the symmetric part enters the
  /// objective, so cross terms may be split arbitrarily by the user.
  void symmetrize() { Q = 0.5 * (Q + Q.transpose()).eval(); }
};

/// Rank by Gaussian elimination with complete pivoting.
/// Pivots below 1e-10 * ||A||_inf count as zero.
inline Eigen::Index matrix_rank(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0;
  Eigen::MatrixXd r = a;
  const double scale = r.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0;
  const double tol = 1e-10 * scale;
  const Eigen::Index rows = r.rows(), cols = r.cols();
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < std::min(rows, cols); ++k) {
    Eigen::Index pr = k, pc = k;
    double pmax = 0.0;
    for (Eigen::Index i = k; i < rows; ++i)
      for (Eigen::Index j = k; j < cols; ++j)
        if (std::abs(r(i, j)) > pmax) { pmax = std::abs(r(i, j)); pr = i; pc = j; }
    if (pmax <= tol) break;
    r.row(k).swap(r.row(pr));
    r.col(k).swap(r.col(pc));
    for (Eigen::Index i = k + 1; i < rows; ++i) {
      const double f = r(i, k) / r(k, k);
      r.row(i).tail(cols - k) -= f * r.row(k).tail(cols - k);
    }
    ++rank;
  }
  return rank;
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps, ascending.
/// Input must be symmetric within 1e-10 (absolute, entrywise).
inline Eigen::VectorXd eigenvalues_symmetric(const Eigen::MatrixXd& s) {
  if (s.rows() != s.cols())
    throw ValidationError("eigenvalues_symmetric: matrix is not square");
  const Eigen::Index k = s.rows();
  if (k == 0) return Eigen::VectorXd();
  const double defect = (s - s.transpose()).cwiseAbs().maxCoeff();
  if (defect > 1e-10)
    throw ValidationError("eigenvalues_symmetric: matrix is not symmetric (defect " +
                          std::to_string(defect) + ")");
  Eigen::MatrixXd a = 0.5 * (s + s.transpose());
  const double norm = std::max(a.norm(), 1e-300);
  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < k; ++p)
      for (Eigen::Index q = p + 1; q < k; ++q) off += 2.0 * a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-15 * norm) break;
    for (Eigen::Index p = 0; p < k; ++p) {
      for (Eigen::Index q = p + 1; q < k; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (Eigen::Index i = 0; i < k; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - sn * aiq;
          a(i, q) = sn * aip + c * aiq;
        }
        for (Eigen::Index j = 0; j < k; ++j) {
          const double apj = a(p, j), aqj = a(q, j);
          a(p, j) = c * apj - sn * aqj;
          a(q, j) = sn * apj + c * aqj;
        }
      }
    }
  }
  Eigen::VectorXd evs = a.diagonal();
  std::sort(evs.data(), evs.data() + k);
  return evs;
}

struct ValidationCheck {
  std::string name;
  bool pass = false;
  double value = 0.0;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const ValidationCheck& c) { return c.pass; });
  }
  double value_of(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return c.value;
    throw ValidationError("no check named '" + name + "'");
  }
};

/// Report-only validation: never throws, records measured quantities so a
/// caller can see how far off a bad problem is.
inline ValidationReport validate(const QpProblem& p) {
  ValidationReport rep;
  const Eigen::Index n = p.Q.rows(), m = p.A.rows(), h = p.B.rows();
  const bool dims_ok = p.Q.cols() == n && n >= 1 && m >= 1 && h >= 1 &&
                       p.c.size() == n && p.A.cols() == n && p.b.size() == m &&
                       p.B.cols() == n && p.d.size() == h && m <= n;
  rep.checks.push_back({"dimensions_consistent", dims_ok, dims_ok ? 1.0 : 0.0});
  if (!dims_ok) return rep;

  const double sym_defect = (p.Q - p.Q.transpose()).norm();
  rep.checks.push_back({"q_symmetry_defect", sym_defect <= 1e-10, sym_defect});

  double min_eig = 0.0;
  if (sym_defect <= 1e-10) {
    min_eig = eigenvalues_symmetric(p.Q).minCoeff();
  } else {
    min_eig = eigenvalues_symmetric(0.5 * (p.Q + p.Q.transpose())).minCoeff();
  }
  rep.checks.push_back({"q_positive_semidefinite", min_eig >= -1e-8, min_eig});

  const Eigen::Index rank = matrix_rank(p.A);
  rep.checks.push_back({"a_full_row_rank", rank == m, static_cast<double>(rank)});

  // Feasibility hint: least-squares solve of Ax=b (always consistent when A
  // has full row rank).
  const Eigen::VectorXd x_ls = p.A.colPivHouseholderQr().solve(p.b);
  const double eq_res = (p.A * x_ls - p.b).norm();
  rep.checks.push_back({"eq_system_solvable", eq_res <= 1e-8, eq_res});

  return rep;
}

/// Throwing validation used on load; error messages name the failing field.
inline void require_valid(const QpProblem& p) {
  const ValidationReport rep = validate(p);
  for (const auto& c : rep.checks) {
    if (c.pass) continue;
    if (c.name == "dimensions_consistent")
      throw ValidationError("dimension mismatch between Q, c, A, b, B, d");
    if (c.name == "q_symmetry_defect")
      throw ValidationError("Q is not symmetric (defect " + std::to_string(c.value) + ")");
    if (c.name == "q_positive_semidefinite")
      throw ValidationError("indefinite Q (smallest eigenvalue " +
                            std::to_string(c.value) + ")");
    if (c.name == "a_full_row_rank")
      throw ValidationError("rank-deficient A (rank " + std::to_string(int(c.value)) +
                            " of " + std::to_string(p.A.rows()) + ")");
    throw ValidationError("validation check failed: " + c.name);
  }
}

}  // namespace pnnqp
