#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pnnqp/dde.hpp"
#include "pnnqp/errors.hpp"
#include "pnnqp/json_io.hpp"
#include "pnnqp/kkt_oracle.hpp"
#include "pnnqp/network.hpp"
#include "pnnqp/qp_problem.hpp"
#include "pnnqp/stability.hpp"

namespace pnnqp {

/// Process exit codes shared by all commands.
enum ExitCode : int {
  exit_ok = 0,
  exit_parse = 1,
  exit_validation = 2,
  exit_divergence = 3,
  exit_no_convergence = 4,
  exit_unstable = 5,
};

struct PerHistoryResult {
  int seed_index = 0;
  bool converged = false;
  double final_residual = 0.0;
  Eigen::VectorXd final_x;
  double distance_to_oracle = 0.0;
  std::optional<double> fitted_decay;
};

struct SolverReport {
  std::string problem_id;
  RunParams params;
  StabilityReport stability;
  std::string stability_note;  // empty when Theorem 2's condition holds
  std::vector<PerHistoryResult> per_history;
  KktSolution oracle;
  KktResiduals oracle_residuals;
  long long wall_time_ms = 0;

  bool all_converged() const {
    return std::all_of(per_history.begin(), per_history.end(),
                       [](const PerHistoryResult& r) { return r.converged; });
  }
};

namespace detail {

inline std::string problem_id_of(const json& j, const std::string& path) {
  if (j.contains("meta") && j.at("meta").contains("name"))
    return j.at("meta").at("name").get<std::string>();
  return std::filesystem::path(path).stem().string();
}

inline std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

}  // namespace detail

/// One trajectory per row block: t, y1..y{dim}, residual; >= 12 significant
/// digits so files round-trip and repeated runs are byte-identical.
inline void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write file: " + path);
  out << "t";
  for (Eigen::Index j = 0; j < traj.dim(); ++j) out << ",y" << (j + 1);
  out << ",residual\n";
  for (Eigen::Index i = 0; i < traj.samples(); ++i) {
    out << detail::format_g(traj.times[i]);
    for (Eigen::Index j = 0; j < traj.dim(); ++j)
      out << "," << detail::format_g(traj.states(i, j));
    out << "," << detail::format_g(traj.residuals[i]) << "\n";
  }
}

inline json solver_report_to_json(const SolverReport& rep) {
  json hist = json::array();
  for (const auto& r : rep.per_history) {
    json e{{"seed_index", r.seed_index},
           {"converged", r.converged},
           {"final_residual", r.final_residual},
           {"final_x", detail::vector_to_json(r.final_x)},
           {"distance_to_oracle", r.distance_to_oracle}};
    if (r.fitted_decay)
      e["fitted_decay"] = *r.fitted_decay;
    else
      e["fitted_decay"] = nullptr;
    hist.push_back(e);
  }
  return json{{"problem_id", rep.problem_id},
              {"params", params_to_json(rep.params)},
              {"stability", stability_to_json(rep.stability)},
              {"stability_note", rep.stability_note},
              {"per_history", hist},
              {"oracle", kkt_solution_to_json(rep.oracle, rep.oracle_residuals)},
              {"wall_time_ms", rep.wall_time_ms}};
}

/// Builds the network, checks stability, integrates every random history
/// (concurrently; assembly is ordered by history index), and writes one CSV
/// per history plus the report JSON under `out_prefix`.
inline SolverReport run_solve(const std::string& problem_path,
                              const std::string& params_path,
                              const std::string& out_prefix) {
  const auto t_start = std::chrono::steady_clock::now();

  const json pj = detail::parse_file(problem_path);
  const QpProblem prob = problem_from_json(pj);
  const RunParams params = load_params(params_path);
  require_integration(params);

  const ProjectionNetwork net = build_network(prob, params.net, params.selector);

  SolverReport rep;
  rep.problem_id = detail::problem_id_of(pj, problem_path);
  rep.params = params;
  rep.stability = stability_margin(net);
  if (!rep.stability.stable)
    rep.stability_note = "margin >= 0: Theorem 2 inapplicable; convergence is empirical";

  rep.oracle = kkt_solve(prob);
  rep.oracle_residuals = kkt_residuals(prob, rep.oracle);
  const Eigen::VectorXd y_star = rep.oracle.stacked();

  const auto histories = random_histories(params.histories->count, net.n, net.h,
                                          params.histories->range, params.histories->seed);

  std::vector<std::future<Trajectory>> futures;
  futures.reserve(histories.size());
  for (const auto& hist : histories) {
    futures.push_back(std::async(std::launch::async, [&net, &params, &hist]() {
      return integrate(net, *params.delay, hist, *params.integration);
    }));
  }

  for (size_t i = 0; i < futures.size(); ++i) {
    const Trajectory traj = futures[i].get();  // rethrows in index order
    PerHistoryResult r;
    r.seed_index = static_cast<int>(i);
    r.final_residual = traj.residuals[traj.samples() - 1];
    r.converged = r.final_residual <= params.integration->converge_tol;
    r.final_x = traj.final_state().head(net.n);
    r.distance_to_oracle = (r.final_x - rep.oracle.x_star).norm();
    r.fitted_decay = fit_decay_rate(traj, y_star);
    rep.per_history.push_back(std::move(r));
    if (!out_prefix.empty())
      write_trajectory_csv(traj, out_prefix + "_history_" + std::to_string(i) + ".csv");
  }

  rep.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - t_start)
                         .count();
  if (!out_prefix.empty()) {
    std::ofstream out(out_prefix + "_report.json");
    if (!out) throw ParseError("cannot write file: " + out_prefix + "_report.json");
    out << solver_report_to_json(rep).dump(2) << "\n";
  }
  return rep;
}

struct CheckResult {
  StabilityReport stability;
  std::optional<std::pair<double, StabilityReport>> suggestion;  // --search-alpha
  bool searched = false;
};

inline CheckResult run_check(const std::string& problem_path, const std::string& params_path,
                             bool search = false) {
  const QpProblem prob = load_problem(problem_path);
  const RunParams params = load_params(params_path);
  const ProjectionNetwork net = build_network(prob, params.net, params.selector);
  CheckResult res;
  res.stability = stability_margin(net);
  res.searched = search;
  if (search) res.suggestion = search_alpha(net.W, params.net.kappa);
  return res;
}

inline json check_to_json(const CheckResult& res) {
  json j{{"stability", stability_to_json(res.stability)}};
  if (res.searched) {
    if (res.suggestion)
      j["search_alpha"] = json{{"alpha", res.suggestion->first},
                               {"margin", res.suggestion->second.margin},
                               {"norm", res.suggestion->second.norm_I_minus_alphaW}};
    else
      j["search_alpha"] = "none found";
  }
  return j;
}

struct CompareResult {
  SolverReport solve_report;
  Eigen::VectorXd x_oracle;
  Eigen::VectorXd x_network;  // averaged over converged histories
  Eigen::VectorXd delta;
  double objective_gap = 0.0;  // f(x_network) - f(x_oracle)
  int converged_count = 0;
};

/// Runs the oracle and the network side by side; the averaged network state
/// over converged histories is compared componentwise against x*.
inline CompareResult run_compare(const std::string& problem_path,
                                 const std::string& params_path,
                                 const std::string& out_prefix = "") {
  CompareResult cmp;
  cmp.solve_report = run_solve(problem_path, params_path, out_prefix);
  cmp.x_oracle = cmp.solve_report.oracle.x_star;

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(cmp.x_oracle.size());
  for (const auto& r : cmp.solve_report.per_history) {
    if (!r.converged) continue;
    sum += r.final_x;
    ++cmp.converged_count;
  }
  if (cmp.converged_count == 0) {
    cmp.x_network = Eigen::VectorXd::Constant(cmp.x_oracle.size(),
                                              std::numeric_limits<double>::quiet_NaN());
    cmp.delta = cmp.x_network;
    cmp.objective_gap = std::numeric_limits<double>::quiet_NaN();
    return cmp;
  }
  cmp.x_network = sum / double(cmp.converged_count);
  cmp.delta = cmp.x_network - cmp.x_oracle;

  const QpProblem prob = load_problem(problem_path);
  cmp.objective_gap = prob.objective(cmp.x_network) - cmp.solve_report.oracle.objective;
  return cmp;
}

inline json compare_to_json(const CompareResult& cmp) {
  return json{{"x_oracle", detail::vector_to_json(cmp.x_oracle)},
              {"x_network", detail::vector_to_json(cmp.x_network)},
              {"delta", detail::vector_to_json(cmp.delta)},
              {"objective_gap", cmp.objective_gap},
              {"converged_histories", cmp.converged_count},
              {"history_count", static_cast<int>(cmp.solve_report.per_history.size())},
              {"stability", stability_to_json(cmp.solve_report.stability)}};
}

/// Maps the exception taxonomy onto process exit codes; used by every command.
template <typename Fn>
int guarded_command(Fn&& fn) {
  try {
    return fn();
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_parse;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_divergence;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_validation;
  }
}

inline int cmd_build(const std::string& problem_path, const std::string& params_path,
                     std::ostream& out = std::cout) {
  return guarded_command([&] {
    const QpProblem prob = load_problem(problem_path);
    const RunParams params = load_params(params_path);
    const ProjectionNetwork net = build_network(prob, params.net, params.selector);
    out << network_to_json(net).dump(2) << "\n";
    return exit_ok;
  });
}

inline int cmd_check(const std::string& problem_path, const std::string& params_path,
                     bool search = false, std::ostream& out = std::cout) {
  return guarded_command([&] {
    const CheckResult res = run_check(problem_path, params_path, search);
    out << check_to_json(res).dump(2) << "\n";
    return res.stability.stable ? exit_ok : exit_unstable;
  });
}

inline int cmd_solve(const std::string& problem_path, const std::string& params_path,
                     const std::string& out_prefix, std::ostream& out = std::cout) {
  return guarded_command([&] {
    const SolverReport rep = run_solve(problem_path, params_path, out_prefix);
    out << solver_report_to_json(rep).dump(2) << "\n";
    return rep.all_converged() ? exit_ok : exit_no_convergence;
  });
}

inline int cmd_oracle(const std::string& problem_path, std::ostream& out = std::cout) {
  return guarded_command([&] {
    const QpProblem prob = load_problem(problem_path);
    const KktSolution sol = kkt_solve(prob);
    out << kkt_solution_to_json(sol, kkt_residuals(prob, sol)).dump(2) << "\n";
    return exit_ok;
  });
}

inline int cmd_compare(const std::string& problem_path, const std::string& params_path,
                       const std::string& out_prefix = "", std::ostream& out = std::cout) {
  return guarded_command([&] {
    const CompareResult cmp = run_compare(problem_path, params_path, out_prefix);
    out << compare_to_json(cmp).dump(2) << "\n";
    return cmp.converged_count == static_cast<int>(cmp.solve_report.per_history.size())
               ? exit_ok
               : exit_no_convergence;
  });
}

}  // namespace pnnqp
