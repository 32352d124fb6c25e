#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "pnnqp/dde.hpp"
#include "pnnqp/errors.hpp"
#include "pnnqp/kkt_oracle.hpp"
#include "pnnqp/network.hpp"
#include "pnnqp/qp_problem.hpp"
#include "pnnqp/stability.hpp"

namespace pnnqp {

using nlohmann::json;

namespace detail {

inline json require_key(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key)) throw ParseError(ctx + ": missing key '" + key + "'");
  return j.at(key);
}

inline double as_finite_number(const json& j, const std::string& ctx) {
  if (!j.is_number()) throw ParseError(ctx + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ParseError(ctx + ": non-finite number");
  return v;
}

inline Eigen::VectorXd parse_vector(const json& j, const std::string& name) {
  if (!j.is_array()) throw ParseError("'" + name + "' must be an array of numbers");
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[i] = as_finite_number(j[i], "'" + name + "'");
  return v;
}

inline Eigen::MatrixXd parse_matrix(const json& j, const std::string& name) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ParseError("'" + name + "' must be an array of rows");
  const size_t rows = j.size(), cols = j[0].size();
  Eigen::MatrixXd m(rows, cols);
  for (size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols)
      throw ValidationError("dimension mismatch: ragged rows in '" + name + "'");
    for (size_t k = 0; k < cols; ++k)
      m(i, k) = as_finite_number(j[i][k], "'" + name + "'");
  }
  return m;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

/// +-infinity serializes as null (JSON has no infinity literal).
inline json extended_vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v[i]))
      a.push_back(v[i]);
    else
      a.push_back(nullptr);
  }
  return a;
}

inline json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("JSON parse failure in " + path + ": " + e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Problem files: {"Q": [[..]], "c": [..], "A": [[..]], "b": [..],
//                 "B": [[..]], "d": [..]}; extra keys (e.g. "meta") ignored.

inline QpProblem problem_from_json(const json& j) {
  QpProblem p;
  p.Q = detail::parse_matrix(detail::require_key(j, "Q", "problem"), "Q");
  p.c = detail::parse_vector(detail::require_key(j, "c", "problem"), "c");
  p.A = detail::parse_matrix(detail::require_key(j, "A", "problem"), "A");
  p.b = detail::parse_vector(detail::require_key(j, "b", "problem"), "b");
  p.B = detail::parse_matrix(detail::require_key(j, "B", "problem"), "B");
  p.d = detail::parse_vector(detail::require_key(j, "d", "problem"), "d");
  p.symmetrize();
  require_valid(p);
  return p;
}

inline QpProblem load_problem(const std::string& path) {
  return problem_from_json(detail::parse_file(path));
}

inline json problem_to_json(const QpProblem& p) {
  return json{{"Q", detail::matrix_to_json(p.Q)}, {"c", detail::vector_to_json(p.c)},
              {"A", detail::matrix_to_json(p.A)}, {"b", detail::vector_to_json(p.b)},
              {"B", detail::matrix_to_json(p.B)}, {"d", detail::vector_to_json(p.d)}};
}

inline void save_problem(const QpProblem& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write file: " + path);
  out << problem_to_json(p).dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Parameter files.

struct HistorySpec {
  int count = 10;
  double range = 5.0;
  std::uint64_t seed = 42;
};

struct RunParams {
  NetworkParams net;
  HSelector selector = HSelector::zero;
  std::optional<IntegrationConfig> integration;
  std::optional<DelaySpec> delay;
  std::optional<HistorySpec> histories;
};

inline HSelector selector_from_string(const std::string& s) {
  if (s == "zero") return HSelector::zero;
  if (s == "first_h_rows") return HSelector::first_h_rows;
  throw ParseError("unknown selector '" + s + "' (expected \"zero\" or \"first_h_rows\")");
}

inline DelaySpec delay_from_json(const json& j) {
  DelaySpec ds;
  const std::string kind = detail::require_key(j, "kind", "tau").get<std::string>();
  if (kind == "constant")
    ds.kind = DelaySpec::Kind::constant;
  else if (kind == "sinusoidal")
    ds.kind = DelaySpec::Kind::sinusoidal;
  else
    throw ParseError("unknown tau kind '" + kind + "'");
  ds.tau0 = detail::as_finite_number(detail::require_key(j, "tau0", "tau"), "tau0");
  if (ds.kind == DelaySpec::Kind::sinusoidal) {
    ds.amplitude =
        detail::as_finite_number(detail::require_key(j, "amplitude", "tau"), "amplitude");
    ds.omega = detail::as_finite_number(detail::require_key(j, "omega", "tau"), "omega");
  }
  ds.check();
  return ds;
}

inline RunParams params_from_json(const json& j) {
  RunParams rp;
  rp.net.alpha = detail::as_finite_number(detail::require_key(j, "alpha", "params"), "alpha");
  rp.net.gamma = detail::as_finite_number(detail::require_key(j, "gamma", "params"), "gamma");
  rp.net.kappa = detail::as_finite_number(detail::require_key(j, "kappa", "params"), "kappa");
  rp.selector = j.contains("selector")
                    ? selector_from_string(j.at("selector").get<std::string>())
                    : HSelector::zero;
  if (j.contains("step") || j.contains("t_end")) {
    IntegrationConfig cfg;
    cfg.step = detail::as_finite_number(detail::require_key(j, "step", "params"), "step");
    cfg.t_end = detail::as_finite_number(detail::require_key(j, "t_end", "params"), "t_end");
    cfg.converge_tol = detail::as_finite_number(
        detail::require_key(j, "converge_tol", "params"), "converge_tol");
    cfg.stall_window = detail::as_finite_number(
        detail::require_key(j, "stall_window", "params"), "stall_window");
    rp.integration = cfg;
  }
  if (j.contains("tau")) rp.delay = delay_from_json(j.at("tau"));
  if (j.contains("histories")) {
    const json hj = j.at("histories");
    HistorySpec hs;
    hs.count = static_cast<int>(
        detail::as_finite_number(detail::require_key(hj, "count", "histories"), "count"));
    hs.range = detail::as_finite_number(detail::require_key(hj, "range", "histories"), "range");
    hs.seed = static_cast<std::uint64_t>(
        detail::as_finite_number(detail::require_key(hj, "seed", "histories"), "seed"));
    rp.histories = hs;
  }
  return rp;
}

inline RunParams load_params(const std::string& path) {
  return params_from_json(detail::parse_file(path));
}

/// Throws when the parameter file lacks the keys `solve`/`compare` need.
inline void require_integration(const RunParams& rp) {
  if (!rp.integration) throw ParseError("params: missing key 'step'");
  if (!rp.delay) throw ParseError("params: missing key 'tau'");
  if (!rp.histories) throw ParseError("params: missing key 'histories'");
}

inline json params_to_json(const RunParams& rp) {
  json j{{"alpha", rp.net.alpha},
         {"gamma", rp.net.gamma},
         {"kappa", rp.net.kappa},
         {"selector", to_string(rp.selector)}};
  if (rp.integration) {
    j["step"] = rp.integration->step;
    j["t_end"] = rp.integration->t_end;
    j["converge_tol"] = rp.integration->converge_tol;
    j["stall_window"] = rp.integration->stall_window;
  }
  if (rp.delay) {
    json t{{"kind", rp.delay->kind == DelaySpec::Kind::constant ? "constant" : "sinusoidal"},
           {"tau0", rp.delay->tau0}};
    if (rp.delay->kind == DelaySpec::Kind::sinusoidal) {
      t["amplitude"] = rp.delay->amplitude;
      t["omega"] = rp.delay->omega;
    }
    j["tau"] = t;
  }
  if (rp.histories) {
    j["histories"] = json{{"count", rp.histories->count},
                          {"range", rp.histories->range},
                          {"seed", rp.histories->seed}};
  }
  return j;
}

// ---------------------------------------------------------------------------
// Report serialization.

inline json validation_report_to_json(const ValidationReport& rep) {
  json checks = json::array();
  for (const auto& c : rep.checks)
    checks.push_back(json{{"name", c.name}, {"pass", c.pass}, {"value", c.value}});
  return json{{"checks", checks}, {"all_pass", rep.all_pass()}};
}

inline json network_to_json(const ProjectionNetwork& net) {
  return json{
      {"dims", {{"n", net.n}, {"m", net.m}, {"h", net.h}}},
      {"params",
       {{"alpha", net.params.alpha},
        {"gamma", net.params.gamma},
        {"kappa", net.params.kappa},
        {"selector", to_string(net.selector)}}},
      {"M", detail::matrix_to_json(net.M)},
      {"N", detail::matrix_to_json(net.N)},
      {"W", detail::matrix_to_json(net.W)},
      {"p", detail::vector_to_json(net.p)},
      {"box",
       {{"lower", detail::extended_vector_to_json(net.box.lower)},
        {"upper", detail::extended_vector_to_json(net.box.upper)}}}};
}

inline json stability_to_json(const StabilityReport& rep) {
  return json{{"norm", rep.norm_I_minus_alphaW}, {"margin", rep.margin},
              {"stable", rep.stable},           {"alpha", rep.alpha_used},
              {"kappa", rep.kappa_used},        {"margin_alpha_form", rep.margin_alpha_form}};
}

inline json kkt_solution_to_json(const KktSolution& sol, const KktResiduals& res) {
  return json{{"x", detail::vector_to_json(sol.x_star)},
              {"u", detail::vector_to_json(sol.u_star)},
              {"v", detail::vector_to_json(sol.v_star)},
              {"active_set", sol.active_set},
              {"objective", sol.objective},
              {"residuals",
               {{"stationarity", res.stationarity},
                {"primal_eq", res.primal_eq},
                {"primal_ineq", res.primal_ineq},
                {"comp_slack", res.comp_slack},
                {"dual_feas", res.dual_feas},
                {"projected_stationarity", res.projected_stationarity}}},
              {"notes", sol.notes}};
}

}  // namespace pnnqp
