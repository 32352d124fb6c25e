// Command-line front end: build/check/solve/oracle/compare on QP problem and
// parameter files. Reports are JSON on stdout; trajectories are CSV files.

#include <string>

#include <CLI11.hpp>

#include "pnnqp/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Delayed projection-network solver for convex QP"};
  app.require_subcommand(1);

  std::string problem_path, params_path, out_prefix = "pnnqp_out";
  int seed = -1;
  bool search = false;

  const auto add_common = [&](CLI::App* cmd, bool needs_params) {
    cmd->add_option("--problem", problem_path, "problem JSON file")->required();
    if (needs_params)
      cmd->add_option("--params", params_path, "parameters JSON file")->required();
    cmd->add_option("--out", out_prefix, "output file prefix");
    cmd->add_option("--seed", seed, "override the history seed from the params file");
  };

  auto* build = app.add_subcommand("build", "assemble the network and print it as JSON");
  add_common(build, true);
  auto* check = app.add_subcommand("check", "evaluate the exponential-stability margin");
  add_common(check, true);
  check->add_flag("--search-alpha", search, "scan a log grid of alpha for a stable margin");
  auto* solve = app.add_subcommand("solve", "integrate random histories and report convergence");
  add_common(solve, true);
  auto* oracle = app.add_subcommand("oracle", "print the active-set oracle solution");
  add_common(oracle, false);
  auto* compare = app.add_subcommand("compare", "network solve vs oracle, componentwise");
  add_common(compare, true);

  CLI11_PARSE(app, argc, argv);

  // --seed rewrites the params file content in memory via a temp copy; the
  // simpler route used here: load, patch, and write a sidecar params file.
  std::string effective_params = params_path;
  if (seed >= 0 && !params_path.empty()) {
    const int rc = pnnqp::guarded_command([&] {
      auto j = pnnqp::detail::parse_file(params_path);
      if (j.contains("histories")) j["histories"]["seed"] = seed;
      effective_params = out_prefix + "_params_seed.json";
      std::ofstream out(effective_params);
      out << j.dump(2) << "\n";
      return pnnqp::exit_ok;
    });
    if (rc != pnnqp::exit_ok) return rc;
  }

  if (build->parsed()) return pnnqp::cmd_build(problem_path, effective_params);
  if (check->parsed()) return pnnqp::cmd_check(problem_path, effective_params, search);
  if (solve->parsed()) return pnnqp::cmd_solve(problem_path, effective_params, out_prefix);
  if (oracle->parsed()) return pnnqp::cmd_oracle(problem_path);
  if (compare->parsed())
    return pnnqp::cmd_compare(problem_path, effective_params, out_prefix);
  return 0;
}
