// SPDX-License-Identifier: Apache-2.0
//
// pfem: run one scattering scenario or a preconditioner comparison.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pfem/mesh.hpp"
#include "pfem/report.hpp"
#include "pfem/scenario.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<int> ranks;
  std::optional<std::string> precond;
  std::optional<std::string> concat;
  std::optional<std::string> storage;
  std::optional<double> tol;
  std::optional<long long> max_iter;
  std::optional<std::string> probe_grid;
  std::optional<unsigned long long> seed;
};

void add_common(CLI::App& app, Overrides& o) {
  app.add_option("--config", o.config, "Scenario file (sections [domain] [scatterer] [symmetry] [wave] [solver] "
                                       "[assembly] [probes]); defaults: 1 wavelength cube, 10 nodes/wavelength, "
                                       "0.3 GHz, wave along +z polarized x, 1 rank, dp, spmd, storage 2, tol 1e-6");
  app.add_option("--precond", o.precond, "Preconditioner: dp | icp | bicp");
  app.add_option("--concat", o.concat, "Residual concatenation: spmd | ms");
  app.add_option("--storage", o.storage, "Matrix storage: 1 (lower rows) | 2 (redundant rows)");
  app.add_option("--tol", o.tol, "Relative residual tolerance");
  app.add_option("--max-iter", o.max_iter, "Iteration limit");
  app.add_option("--seed", o.seed, "Scheduling-jitter seed (0 disables jitter)");
}

pfem::Scenario scenario_from(const Overrides& o) {
  pfem::Scenario s;
  if (!o.config.empty()) s = pfem::load_scenario(o.config);
  if (o.ranks) s.ranks = *o.ranks;
  if (o.precond) s.precond = pfem::parse_precond(*o.precond);
  if (o.concat) s.concat = pfem::parse_concat(*o.concat);
  if (o.storage) s.storage = pfem::parse_storage(*o.storage);
  if (o.tol) s.tol = *o.tol;
  if (o.max_iter) s.max_iter = *o.max_iter;
  if (o.probe_grid) s.probe_grid = pfem::parse_probe_grid(*o.probe_grid);
  if (o.seed) s.seed = *o.seed;
  s.validate();
  return s;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw pfem::Error("cannot write " + path);
  os << text;
}

int run_command(const Overrides& o, const std::string& report, const std::string& export_matrix,
                const std::string& probe_csv, const std::string& counters_csv, const std::string& export_mesh) {
  const pfem::Scenario s = scenario_from(o);
  if (!export_mesh.empty()) {
    std::ofstream os(export_mesh);
    if (!os) throw pfem::Error("cannot write " + export_mesh);
    pfem::write_mesh(os, pfem::build_scenario_mesh(s));
  }
  pfem::RunOptions opt;
  opt.export_matrix = export_matrix;
  const pfem::RunResult r = pfem::run_scenario(s, opt);
  const auto j = pfem::to_json(r);
  if (!report.empty()) write_file(report, j.dump(2) + "\n");
  if (!probe_csv.empty()) write_file(probe_csv, pfem::probes_csv(r.probes));
  if (!counters_csv.empty()) write_file(counters_csv, pfem::counters_csv(r.counters));
  std::cout << "nodes " << r.mesh.nodes << "  complex unknowns " << r.mesh.complex_unknowns << "  real dofs "
            << r.mesh.real_dofs << '\n'
            << "precond " << pfem::to_string(s.precond) << "  ranks " << s.ranks << "  concat "
            << pfem::to_string(s.concat) << "  storage " << static_cast<int>(s.storage) << '\n'
            << "iterations " << r.report.iterations << "  converged " << (r.report.converged ? "yes" : "no")
            << "  final residual "
            << (r.report.residual_history.empty() ? 0.0 : r.report.residual_history.back()) << "  true residual "
            << r.true_residual << '\n'
            << "solve messages " << r.counters.phase_total(pfem::Phase::SolveIteration).messages << "  total messages "
            << r.counters.total().messages << "  total bytes " << r.counters.total().bytes << '\n'
            << "memory: matrix " << r.matrix_bytes << " B  preconditioner " << r.preconditioner_bytes << " B\n"
            << "incident-field distance " << r.incident_error << "  wall " << r.wall_seconds << " s\n";
  if (!r.failure.empty()) std::cerr << "failure: " << r.failure << '\n';
  return r.exit_code;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int compare_command(const Overrides& o, const std::string& ranks_list, const std::string& precond_list,
                    const std::string& report, const std::string& csv) {
  const pfem::Scenario s = scenario_from(o);
  std::vector<int> ranks;
  for (const auto& r : split(ranks_list)) {
    try {
      ranks.push_back(std::stoi(r));
    } catch (const std::exception&) {
      throw pfem::ConfigError("bad rank count '" + r + "'");
    }
  }
  std::vector<pfem::PrecondKind> preconds;
  for (const auto& p : split(precond_list)) preconds.push_back(pfem::parse_precond(p));
  if (ranks.empty() || preconds.empty()) throw pfem::ConfigError("compare needs at least one rank count and method");
  const auto table = pfem::compare_preconditioners(s, ranks, preconds);
  if (!report.empty()) write_file(report, pfem::to_json(table).dump(2) + "\n");
  if (!csv.empty()) write_file(csv, pfem::comparison_csv(table));
  std::cout << pfem::comparison_table(table);
  for (const auto& c : table) {
    if (c.error.empty() && c.converged) return pfem::exit_codes::kConverged;
  }
  return pfem::exit_codes::kNotConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel finite-element scattering workbench"};
  app.require_subcommand(1);

  Overrides run_o;
  std::string report, export_matrix, probe_csv, counters_csv, export_mesh;
  auto* run = app.add_subcommand("run", "Mesh, assemble, constrain, symmetrize and solve one scenario");
  add_common(*run, run_o);
  run->add_option("--ranks", run_o.ranks, "Number of simulated ranks");
  run->add_option("--probe-grid", run_o.probe_grid, "Probe lattice NXxNYxNZ over the domain box");
  run->add_option("--report", report, "JSON report path");
  run->add_option("--export-matrix", export_matrix,
                  "Matrix Market export: PATH (symmetrized), PATH.general.mtx, PATH.rhs");
  run->add_option("--probe-csv", probe_csv, "CSV of |H| at the probe lattice");
  run->add_option("--counters-csv", counters_csv, "CSV of message counters by phase and rank");
  run->add_option("--export-mesh", export_mesh, "Plain-text mesh listing");

  Overrides cmp_o;
  std::string ranks_list = "1,2,4,8";
  std::string precond_list = "dp,icp,bicp";
  std::string cmp_report, cmp_csv;
  auto* cmp = app.add_subcommand("compare", "Iterations and traffic over preconditioners x rank counts");
  add_common(*cmp, cmp_o);
  cmp->add_option("--ranks", ranks_list, "Comma-separated rank counts")->capture_default_str();
  cmp->add_option("--methods", precond_list, "Comma-separated preconditioners")->capture_default_str();
  cmp->add_option("--report", cmp_report, "JSON table path");
  cmp->add_option("--csv", cmp_csv, "CSV table path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pfem::exit_codes::kConfig;
  }

  try {
    if (*run) return run_command(run_o, report, export_matrix, probe_csv, counters_csv, export_mesh);
    return compare_command(cmp_o, ranks_list, precond_list, cmp_report, cmp_csv);
  } catch (const pfem::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return pfem::exit_codes::kConfig;
  } catch (const pfem::BudgetError& e) {
    std::cerr << "budget exceeded: " << e.what() << '\n';
    return pfem::exit_codes::kBudget;
  } catch (const pfem::BreakdownError& e) {
    std::cerr << "breakdown: " << e.what() << '\n';
    return pfem::exit_codes::kBreakdown;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pfem::exit_codes::kOther;
  }
}
