// SPDX-License-Identifier: Apache-2.0

#include "pfem/report.hpp"

#include <map>
#include <sstream>

namespace pfem {

using nlohmann::json;

json to_json(const CounterReport& counters) {
  json phases = json::object();
  for (Phase phase : kAllPhases) {
    json per_rank = json::array();
    for (int r = 0; r < counters.ranks(); ++r) {
      const auto& c = counters.per_rank[r][static_cast<int>(phase)];
      per_rank.push_back({{"rank", r}, {"messages", c.messages}, {"bytes", c.bytes}});
    }
    const auto t = counters.phase_total(phase);
    phases[to_string(phase)] = {{"messages", t.messages},
                                {"bytes", t.bytes},
                                {"barriers", counters.phase_barriers(phase)},
                                {"per_rank", per_rank}};
  }
  const auto t = counters.total();
  return {{"ranks", counters.ranks()},
          {"phases", phases},
          {"total", {{"messages", t.messages}, {"bytes", t.bytes}, {"barriers", counters.barrier_total()}}}};
}

std::string counters_csv(const CounterReport& counters) {
  std::ostringstream os;
  os << "phase,rank,messages,bytes,barriers\n";
  for (Phase phase : kAllPhases) {
    for (int r = 0; r < counters.ranks(); ++r) {
      const auto& c = counters.per_rank[r][static_cast<int>(phase)];
      os << to_string(phase) << ',' << r << ',' << c.messages << ',' << c.bytes << ",\n";
    }
    os << to_string(phase) << ",all,,," << counters.phase_barriers(phase) << '\n';
  }
  return os.str();
}

json to_json(const SolveReport& report) {
  json j = {{"iterations", report.iterations},
            {"converged", report.converged},
            {"breakdown", report.breakdown},
            {"residual_history", report.residual_history}};
  if (report.breakdown) j["breakdown_reason"] = report.breakdown_reason;
  return j;
}

json to_json(const MeshStats& m) {
  return {{"nodes", m.nodes},
          {"elements", m.elements},
          {"complex_unknowns", m.complex_unknowns},
          {"real_dofs", m.real_dofs},
          {"facets",
           {{"exterior", m.exterior_facets},
            {"pec", m.pec_facets},
            {"symmetry", m.symmetry_facets},
            {"antisymmetry", m.antisymmetry_facets}}}};
}

json to_json(const RunResult& r) {
  const Scenario& s = r.scenario;
  json scenario = {{"extent_wavelengths", s.extent},
                   {"nodes_per_wavelength", s.nodes_per_wavelength},
                   {"frequency_hz", s.frequency},
                   {"k0", s.k0()},
                   {"ranks", s.ranks},
                   {"precond", to_string(s.precond)},
                   {"concat", to_string(s.concat)},
                   {"storage", static_cast<int>(s.storage)},
                   {"tol", s.tol},
                   {"max_iter", s.max_iter},
                   {"penalty", s.assembly.penalty_weight},
                   {"seed", s.seed}};
  json j = {{"scenario", scenario},
            {"mesh", to_json(r.mesh)},
            {"solve", to_json(r.report)},
            {"counters", to_json(r.counters)},
            {"memory_bytes",
             {{"matrix", r.matrix_bytes},
              {"preconditioner", r.preconditioner_bytes},
              {"total", r.matrix_bytes + r.preconditioner_bytes}}},
            {"true_residual", r.true_residual},
            {"incident_error", r.incident_error},
            {"exit_code", r.exit_code},
            {"wall_seconds", r.wall_seconds}};
  if (!r.failure.empty()) j["failure"] = r.failure;
  return j;
}

std::string probes_csv(const std::vector<ProbeSample>& probes) {
  std::ostringstream os;
  os.precision(10);
  os << "x,y,z,abs_hx,abs_hy,abs_hz,abs_h,inside_scatterer\n";
  for (const auto& p : probes) {
    os << p.position[0] << ',' << p.position[1] << ',' << p.position[2] << ',' << std::abs(p.h[0]) << ','
       << std::abs(p.h[1]) << ',' << std::abs(p.h[2]) << ',' << p.h.norm() << ',' << (p.inside_scatterer ? 1 : 0)
       << '\n';
  }
  return os.str();
}

json to_json(const std::vector<ComparisonCell>& table) {
  json cells = json::array();
  for (const auto& c : table) {
    json j = {{"precond", to_string(c.precond)},
              {"ranks", c.ranks},
              {"iterations", c.iterations},
              {"converged", c.converged},
              {"solve_messages", c.solve_messages},
              {"total_messages", c.total_messages},
              {"total_bytes", c.total_bytes},
              {"preconditioner_bytes", c.preconditioner_bytes}};
    if (!c.error.empty()) j["error"] = c.error;
    cells.push_back(j);
  }
  return {{"cells", cells}};
}

std::string comparison_csv(const std::vector<ComparisonCell>& table) {
  std::ostringstream os;
  os << "precond,ranks,iterations,converged,solve_messages,total_messages,total_bytes,preconditioner_bytes,error\n";
  for (const auto& c : table) {
    os << to_string(c.precond) << ',' << c.ranks << ',' << c.iterations << ',' << (c.converged ? 1 : 0) << ','
       << c.solve_messages << ',' << c.total_messages << ',' << c.total_bytes << ',' << c.preconditioner_bytes << ','
       << '"' << c.error << '"' << '\n';
  }
  return os.str();
}

std::string comparison_table(const std::vector<ComparisonCell>& table) {
  std::vector<int> ranks;
  std::vector<PrecondKind> methods;
  std::map<std::pair<int, int>, const ComparisonCell*> at;
  for (const auto& c : table) {
    if (std::find(ranks.begin(), ranks.end(), c.ranks) == ranks.end()) ranks.push_back(c.ranks);
    if (std::find(methods.begin(), methods.end(), c.precond) == methods.end()) methods.push_back(c.precond);
    at[{static_cast<int>(c.precond), c.ranks}] = &c;
  }
  std::ostringstream os;
  os << "iterations";
  for (int p : ranks) os << "\tP=" << p;
  os << '\n';
  for (PrecondKind m : methods) {
    os << to_string(m);
    for (int p : ranks) {
      const auto it = at.find({static_cast<int>(m), p});
      os << '\t';
      if (it == at.end()) {
        os << '-';
      } else if (!it->second->error.empty() || !it->second->converged) {
        os << "fail";
      } else {
        os << it->second->iterations;
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace pfem
