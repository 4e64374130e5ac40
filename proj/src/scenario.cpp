// SPDX-License-Identifier: Apache-2.0

#include "pfem/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <sstream>

#include "pfem/element.hpp"
#include "pfem/matrix_market.hpp"

namespace pfem {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower_case(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<double> numbers(const std::string& key, const std::string& value) {
  std::istringstream is(value);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError(key + ": '" + tok + "' is not a number");
    }
  }
  return out;
}

double number(const std::string& key, const std::string& value) {
  const auto v = numbers(key, value);
  if (v.size() != 1) throw ConfigError(key + ": expected one number");
  return v.front();
}

Index integer(const std::string& key, const std::string& value) {
  const double v = number(key, value);
  if (v != std::floor(v)) throw ConfigError(key + ": expected an integer");
  return static_cast<Index>(v);
}

Vec3 vec3(const std::string& key, const std::string& value) {
  const auto v = numbers(key, value);
  if (v.size() != 3) throw ConfigError(key + ": expected three numbers");
  return {v[0], v[1], v[2]};
}

bool boolean(const std::string& key, const std::string& value) {
  const std::string v = lower_case(value);
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw ConfigError(key + ": expected true or false");
}

/// "z+:symmetry" or "x-:antisymmetry", comma separated.
std::vector<SymmetryPlane> planes(const std::string& value) {
  std::vector<SymmetryPlane> out;
  std::istringstream is(value);
  std::string item;
  while (std::getline(is, item, ',')) {
    item = lower_case(trim(item));
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon != 2 || std::string("xyz").find(item[0]) == std::string::npos || (item[1] != '+' && item[1] != '-')) {
      throw ConfigError("symmetry plane '" + item + "': expected <axis><+|->:<symmetry|antisymmetry>");
    }
    SymmetryPlane p;
    p.axis = item[0] - 'x';
    p.side = item[1] == '+' ? BoxSide::Max : BoxSide::Min;
    const std::string kind = item.substr(3);
    if (kind == "symmetry") {
      p.kind = FacetKind::SymmetryPlane;
    } else if (kind == "antisymmetry") {
      p.kind = FacetKind::AntisymmetryPlane;
    } else {
      throw ConfigError("symmetry plane '" + item + "': unknown kind '" + kind + "'");
    }
    out.push_back(p);
  }
  return out;
}

void set_key(Scenario& s, const std::string& section, const std::string& key, const std::string& value,
             std::optional<Vec3>& box_lo, std::optional<Vec3>& box_hi, std::optional<Vec3>& node_lo,
             std::optional<Vec3>& node_hi) {
  const std::string name = section + "." + key;
  if (name == "domain.extent") {
    const auto v = numbers(name, value);
    if (v.size() == 1) {
      s.extent = {v[0], v[0], v[0]};
    } else if (v.size() == 3) {
      s.extent = {v[0], v[1], v[2]};
    } else {
      throw ConfigError(name + ": expected one or three numbers");
    }
  } else if (name == "domain.nodes_per_wavelength") {
    s.nodes_per_wavelength = static_cast<int>(integer(name, value));
  } else if (name == "domain.frequency") {
    s.frequency = number(name, value);
  } else if (name == "domain.node_budget") {
    s.node_budget = integer(name, value);
  } else if (name == "scatterer.min") {
    box_lo = vec3(name, value);
  } else if (name == "scatterer.max") {
    box_hi = vec3(name, value);
  } else if (name == "scatterer.min_node") {
    node_lo = vec3(name, value);
  } else if (name == "scatterer.max_node") {
    node_hi = vec3(name, value);
  } else if (name == "symmetry.planes") {
    s.planes = planes(value);
  } else if (name == "wave.direction") {
    s.direction = vec3(name, value);
  } else if (name == "wave.polarization") {
    s.polarization = vec3(name, value).cast<Complex>() + kJ * s.polarization.imag().cast<Complex>();
  } else if (name == "wave.polarization_imag") {
    s.polarization = s.polarization.real().cast<Complex>() + kJ * vec3(name, value).cast<Complex>();
  } else if (name == "solver.ranks") {
    s.ranks = static_cast<int>(integer(name, value));
  } else if (name == "solver.precond") {
    s.precond = parse_precond(value);
  } else if (name == "solver.concat") {
    s.concat = parse_concat(value);
  } else if (name == "solver.storage") {
    s.storage = parse_storage(value);
  } else if (name == "solver.tol") {
    s.tol = number(name, value);
  } else if (name == "solver.max_iter") {
    s.max_iter = integer(name, value);
  } else if (name == "solver.seed") {
    s.seed = static_cast<std::uint64_t>(integer(name, value));
  } else if (name == "assembly.penalty") {
    s.assembly.penalty_weight = number(name, value);
  } else if (name == "assembly.gauss_points") {
    s.assembly.gauss_points = static_cast<int>(integer(name, value));
  } else if (name == "assembly.abc_second_order") {
    s.assembly.abc_second_order = boolean(name, value);
  } else if (name == "assembly.divergence_surface") {
    s.assembly.divergence_surface = boolean(name, value);
  } else if (name == "probes.grid") {
    s.probe_grid = parse_probe_grid(value);
  } else {
    throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
  }
}

}  // namespace

double Scenario::k0() const { return 2.0 * std::numbers::pi * frequency / kSpeedOfLight; }

PlaneWave Scenario::wave() const {
  PlaneWave w;
  w.direction = direction;
  w.polarization = polarization;
  w.k0 = k0();
  return w;
}

void Scenario::validate() const {
  for (double e : extent) {
    if (!(e > 0.0)) throw ConfigError("domain.extent must be positive");
  }
  if (nodes_per_wavelength < 2) throw ConfigError("domain.nodes_per_wavelength must be at least 2");
  if (!(frequency > 0.0)) throw ConfigError("domain.frequency must be positive");
  if (node_budget < 1) throw ConfigError("domain.node_budget must be positive");
  if (ranks < 1) throw ConfigError("solver.ranks must be at least 1");
  if (!(tol > 0.0)) throw ConfigError("solver.tol must be positive");
  if (max_iter < 0) throw ConfigError("solver.max_iter must not be negative");
  if (assembly.gauss_points < 1 || assembly.gauss_points > 4) throw ConfigError("assembly.gauss_points must be 1..4");
  if (precond == PrecondKind::Icp && storage != StorageKind::Redundant) {
    throw ConfigError("the icp preconditioner needs storage 2");
  }
  if (scatterer && scatterer_nodes) throw ConfigError("give the scatterer in meters or in nodes, not both");
  for (int a = 0; a < 3; ++a) {
    if ((scatterer && !(scatterer->lower[a] < scatterer->upper[a])) ||
        (scatterer_nodes && scatterer_nodes->lower[a] >= scatterer_nodes->upper[a])) {
      throw ConfigError("scatterer box has no volume");
    }
  }
  try {
    wave().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

PrecondKind parse_precond(const std::string& name) {
  const std::string n = lower_case(trim(name));
  if (n == "dp") return PrecondKind::Dp;
  if (n == "icp") return PrecondKind::Icp;
  if (n == "bicp") return PrecondKind::Bicp;
  throw ConfigError("unknown preconditioner '" + name + "' (expected dp, icp or bicp)");
}

ConcatStrategy parse_concat(const std::string& name) {
  const std::string n = lower_case(trim(name));
  if (n == "spmd") return ConcatStrategy::Spmd;
  if (n == "ms") return ConcatStrategy::MasterSlave;
  throw ConfigError("unknown concatenation strategy '" + name + "' (expected spmd or ms)");
}

StorageKind parse_storage(const std::string& name) {
  const std::string n = trim(name);
  if (n == "1") return StorageKind::Lower;
  if (n == "2") return StorageKind::Redundant;
  throw ConfigError("unknown storage '" + name + "' (expected 1 or 2)");
}

std::array<Index, 3> parse_probe_grid(const std::string& spec) {
  std::array<Index, 3> g{};
  std::string s = lower_case(trim(spec));
  std::replace(s.begin(), s.end(), 'x', ' ');
  std::istringstream is(s);
  for (auto& v : g) {
    if (!(is >> v) || v < 1) throw ConfigError("probe grid '" + spec + "': expected NXxNYxNZ with positive counts");
  }
  std::string rest;
  if (is >> rest) throw ConfigError("probe grid '" + spec + "': trailing text");
  return g;
}

Scenario parse_scenario(std::istream& is) {
  Scenario s;
  std::optional<Vec3> box_lo, box_hi, node_lo, node_hi;
  std::string section;
  std::string line;
  int number_of_line = 0;
  while (std::getline(is, line)) {
    ++number_of_line;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(number_of_line) + ": unterminated section");
      section = lower_case(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number_of_line) + ": expected key = value");
    if (section.empty()) throw ConfigError("line " + std::to_string(number_of_line) + ": key outside any section");
    set_key(s, section, lower_case(trim(line.substr(0, eq))), trim(line.substr(eq + 1)), box_lo, box_hi, node_lo,
            node_hi);
  }
  if (box_lo.has_value() != box_hi.has_value()) throw ConfigError("scatterer needs both min and max");
  if (node_lo.has_value() != node_hi.has_value()) throw ConfigError("scatterer needs both min_node and max_node");
  if (box_lo) s.scatterer = ScattererSpec{*box_lo, *box_hi};
  if (node_lo) {
    LatticeBox b;
    for (int a = 0; a < 3; ++a) {
      if ((*node_lo)[a] != std::floor((*node_lo)[a]) || (*node_hi)[a] != std::floor((*node_hi)[a])) {
        throw ConfigError("scatterer node indices must be integers");
      }
      b.lower[a] = static_cast<Index>((*node_lo)[a]);
      b.upper[a] = static_cast<Index>((*node_hi)[a]);
    }
    s.scatterer_nodes = b;
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  return parse_scenario(is);
}

HexMesh build_scenario_mesh(const Scenario& s) {
  s.validate();
  HexMesh mesh;
  try {
    mesh = build_box_mesh(s.extent, s.nodes_per_wavelength, s.wavelength(), s.node_budget);
    std::optional<ScattererSpec> box = s.scatterer;
    if (s.scatterer_nodes) {
      ScattererSpec spec;
      for (int a = 0; a < 3; ++a) {
        spec.lower[a] = mesh.lower[a] + s.scatterer_nodes->lower[a] * mesh.spacing;
        spec.upper[a] = mesh.lower[a] + s.scatterer_nodes->upper[a] * mesh.spacing;
      }
      box = spec;
    }
    if (box) mesh = embed_pec_scatterer(mesh, *box);
    mesh = classify_boundary(mesh, s.planes);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return mesh;
}

MeshStats mesh_stats(const HexMesh& mesh) {
  MeshStats m;
  m.nodes = mesh.node_count();
  m.elements = mesh.element_count();
  m.complex_unknowns = mesh.complex_unknowns();
  m.real_dofs = mesh.real_dofs();
  m.exterior_facets = mesh.count_facets(FacetKind::Exterior);
  m.pec_facets = mesh.count_facets(FacetKind::Pec);
  m.symmetry_facets = mesh.count_facets(FacetKind::SymmetryPlane);
  m.antisymmetry_facets = mesh.count_facets(FacetKind::AntisymmetryPlane);
  return m;
}

std::vector<ProbeSample> sample_probes(const HexMesh& mesh, const CVector& solution,
                                       const std::array<Index, 3>& grid) {
  std::vector<ProbeSample> out;
  if (grid[0] < 1 || grid[1] < 1 || grid[2] < 1) return out;
  if (solution.size() != mesh.complex_unknowns()) throw std::invalid_argument("sample_probes: solution length mismatch");
  const std::array<Index, 3> cells{mesh.grid_nodes[0] - 1, mesh.grid_nodes[1] - 1, mesh.grid_nodes[2] - 1};
  std::vector<Index> cell_element(static_cast<std::size_t>(cells[0] * cells[1] * cells[2]), -1);
  for (Index e = 0; e < mesh.element_count(); ++e) {
    const auto& l = mesh.lattice[mesh.elements[e][0]];
    cell_element[static_cast<std::size_t>(l[0] + cells[0] * (l[1] + cells[1] * l[2]))] = e;
  }
  for (Index k = 0; k < grid[2]; ++k) {
    for (Index j = 0; j < grid[1]; ++j) {
      for (Index i = 0; i < grid[0]; ++i) {
        const std::array<Index, 3> ijk{i, j, k};
        ProbeSample p;
        std::array<Index, 3> cell{};
        Vec3 xi;
        for (int a = 0; a < 3; ++a) {
          const double t = grid[a] == 1 ? 0.5 : static_cast<double>(ijk[a]) / static_cast<double>(grid[a] - 1);
          p.position[a] = mesh.lower[a] + t * (mesh.upper[a] - mesh.lower[a]);
          const double u = (p.position[a] - mesh.lower[a]) / mesh.spacing;
          cell[a] = std::clamp(static_cast<Index>(std::floor(u)), Index{0}, cells[a] - 1);
          xi[a] = 2.0 * (u - static_cast<double>(cell[a])) - 1.0;
        }
        const Index e = cell_element[static_cast<std::size_t>(cell[0] + cells[0] * (cell[1] + cells[1] * cell[2]))];
        p.h.setZero();
        if (e < 0) {
          p.inside_scatterer = true;
        } else {
          const auto n = hex_shape(xi);
          for (int a = 0; a < 8; ++a) p.h += n[a] * solution.segment<3>(kDofsPerNode * mesh.elements[e][a]);
        }
        out.push_back(p);
      }
    }
  }
  return out;
}

RunResult run_scenario(const Scenario& s, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  result.scenario = s;
  const HexMesh mesh = build_scenario_mesh(s);
  result.mesh = mesh_stats(mesh);
  if (s.ranks > mesh.node_count()) throw ConfigError("more ranks than mesh nodes");
  const RowPartition partition = partition_rows(mesh.node_count(), s.ranks);
  const MaterialParams params = MaterialParams::uniform(mesh.element_count(), s.k0());
  const PlaneWave wave = s.wave();

  FabricOptions fopt;
  fopt.watchdog = options.watchdog;
  if (s.seed != 0) fopt.jitter_seed = s.seed;
  CommFabric fabric(s.ranks, fopt);

  const bool exporting = !options.export_matrix.empty();
  std::vector<CsrBlock<Complex>> raw_rows(static_cast<std::size_t>(s.ranks));
  std::vector<CsrBlock<Complex>> final_rows(static_cast<std::size_t>(s.ranks));
  std::vector<CVector> final_rhs(static_cast<std::size_t>(s.ranks));
  std::vector<Index> matrix_values(static_cast<std::size_t>(s.ranks), 0);
  std::vector<Index> precond_values(static_cast<std::size_t>(s.ranks), 0);
  CVector solution;
  SolveReport report;
  SolverOptions sopt;
  sopt.tol = s.tol;
  sopt.max_iter = s.max_iter;
  sopt.concat = s.concat;

  try {
    fabric.run([&](Communicator& comm) {
      const int r = comm.rank();
      RankSystem sys;
      comm.set_phase(Phase::Assembly);
      sys.rows = assemble_rows(mesh, params, partition, r, s.assembly);
      sys.rhs = assemble_rhs(mesh, wave, partition, r, s.assembly);
      comm.set_phase(Phase::Bc);
      apply_symmetry_bc(comm, mesh, partition, sys);
      if (exporting) raw_rows[r] = sys.rows;
      comm.set_phase(Phase::Symmetrize);
      symmetrize(comm, partition, sys);
      final_rows[r] = sys.rows;
      final_rhs[r] = sys.rhs;

      const RankMatrix a = RankMatrix::from_rows(sys.rows, s.storage);
      matrix_values[r] = a.stored_values();
      const Preconditioner m = build_preconditioner(comm, s.precond, a, partition);
      precond_values[r] = m.stored_values();
      SolveReport local;
      CVector x = cg_solve(comm, a, sys.rhs, m, partition, sopt, local);
      if (r == 0) {
        solution = std::move(x);
        report = std::move(local);
      }
    });
  } catch (const BreakdownError& e) {
    result.failure = e.what();
    result.report.breakdown = true;
    result.report.breakdown_reason = e.what();
    result.counters = fabric.counters();
    result.exit_code = exit_codes::kBreakdown;
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
  }

  result.report = std::move(report);
  result.counters = fabric.counters();
  result.solution = std::move(solution);
  for (int r = 0; r < s.ranks; ++r) {
    result.matrix_bytes += 16 * matrix_values[r];
    result.preconditioner_bytes += 16 * precond_values[r];
  }

  const CsrBlock<Complex> a = stack_blocks(final_rows);
  CVector b(a.dim());
  for (int r = 0; r < s.ranks; ++r) b.segment(partition.row_begin(r), final_rhs[r].size()) = final_rhs[r];
  CVector ax = CVector::Zero(a.dim());
  for (Index i = 0; i < a.dim(); ++i) {
    const auto c = a.cols(i);
    const auto v = a.values(i);
    for (std::size_t k = 0; k < c.size(); ++k) ax[i] += v[k] * result.solution[c[k]];
  }
  result.true_residual = b.norm() > 0.0 ? (b - ax).norm() / b.norm() : ax.norm();

  double err = 0.0;
  double ref = 0.0;
  for (Index n = 0; n < mesh.node_count(); ++n) {
    const CVec3 hi = incident_field(wave, mesh.nodes[n]).h;
    err += (result.solution.segment<3>(kDofsPerNode * n) - hi).squaredNorm();
    ref += hi.squaredNorm();
  }
  result.incident_error = ref > 0.0 ? std::sqrt(err / ref) : std::sqrt(err);
  result.probes = sample_probes(mesh, result.solution, s.probe_grid);

  if (exporting) {
    write_matrix_market(options.export_matrix, a, MatrixSymmetry::Symmetric);
    write_matrix_market(options.export_matrix + ".general.mtx", stack_blocks(raw_rows), MatrixSymmetry::General);
    write_vector(options.export_matrix + ".rhs", b);
  }

  if (result.report.breakdown) {
    result.exit_code = exit_codes::kBreakdown;
  } else if (!result.report.converged) {
    result.exit_code = exit_codes::kNotConverged;
  } else {
    result.exit_code = exit_codes::kConverged;
  }
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::vector<ComparisonCell> compare_preconditioners(const Scenario& base, const std::vector<int>& ranks,
                                                    const std::vector<PrecondKind>& preconds) {
  std::vector<ComparisonCell> table;
  for (PrecondKind kind : preconds) {
    for (int p : ranks) {
      ComparisonCell cell;
      cell.precond = kind;
      cell.ranks = p;
      Scenario s = base;
      s.ranks = p;
      s.precond = kind;
      if (kind == PrecondKind::Icp) s.storage = StorageKind::Redundant;
      try {
        const RunResult r = run_scenario(s);
        cell.iterations = r.report.iterations;
        cell.converged = r.report.converged;
        cell.solve_messages = r.counters.phase_total(Phase::SolveIteration).messages;
        cell.total_messages = r.counters.total().messages;
        cell.total_bytes = r.counters.total().bytes;
        cell.preconditioner_bytes = r.preconditioner_bytes;
        if (!r.failure.empty()) cell.error = r.failure;
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      table.push_back(cell);
    }
  }
  return table;
}

}  // namespace pfem
