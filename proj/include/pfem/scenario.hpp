// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pfem/assembly.hpp"
#include "pfem/fabric.hpp"
#include "pfem/mesh.hpp"
#include "pfem/solver.hpp"

namespace pfem {

/// Scatterer box given on the node lattice, corners inclusive.
struct LatticeBox {
  std::array<Index, 3> lower{};
  std::array<Index, 3> upper{};
};

struct Scenario {
  std::array<double, 3> extent{1.0, 1.0, 1.0};  // wavelengths
  int nodes_per_wavelength = 10;
  double frequency = 0.3e9;  // Hz
  Index node_budget = kDefaultNodeBudget;
  std::optional<ScattererSpec> scatterer;  // meters
  std::optional<LatticeBox> scatterer_nodes;
  std::vector<SymmetryPlane> planes;
  Vec3 direction = Vec3::UnitZ();
  CVec3 polarization = CVec3(1.0, 0.0, 0.0);
  int ranks = 1;
  PrecondKind precond = PrecondKind::Dp;
  ConcatStrategy concat = ConcatStrategy::Spmd;
  StorageKind storage = StorageKind::Redundant;
  double tol = 1e-6;
  Index max_iter = 5000;
  AssemblyOptions assembly;
  /// Non-zero seeds enable randomized scheduling jitter inside the fabric.
  std::uint64_t seed = 0;
  std::array<Index, 3> probe_grid{0, 0, 0};

  double wavelength() const { return kSpeedOfLight / frequency; }
  double k0() const;
  PlaneWave wave() const;
  void validate() const;
};

/// Parses the sectioned key = value format described in the README.
Scenario parse_scenario(std::istream& is);
Scenario load_scenario(const std::string& path);

PrecondKind parse_precond(const std::string& name);
ConcatStrategy parse_concat(const std::string& name);
StorageKind parse_storage(const std::string& name);
std::array<Index, 3> parse_probe_grid(const std::string& spec);

/// Mesh of a scenario: box, scatterer, boundary classification.
HexMesh build_scenario_mesh(const Scenario& s);

struct MeshStats {
  Index nodes = 0;
  Index elements = 0;
  Index complex_unknowns = 0;
  Index real_dofs = 0;
  Index exterior_facets = 0;
  Index pec_facets = 0;
  Index symmetry_facets = 0;
  Index antisymmetry_facets = 0;
};

MeshStats mesh_stats(const HexMesh& mesh);

struct ProbeSample {
  Vec3 position;
  CVec3 h;
  bool inside_scatterer = false;
};

struct RunResult {
  Scenario scenario;
  MeshStats mesh;
  SolveReport report;
  CounterReport counters;
  Index matrix_bytes = 0;
  Index preconditioner_bytes = 0;
  double true_residual = 0.0;
  /// Nodal relative L2 distance between the solution and the incident field.
  double incident_error = 0.0;
  CVector solution;
  std::vector<ProbeSample> probes;
  double wall_seconds = 0.0;
  std::string failure;  // set when the pipeline threw
  int exit_code = 0;
};

struct RunOptions {
  /// Writes PATH (symmetrized, symmetric), PATH.general.mtx (before
  /// symmetrization) and PATH.rhs.
  std::string export_matrix;
  std::chrono::milliseconds watchdog{600000};
};

/// Exit codes of the command-line front end.
namespace exit_codes {
inline constexpr int kConverged = 0;
inline constexpr int kOther = 1;
inline constexpr int kNotConverged = 2;
inline constexpr int kBreakdown = 3;
inline constexpr int kConfig = 4;
inline constexpr int kBudget = 5;
}  // namespace exit_codes

/// Full pipeline. Configuration and budget errors propagate; solver
/// breakdowns are folded into the result.
RunResult run_scenario(const Scenario& s, const RunOptions& options = {});

/// Trilinear interpolation of a nodal solution at the scenario's probe lattice.
std::vector<ProbeSample> sample_probes(const HexMesh& mesh, const CVector& solution,
                                       const std::array<Index, 3>& grid);

struct ComparisonCell {
  PrecondKind precond = PrecondKind::Dp;
  int ranks = 1;
  Index iterations = 0;
  bool converged = false;
  Index solve_messages = 0;
  Index total_messages = 0;
  Index total_bytes = 0;
  Index preconditioner_bytes = 0;
  std::string error;  // non-empty marks a failed cell
};

std::vector<ComparisonCell> compare_preconditioners(const Scenario& base, const std::vector<int>& ranks,
                                                    const std::vector<PrecondKind>& preconds);

}  // namespace pfem
