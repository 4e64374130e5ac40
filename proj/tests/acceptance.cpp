// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "pfem/report.hpp"
#include "pfem/scenario.hpp"
#include "pfem/solver.hpp"

using namespace pfem;
using namespace pfem::testing;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Scenario cube(double extent, std::optional<LatticeBox> box = std::nullopt) {
  Scenario s;
  s.extent = {extent, extent, extent};
  s.scatterer_nodes = box;
  return s;
}

// ~2000 nodes: 13^3 lattice around a 3^3-element PEC box.
Scenario reference_problem() { return cube(1.3, LatticeBox{{5, 5, 5}, {8, 8, 8}}); }

struct Model {
  HexMesh mesh;
  MaterialParams params;
  PlaneWave wave;
};

Model model(const Scenario& s) {
  Model m{build_scenario_mesh(s), {}, s.wave()};
  m.params = MaterialParams::uniform(m.mesh.element_count(), s.k0());
  return m;
}

// Largest |a_ij - a_ji| over a row block covering the whole matrix; a
// missing mirror counts as zero.
double asymmetry(const CsrBlock<Complex>& a) {
  double worst = 0.0;
  for (Index i = a.first_row(); i < a.end_row(); ++i) {
    const auto ci = a.cols(i);
    const auto vi = a.values(i);
    for (std::size_t k = 0; k < ci.size(); ++k) {
      const auto cj = a.cols(ci[k]);
      const auto it = std::lower_bound(cj.begin(), cj.end(), i);
      const Complex mirror = (it != cj.end() && *it == i) ? a.values(ci[k])[it - cj.begin()] : Complex(0.0);
      worst = std::max(worst, std::abs(vi[k] - mirror));
    }
  }
  return worst;
}

// Every rank's factor for `kind` on the dense matrix `a`.
std::vector<CholeskyFactor> factors_of(const DenseC& a, const RowPartition& p, PrecondKind kind,
                                       StorageKind storage = StorageKind::Redundant) {
  std::vector<CholeskyFactor> out(p.ranks());
  CommFabric fabric(p.ranks());
  fabric.run([&](Communicator& comm) {
    const auto m = RankMatrix::from_rows(rows_of(a, p.row_begin(comm.rank()), p.row_end(comm.rank())), storage);
    out[comm.rank()] = build_preconditioner(comm, kind, m, p).factor;
  });
  return out;
}

DenseC dense_factor(const std::vector<CholeskyFactor>& f) {
  DenseC l = DenseC::Zero(f.front().rows.dim(), f.front().rows.dim());
  for (const auto& part : f) l += densify(part.rows);
  return l;
}

Outcome assembly_matches_element_loop() {
  Outcome o;
  double worst = 0.0;
  for (int elements : {3, 4, 5}) {
    const Index mid = elements / 2;
    const Model m = model(cube(0.1 * (elements + 1), LatticeBox{{mid, mid, mid}, {mid + 1, mid + 1, mid + 1}}));
    const DenseC ref = element_loop_matrix(m.mesh, m.params);
    const CVector ref_b = element_loop_rhs(m.mesh, m.wave);
    for (int ranks : {1, 3, 4}) {
      const auto partition = partition_rows(m.mesh.node_count(), ranks);
      DenseC a = DenseC::Zero(ref.rows(), ref.cols());
      for (int r = 0; r < ranks; ++r) a += densify(assemble_rows(m.mesh, m.params, partition, r));
      const double e = relative_difference(a, ref);
      const CVector b = assemble_rhs(m.mesh, m.wave, partition_rows(m.mesh.node_count(), 1), 0);
      const double eb = (b - ref_b).cwiseAbs().maxCoeff() / ref_b.cwiseAbs().maxCoeff();
      worst = std::max({worst, e, eb});
      o.require(e <= 1e-12, fmt("%d^3 elements, P=%d: matrix %.2e", elements, ranks, e));
      o.require(eb <= 1e-12, fmt("%d^3 elements: rhs %.2e", elements, eb));
    }
  }
  if (o.pass) o.detail = fmt("max relative difference %.2e over 3^3..5^3 elements, P in {1,3,4}", worst);
  return o;
}

Outcome message_counts_per_iteration() {
  Outcome o;
  std::ostringstream seen;
  for (int p : {1, 2, 4, 8, 10}) {
    for (auto concat : {ConcatStrategy::Spmd, ConcatStrategy::MasterSlave}) {
      Scenario s = cube(0.5);
      s.ranks = p;
      s.concat = concat;
      const auto r = run_scenario(s);
      const Index iters = r.report.iterations;
      const Index msgs = r.counters.phase_total(Phase::SolveIteration).messages;
      const Index expect = concat == ConcatStrategy::Spmd ? p * p - p : 2 * (p - 1);
      o.require(r.report.converged && iters > 0, fmt("P=%d did not converge", p));
      o.require(msgs == expect * iters, fmt("P=%d %s: %lld messages over %lld iterations", p,
                                            concat == ConcatStrategy::Spmd ? "spmd" : "ms", static_cast<long long>(msgs),
                                            static_cast<long long>(iters)));
      if (concat == ConcatStrategy::Spmd) seen << (p == 1 ? "" : " ") << p << ":" << msgs / std::max<Index>(iters, 1);
      else seen << "/" << msgs / std::max<Index>(iters, 1);
    }
  }
  if (o.pass) o.detail = "per-iteration spmd/ms messages " + seen.str();
  return o;
}

Outcome bicp_single_rank_is_icp() {
  Outcome o;
  const Scenario s = cube(0.4, LatticeBox{{1, 1, 1}, {2, 2, 2}});
  const Model m = model(s);
  const auto parts = assembled_systems(m.mesh, m.params, m.wave, 1);
  const DenseC a = densify(parts[0].rows);
  const auto p = partition_rows(m.mesh.node_count(), 1);
  const auto icp = factors_of(a, p, PrecondKind::Icp).front();
  const auto bicp = factors_of(a, p, PrecondKind::Bicp).front();
  bool same = icp.rows.nnz() == bicp.rows.nnz();
  for (Index i = 0; same && i < icp.rows.dim(); ++i) {
    const auto c1 = icp.rows.cols(i);
    const auto c2 = bicp.rows.cols(i);
    const auto v1 = icp.rows.values(i);
    const auto v2 = bicp.rows.values(i);
    same = std::equal(c1.begin(), c1.end(), c2.begin(), c2.end()) && std::equal(v1.begin(), v1.end(), v2.begin(), v2.end());
  }
  o.require(same, "factors differ");

  Scenario si = s;
  si.precond = PrecondKind::Icp;
  Scenario sb = s;
  sb.precond = PrecondKind::Bicp;
  const auto ri = run_scenario(si);
  const auto rb = run_scenario(sb);
  o.require(ri.report.iterations == rb.report.iterations,
            fmt("iterations %lld vs %lld", static_cast<long long>(ri.report.iterations),
                static_cast<long long>(rb.report.iterations)));
  o.require(ri.solution == rb.solution, "solutions differ");
  if (o.pass) {
    o.detail = fmt("%lld factor entries bitwise equal, %lld iterations each", static_cast<long long>(icp.rows.nnz()),
                   static_cast<long long>(ri.report.iterations));
  }
  return o;
}

// Iterations for every preconditioner and rank count on the reference problem.
const std::vector<ComparisonCell>& reference_table() {
  static const auto table = compare_preconditioners(reference_problem(), {1, 2, 4, 8},
                                                    {PrecondKind::Dp, PrecondKind::Icp, PrecondKind::Bicp});
  return table;
}

const ComparisonCell& cell(PrecondKind kind, int ranks) {
  for (const auto& c : reference_table()) {
    if (c.precond == kind && c.ranks == ranks) return c;
  }
  throw std::logic_error("missing comparison cell");
}

Outcome preconditioner_trends() {
  Outcome o;
  for (const auto& c : reference_table()) {
    o.require(c.error.empty() && c.converged, fmt("%s P=%d failed %s", to_string(c.precond), c.ranks, c.error.c_str()));
  }
  if (!o.pass) return o;
  std::string dp, icp, bicp;
  Index previous = 0;
  for (int p : {1, 2, 4, 8}) {
    const Index d = cell(PrecondKind::Dp, p).iterations;
    const Index i = cell(PrecondKind::Icp, p).iterations;
    const Index b = cell(PrecondKind::Bicp, p).iterations;
    o.require(i < d, fmt("P=%d: icp %lld >= dp %lld", p, static_cast<long long>(i), static_cast<long long>(d)));
    o.require(d == cell(PrecondKind::Dp, 1).iterations, fmt("dp varies at P=%d", p));
    o.require(b >= previous, fmt("bicp decreases at P=%d", p));
    previous = b;
    dp += fmt("%s%lld", p == 1 ? "" : ",", static_cast<long long>(d));
    icp += fmt("%s%lld", p == 1 ? "" : ",", static_cast<long long>(i));
    bicp += fmt("%s%lld", p == 1 ? "" : ",", static_cast<long long>(b));
  }
  const auto mesh = build_scenario_mesh(reference_problem());
  if (o.pass) {
    o.detail = fmt("%lld nodes, iterations at P=1,2,4,8: dp ", static_cast<long long>(mesh.node_count())) + dp +
               " icp " + icp + " bicp " + bicp;
  }
  return o;
}

Outcome dense_spd_factor() {
  Outcome o;
  const DenseC a = random_spd(20, 2024);
  const DenseC ref = dense_cholesky(a);
  double worst = 0.0;
  for (int ranks : {1, 4}) {
    const auto p = partition_rows(20, ranks, 1);
    const double e = relative_difference(dense_factor(factors_of(a, p, PrecondKind::Icp)), ref);
    worst = std::max(worst, e);
    o.require(e <= 1e-14, fmt("P=%d factor differs by %.2e", ranks, e));

    const CVector b = random_vector(20, 7);
    SolveReport report;
    CommFabric fabric(ranks);
    fabric.run([&](Communicator& comm) {
      const Index first = p.row_begin(comm.rank());
      const Index last = p.row_end(comm.rank());
      const auto m = RankMatrix::from_rows(rows_of(a, first, last), StorageKind::Redundant);
      const auto pre = build_preconditioner(comm, PrecondKind::Icp, m, p);
      SolveReport mine;
      cg_solve(comm, m, b.segment(first, last - first), pre, p, SolverOptions{}, mine);
      if (comm.rank() == 0) report = mine;
    });
    o.require(report.converged && report.iterations == 1,
              fmt("P=%d: %lld iterations", ranks, static_cast<long long>(report.iterations)));
  }
  if (o.pass) o.detail = fmt("factor matches dense Cholesky to %.1e, 1 CG iteration at P=1 and P=4", worst);
  return o;
}

Outcome empty_domain_accuracy() {
  Outcome o;
  std::string trail;
  double previous = 1e300;
  for (int npw : {10, 15, 20}) {
    Scenario s;
    s.nodes_per_wavelength = npw;
    const auto r = run_scenario(s);
    o.require(r.report.converged, fmt("%d npw did not converge", npw));
    o.require(r.incident_error < previous, fmt("error rises at %d npw", npw));
    if (npw == 10) o.require(r.incident_error <= 0.05, fmt("error %.4f at 10 npw", r.incident_error));
    previous = r.incident_error;
    trail += fmt("%s%d npw %.4f", npw == 10 ? "" : ", ", npw, r.incident_error);
  }
  o.detail = o.detail.empty() ? "relative error " + trail : o.detail + " (" + trail + ")";
  return o;
}

Outcome exact_symmetry() {
  Outcome o;
  std::vector<std::pair<std::string, Scenario>> cases = {
      {"3^3+box", cube(0.4, LatticeBox{{1, 1, 1}, {2, 2, 2}})},
      {"5^3+box", cube(0.6, LatticeBox{{2, 2, 2}, {3, 3, 3}})},
      {"empty 1^3", cube(1.0)},
      {"reference", reference_problem()},
  };
  Scenario planes = cube(0.6, LatticeBox{{2, 2, 2}, {3, 3, 3}});
  planes.planes = {{2, BoxSide::Max, FacetKind::SymmetryPlane}, {0, BoxSide::Min, FacetKind::SymmetryPlane}};
  cases.emplace_back("symmetry planes", planes);
  planes.planes = {{1, BoxSide::Min, FacetKind::AntisymmetryPlane}};
  cases.emplace_back("antisymmetry plane", planes);
  int checked = 0;
  for (const auto& [name, s] : cases) {
    const Model m = model(s);
    for (int ranks : {1, 4}) {
      const double d = asymmetry(stacked_rows(assembled_systems(m.mesh, m.params, m.wave, ranks)));
      o.require(d == 0.0, fmt("%s P=%d: %.3e", name.c_str(), ranks, d));
      ++checked;
    }
  }
  if (o.pass) o.detail = fmt("max |A_ij - A_ji| = 0 on %d assembled systems", checked);
  return o;
}

Outcome storage_ratio() {
  Outcome o;
  // The assembled matrix counts in both numerator and denominator.
  std::string seen;
  Scenario base = reference_problem();
  base.ranks = 4;
  auto run = [&](PrecondKind kind) {
    Scenario s = base;
    s.precond = kind;
    return run_scenario(s);
  };
  const auto dp = run(PrecondKind::Dp);
  const double dp_total = static_cast<double>(dp.matrix_bytes + dp.preconditioner_bytes);
  for (auto kind : {PrecondKind::Icp, PrecondKind::Bicp}) {
    const auto r = run(kind);
    const double ratio = static_cast<double>(r.matrix_bytes + r.preconditioner_bytes) / dp_total;
    o.require(std::abs(ratio - 1.5) <= 0.15, fmt("%s ratio %.3f", to_string(kind), ratio));
    seen += fmt("%s%s %.3f", seen.empty() ? "" : ", ", to_string(kind), ratio);
  }
  o.detail = (o.pass ? "P=4 storage over the DP run: " : "") + (o.pass ? seen : o.detail + " (" + seen + ")");
  return o;
}

Outcome storage_equivalence() {
  Outcome o;
  double worst = 0.0;
  int systems = 0;
  for (const auto& s : {cube(0.5, LatticeBox{{2, 2, 2}, {3, 3, 3}}), cube(0.6)}) {
    const Model m = model(s);
    for (int ranks : {1, 3}) {
      const auto parts = assembled_systems(m.mesh, m.params, m.wave, ranks);
      const Index n = m.mesh.complex_unknowns();
      DenseC one = DenseC::Zero(n, n);
      DenseC two = DenseC::Zero(n, n);
      for (const auto& part : parts) {
        one += densify(RankMatrix::from_rows(part.rows, StorageKind::Lower).lower());
        two += densify(RankMatrix::from_rows(part.rows, StorageKind::Redundant).redundant());
      }
      o.require(one == two, fmt("P=%d: storages differ", ranks));

      const auto full = stacked_rows(parts);
      const DenseC ref = dense_ic0(full);
      const auto p = partition_rows(m.mesh.node_count(), ranks);
      std::vector<CholeskyFactor> factors(ranks);
      CommFabric fabric(ranks);
      fabric.run([&](Communicator& comm) {
        factors[comm.rank()] = build_icp(comm, RankMatrix::from_rows(parts[comm.rank()].rows, StorageKind::Redundant), p);
      });
      const double e = relative_difference(dense_factor(factors), ref);
      worst = std::max(worst, e);
      o.require(e <= 1e-13, fmt("P=%d: factor differs by %.2e", ranks, e));
      ++systems;
    }
  }
  if (o.pass) o.detail = fmt("%d systems: storages equal, ICP vs dense IC(0) %.1e", systems, worst);
  return o;
}

Outcome determinism() {
  Outcome o;
  int runs = 0;
  for (auto kind : {PrecondKind::Dp, PrecondKind::Icp, PrecondKind::Bicp}) {
    for (auto concat : {ConcatStrategy::Spmd, ConcatStrategy::MasterSlave}) {
      Scenario s = cube(0.7, LatticeBox{{2, 2, 2}, {4, 4, 4}});
      s.ranks = 4;
      s.precond = kind;
      s.concat = concat;
      s.seed = 99;
      auto a = run_scenario(s);
      auto b = run_scenario(s);
      a.wall_seconds = b.wall_seconds = 0.0;
      o.require(a.solution == b.solution, fmt("%s: solutions differ", to_string(kind)));
      o.require(to_json(a).dump() == to_json(b).dump(), fmt("%s: reports differ", to_string(kind)));
      ++runs;
    }
  }
  if (o.pass) o.detail = fmt("%d configurations repeated under scheduling jitter, bitwise equal", runs);
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    double limit_seconds;
    std::function<Outcome()> check;
  };
  const Criterion criteria[] = {
      {1, 10, assembly_matches_element_loop},
      {2, 30, message_counts_per_iteration},
      {3, 30, bicp_single_rank_is_icp},
      {4, 600, preconditioner_trends},
      {5, 1, dense_spd_factor},
      {6, 300, empty_domain_accuracy},
      {7, 5, exact_symmetry},
      {8, 60, storage_ratio},
      {9, 60, storage_equivalence},
      {10, 120, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds > c.limit_seconds) o.require(false, fmt("took %.1f s, limit %.0f s", seconds, c.limit_seconds));
    failures += o.pass ? 0 : 1;
    std::printf("%s criterion %d: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.id, o.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
