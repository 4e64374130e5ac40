// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "pfem/element.hpp"
#include "pfem/fabric.hpp"
#include "pfem/mesh.hpp"
#include "pfem/sparse.hpp"
#include "pfem/types.hpp"

namespace pfem {

struct AssemblyOptions {
  int gauss_points = 2;
  double penalty_weight = 1.0;
  /// Keep the tangential-Laplacian part of the absorbing condition.
  bool abc_second_order = true;
  /// Add the surface term of the divergence penalty on exterior and PEC
  /// facets. Off by default: once A + A^T is formed, its transpose acts on
  /// n.H, which does not vanish, and the discrete solution drifts away from
  /// the physical field.
  bool divergence_surface = false;
};

/// Owned rows (3 per owned node) of the unsymmetrized system. Every row holds
/// the full 3x3 coupling block of each neighbouring node, so the pattern is
/// structurally symmetric. No communication.
CsrBlock<Complex> assemble_rows(const HexMesh& mesh, const MaterialParams& params, const RowPartition& partition,
                                int rank, const AssemblyOptions& options = {});

/// Owned right-hand-side segment from exterior-facet quadrature of
/// g_ABC(H_i) - n x curl H_i. No communication.
CVector assemble_rhs(const HexMesh& mesh, const PlaneWave& wave, const RowPartition& partition, int rank,
                     const AssemblyOptions& options = {});

/// One rank's share of the linear system.
struct RankSystem {
  CsrBlock<Complex> rows;
  CVector rhs;                     // owned segment, rows.rows() long
  std::vector<Index> constrained;  // all constrained rows, ascending
};

/// Rows owned by `rank` that symmetry or antisymmetry facets constrain:
/// the normal component on a symmetry plane, both tangential components on an
/// antisymmetry plane. Throws when a node touches planes of both kinds.
std::vector<Index> constrained_rows(const HexMesh& mesh, const RowPartition& partition, int rank);

/// Identity rows with zero right-hand side for constrained dofs and zeroed
/// columns everywhere else. The column entries stay in the pattern as
/// explicit zeros. Ranks exchange their constrained lists only when the mesh
/// has symmetry facets.
void apply_symmetry_bc(Communicator& comm, const HexMesh& mesh, const RowPartition& partition, RankSystem& system);

/// A <- A + A^T and b <- 2 b. Each rank ships every entry whose column lies in
/// another rank's block to that rank: P^2 - P messages.
void symmetrize(Communicator& comm, const RowPartition& partition, RankSystem& system);

/// assemble_rows + assemble_rhs + apply_symmetry_bc + symmetrize, each
/// charged to its own phase.
RankSystem assemble_system(Communicator& comm, const HexMesh& mesh, const MaterialParams& params,
                           const PlaneWave& wave, const RowPartition& partition,
                           const AssemblyOptions& options = {});

/// Stacks consecutive row blocks into one whole-matrix block.
CsrBlock<Complex> stack_blocks(std::span<const CsrBlock<Complex>> blocks);

/// Largest |A(i,j) - A(j,i)| over the stored entries of a whole matrix; a
/// missing mirror counts as zero.
double symmetry_defect(const CsrBlock<Complex>& a);

}  // namespace pfem
