// SPDX-License-Identifier: Apache-2.0

#include "pfem/assembly.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace pfem {

namespace {

template <std::size_t N>
using Key = std::array<double, N>;

/// Element geometry and material, translation removed. Elements of a regular
/// grid share one key, so their matrices are computed once per rank.
Key<28> element_key(const std::array<Vec3, 8>& corners, Complex eps, Complex mu) {
  Key<28> k{};
  for (int a = 0; a < 8; ++a) {
    for (int c = 0; c < 3; ++c) k[3 * a + c] = corners[a][c] - corners[0][c];
  }
  k[24] = eps.real();
  k[25] = eps.imag();
  k[26] = mu.real();
  k[27] = mu.imag();
  return k;
}

Key<12> facet_key(const std::array<Vec3, 4>& corners) {
  Key<12> k{};
  for (int a = 0; a < 4; ++a) {
    for (int c = 0; c < 3; ++c) k[3 * a + c] = corners[a][c] - corners[0][c];
  }
  return k;
}

Key<28> surface_key(const std::array<Vec3, 8>& corners, int local_face, const Vec3& normal) {
  Key<28> k{};
  for (int a = 0; a < 8; ++a) {
    for (int c = 0; c < 3; ++c) k[3 * a + c] = corners[a][c] - corners[0][c];
  }
  k[24] = local_face;
  k[25] = normal[0];
  k[26] = normal[1];
  k[27] = normal[2];
  return k;
}

template <std::size_t N>
int local_index(const std::array<Index, N>& nodes, Index node) {
  for (std::size_t k = 0; k < N; ++k) {
    if (nodes[k] == node) return static_cast<int>(k);
  }
  throw std::logic_error("node not found on its incident cell");
}

int normal_axis(const Vec3& n) {
  int axis = 0;
  n.cwiseAbs().maxCoeff(&axis);
  return axis;
}

void check_rank(const HexMesh& mesh, const RowPartition& partition, int rank) {
  if (partition.nodes() != mesh.node_count()) {
    throw std::invalid_argument("partition covers " + std::to_string(partition.nodes()) + " nodes, mesh has " +
                                std::to_string(mesh.node_count()));
  }
  if (partition.rows_per_node() != kDofsPerNode) throw std::invalid_argument("field partitions hold 3 rows per node");
  if (rank < 0 || rank >= partition.ranks()) throw std::out_of_range("rank " + std::to_string(rank) + " out of range");
}

/// Adds a 3x3 node-pair block into row triple (3n..3n+2) at the columns of node m.
template <typename Block>
void scatter_block(CsrBlock<Complex>& a, Index n, Index m, const Block& blk, int row0, int col0, Complex scale) {
  for (int c = 0; c < 3; ++c) {
    const Index row = kDofsPerNode * n + c;
    const Index s = a.slot(row, kDofsPerNode * m);
    if (s < 0) throw std::logic_error("assembly: coupling outside the reserved pattern");
    auto& vals = a.value_array();
    for (int d = 0; d < 3; ++d) vals[s + d] += scale * blk(row0 + c, col0 + d);
  }
}

}  // namespace

CsrBlock<Complex> assemble_rows(const HexMesh& mesh, const MaterialParams& params, const RowPartition& partition,
                                int rank, const AssemblyOptions& options) {
  check_rank(mesh, partition, rank);
  params.validate(mesh.element_count());
  const NodeIncidence elems = node_elements(mesh);
  const NodeIncidence facets = node_facets(mesh);
  const Index first = partition.node_begin(rank);
  const Index last = partition.node_end(rank);
  const Index dim = mesh.complex_unknowns();

  // Pass 1: reserve the coupled-node pattern of every owned row. Surface
  // couplings are a subset of the volume ones, so the volume pass sizes them.
  std::vector<Index> ptr{0};
  std::vector<Index> cols;
  std::vector<Index> neighbours;
  for (Index n = first; n < last; ++n) {
    neighbours.clear();
    for (Index e : elems.of(n)) {
      for (Index m : mesh.elements[e]) neighbours.push_back(m);
    }
    std::sort(neighbours.begin(), neighbours.end());
    neighbours.erase(std::unique(neighbours.begin(), neighbours.end()), neighbours.end());
    for (int c = 0; c < 3; ++c) {
      for (Index m : neighbours) {
        for (int d = 0; d < 3; ++d) cols.push_back(kDofsPerNode * m + d);
      }
      ptr.push_back(static_cast<Index>(cols.size()));
    }
  }
  std::vector<Complex> vals(cols.size(), Complex(0.0));
  CsrBlock<Complex> a(dim, kDofsPerNode * first, std::move(ptr), std::move(cols), std::move(vals));

  // Pass 2: fill, visiting each owned node's elements and facets in ascending order.
  std::map<Key<28>, ElementBlock> volume_cache;
  std::map<Key<12>, FacetBlock> abc_cache;
  std::map<Key<28>, ElementBlock> surface_cache;
  for (Index n = first; n < last; ++n) {
    for (Index e : elems.of(n)) {
      const auto corners = mesh.element_corners(e);
      const auto key = element_key(corners, params.eps_r[e], params.mu_r[e]);
      auto it = volume_cache.find(key);
      if (it == volume_cache.end()) {
        const ElementMatrices em = element_matrices(corners, params.eps_r[e], params.mu_r[e], params.k0,
                                                    options.gauss_points, options.penalty_weight);
        it = volume_cache.emplace(key, em.combined()).first;
      }
      const HexElement& el = mesh.elements[e];
      const int la = local_index(el, n);
      for (int b = 0; b < 8; ++b) scatter_block(a, n, el[b], it->second, 3 * la, 3 * b, 1.0);
    }
    for (Index f : facets.of(n)) {
      const Facet& facet = mesh.facets[f];
      if (facet.kind == FacetKind::Exterior) {
        const auto corners = mesh.facet_corners(facet);
        const auto key = facet_key(corners);
        auto it = abc_cache.find(key);
        if (it == abc_cache.end()) {
          const AbcFacetMatrices m = abc_facet_matrices(corners, params.k0, options.gauss_points);
          it = abc_cache.emplace(key, options.abc_second_order ? m.combined() : m.first_order).first;
        }
        const int la = local_index(facet.nodes, n);
        for (int b = 0; b < 4; ++b) scatter_block(a, n, facet.nodes[b], it->second, 3 * la, 3 * b, 1.0);
      }
      if (options.divergence_surface && options.penalty_weight != 0.0 &&
          (facet.kind == FacetKind::Exterior || facet.kind == FacetKind::Pec)) {
        const auto corners = mesh.element_corners(facet.element);
        const auto key = surface_key(corners, facet.local_face, facet.normal);
        auto it = surface_cache.find(key);
        if (it == surface_cache.end()) {
          it = surface_cache
                   .emplace(key, divergence_surface_matrix(corners, facet.local_face, facet.normal,
                                                           options.gauss_points))
                   .first;
        }
        const HexElement& el = mesh.elements[facet.element];
        const int la = local_index(el, n);
        for (int b = 0; b < 8; ++b) scatter_block(a, n, el[b], it->second, 3 * la, 3 * b, -options.penalty_weight);
      }
    }
  }
  return a;
}

CVector assemble_rhs(const HexMesh& mesh, const PlaneWave& wave, const RowPartition& partition, int rank,
                     const AssemblyOptions& options) {
  check_rank(mesh, partition, rank);
  wave.validate();
  const NodeIncidence facets = node_facets(mesh);
  const Index first = partition.node_begin(rank);
  const Index last = partition.node_end(rank);
  CVector b = CVector::Zero(kDofsPerNode * (last - first));
  std::unordered_map<Index, FacetLoad> loads;
  for (Index n = first; n < last; ++n) {
    for (Index f : facets.of(n)) {
      const Facet& facet = mesh.facets[f];
      if (facet.kind != FacetKind::Exterior) continue;
      auto it = loads.find(f);
      if (it == loads.end()) {
        it = loads.emplace(f, incident_facet_load(mesh.facet_corners(facet), facet.normal, wave, options.gauss_points))
                 .first;
      }
      const int la = local_index(facet.nodes, n);
      for (int c = 0; c < 3; ++c) b[kDofsPerNode * (n - first) + c] += it->second[3 * la + c];
    }
  }
  return b;
}

std::vector<Index> constrained_rows(const HexMesh& mesh, const RowPartition& partition, int rank) {
  check_rank(mesh, partition, rank);
  const NodeIncidence facets = node_facets(mesh);
  std::vector<Index> rows;
  for (Index n = partition.node_begin(rank); n < partition.node_end(rank); ++n) {
    std::array<bool, 3> fixed{false, false, false};
    bool symmetric = false;
    bool antisymmetric = false;
    for (Index f : facets.of(n)) {
      const Facet& facet = mesh.facets[f];
      const int axis = normal_axis(facet.normal);
      if (facet.kind == FacetKind::SymmetryPlane) {
        symmetric = true;
        fixed[axis] = true;
      } else if (facet.kind == FacetKind::AntisymmetryPlane) {
        antisymmetric = true;
        for (int c = 0; c < 3; ++c) {
          if (c != axis) fixed[c] = true;
        }
      }
    }
    if (symmetric && antisymmetric) {
      throw ConfigError("node " + std::to_string(n) + " lies on both a symmetry and an antisymmetry plane");
    }
    for (int c = 0; c < 3; ++c) {
      if (fixed[c]) rows.push_back(kDofsPerNode * n + c);
    }
  }
  return rows;
}

void apply_symmetry_bc(Communicator& comm, const HexMesh& mesh, const RowPartition& partition, RankSystem& system) {
  const bool any = mesh.count_facets(FacetKind::SymmetryPlane) + mesh.count_facets(FacetKind::AntisymmetryPlane) > 0;
  if (!any) return;
  const std::vector<Index> own = constrained_rows(mesh, partition, comm.rank());
  for (int r = 0; r < comm.size(); ++r) {
    if (r != comm.rank()) comm.send(r, tags::kBcDofs, own, {});
  }
  std::vector<Index> all;
  for (int r = 0; r < comm.size(); ++r) {
    if (r == comm.rank()) {
      all.insert(all.end(), own.begin(), own.end());
    } else {
      const Message m = comm.recv(r, tags::kBcDofs);
      all.insert(all.end(), m.indices.begin(), m.indices.end());
    }
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  auto& a = system.rows;
  std::vector<char> is_fixed(static_cast<std::size_t>(a.dim()), 0);
  for (Index i : all) is_fixed[i] = 1;
  auto& vals = a.value_array();
  for (Index i = a.first_row(); i < a.end_row(); ++i) {
    const auto c = a.cols(i);
    const Index base = a.row_offset(i);
    const Index local = i - a.first_row();
    if (is_fixed[i]) {
      for (std::size_t k = 0; k < c.size(); ++k) vals[base + k] = c[k] == i ? Complex(1.0) : Complex(0.0);
      system.rhs[local] = 0.0;
      continue;
    }
    // The prescribed value is zero, so eliminating the column leaves b alone.
    for (std::size_t k = 0; k < c.size(); ++k) {
      if (is_fixed[c[k]]) vals[base + k] = 0.0;
    }
  }
  system.constrained = std::move(all);
}

void symmetrize(Communicator& comm, const RowPartition& partition, RankSystem& system) {
  const auto& a = system.rows;
  const int me = comm.rank();
  using Triplet = std::pair<std::pair<Index, Index>, Complex>;
  std::vector<Triplet> triplets;
  triplets.reserve(2 * static_cast<std::size_t>(a.nnz()));
  std::vector<std::vector<Index>> out_idx(static_cast<std::size_t>(comm.size()));
  std::vector<std::vector<Complex>> out_val(static_cast<std::size_t>(comm.size()));
  for (Index i = a.first_row(); i < a.end_row(); ++i) {
    const auto c = a.cols(i);
    const auto v = a.values(i);
    for (std::size_t k = 0; k < c.size(); ++k) {
      triplets.push_back({{i, c[k]}, v[k]});
      const int owner = partition.owner_of_row(c[k]);
      if (owner == me) {
        triplets.push_back({{c[k], i}, v[k]});
      } else {
        out_idx[owner].push_back(c[k]);
        out_idx[owner].push_back(i);
        out_val[owner].push_back(v[k]);
      }
    }
  }
  for (int r = 0; r < comm.size(); ++r) {
    if (r != me) comm.send(r, tags::kSymmetrize, std::move(out_idx[r]), std::move(out_val[r]));
  }
  for (int r = 0; r < comm.size(); ++r) {
    if (r == me) continue;
    const Message m = comm.recv(r, tags::kSymmetrize);
    if (m.indices.size() != 2 * m.values.size()) throw Error("symmetrize: malformed transpose message");
    for (std::size_t k = 0; k < m.values.size(); ++k) {
      triplets.push_back({{m.indices[2 * k], m.indices[2 * k + 1]}, m.values[k]});
    }
  }
  // At most two contributions meet at any (i, j): A(i,j) and A(j,i). Complex
  // addition is commutative, so both triangles receive identical values.
  system.rows = csr_from_triplets<Complex>(a.dim(), a.first_row(), a.end_row(), std::move(triplets));
  system.rhs *= 2.0;
}

RankSystem assemble_system(Communicator& comm, const HexMesh& mesh, const MaterialParams& params,
                           const PlaneWave& wave, const RowPartition& partition, const AssemblyOptions& options) {
  RankSystem s;
  comm.set_phase(Phase::Assembly);
  s.rows = assemble_rows(mesh, params, partition, comm.rank(), options);
  s.rhs = assemble_rhs(mesh, wave, partition, comm.rank(), options);
  comm.set_phase(Phase::Bc);
  apply_symmetry_bc(comm, mesh, partition, s);
  comm.set_phase(Phase::Symmetrize);
  symmetrize(comm, partition, s);
  return s;
}

CsrBlock<Complex> stack_blocks(std::span<const CsrBlock<Complex>> blocks) {
  if (blocks.empty()) throw std::invalid_argument("stack_blocks: no blocks");
  const Index dim = blocks.front().dim();
  std::vector<Index> ptr{0};
  std::vector<Index> cols;
  std::vector<Complex> vals;
  Index next = blocks.front().first_row();
  for (const auto& b : blocks) {
    if (b.dim() != dim || b.first_row() != next) throw std::invalid_argument("stack_blocks: blocks not consecutive");
    for (Index i = b.first_row(); i < b.end_row(); ++i) {
      const auto c = b.cols(i);
      const auto v = b.values(i);
      cols.insert(cols.end(), c.begin(), c.end());
      vals.insert(vals.end(), v.begin(), v.end());
      ptr.push_back(static_cast<Index>(cols.size()));
    }
    next = b.end_row();
  }
  return CsrBlock<Complex>(dim, blocks.front().first_row(), std::move(ptr), std::move(cols), std::move(vals));
}

double symmetry_defect(const CsrBlock<Complex>& a) {
  double worst = 0.0;
  for (Index i = a.first_row(); i < a.end_row(); ++i) {
    const auto c = a.cols(i);
    const auto v = a.values(i);
    for (std::size_t k = 0; k < c.size(); ++k) {
      const Complex mirror = a.owns(c[k]) ? a.coeff(c[k], i) : Complex(0.0);
      worst = std::max(worst, std::abs(v[k] - mirror));
    }
  }
  return worst;
}

}  // namespace pfem
