// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include "pfem/types.hpp"

namespace pfem {

enum class FacetKind { Exterior, Pec, SymmetryPlane, AntisymmetryPlane };

const char* to_string(FacetKind kind);

/// Quadrilateral boundary facet. Nodes run counter-clockwise seen from
/// outside, `normal` points out of the owning element.
struct Facet {
  std::array<Index, 4> nodes{};
  Index element = -1;
  int local_face = -1;
  Vec3 normal = Vec3::Zero();
  FacetKind kind = FacetKind::Exterior;
};

using HexElement = std::array<Index, 8>;

/// Local corner numbering of a hexahedron: bit 0 -> x, bit 1 -> y (with the
/// usual 0,1,2,3 counter-clockwise bottom ring), top ring 4..7.
inline constexpr std::array<std::array<int, 3>, 8> kHexCorners{{
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}}};

/// Faces in local corner numbers, ordered -x, +x, -y, +y, -z, +z, each
/// counter-clockwise seen from outside the element.
inline constexpr std::array<std::array<int, 4>, 6> kHexFaces{{
    {0, 4, 7, 3}, {1, 2, 6, 5}, {0, 1, 5, 4}, {2, 3, 7, 6}, {0, 3, 2, 1}, {4, 5, 6, 7}}};

/// Structured hexahedral mesh of an axis-aligned box, possibly with
/// node-aligned holes (PEC scatterers).
struct HexMesh {
  std::vector<Vec3> nodes;
  std::vector<HexElement> elements;
  std::vector<Facet> facets;
  /// Integer lattice position of every node on the structured grid.
  std::vector<std::array<Index, 3>> lattice;
  std::array<Index, 3> grid_nodes{};  // nodes per axis of the background grid
  double spacing = 0.0;
  Vec3 lower = Vec3::Zero();
  Vec3 upper = Vec3::Zero();

  Index node_count() const { return static_cast<Index>(nodes.size()); }
  Index element_count() const { return static_cast<Index>(elements.size()); }
  Index facet_count() const { return static_cast<Index>(facets.size()); }
  Index complex_unknowns() const { return kDofsPerNode * node_count(); }
  /// Real degrees of freedom, counting real and imaginary parts separately.
  Index real_dofs() const { return 2 * complex_unknowns(); }

  std::array<Vec3, 8> element_corners(Index e) const;
  std::array<Vec3, 4> facet_corners(const Facet& f) const;
  Index count_facets(FacetKind kind) const;
};

inline constexpr Index kDefaultNodeBudget = 2'000'000;

/// Regular grid with spacing wavelength / nodes_per_wavelength and
/// round(extent * nodes_per_wavelength) nodes along each axis.
HexMesh build_box_mesh(const std::array<double, 3>& extent_wavelengths, int nodes_per_wavelength,
                       double wavelength, Index node_budget = kDefaultNodeBudget);

/// Axis-aligned PEC box in meters. A box with no volume is the empty spec.
struct ScattererSpec {
  Vec3 lower = Vec3::Zero();
  Vec3 upper = Vec3::Zero();

  bool empty() const { return ((upper - lower).array() <= 0.0).any(); }
};

/// True when every corner of the box coincides with a grid node of `mesh`.
bool is_snapped(const HexMesh& mesh, const ScattererSpec& spec);

/// Removes the elements inside the box (and the nodes left without
/// elements) and tags the newly exposed faces Pec.
HexMesh embed_pec_scatterer(const HexMesh& mesh, const ScattererSpec& spec);

enum class BoxSide { Min, Max };

struct SymmetryPlane {
  int axis = 0;  // 0 = x, 1 = y, 2 = z
  BoxSide side = BoxSide::Min;
  FacetKind kind = FacetKind::SymmetryPlane;
};

/// Retags bounding-box facets: those on a declared plane get the plane's
/// kind, the rest become Exterior. Pec facets are untouched.
HexMesh classify_boundary(const HexMesh& mesh, std::span<const SymmetryPlane> planes);

/// Node -> incident elements, in ascending element order.
struct NodeIncidence {
  std::vector<Index> offsets;
  std::vector<Index> elements;

  std::span<const Index> of(Index node) const {
    return {elements.data() + offsets[node], static_cast<std::size_t>(offsets[node + 1] - offsets[node])};
  }
};

NodeIncidence node_elements(const HexMesh& mesh);

/// Node -> boundary facets touching it.
NodeIncidence node_facets(const HexMesh& mesh);

/// Plain-text listing, one record per line:
///   mesh <nodes> <elements> <facets> <spacing>
///   node <i> <x> <y> <z>
///   element <e> <n0> ... <n7>
///   facet <f> <kind> <element> <n0> <n1> <n2> <n3> <nx> <ny> <nz>
void write_mesh(std::ostream& os, const HexMesh& mesh);

}  // namespace pfem
