// SPDX-License-Identifier: Apache-2.0

#include "pfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>

#include <Eigen/Geometry>

namespace pfem {

namespace {

using FaceKey = std::array<Index, 4>;

FaceKey sorted_key(const std::array<Index, 4>& nodes) {
  FaceKey k = nodes;
  std::sort(k.begin(), k.end());
  return k;
}

Vec3 element_centroid(const HexMesh& mesh, Index e) {
  Vec3 c = Vec3::Zero();
  for (Index n : mesh.elements[e]) c += mesh.nodes[n];
  return c / 8.0;
}

Facet make_facet(const HexMesh& mesh, Index e, int face, FacetKind kind) {
  Facet f;
  f.element = e;
  f.local_face = face;
  f.kind = kind;
  for (int k = 0; k < 4; ++k) f.nodes[k] = mesh.elements[e][kHexFaces[face][k]];
  const Vec3& p0 = mesh.nodes[f.nodes[0]];
  Vec3 n = (mesh.nodes[f.nodes[1]] - p0).cross(mesh.nodes[f.nodes[3]] - p0);
  n.normalize();
  Vec3 centroid = Vec3::Zero();
  for (Index v : f.nodes) centroid += mesh.nodes[v];
  centroid /= 4.0;
  if (n.dot(centroid - element_centroid(mesh, e)) < 0.0) n = -n;
  f.normal = n;
  return f;
}

bool on_bounding_box(const HexMesh& mesh, const Facet& f) {
  const double tol = 1e-9 * std::max(1.0, mesh.spacing);
  for (int axis = 0; axis < 3; ++axis) {
    for (double plane : {mesh.lower[axis], mesh.upper[axis]}) {
      bool all = true;
      for (Index v : f.nodes) all = all && std::abs(mesh.nodes[v][axis] - plane) < tol;
      if (all) return true;
    }
  }
  return false;
}

/// Recomputes boundary facets as the element faces that appear exactly once.
/// Faces that were already boundary facets keep their kind; new faces on the
/// bounding box become Exterior, all others Pec.
void rebuild_facets(HexMesh& mesh, const std::map<FaceKey, FacetKind>& previous) {
  std::map<FaceKey, std::pair<int, std::pair<Index, int>>> seen;
  for (Index e = 0; e < mesh.element_count(); ++e) {
    for (int face = 0; face < 6; ++face) {
      std::array<Index, 4> nodes{};
      for (int k = 0; k < 4; ++k) nodes[k] = mesh.elements[e][kHexFaces[face][k]];
      auto& slot = seen[sorted_key(nodes)];
      if (slot.first++ == 0) slot.second = {e, face};
    }
  }
  std::vector<Facet> facets;
  for (const auto& [key, entry] : seen) {
    if (entry.first != 1) continue;
    Facet f = make_facet(mesh, entry.second.first, entry.second.second, FacetKind::Exterior);
    if (auto it = previous.find(key); it != previous.end()) {
      f.kind = it->second;
    } else {
      f.kind = on_bounding_box(mesh, f) ? FacetKind::Exterior : FacetKind::Pec;
    }
    facets.push_back(f);
  }
  std::sort(facets.begin(), facets.end(), [](const Facet& a, const Facet& b) {
    return std::tie(a.element, a.local_face) < std::tie(b.element, b.local_face);
  });
  mesh.facets = std::move(facets);
}

Index lattice_coordinate(const HexMesh& mesh, double value, int axis) {
  const double t = (value - mesh.lower[axis]) / mesh.spacing;
  const double r = std::round(t);
  if (std::abs(t - r) > 1e-6) return -1;
  return static_cast<Index>(r);
}

}  // namespace

const char* to_string(FacetKind kind) {
  switch (kind) {
    case FacetKind::Exterior:
      return "exterior";
    case FacetKind::Pec:
      return "pec";
    case FacetKind::SymmetryPlane:
      return "symmetry";
    case FacetKind::AntisymmetryPlane:
      return "antisymmetry";
  }
  return "?";
}

std::array<Vec3, 8> HexMesh::element_corners(Index e) const {
  std::array<Vec3, 8> c;
  for (int k = 0; k < 8; ++k) c[k] = nodes[elements[e][k]];
  return c;
}

std::array<Vec3, 4> HexMesh::facet_corners(const Facet& f) const {
  std::array<Vec3, 4> c;
  for (int k = 0; k < 4; ++k) c[k] = nodes[f.nodes[k]];
  return c;
}

Index HexMesh::count_facets(FacetKind kind) const {
  return std::count_if(facets.begin(), facets.end(), [kind](const Facet& f) { return f.kind == kind; });
}

HexMesh build_box_mesh(const std::array<double, 3>& extent_wavelengths, int nodes_per_wavelength,
                       double wavelength, Index node_budget) {
  if (nodes_per_wavelength < 2) throw std::invalid_argument("build_box_mesh: nodes_per_wavelength must be >= 2");
  if (!(wavelength > 0.0)) throw std::invalid_argument("build_box_mesh: wavelength must be positive");
  HexMesh mesh;
  mesh.spacing = wavelength / nodes_per_wavelength;
  double total = 1.0;
  for (int a = 0; a < 3; ++a) {
    if (!(extent_wavelengths[a] > 0.0)) throw std::invalid_argument("build_box_mesh: extents must be positive");
    const double count = std::round(extent_wavelengths[a] * nodes_per_wavelength);
    if (count < 2.0) {
      throw std::invalid_argument("build_box_mesh: fewer than two nodes along axis " + std::to_string(a));
    }
    total *= count;
    mesh.grid_nodes[a] = static_cast<Index>(count);
  }
  if (total > static_cast<double>(node_budget)) {
    throw BudgetError("mesh of " + std::to_string(static_cast<long long>(total)) +
                      " nodes exceeds the node budget of " + std::to_string(node_budget));
  }
  const auto [nx, ny, nz] = mesh.grid_nodes;
  mesh.nodes.reserve(static_cast<std::size_t>(nx * ny * nz));
  for (Index k = 0; k < nz; ++k) {
    for (Index j = 0; j < ny; ++j) {
      for (Index i = 0; i < nx; ++i) {
        mesh.nodes.emplace_back(i * mesh.spacing, j * mesh.spacing, k * mesh.spacing);
        mesh.lattice.push_back({i, j, k});
      }
    }
  }
  mesh.lower = Vec3::Zero();
  mesh.upper = Vec3((nx - 1) * mesh.spacing, (ny - 1) * mesh.spacing, (nz - 1) * mesh.spacing);
  const auto id = [&](Index i, Index j, Index k) { return i + nx * (j + ny * k); };
  for (Index k = 0; k + 1 < nz; ++k) {
    for (Index j = 0; j + 1 < ny; ++j) {
      for (Index i = 0; i + 1 < nx; ++i) {
        HexElement el;
        for (int c = 0; c < 8; ++c) {
          el[c] = id(i + kHexCorners[c][0], j + kHexCorners[c][1], k + kHexCorners[c][2]);
        }
        mesh.elements.push_back(el);
      }
    }
  }
  rebuild_facets(mesh, {});
  return mesh;
}

bool is_snapped(const HexMesh& mesh, const ScattererSpec& spec) {
  for (int a = 0; a < 3; ++a) {
    if (lattice_coordinate(mesh, spec.lower[a], a) < 0 || lattice_coordinate(mesh, spec.upper[a], a) < 0) {
      return false;
    }
  }
  return true;
}

HexMesh embed_pec_scatterer(const HexMesh& mesh, const ScattererSpec& spec) {
  if (spec.empty()) return mesh;
  if (!is_snapped(mesh, spec)) throw std::invalid_argument("embed_pec_scatterer: box corners are not grid nodes");
  std::array<Index, 3> lo{};
  std::array<Index, 3> hi{};
  for (int a = 0; a < 3; ++a) {
    lo[a] = lattice_coordinate(mesh, spec.lower[a], a);
    hi[a] = lattice_coordinate(mesh, spec.upper[a], a);
    if (lo[a] <= 0 || hi[a] >= mesh.grid_nodes[a] - 1) {
      throw std::invalid_argument("embed_pec_scatterer: box touches or leaves the outer boundary");
    }
  }

  const auto inside = [&](const HexElement& el) {
    // Lower corner of the element in lattice units decides containment.
    const auto& l0 = mesh.lattice[el[0]];
    for (int a = 0; a < 3; ++a) {
      if (l0[a] < lo[a] || l0[a] >= hi[a]) return false;
    }
    return true;
  };

  std::map<FaceKey, FacetKind> previous;
  for (const Facet& f : mesh.facets) previous[sorted_key(f.nodes)] = f.kind;

  HexMesh out;
  out.grid_nodes = mesh.grid_nodes;
  out.spacing = mesh.spacing;
  out.lower = mesh.lower;
  out.upper = mesh.upper;
  std::vector<char> used(mesh.nodes.size(), 0);
  std::vector<HexElement> kept;
  for (const HexElement& el : mesh.elements) {
    if (inside(el)) continue;
    kept.push_back(el);
    for (Index n : el) used[n] = 1;
  }
  std::vector<Index> renumber(mesh.nodes.size(), -1);
  for (std::size_t n = 0; n < mesh.nodes.size(); ++n) {
    if (!used[n]) continue;
    renumber[n] = static_cast<Index>(out.nodes.size());
    out.nodes.push_back(mesh.nodes[n]);
    out.lattice.push_back(mesh.lattice[n]);
  }
  for (HexElement el : kept) {
    for (Index& n : el) n = renumber[n];
    out.elements.push_back(el);
  }
  std::map<FaceKey, FacetKind> remapped;
  for (const auto& [key, kind] : previous) {
    FaceKey k = key;
    bool ok = true;
    for (Index& n : k) {
      n = renumber[n];
      ok = ok && n >= 0;
    }
    if (ok) remapped[sorted_key(k)] = kind;
  }
  rebuild_facets(out, remapped);
  return out;
}

HexMesh classify_boundary(const HexMesh& mesh, std::span<const SymmetryPlane> planes) {
  for (std::size_t a = 0; a < planes.size(); ++a) {
    if (planes[a].axis < 0 || planes[a].axis > 2) throw std::invalid_argument("classify_boundary: bad axis");
    if (planes[a].kind != FacetKind::SymmetryPlane && planes[a].kind != FacetKind::AntisymmetryPlane) {
      throw std::invalid_argument("classify_boundary: plane kind must be symmetry or antisymmetry");
    }
    for (std::size_t b = 0; b < a; ++b) {
      if (planes[a].axis == planes[b].axis && planes[a].side == planes[b].side) {
        throw std::invalid_argument("classify_boundary: duplicate plane declaration");
      }
    }
  }
  HexMesh out = mesh;
  const double tol = 1e-9 * std::max(1.0, mesh.spacing);
  for (Facet& f : out.facets) {
    if (f.kind == FacetKind::Pec) continue;
    f.kind = FacetKind::Exterior;
    for (const SymmetryPlane& p : planes) {
      const double coord = p.side == BoxSide::Min ? mesh.lower[p.axis] : mesh.upper[p.axis];
      bool all = true;
      for (Index v : f.nodes) all = all && std::abs(mesh.nodes[v][p.axis] - coord) < tol;
      if (all) f.kind = p.kind;
    }
  }
  return out;
}

NodeIncidence node_elements(const HexMesh& mesh) {
  NodeIncidence inc;
  inc.offsets.assign(mesh.nodes.size() + 1, 0);
  for (const HexElement& el : mesh.elements) {
    for (Index n : el) ++inc.offsets[n + 1];
  }
  for (std::size_t n = 0; n < mesh.nodes.size(); ++n) inc.offsets[n + 1] += inc.offsets[n];
  inc.elements.resize(static_cast<std::size_t>(inc.offsets.back()));
  std::vector<Index> fill(inc.offsets.begin(), inc.offsets.end() - 1);
  for (Index e = 0; e < mesh.element_count(); ++e) {
    for (Index n : mesh.elements[e]) inc.elements[fill[n]++] = e;
  }
  return inc;
}

NodeIncidence node_facets(const HexMesh& mesh) {
  NodeIncidence inc;
  inc.offsets.assign(mesh.nodes.size() + 1, 0);
  for (const Facet& f : mesh.facets) {
    for (Index n : f.nodes) ++inc.offsets[n + 1];
  }
  for (std::size_t n = 0; n < mesh.nodes.size(); ++n) inc.offsets[n + 1] += inc.offsets[n];
  inc.elements.resize(static_cast<std::size_t>(inc.offsets.back()));
  std::vector<Index> fill(inc.offsets.begin(), inc.offsets.end() - 1);
  for (Index f = 0; f < mesh.facet_count(); ++f) {
    for (Index n : mesh.facets[f].nodes) inc.elements[fill[n]++] = f;
  }
  return inc;
}

void write_mesh(std::ostream& os, const HexMesh& mesh) {
  os.precision(17);
  os << "mesh " << mesh.node_count() << ' ' << mesh.element_count() << ' ' << mesh.facet_count() << ' '
     << mesh.spacing << '\n';
  for (Index i = 0; i < mesh.node_count(); ++i) {
    const Vec3& p = mesh.nodes[i];
    os << "node " << i << ' ' << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  }
  for (Index e = 0; e < mesh.element_count(); ++e) {
    os << "element " << e;
    for (Index n : mesh.elements[e]) os << ' ' << n;
    os << '\n';
  }
  for (Index f = 0; f < mesh.facet_count(); ++f) {
    const Facet& fc = mesh.facets[f];
    os << "facet " << f << ' ' << to_string(fc.kind) << ' ' << fc.element;
    for (Index n : fc.nodes) os << ' ' << n;
    os << ' ' << fc.normal.x() << ' ' << fc.normal.y() << ' ' << fc.normal.z() << '\n';
  }
}

}  // namespace pfem
