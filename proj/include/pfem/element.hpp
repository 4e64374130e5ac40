// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "pfem/types.hpp"

namespace pfem {

/// Element-level block; local dof 3*a + c is component c of corner a.
using ElementBlock = Eigen::Matrix<Complex, 24, 24>;
/// Facet-level block; local dof 3*a + c over the 4 facet corners.
using FacetBlock = Eigen::Matrix<Complex, 12, 12>;
using FacetLoad = Eigen::Matrix<Complex, 12, 1>;

struct MaterialParams {
  double k0 = 1.0;
  std::vector<Complex> eps_r;  // per element
  std::vector<Complex> mu_r;   // per element

  static MaterialParams uniform(Index elements, double k0, Complex eps_r = 1.0, Complex mu_r = 1.0);
  void validate(Index elements) const;
};

struct ElementMatrices {
  ElementBlock curl_curl;  // (1/eps_r) curl W . curl H
  ElementBlock mass;       // k0^2 mu_r W . H
  ElementBlock penalty;    // weight * div W div H

  /// The element bilinear form: curl_curl - mass + penalty.
  ElementBlock combined() const { return curl_curl - mass + penalty; }
};

/// Gauss-Legendre rule on [-1, 1] with 1..4 points.
struct GaussRule {
  std::vector<double> points;
  std::vector<double> weights;
};
GaussRule gauss_legendre(int points);

/// Trilinear shape functions at a reference point in [-1, 1]^3.
Eigen::Matrix<double, 8, 1> hex_shape(const Vec3& xi);
/// Reference derivatives dN_a/dxi_j as an 8 x 3 matrix.
Eigen::Matrix<double, 8, 3> hex_shape_derivatives(const Vec3& xi);

ElementMatrices element_matrices(const std::array<Vec3, 8>& corners, Complex eps_r, Complex mu_r, double k0,
                                 int gauss_points = 2, double penalty_weight = 1.0);

/// Engquist-Majda surface blocks on one planar facet:
///   first_order  = j k0 int W_t . H_t ds
///   second_order = j/(2 k0) int grad_t W_t : grad_t H_t ds
/// i.e. int W . g_ABC(H) after integrating the tangential Laplacian by parts
/// (contour terms dropped). Normal-component rows and columns are zero.
struct AbcFacetMatrices {
  FacetBlock first_order;
  FacetBlock second_order;

  FacetBlock combined() const { return first_order + second_order; }
};

AbcFacetMatrices abc_facet_matrices(const std::array<Vec3, 4>& corners, double k0, int gauss_points = 2);

/// int_face N_a n_c dN_b/dx_d ds over one element face: the surface term of
/// the divergence penalty. Rows of corners off the face vanish.
ElementBlock divergence_surface_matrix(const std::array<Vec3, 8>& corners, int local_face, const Vec3& normal,
                                       int gauss_points = 2);

struct PlaneWave {
  Vec3 direction = Vec3::UnitZ();
  CVec3 polarization = CVec3(1.0, 0.0, 0.0);
  double k0 = 1.0;

  void validate() const;
};

struct IncidentSample {
  CVec3 h;
  CVec3 curl_h;
};

/// H_i = p exp(-j k0 d.x), curl H_i = -j k0 (d x p) exp(-j k0 d.x).
IncidentSample incident_field(const PlaneWave& wave, const Vec3& point);

/// int_facet W . [g_ABC(H_i) - n x curl H_i] ds for the 4 facet corners, with
/// the tangential Laplacian of g_ABC in the same integrated-by-parts form as
/// the matrix blocks.
FacetLoad incident_facet_load(const std::array<Vec3, 4>& corners, const Vec3& normal, const PlaneWave& wave,
                              int gauss_points = 2);

}  // namespace pfem
