// SPDX-License-Identifier: Apache-2.0

#include "pfem/element.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "pfem/mesh.hpp"

namespace pfem {

namespace {

constexpr std::array<std::array<double, 2>, 4> kQuadCorners{{{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}};

Eigen::Vector4d quad_shape(double s, double t) {
  Eigen::Vector4d n;
  for (int k = 0; k < 4; ++k) n[k] = 0.25 * (1 + s * kQuadCorners[k][0]) * (1 + t * kQuadCorners[k][1]);
  return n;
}

Eigen::Matrix<double, 4, 2> quad_shape_derivatives(double s, double t) {
  Eigen::Matrix<double, 4, 2> d;
  for (int k = 0; k < 4; ++k) {
    d(k, 0) = 0.25 * kQuadCorners[k][0] * (1 + t * kQuadCorners[k][1]);
    d(k, 1) = 0.25 * (1 + s * kQuadCorners[k][0]) * kQuadCorners[k][1];
  }
  return d;
}

// Eigen conjugates complex cross products; fields need the plain one.
CVec3 cross(const CVec3& a, const CVec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 reference_corner(int a) {
  return Vec3(2.0 * kHexCorners[a][0] - 1.0, 2.0 * kHexCorners[a][1] - 1.0, 2.0 * kHexCorners[a][2] - 1.0);
}

/// Physical shape-function gradients (8 x 3) and Jacobian determinant.
std::pair<Eigen::Matrix<double, 8, 3>, double> physical_gradients(const std::array<Vec3, 8>& corners,
                                                                  const Vec3& xi) {
  const Eigen::Matrix<double, 8, 3> dref = hex_shape_derivatives(xi);
  Eigen::Matrix3d jac = Eigen::Matrix3d::Zero();  // jac(i, j) = dx_i / dxi_j
  for (int a = 0; a < 8; ++a) jac += corners[a] * dref.row(a);
  const double det = jac.determinant();
  if (!(det > 0.0)) throw std::invalid_argument("degenerate hexahedron: non-positive Jacobian");
  return {dref * jac.inverse(), det};
}

/// Tangential frame of a planar quadrilateral facet.
struct FacetFrame {
  Vec3 origin;
  Vec3 t1;
  Vec3 t2;
  Vec3 normal;
  std::array<Eigen::Vector2d, 4> local;
};

FacetFrame facet_frame(const std::array<Vec3, 4>& corners) {
  FacetFrame f;
  f.origin = corners[0];
  const Vec3 e1 = corners[1] - corners[0];
  const Vec3 e3 = corners[3] - corners[0];
  f.normal = e1.cross(e3);
  const double area_scale = f.normal.norm();
  if (!(area_scale > 0.0)) throw std::invalid_argument("degenerate facet");
  f.normal /= area_scale;
  const double diameter = (corners[2] - corners[0]).norm();
  if (std::abs((corners[2] - corners[0]).dot(f.normal)) > 1e-9 * diameter) {
    throw std::invalid_argument("non-planar facet");
  }
  f.t1 = e1.normalized();
  f.t2 = f.normal.cross(f.t1);
  for (int k = 0; k < 4; ++k) {
    const Vec3 r = corners[k] - f.origin;
    f.local[k] = Eigen::Vector2d(r.dot(f.t1), r.dot(f.t2));
  }
  return f;
}

/// Shape values, tangential gradients (4 x 3) and area element at (s, t).
struct FacetPoint {
  Eigen::Vector4d n;
  Eigen::Matrix<double, 4, 3> grad_t;
  double area;
  Vec3 position;
};

FacetPoint facet_point(const FacetFrame& f, double s, double t) {
  FacetPoint p;
  p.n = quad_shape(s, t);
  const Eigen::Matrix<double, 4, 2> dref = quad_shape_derivatives(s, t);
  Eigen::Matrix2d jac = Eigen::Matrix2d::Zero();
  for (int k = 0; k < 4; ++k) jac += f.local[k] * dref.row(k);
  p.area = std::abs(jac.determinant());
  const Eigen::Matrix<double, 4, 2> g = dref * jac.inverse();
  for (int k = 0; k < 4; ++k) p.grad_t.row(k) = (g(k, 0) * f.t1 + g(k, 1) * f.t2).transpose();
  p.position = f.origin;
  for (int k = 0; k < 4; ++k) p.position += p.n[k] * (f.t1 * f.local[k][0] + f.t2 * f.local[k][1]);
  return p;
}

}  // namespace

MaterialParams MaterialParams::uniform(Index elements, double k0, Complex eps_r, Complex mu_r) {
  MaterialParams p;
  p.k0 = k0;
  p.eps_r.assign(static_cast<std::size_t>(elements), eps_r);
  p.mu_r.assign(static_cast<std::size_t>(elements), mu_r);
  return p;
}

void MaterialParams::validate(Index elements) const {
  if (!(k0 > 0.0)) throw std::invalid_argument("MaterialParams: k0 must be positive");
  if (static_cast<Index>(eps_r.size()) != elements || static_cast<Index>(mu_r.size()) != elements) {
    throw std::invalid_argument("MaterialParams: one eps_r and mu_r per element required");
  }
  for (std::size_t e = 0; e < eps_r.size(); ++e) {
    if (eps_r[e] == Complex(0.0)) throw std::invalid_argument("MaterialParams: eps_r = 0 on element " + std::to_string(e));
  }
}

GaussRule gauss_legendre(int points) {
  switch (points) {
    case 1:
      return {{0.0}, {2.0}};
    case 2: {
      const double a = 1.0 / std::sqrt(3.0);
      return {{-a, a}, {1.0, 1.0}};
    }
    case 3: {
      const double a = std::sqrt(0.6);
      return {{-a, 0.0, a}, {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0}};
    }
    case 4: {
      const double s = 2.0 / 7.0 * std::sqrt(6.0 / 5.0);
      const double a = std::sqrt(3.0 / 7.0 - s);
      const double b = std::sqrt(3.0 / 7.0 + s);
      const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
      const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
      return {{-b, -a, a, b}, {wb, wa, wa, wb}};
    }
    default:
      throw std::invalid_argument("gauss_legendre: supported orders are 1..4");
  }
}

Eigen::Matrix<double, 8, 1> hex_shape(const Vec3& xi) {
  Eigen::Matrix<double, 8, 1> n;
  for (int a = 0; a < 8; ++a) {
    const Vec3 c = reference_corner(a);
    n[a] = 0.125 * (1 + xi[0] * c[0]) * (1 + xi[1] * c[1]) * (1 + xi[2] * c[2]);
  }
  return n;
}

Eigen::Matrix<double, 8, 3> hex_shape_derivatives(const Vec3& xi) {
  Eigen::Matrix<double, 8, 3> d;
  for (int a = 0; a < 8; ++a) {
    const Vec3 c = reference_corner(a);
    const double fx = 1 + xi[0] * c[0];
    const double fy = 1 + xi[1] * c[1];
    const double fz = 1 + xi[2] * c[2];
    d(a, 0) = 0.125 * c[0] * fy * fz;
    d(a, 1) = 0.125 * fx * c[1] * fz;
    d(a, 2) = 0.125 * fx * fy * c[2];
  }
  return d;
}

ElementMatrices element_matrices(const std::array<Vec3, 8>& corners, Complex eps_r, Complex mu_r, double k0,
                                 int gauss_points, double penalty_weight) {
  if (eps_r == Complex(0.0)) throw std::invalid_argument("element_matrices: eps_r = 0");
  const GaussRule rule = gauss_legendre(gauss_points);
  Eigen::Matrix<double, 24, 24> curl = Eigen::Matrix<double, 24, 24>::Zero();
  Eigen::Matrix<double, 24, 24> mass = Eigen::Matrix<double, 24, 24>::Zero();
  Eigen::Matrix<double, 24, 24> pen = Eigen::Matrix<double, 24, 24>::Zero();
  for (std::size_t i = 0; i < rule.points.size(); ++i) {
    for (std::size_t j = 0; j < rule.points.size(); ++j) {
      for (std::size_t k = 0; k < rule.points.size(); ++k) {
        const Vec3 xi(rule.points[i], rule.points[j], rule.points[k]);
        const auto [grad, det] = physical_gradients(corners, xi);
        const Eigen::Matrix<double, 8, 1> n = hex_shape(xi);
        const double w = rule.weights[i] * rule.weights[j] * rule.weights[k] * det;
        const Eigen::Matrix<double, 8, 8> nn = n * n.transpose();
        const Eigen::Matrix<double, 8, 8> gg = grad * grad.transpose();
        for (int a = 0; a < 8; ++a) {
          for (int b = 0; b < 8; ++b) {
            for (int c = 0; c < 3; ++c) {
              mass(3 * a + c, 3 * b + c) += w * nn(a, b);
              for (int d = 0; d < 3; ++d) {
                // curl(N_a e_c) . curl(N_b e_d) = delta_cd grad N_a . grad N_b - d_d N_a d_c N_b
                const double cc = (c == d ? gg(a, b) : 0.0) - grad(a, d) * grad(b, c);
                curl(3 * a + c, 3 * b + d) += w * cc;
                pen(3 * a + c, 3 * b + d) += w * grad(a, c) * grad(b, d);
              }
            }
          }
        }
      }
    }
  }
  ElementMatrices m;
  m.curl_curl = curl.cast<Complex>() / eps_r;
  m.mass = mass.cast<Complex>() * (k0 * k0 * mu_r);
  m.penalty = pen.cast<Complex>() * penalty_weight;
  return m;
}

AbcFacetMatrices abc_facet_matrices(const std::array<Vec3, 4>& corners, double k0, int gauss_points) {
  if (!(k0 > 0.0)) throw std::invalid_argument("abc_facet_matrices: k0 must be positive");
  const FacetFrame frame = facet_frame(corners);
  const GaussRule rule = gauss_legendre(gauss_points);
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  Eigen::Matrix4d k = Eigen::Matrix4d::Zero();
  for (std::size_t i = 0; i < rule.points.size(); ++i) {
    for (std::size_t j = 0; j < rule.points.size(); ++j) {
      const FacetPoint p = facet_point(frame, rule.points[i], rule.points[j]);
      const double w = rule.weights[i] * rule.weights[j] * p.area;
      m += w * p.n * p.n.transpose();
      k += w * p.grad_t * p.grad_t.transpose();
    }
  }
  const Eigen::Matrix3d proj = Eigen::Matrix3d::Identity() - frame.normal * frame.normal.transpose();
  AbcFacetMatrices out;
  out.first_order.setZero();
  out.second_order.setZero();
  const Complex c1 = kJ * k0;
  const Complex c2 = kJ / (2.0 * k0);
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      for (int c = 0; c < 3; ++c) {
        for (int d = 0; d < 3; ++d) {
          if (proj(c, d) == 0.0) continue;
          out.first_order(3 * a + c, 3 * b + d) = c1 * (m(a, b) * proj(c, d));
          out.second_order(3 * a + c, 3 * b + d) = c2 * (k(a, b) * proj(c, d));
        }
      }
    }
  }
  return out;
}

ElementBlock divergence_surface_matrix(const std::array<Vec3, 8>& corners, int local_face, const Vec3& normal,
                                       int gauss_points) {
  if (local_face < 0 || local_face >= 6) throw std::invalid_argument("divergence_surface_matrix: bad face");
  const GaussRule rule = gauss_legendre(gauss_points);
  std::array<Vec3, 4> ref;
  std::array<Vec3, 4> phys;
  for (int k = 0; k < 4; ++k) {
    ref[k] = reference_corner(kHexFaces[local_face][k]);
    phys[k] = corners[kHexFaces[local_face][k]];
  }
  Eigen::Matrix<double, 24, 24> b = Eigen::Matrix<double, 24, 24>::Zero();
  for (std::size_t i = 0; i < rule.points.size(); ++i) {
    for (std::size_t j = 0; j < rule.points.size(); ++j) {
      const double s = rule.points[i];
      const double t = rule.points[j];
      const Eigen::Vector4d n2 = quad_shape(s, t);
      const Eigen::Matrix<double, 4, 2> d2 = quad_shape_derivatives(s, t);
      Vec3 xi = Vec3::Zero();
      Vec3 xs = Vec3::Zero();
      Vec3 xt = Vec3::Zero();
      for (int k = 0; k < 4; ++k) {
        xi += n2[k] * ref[k];
        xs += d2(k, 0) * phys[k];
        xt += d2(k, 1) * phys[k];
      }
      for (int axis = 0; axis < 3; ++axis) {
        if (ref[0][axis] == ref[1][axis] && ref[0][axis] == ref[2][axis]) xi[axis] = ref[0][axis];
      }
      const double w = rule.weights[i] * rule.weights[j] * xs.cross(xt).norm();
      const auto [grad, det] = physical_gradients(corners, xi);
      (void)det;
      const Eigen::Matrix<double, 8, 1> n = hex_shape(xi);
      for (int a = 0; a < 8; ++a) {
        if (n[a] == 0.0) continue;
        for (int c = 0; c < 3; ++c) {
          for (int bb = 0; bb < 8; ++bb) {
            for (int d = 0; d < 3; ++d) b(3 * a + c, 3 * bb + d) += w * n[a] * normal[c] * grad(bb, d);
          }
        }
      }
    }
  }
  return b.cast<Complex>();
}

void PlaneWave::validate() const {
  if (std::abs(direction.norm() - 1.0) > 1e-9) throw std::invalid_argument("PlaneWave: direction must be a unit vector");
  if (std::abs(direction.cast<Complex>().dot(polarization)) > 1e-9 * std::max(1.0, polarization.norm())) {
    throw std::invalid_argument("PlaneWave: polarization must be orthogonal to the direction");
  }
  if (!(k0 > 0.0)) throw std::invalid_argument("PlaneWave: k0 must be positive");
}

IncidentSample incident_field(const PlaneWave& wave, const Vec3& point) {
  const Complex phase = std::exp(-kJ * (wave.k0 * wave.direction.dot(point)));
  const CVec3 d = wave.direction.cast<Complex>();
  IncidentSample s;
  s.h = wave.polarization * phase;
  s.curl_h = (-kJ * wave.k0) * cross(d, wave.polarization) * phase;
  return s;
}

FacetLoad incident_facet_load(const std::array<Vec3, 4>& corners, const Vec3& normal, const PlaneWave& wave,
                              int gauss_points) {
  const FacetFrame frame = facet_frame(corners);
  const GaussRule rule = gauss_legendre(gauss_points);
  const Eigen::Matrix3d proj = Eigen::Matrix3d::Identity() - normal * normal.transpose();
  const Vec3 dir_t = proj * wave.direction;
  const CVec3 n = normal.cast<Complex>();
  FacetLoad load = FacetLoad::Zero();
  for (std::size_t i = 0; i < rule.points.size(); ++i) {
    for (std::size_t j = 0; j < rule.points.size(); ++j) {
      const FacetPoint p = facet_point(frame, rule.points[i], rule.points[j]);
      const double w = rule.weights[i] * rule.weights[j] * p.area;
      const IncidentSample inc = incident_field(wave, p.position);
      const CVec3 ht = proj.cast<Complex>() * inc.h;
      const CVec3 ncurl = cross(n, inc.curl_h);
      for (int a = 0; a < 4; ++a) {
        // (j / 2k0) grad_t N_a . grad_t H_t,c with grad_t H = -j k0 d_t H.
        const double tang = 0.5 * p.grad_t.row(a).dot(dir_t.transpose());
        for (int c = 0; c < 3; ++c) {
          load(3 * a + c) += w * (p.n[a] * (kJ * wave.k0 * ht[c] - ncurl[c]) + tang * ht[c]);
        }
      }
    }
  }
  return load;
}

}  // namespace pfem
