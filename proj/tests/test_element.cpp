// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <gtest/gtest.h>

#include "pfem/element.hpp"
#include "pfem/mesh.hpp"

using namespace pfem;

namespace {

std::array<Vec3, 8> box_corners(const Vec3& lo, const Vec3& size) {
  std::array<Vec3, 8> c;
  for (int a = 0; a < 8; ++a) {
    for (int i = 0; i < 3; ++i) c[a][i] = lo[i] + kHexCorners[a][i] * size[i];
  }
  return c;
}

// 1D integrals of the linear hat functions on [0, 1]:
// mass int phi_a phi_b, stiffness int phi_a' phi_b', mixed int phi_a phi_b'.
constexpr double kMass1[2][2] = {{1.0 / 3, 1.0 / 6}, {1.0 / 6, 1.0 / 3}};
constexpr double kStiff1[2][2] = {{1.0, -1.0}, {-1.0, 1.0}};
constexpr double kMixed1[2][2] = {{-0.5, 0.5}, {-0.5, 0.5}};

// int_{[0,1]^3} d_p N_a d_q N_b, with p or q = -1 meaning no derivative.
double unit_integral(int a, int b, int p, int q) {
  double v = 1.0;
  for (int axis = 0; axis < 3; ++axis) {
    const int ia = kHexCorners[a][axis];
    const int ib = kHexCorners[b][axis];
    if (axis == p && axis == q) {
      v *= kStiff1[ia][ib];
    } else if (axis == p) {
      v *= kMixed1[ib][ia];
    } else if (axis == q) {
      v *= kMixed1[ia][ib];
    } else {
      v *= kMass1[ia][ib];
    }
  }
  return v;
}

}  // namespace

TEST(Quadrature, GaussLegendreIntegratesPolynomials) {
  for (int n = 1; n <= 4; ++n) {
    const auto rule = gauss_legendre(n);
    for (int deg = 0; deg <= 2 * n - 1; ++deg) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += rule.weights[k] * std::pow(rule.points[k], deg);
      const double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
      EXPECT_NEAR(s, exact, 1e-14) << "n=" << n << " degree " << deg;
    }
  }
  EXPECT_THROW(gauss_legendre(0), std::invalid_argument);
  EXPECT_THROW(gauss_legendre(5), std::invalid_argument);
}

TEST(Shape, PartitionOfUnityAndNodalInterpolation) {
  for (int a = 0; a < 8; ++a) {
    const Vec3 xi(2.0 * kHexCorners[a][0] - 1, 2.0 * kHexCorners[a][1] - 1, 2.0 * kHexCorners[a][2] - 1);
    const auto n = hex_shape(xi);
    for (int b = 0; b < 8; ++b) EXPECT_DOUBLE_EQ(n[b], a == b ? 1.0 : 0.0);
  }
  const Vec3 xi(0.3, -0.7, 0.1);
  EXPECT_NEAR(hex_shape(xi).sum(), 1.0, 1e-15);
  EXPECT_NEAR(hex_shape_derivatives(xi).colwise().sum().norm(), 0.0, 1e-15);
}

TEST(Element, ConstantFieldHasNoCurlOrDivergence) {
  const auto corners = box_corners(Vec3(0.2, -0.1, 0.5), Vec3(0.1, 0.15, 0.07));
  const auto m = element_matrices(corners, Complex(2.0, -0.1), Complex(1.5), 3.0);
  for (int c = 0; c < 3; ++c) {
    Eigen::Matrix<Complex, 24, 1> h = Eigen::Matrix<Complex, 24, 1>::Zero();
    for (int a = 0; a < 8; ++a) h[3 * a + c] = 1.0;
    EXPECT_LT((m.curl_curl * h).norm(), 1e-12);
    EXPECT_LT((m.penalty * h).norm(), 1e-12);
  }
}

TEST(Element, MassSumsToVolume) {
  const Vec3 size(0.1, 0.15, 0.07);
  const double k0 = 3.0;
  const Complex mu(1.5, -0.2);
  const auto m = element_matrices(box_corners(Vec3::Zero(), size), 1.0, mu, k0);
  for (int c = 0; c < 3; ++c) {
    Complex sum = 0.0;
    for (int a = 0; a < 8; ++a) {
      for (int b = 0; b < 8; ++b) sum += m.mass(3 * a + c, 3 * b + c);
    }
    const Complex expected = k0 * k0 * mu * size.prod();
    EXPECT_NEAR(std::abs(sum - expected), 0.0, 1e-14 * std::abs(expected));
  }
}

TEST(Element, UnitCubeMatchesAnalyticIntegrals) {
  const auto m = element_matrices(box_corners(Vec3::Zero(), Vec3::Ones()), 1.0, 1.0, 1.0);
  double worst = 0.0;
  for (int a = 0; a < 8; ++a) {
    for (int b = 0; b < 8; ++b) {
      double lap = 0.0;
      for (int p = 0; p < 3; ++p) lap += unit_integral(a, b, p, p);
      for (int c = 0; c < 3; ++c) {
        for (int d = 0; d < 3; ++d) {
          const double mass = c == d ? unit_integral(a, b, -1, -1) : 0.0;
          // (grad N_a x e_c) . (grad N_b x e_d)
          const double curl = (c == d ? lap : 0.0) - unit_integral(a, b, d, c);
          const double pen = unit_integral(a, b, c, d);
          const int i = 3 * a + c, j = 3 * b + d;
          worst = std::max({worst, std::abs(m.mass(i, j) - mass), std::abs(m.curl_curl(i, j) - curl),
                            std::abs(m.penalty(i, j) - pen)});
        }
      }
    }
  }
  EXPECT_LT(worst, 1e-14);
  EXPECT_LT((m.combined() - (m.curl_curl - m.mass + m.penalty)).norm(), 1e-15);
}

TEST(Element, MaterialScaling) {
  const auto corners = box_corners(Vec3::Zero(), Vec3(0.1, 0.1, 0.1));
  const auto base = element_matrices(corners, 1.0, 1.0, 2.0, 2, 1.0);
  const auto scaled = element_matrices(corners, 4.0, Complex(2.0, 1.0), 2.0, 2, 0.5);
  EXPECT_LT((scaled.curl_curl - base.curl_curl / 4.0).norm(), 1e-12 * base.curl_curl.norm());
  EXPECT_LT((scaled.mass - base.mass * Complex(2.0, 1.0)).norm(), 1e-12 * base.mass.norm());
  EXPECT_LT((scaled.penalty - base.penalty * 0.5).norm(), 1e-12 * base.penalty.norm());
}

TEST(Abc, UnitFacetSurfaceMass) {
  const std::array<Vec3, 4> q{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0)};
  const auto abc = abc_facet_matrices(q, 1.0);
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const int shared = (a == b) ? 2 : ((a ^ b) == 2 ? 0 : 1);  // corners 0-2 and 1-3 are opposite
      const double expected = shared == 2 ? 1.0 / 9 : shared == 1 ? 1.0 / 18 : 1.0 / 36;
      for (int c = 0; c < 3; ++c) {
        for (int d = 0; d < 3; ++d) {
          const Complex v = abc.first_order(3 * a + c, 3 * b + d);
          if (c == d && c < 2) {
            EXPECT_NEAR(std::abs(v - kJ * expected), 0.0, 1e-15);
          } else {
            EXPECT_EQ(v, Complex(0.0));
          }
        }
      }
    }
  }
}

TEST(Abc, NormalComponentRowsVanish) {
  const std::array<Vec3, 4> q{Vec3(0.3, 0, 0), Vec3(0.3, 0.2, 0), Vec3(0.3, 0.2, 0.1), Vec3(0.3, 0, 0.1)};
  const auto abc = abc_facet_matrices(q, 2.5);
  for (int a = 0; a < 4; ++a) {
    EXPECT_EQ(abc.combined().row(3 * a).norm(), 0.0);
    EXPECT_EQ(abc.combined().col(3 * a).norm(), 0.0);
  }
  EXPECT_GT(abc.second_order.norm(), 0.0);
}

namespace {

// Applies the second-order block, assembled over an n x n patch of the unit
// square, to the nodal samples of f (x component only) and returns the value
// at the centre node divided by h^2 and j/(2 k0): a discrete -Laplacian.
template <typename F>
Complex patch_laplacian(int n, double k0, F f) {
  const double h = 1.0 / n;
  const int side = n + 1;
  Eigen::MatrixXcd k = Eigen::MatrixXcd::Zero(side * side, side * side);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const std::array<Vec3, 4> q{Vec3(i * h, j * h, 0), Vec3((i + 1) * h, j * h, 0),
                                  Vec3((i + 1) * h, (j + 1) * h, 0), Vec3(i * h, (j + 1) * h, 0)};
      const std::array<int, 4> id{j * side + i, j * side + i + 1, (j + 1) * side + i + 1, (j + 1) * side + i};
      const auto blk = abc_facet_matrices(q, k0).second_order;
      for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) k(id[a], id[b]) += blk(3 * a, 3 * b);
      }
    }
  }
  Eigen::VectorXcd v(side * side);
  for (int j = 0; j < side; ++j) {
    for (int i = 0; i < side; ++i) v[j * side + i] = f(i * h, j * h);
  }
  const int centre = (n / 2) * side + n / 2;
  return (k * v)[centre] / (h * h) / (kJ / (2.0 * k0));
}

}  // namespace

TEST(Abc, SecondOrderMatchesFiniteDifferenceLaplacian) {
  // Quadratic field: the five-point Laplacian is exact, so the match is to rounding.
  auto quad = [](double x, double y) { return 3.0 * x * x - 2.0 * x * y + 0.5 * y * y + x; };
  const double five_point = -(6.0 + 1.0);
  EXPECT_NEAR(std::abs(patch_laplacian(8, 1.3, quad) - five_point), 0.0, 1e-9);

  // Smooth field: the error against the analytic Laplacian falls as h^2.
  auto smooth = [](double x, double y) { return std::sin(2.0 * x) * std::cos(y); };
  const double exact = 5.0 * std::sin(1.0) * std::cos(0.5);  // -lap at (0.5, 0.5)
  const double e1 = std::abs(patch_laplacian(8, 1.0, smooth) - exact);
  const double e2 = std::abs(patch_laplacian(16, 1.0, smooth) - exact);
  EXPECT_GT(e1 / e2, 3.5);
  EXPECT_LT(e2, 1e-2);
}

TEST(Incident, OriginAndMagnitude) {
  PlaneWave w;
  w.direction = Vec3(1, 2, 2).normalized();
  w.polarization = CVec3(Complex(2, 0), Complex(-1, 0.5), Complex(0, -0.25));
  w.polarization -= w.direction.cast<Complex>() * w.direction.cast<Complex>().dot(w.polarization);
  w.k0 = 4.0;
  EXPECT_LT((incident_field(w, Vec3::Zero()).h - w.polarization).norm(), 1e-15);
  const double mag = w.polarization.norm();
  for (const Vec3& p : {Vec3(0.3, -1.0, 2.0), Vec3(-5, 4, 0.1), Vec3(10, 10, 10)}) {
    EXPECT_NEAR(incident_field(w, p).h.norm(), mag, 1e-13);
  }
}

TEST(Incident, CentralDifferenceDivergenceAndCurl) {
  PlaneWave w;
  w.direction = Vec3(0, 0.6, 0.8);
  w.polarization = CVec3(1, 0, 0);
  w.k0 = 2.0;
  const Vec3 x0(0.3, 0.1, -0.2);
  double prev = 0.0;
  for (double h : {1e-2, 5e-3}) {
    Complex div = 0.0;
    Eigen::Matrix<Complex, 3, 3> grad;  // grad(i, j) = d H_i / d x_j
    for (int j = 0; j < 3; ++j) {
      Vec3 e = Vec3::Zero();
      e[j] = h;
      const CVec3 d = (incident_field(w, x0 + e).h - incident_field(w, x0 - e).h) / (2 * h);
      grad.col(j) = d;
      div += d[j];
    }
    EXPECT_LT(std::abs(div), 1e-12);
    const CVec3 curl(grad(2, 1) - grad(1, 2), grad(0, 2) - grad(2, 0), grad(1, 0) - grad(0, 1));
    const double err = (curl - incident_field(w, x0).curl_h).norm();
    EXPECT_LT(err, 10 * w.k0 * w.k0 * w.k0 * h * h);
    if (prev > 0.0) {
      EXPECT_GT(prev / err, 3.5);
    }
    prev = err;
  }
}

TEST(Incident, OutgoingFaceLoadVanishes) {
  PlaneWave w;
  w.direction = Vec3::UnitZ();
  w.polarization = CVec3(0.6, Complex(0, 0.8), 0);
  w.k0 = 2 * M_PI;
  const std::array<Vec3, 4> q{Vec3(0, 0, 1), Vec3(0.1, 0, 1), Vec3(0.1, 0.1, 1), Vec3(0, 0.1, 1)};
  const auto load = incident_facet_load(q, Vec3::UnitZ(), w);
  EXPECT_LT(load.norm(), 1e-15);
  // The face the wave enters through does carry a load.
  const std::array<Vec3, 4> back{Vec3(0, 0, 0), Vec3(0, 0.1, 0), Vec3(0.1, 0.1, 0), Vec3(0.1, 0, 0)};
  EXPECT_GT(incident_facet_load(back, -Vec3::UnitZ(), w).norm(), 1e-3);
}

TEST(Incident, ZeroAmplitudeGivesZeroLoad) {
  PlaneWave w;
  w.polarization = CVec3::Zero();
  w.k0 = 1.0;
  const std::array<Vec3, 4> q{Vec3(0, 0, 0), Vec3(0, 1, 0), Vec3(0, 1, 1), Vec3(0, 0, 1)};
  EXPECT_EQ(incident_facet_load(q, -Vec3::UnitX(), w).norm(), 0.0);
}
