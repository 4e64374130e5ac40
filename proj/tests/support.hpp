// SPDX-License-Identifier: Apache-2.0
//
// Helpers shared by the unit tests and the acceptance binary.

#pragma once

#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "pfem/fabric.hpp"
#include "pfem/sparse.hpp"
#include "pfem/types.hpp"

namespace pfem::testing {

using DenseC = Eigen::MatrixXcd;

/// Rows [first, last) of a dense matrix; exact zeros are left out of the pattern.
inline CsrBlock<Complex> rows_of(const DenseC& a, Index first, Index last) {
  std::vector<Index> ptr{0};
  std::vector<Index> cols;
  std::vector<Complex> vals;
  for (Index i = first; i < last; ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      if (a(i, j) != Complex(0.0)) {
        cols.push_back(j);
        vals.push_back(a(i, j));
      }
    }
    ptr.push_back(static_cast<Index>(cols.size()));
  }
  return CsrBlock<Complex>(a.rows(), first, std::move(ptr), std::move(cols), std::move(vals));
}

inline CsrBlock<Complex> rows_of(const DenseC& a) { return rows_of(a, 0, a.rows()); }

/// Random complex symmetric matrix with roughly `density` structural fill and
/// a full diagonal.
inline DenseC random_symmetric(Index n, double density, std::uint64_t seed, double diagonal_boost = 0.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution keep(density);
  DenseC a = DenseC::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < i; ++j) {
      if (!keep(rng)) continue;
      const Complex v(u(rng), u(rng));
      a(i, j) = v;
      a(j, i) = v;
    }
    a(i, i) = Complex(u(rng) + diagonal_boost, u(rng));
  }
  return a;
}

inline DenseC random_sparse(Index n, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution keep(density);
  DenseC a = DenseC::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (keep(rng)) a(i, j) = Complex(u(rng), u(rng));
    }
  }
  return a;
}

/// Real SPD matrix G G^T + n I as a complex matrix.
inline DenseC random_spd(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd g(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) g(i, j) = u(rng);
  }
  const Eigen::MatrixXd spd = g * g.transpose() + static_cast<double>(n) * Eigen::MatrixXd::Identity(n, n);
  return spd.cast<Complex>();
}

inline CVector random_vector(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CVector v(n);
  for (Index i = 0; i < n; ++i) v[i] = Complex(u(rng), u(rng));
  return v;
}

/// Per-rank results collected by `on_ranks`.
template <typename T>
std::vector<T> on_ranks(int ranks, const std::function<T(Communicator&)>& body, FabricOptions options = {}) {
  CommFabric fabric(ranks, options);
  std::vector<T> out(static_cast<std::size_t>(ranks));
  fabric.run([&](Communicator& comm) { out[comm.rank()] = body(comm); });
  return out;
}

inline double max_abs(const DenseC& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

}  // namespace pfem::testing
