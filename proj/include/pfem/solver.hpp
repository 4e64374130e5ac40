// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "pfem/fabric.hpp"
#include "pfem/sparse.hpp"
#include "pfem/types.hpp"

namespace pfem {

enum class StorageKind { Lower = 1, Redundant = 2 };
enum class PrecondKind { Dp, Icp, Bicp };

const char* to_string(PrecondKind kind);

/// One rank's rows of the symmetrized matrix in storage #1 or #2.
class RankMatrix {
 public:
  RankMatrix() = default;
  static RankMatrix from_rows(const CsrBlock<Complex>& rows, StorageKind storage);

  StorageKind storage() const { return storage_; }
  Index dim() const;
  Index first_row() const;
  Index end_row() const;
  Index stored_values() const;

  /// This rank's contribution to A x (see spmv_partial).
  SparseVector<Complex> multiply_partial(std::span<const Complex> x) const;

  /// Entries (k, A_ik) with k <= i of an owned row.
  std::span<const Index> lower_cols(Index row) const;
  std::span<const Complex> lower_values(Index row) const;
  Complex diagonal(Index row) const;

  /// Throws ConfigError unless the storage is #2.
  const RedundantRows<Complex>& redundant() const;
  const LowerSymmetricRows<Complex>& lower() const;

 private:
  StorageKind storage_ = StorageKind::Redundant;
  RedundantRows<Complex> redundant_;
  LowerSymmetricRows<Complex> lower_;
};

/// Inverse diagonal of the owned rows.
struct DiagonalPreconditioner {
  Index first_row = 0;
  CVector inverse;
};

/// Owned rows of the incomplete factor L plus a column-access twin of the
/// owned columns. Twin entries of rows owned elsewhere keep a copy of the value.
struct CholeskyFactor {
  CsrBlock<Complex> rows;  // columns <= row, diagonal last
  std::vector<Index> twin_ptr;
  std::vector<Index> twin_rows;
  /// >= 0: slot in rows.value_array(); < 0: -(1 + k) into remote_values.
  std::vector<Index> twin_refs;
  std::vector<Complex> remote_values;
  bool block_local = false;

  Index first_row() const { return rows.first_row(); }
  Index end_row() const { return rows.end_row(); }
  Complex pivot(Index row) const { return rows.values(row).back(); }
  /// Entries (k, L_kj), k > j ascending, of an owned column j.
  Index twin_begin(Index col) const { return twin_ptr[col - first_row()]; }
  Index twin_end(Index col) const { return twin_ptr[col - first_row() + 1]; }
  Complex twin_value(Index pos) const {
    const Index ref = twin_refs[pos];
    return ref >= 0 ? rows.value_array()[ref] : remote_values[-(ref + 1)];
  }
  Index stored_values() const { return rows.nnz() + static_cast<Index>(remote_values.size()); }
};

/// sqrt(a_jj - sum_{k<j} L_jk^2), principal branch. The sum runs over
/// ascending k.
Complex ic_pivot(std::span<const Index> cols, std::span<const Complex> vals, Index j, Complex a_jj);

/// (a_ij - sum_{k<j} L_ik L_jk) / L_jj with the sum over ascending k.
Complex ic_offdiag(std::span<const Index> cols_i, std::span<const Complex> vals_i, std::span<const Index> cols_j,
                   std::span<const Complex> vals_j, Index j, Complex a_ij, Complex l_jj);

DiagonalPreconditioner build_dp(const RankMatrix& a);

/// Column-parallel IC(0) on the full lower pattern: one barrier per column
/// step plus one for the twin exchange. Requires storage #2.
CholeskyFactor build_icp(Communicator& comm, const RankMatrix& a, const RowPartition& partition);

/// IC(0) of this rank's diagonal block only; cross-block entries are absent.
CholeskyFactor build_bicp(const RankMatrix& a, const RowPartition& partition, int rank);

/// Solves L L^T x = b and returns the full x on every rank. A block-local
/// factor solves locally and concatenates after each triangular solve;
/// otherwise the solves are pipelined over ranks with segment broadcasts.
CVector forward_back_substitute(Communicator& comm, const CholeskyFactor& factor, const RowPartition& partition,
                                const CVector& b, ConcatStrategy strategy = ConcatStrategy::Spmd);

struct Preconditioner {
  PrecondKind kind = PrecondKind::Dp;
  DiagonalPreconditioner diagonal;
  CholeskyFactor factor;

  Index stored_values() const {
    return kind == PrecondKind::Dp ? diagonal.inverse.size() : factor.stored_values();
  }
};

Preconditioner build_preconditioner(Communicator& comm, PrecondKind kind, const RankMatrix& a,
                                    const RowPartition& partition);

struct SolverOptions {
  double tol = 1e-6;
  Index max_iter = 1000;
  ConcatStrategy concat = ConcatStrategy::Spmd;
};

struct SolveReport {
  Index iterations = 0;
  std::vector<double> residual_history;
  bool converged = false;
  bool breakdown = false;
  std::string breakdown_reason;
};

/// Left-preconditioned conjugate gradient with the unconjugated bilinear form
/// x^T y. Vectors are replicated; each iteration does one distributed product
/// and one concatenation, and the scalar products are evaluated redundantly
/// on the replicated vectors. Returns the full x on every rank.
CVector cg_solve(Communicator& comm, const RankMatrix& a, const CVector& rhs_segment, const Preconditioner& m,
                 const RowPartition& partition, const SolverOptions& options, SolveReport& report);

}  // namespace pfem
