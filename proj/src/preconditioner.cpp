// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <string>
#include <tuple>

#include "pfem/solver.hpp"

namespace pfem {

const char* to_string(PrecondKind kind) {
  switch (kind) {
    case PrecondKind::Dp:
      return "dp";
    case PrecondKind::Icp:
      return "icp";
    case PrecondKind::Bicp:
      return "bicp";
  }
  return "?";
}

RankMatrix RankMatrix::from_rows(const CsrBlock<Complex>& rows, StorageKind storage) {
  RankMatrix m;
  m.storage_ = storage;
  if (storage == StorageKind::Redundant) {
    m.redundant_ = RedundantRows<Complex>::from_rows(rows);
  } else {
    m.lower_ = LowerSymmetricRows<Complex>::from_rows(rows);
  }
  return m;
}

Index RankMatrix::dim() const { return storage_ == StorageKind::Redundant ? redundant_.dim() : lower_.dim(); }

Index RankMatrix::first_row() const {
  return storage_ == StorageKind::Redundant ? redundant_.csr().first_row() : lower_.csr().first_row();
}

Index RankMatrix::end_row() const {
  return storage_ == StorageKind::Redundant ? redundant_.csr().end_row() : lower_.csr().end_row();
}

Index RankMatrix::stored_values() const {
  return storage_ == StorageKind::Redundant ? redundant_.stored_values() : lower_.stored_values();
}

SparseVector<Complex> RankMatrix::multiply_partial(std::span<const Complex> x) const {
  return storage_ == StorageKind::Redundant ? spmv_partial(redundant_, x) : spmv_partial(lower_, x);
}

std::span<const Index> RankMatrix::lower_cols(Index row) const {
  return storage_ == StorageKind::Redundant ? redundant_.lower_cols(row) : lower_.lower_cols(row);
}

std::span<const Complex> RankMatrix::lower_values(Index row) const {
  return storage_ == StorageKind::Redundant ? redundant_.lower_values(row) : lower_.lower_values(row);
}

Complex RankMatrix::diagonal(Index row) const {
  const auto c = lower_cols(row);
  if (c.empty() || c.back() != row) return Complex(0.0);
  return lower_values(row).back();
}

const RedundantRows<Complex>& RankMatrix::redundant() const {
  if (storage_ != StorageKind::Redundant) throw ConfigError("incomplete Cholesky needs storage #2");
  return redundant_;
}

const LowerSymmetricRows<Complex>& RankMatrix::lower() const {
  if (storage_ != StorageKind::Lower) throw ConfigError("matrix is not held in storage #1");
  return lower_;
}

Complex ic_pivot(std::span<const Index> cols, std::span<const Complex> vals, Index j, Complex a_jj) {
  Complex s = a_jj;
  for (std::size_t k = 0; k < cols.size() && cols[k] < j; ++k) s -= vals[k] * vals[k];
  if (s == Complex(0.0)) throw BreakdownError("zero pivot in incomplete Cholesky", j);
  return std::sqrt(s);
}

Complex ic_offdiag(std::span<const Index> cols_i, std::span<const Complex> vals_i, std::span<const Index> cols_j,
                   std::span<const Complex> vals_j, Index j, Complex a_ij, Complex l_jj) {
  Complex s = a_ij;
  std::size_t p = 0;
  std::size_t q = 0;
  while (p < cols_i.size() && q < cols_j.size() && cols_i[p] < j && cols_j[q] < j) {
    if (cols_i[p] == cols_j[q]) {
      s -= vals_i[p++] * vals_j[q++];
    } else if (cols_i[p] < cols_j[q]) {
      ++p;
    } else {
      ++q;
    }
  }
  return s / l_jj;
}

DiagonalPreconditioner build_dp(const RankMatrix& a) {
  DiagonalPreconditioner d;
  d.first_row = a.first_row();
  d.inverse.resize(a.end_row() - a.first_row());
  for (Index i = a.first_row(); i < a.end_row(); ++i) {
    const Complex diag = a.diagonal(i);
    if (diag == Complex(0.0)) throw BreakdownError("zero diagonal entry", i);
    d.inverse[i - d.first_row] = 1.0 / diag;
  }
  return d;
}

namespace {

/// Factor rows on a given lower pattern, values zeroed.
CsrBlock<Complex> empty_factor(const RankMatrix& a, Index min_col) {
  std::vector<Index> ptr{0};
  std::vector<Index> cols;
  for (Index i = a.first_row(); i < a.end_row(); ++i) {
    const auto c = a.lower_cols(i);
    if (c.empty() || c.back() != i) throw BreakdownError("missing diagonal entry", i);
    for (Index k : c) {
      if (k >= min_col) cols.push_back(k);
    }
    ptr.push_back(static_cast<Index>(cols.size()));
  }
  std::vector<Complex> vals(cols.size(), Complex(0.0));
  return CsrBlock<Complex>(a.dim(), a.first_row(), std::move(ptr), std::move(cols), std::move(vals));
}

using TwinEntry = std::tuple<Index, Index, Index>;  // column, row, reference

void finish_twin(CholeskyFactor& f, std::vector<TwinEntry> entries) {
  std::sort(entries.begin(), entries.end());
  const Index rows = f.rows.rows();
  f.twin_ptr.assign(static_cast<std::size_t>(rows) + 1, 0);
  f.twin_rows.clear();
  f.twin_refs.clear();
  for (const auto& [col, row, ref] : entries) {
    ++f.twin_ptr[col - f.first_row() + 1];
    f.twin_rows.push_back(row);
    f.twin_refs.push_back(ref);
  }
  for (Index k = 0; k < rows; ++k) f.twin_ptr[k + 1] += f.twin_ptr[k];
}

/// Local twin entries: off-diagonal L(k, j) with both k and j owned.
std::vector<TwinEntry> local_twin(const CsrBlock<Complex>& l) {
  std::vector<TwinEntry> out;
  for (Index k = l.first_row(); k < l.end_row(); ++k) {
    const auto c = l.cols(k);
    for (std::size_t p = 0; p + 1 < c.size(); ++p) {
      if (l.owns(c[p])) out.emplace_back(c[p], k, l.row_offset(k) + static_cast<Index>(p));
    }
  }
  return out;
}

}  // namespace

CholeskyFactor build_icp(Communicator& comm, const RankMatrix& a, const RowPartition& partition) {
  const RedundantRows<Complex>& full = a.redundant();
  const int me = comm.rank();
  const Index n = a.dim();
  CholeskyFactor f;
  f.rows = empty_factor(a, 0);
  CsrBlock<Complex>& l = f.rows;
  auto& lv = l.value_array();

  auto send_row = [&](Index j) {
    std::vector<int> dest;
    for (Index c : full.csr().cols(j)) {
      if (c <= j) continue;
      const int o = partition.owner_of_row(c);
      if (o != me && (dest.empty() || dest.back() != o)) dest.push_back(o);
    }
    if (dest.empty()) return;
    const auto c = l.cols(j);
    const auto v = l.values(j);
    std::vector<Index> idx{j};
    idx.insert(idx.end(), c.begin(), c.end());
    const std::vector<Complex> vals(v.begin(), v.end());
    for (int o : dest) comm.send(o, tags::kIcRow, idx, vals);
  };
  auto factor_pivot = [&](Index j) {
    lv[l.row_offset(j) + static_cast<Index>(l.cols(j).size()) - 1] = ic_pivot(l.cols(j), l.values(j), j, a.diagonal(j));
  };

  if (n > 0 && l.owns(0)) {
    factor_pivot(0);
    send_row(0);
  }
  comm.barrier();
  for (Index j = 0; j + 1 < n; ++j) {
    const ColumnView col = full.column(j);
    const bool needed = !col.rows.empty() && col.rows.back() > j;
    if (needed) {
      Message received;
      std::span<const Index> cols_j;
      std::span<const Complex> vals_j;
      if (l.owns(j)) {
        cols_j = l.cols(j);
        vals_j = l.values(j);
      } else {
        received = comm.recv(partition.owner_of_row(j), tags::kIcRow);
        if (received.indices.empty() || received.indices.front() != j) throw Error("build_icp: row message out of order");
        cols_j = std::span<const Index>(received.indices).subspan(1);
        vals_j = received.values;
      }
      const Complex l_jj = vals_j.back();
      for (std::size_t k = 0; k < col.size(); ++k) {
        const Index i = col.rows[k];
        if (i <= j) continue;
        const Index s = l.slot(i, j);
        lv[s] = ic_offdiag(l.cols(i), l.values(i), cols_j, vals_j, j, full.value_at_slot(col.slots[k]), l_jj);
      }
    }
    if (l.owns(j + 1)) {
      factor_pivot(j + 1);
      send_row(j + 1);
    }
    comm.barrier();
  }

  // Twin exchange: L(k, i) goes to the owner of column i.
  std::vector<std::vector<Index>> out_idx(static_cast<std::size_t>(comm.size()));
  std::vector<std::vector<Complex>> out_val(static_cast<std::size_t>(comm.size()));
  for (Index k = l.first_row(); k < l.end_row(); ++k) {
    const auto c = l.cols(k);
    const auto v = l.values(k);
    for (std::size_t p = 0; p + 1 < c.size(); ++p) {
      const int o = partition.owner_of_row(c[p]);
      if (o == me) continue;
      out_idx[o].push_back(c[p]);
      out_idx[o].push_back(k);
      out_val[o].push_back(v[p]);
    }
  }
  for (int o = 0; o < comm.size(); ++o) {
    if (o != me && !out_val[o].empty()) comm.send(o, tags::kIcInsert, std::move(out_idx[o]), std::move(out_val[o]));
  }
  std::vector<char> expect(static_cast<std::size_t>(comm.size()), 0);
  for (Index j = l.first_row(); j < l.end_row(); ++j) {
    for (Index c : full.csr().cols(j)) {
      if (c > j && !l.owns(c)) expect[partition.owner_of_row(c)] = 1;
    }
  }
  std::vector<TwinEntry> twin = local_twin(l);
  for (int o = 0; o < comm.size(); ++o) {
    if (!expect[o]) continue;
    const Message m = comm.recv(o, tags::kIcInsert);
    for (std::size_t p = 0; p < m.values.size(); ++p) {
      twin.emplace_back(m.indices[2 * p], m.indices[2 * p + 1], -(1 + static_cast<Index>(f.remote_values.size())));
      f.remote_values.push_back(m.values[p]);
    }
  }
  finish_twin(f, std::move(twin));
  comm.barrier();
  return f;
}

CholeskyFactor build_bicp(const RankMatrix& a, const RowPartition& partition, int rank) {
  if (a.first_row() != partition.row_begin(rank) || a.end_row() != partition.row_end(rank)) {
    throw std::invalid_argument("build_bicp: matrix rows do not match the rank's block");
  }
  CholeskyFactor f;
  f.block_local = true;
  f.rows = empty_factor(a, a.first_row());
  CsrBlock<Complex>& l = f.rows;
  auto& lv = l.value_array();
  for (Index i = l.first_row(); i < l.end_row(); ++i) {
    const auto ac = a.lower_cols(i);
    const auto av = a.lower_values(i);
    const auto c = l.cols(i);
    const Index base = l.row_offset(i);
    std::size_t q = 0;
    for (std::size_t p = 0; p + 1 < c.size(); ++p) {
      while (ac[q] != c[p]) ++q;
      const Index j = c[p];
      lv[base + static_cast<Index>(p)] = ic_offdiag(l.cols(i), l.values(i), l.cols(j), l.values(j), j, av[q], f.pivot(j));
    }
    lv[base + static_cast<Index>(c.size()) - 1] = ic_pivot(c, l.values(i), i, av.back());
  }
  finish_twin(f, local_twin(l));
  return f;
}

Preconditioner build_preconditioner(Communicator& comm, PrecondKind kind, const RankMatrix& a,
                                    const RowPartition& partition) {
  comm.set_phase(Phase::Precond);
  Preconditioner m;
  m.kind = kind;
  switch (kind) {
    case PrecondKind::Dp:
      m.diagonal = build_dp(a);
      break;
    case PrecondKind::Icp:
      m.factor = build_icp(comm, a, partition);
      break;
    case PrecondKind::Bicp:
      m.factor = build_bicp(a, partition, comm.rank());
      break;
  }
  return m;
}

}  // namespace pfem
