// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "pfem/types.hpp"

namespace pfem {

/// Contiguous node ownership over P ranks. Every node owns `rows_per_node`
/// consecutive rows (kDofsPerNode for field systems), so row blocks always
/// break on node boundaries.
class RowPartition {
 public:
  RowPartition() = default;
  explicit RowPartition(std::vector<Index> node_offsets, Index rows_per_node = kDofsPerNode);

  int ranks() const { return static_cast<int>(offsets_.size()) - 1; }
  Index nodes() const { return offsets_.empty() ? 0 : offsets_.back(); }
  Index rows() const { return width_ * nodes(); }
  Index rows_per_node() const { return width_; }

  Index node_begin(int rank) const { return offsets_.at(rank); }
  Index node_end(int rank) const { return offsets_.at(rank + 1); }
  Index node_count(int rank) const { return node_end(rank) - node_begin(rank); }
  Index row_begin(int rank) const { return width_ * node_begin(rank); }
  Index row_end(int rank) const { return width_ * node_end(rank); }

  int owner_of_node(Index node) const;
  int owner_of_row(Index row) const { return owner_of_node(row / width_); }

  const std::vector<Index>& node_offsets() const { return offsets_; }

 private:
  std::vector<Index> offsets_;
  Index width_ = kDofsPerNode;
};

/// Block partition of `node_count` nodes; the first (N mod P) ranks get one
/// extra node.
RowPartition partition_rows(Index node_count, int ranks, Index rows_per_node = kDofsPerNode);

/// Sparse vector holding only the entries a rank actually sends.
template <typename Scalar>
struct SparseVector {
  Index size = 0;
  std::vector<Index> indices;
  std::vector<Scalar> values;

  Index nnz() const { return static_cast<Index>(indices.size()); }
};

/// Compressed rows [first_row, first_row + rows) of a dim x dim matrix.
/// Column indices are strictly increasing inside every row.
template <typename Scalar>
class CsrBlock {
 public:
  CsrBlock() = default;

  CsrBlock(Index dim, Index first_row, std::vector<Index> row_ptr,
           std::vector<Index> cols, std::vector<Scalar> vals)
      : dim_(dim),
        first_row_(first_row),
        row_ptr_(std::move(row_ptr)),
        cols_(std::move(cols)),
        vals_(std::move(vals)) {
    if (row_ptr_.empty() || row_ptr_.front() != 0 ||
        row_ptr_.back() != static_cast<Index>(cols_.size()) ||
        cols_.size() != vals_.size()) {
      throw std::invalid_argument("CsrBlock: inconsistent row pointer");
    }
    if (first_row_ < 0 || first_row_ + rows() > dim_) {
      throw std::out_of_range("CsrBlock: row range outside matrix");
    }
    for (Index r = 0; r < rows(); ++r) {
      for (Index k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
        if (cols_[k] < 0 || cols_[k] >= dim_) {
          throw std::out_of_range("CsrBlock: column index out of range");
        }
        if (k > row_ptr_[r] && cols_[k] <= cols_[k - 1]) {
          throw std::invalid_argument("CsrBlock: columns not strictly increasing");
        }
      }
    }
  }

  Index dim() const { return dim_; }
  Index first_row() const { return first_row_; }
  Index end_row() const { return first_row_ + rows(); }
  Index rows() const { return static_cast<Index>(row_ptr_.size()) - 1; }
  Index nnz() const { return static_cast<Index>(cols_.size()); }
  bool owns(Index row) const { return row >= first_row_ && row < end_row(); }

  std::span<const Index> cols(Index row) const {
    const Index r = local(row);
    return {cols_.data() + row_ptr_[r], static_cast<std::size_t>(row_ptr_[r + 1] - row_ptr_[r])};
  }
  std::span<const Scalar> values(Index row) const {
    const Index r = local(row);
    return {vals_.data() + row_ptr_[r], static_cast<std::size_t>(row_ptr_[r + 1] - row_ptr_[r])};
  }
  std::span<Scalar> values(Index row) {
    const Index r = local(row);
    return {vals_.data() + row_ptr_[r], static_cast<std::size_t>(row_ptr_[r + 1] - row_ptr_[r])};
  }

  /// Position of (row, col) in the value array, or -1 when not stored.
  Index slot(Index row, Index col) const {
    const auto c = cols(row);
    const auto it = std::lower_bound(c.begin(), c.end(), col);
    if (it == c.end() || *it != col) return -1;
    return row_ptr_[local(row)] + (it - c.begin());
  }

  Scalar coeff(Index row, Index col) const {
    const Index s = slot(row, col);
    return s < 0 ? Scalar(0) : vals_[s];
  }

  Index row_offset(Index row) const { return row_ptr_[local(row)]; }

  const std::vector<Index>& row_ptr() const { return row_ptr_; }
  const std::vector<Index>& col_indices() const { return cols_; }
  const std::vector<Scalar>& value_array() const { return vals_; }
  std::vector<Scalar>& value_array() { return vals_; }

 private:
  Index local(Index row) const {
    if (!owns(row)) throw std::out_of_range("CsrBlock: row " + std::to_string(row) + " not owned");
    return row - first_row_;
  }

  Index dim_ = 0;
  Index first_row_ = 0;
  std::vector<Index> row_ptr_{0};
  std::vector<Index> cols_;
  std::vector<Scalar> vals_;
};

/// Storage #1: only the lower triangle (col <= row) of a structurally
/// symmetric matrix.
template <typename Scalar>
class LowerSymmetricRows {
 public:
  LowerSymmetricRows() = default;

  explicit LowerSymmetricRows(CsrBlock<Scalar> lower) : csr_(std::move(lower)) {
    for (Index i = csr_.first_row(); i < csr_.end_row(); ++i) {
      const auto c = csr_.cols(i);
      if (!c.empty() && c.back() > i) {
        throw std::invalid_argument("LowerSymmetricRows: entry above the diagonal in row " +
                                    std::to_string(i));
      }
    }
  }

  /// Keeps the col <= row part of full rows.
  static LowerSymmetricRows from_rows(const CsrBlock<Scalar>& full) {
    std::vector<Index> ptr{0};
    std::vector<Index> cols;
    std::vector<Scalar> vals;
    for (Index i = full.first_row(); i < full.end_row(); ++i) {
      const auto c = full.cols(i);
      const auto v = full.values(i);
      for (std::size_t k = 0; k < c.size() && c[k] <= i; ++k) {
        cols.push_back(c[k]);
        vals.push_back(v[k]);
      }
      ptr.push_back(static_cast<Index>(cols.size()));
    }
    return LowerSymmetricRows(
        CsrBlock<Scalar>(full.dim(), full.first_row(), std::move(ptr), std::move(cols), std::move(vals)));
  }

  const CsrBlock<Scalar>& csr() const { return csr_; }
  Index dim() const { return csr_.dim(); }
  Index nnz() const { return csr_.nnz(); }
  Index stored_values() const { return csr_.nnz(); }

  /// Entries (k, L_ik) with k <= i.
  std::span<const Index> lower_cols(Index row) const { return csr_.cols(row); }
  std::span<const Scalar> lower_values(Index row) const { return csr_.values(row); }

 private:
  CsrBlock<Scalar> csr_;
};

/// Contiguous view of one column inside a RedundantRows block.
struct ColumnView {
  std::span<const Index> rows;
  std::span<const Index> slots;  // positions into the row-wise value array

  std::size_t size() const { return rows.size(); }
};

/// Storage #2: full rows plus a column index in which the entries of column j
/// occupy the contiguous range [col_ptr[j], col_ptr[j+1]).
template <typename Scalar>
class RedundantRows {
 public:
  RedundantRows() = default;

  static RedundantRows from_rows(CsrBlock<Scalar> full) {
    RedundantRows out;
    out.csr_ = std::move(full);
    const Index n = out.csr_.dim();
    out.col_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
    for (Index c : out.csr_.col_indices()) ++out.col_ptr_[c + 1];
    for (Index j = 0; j < n; ++j) out.col_ptr_[j + 1] += out.col_ptr_[j];
    out.col_rows_.resize(out.csr_.col_indices().size());
    out.col_slots_.resize(out.csr_.col_indices().size());
    std::vector<Index> fill(out.col_ptr_.begin(), out.col_ptr_.end() - 1);
    for (Index i = out.csr_.first_row(); i < out.csr_.end_row(); ++i) {
      const auto c = out.csr_.cols(i);
      const Index base = out.csr_.row_offset(i);
      for (std::size_t k = 0; k < c.size(); ++k) {
        const Index dst = fill[c[k]]++;
        out.col_rows_[dst] = i;
        out.col_slots_[dst] = base + static_cast<Index>(k);
      }
    }
    return out;
  }

  const CsrBlock<Scalar>& csr() const { return csr_; }
  Index dim() const { return csr_.dim(); }
  Index nnz() const { return csr_.nnz(); }
  Index stored_values() const { return csr_.nnz(); }

  ColumnView column(Index j) const {
    const auto b = static_cast<std::size_t>(col_ptr_.at(j));
    const auto e = static_cast<std::size_t>(col_ptr_.at(j + 1));
    return {std::span<const Index>(col_rows_).subspan(b, e - b),
            std::span<const Index>(col_slots_).subspan(b, e - b)};
  }
  Index column_begin(Index j) const { return col_ptr_.at(j); }
  Index column_end(Index j) const { return col_ptr_.at(j + 1); }

  Scalar value_at_slot(Index slot) const { return csr_.value_array()[slot]; }

  /// Lower part (col <= row) of a stored row; rows are sorted so this is a prefix.
  std::span<const Index> lower_cols(Index row) const {
    const auto c = csr_.cols(row);
    const auto end = std::upper_bound(c.begin(), c.end(), row);
    return c.first(static_cast<std::size_t>(end - c.begin()));
  }
  std::span<const Scalar> lower_values(Index row) const {
    return csr_.values(row).first(lower_cols(row).size());
  }

 private:
  CsrBlock<Scalar> csr_;
  std::vector<Index> col_ptr_{0};
  std::vector<Index> col_rows_;
  std::vector<Index> col_slots_;
};

/// Expands a whole-matrix lower storage into redundant storage. Partial row
/// blocks do not hold the mirrored entries and are rejected.
template <typename Scalar>
RedundantRows<Scalar> to_redundant(const LowerSymmetricRows<Scalar>& m) {
  const auto& low = m.csr();
  if (low.first_row() != 0 || low.rows() != low.dim()) {
    throw std::invalid_argument("to_redundant: needs the complete lower triangle");
  }
  const Index n = low.dim();
  std::vector<Index> counts(static_cast<std::size_t>(n), 0);
  for (Index i = 0; i < n; ++i) {
    for (Index j : low.cols(i)) {
      ++counts[i];
      if (j != i) ++counts[j];
    }
  }
  std::vector<Index> ptr(static_cast<std::size_t>(n) + 1, 0);
  for (Index i = 0; i < n; ++i) ptr[i + 1] = ptr[i] + counts[i];
  std::vector<Index> cols(static_cast<std::size_t>(ptr[n]));
  std::vector<Scalar> vals(static_cast<std::size_t>(ptr[n]));
  std::vector<Index> fill(ptr.begin(), ptr.end() - 1);
  // Row i receives its upper entries (i, k>i) from rows k in ascending k, after
  // its own lower entries, so every row comes out sorted.
  for (Index i = 0; i < n; ++i) {
    const auto c = low.cols(i);
    const auto v = low.values(i);
    for (std::size_t k = 0; k < c.size(); ++k) {
      cols[fill[i]] = c[k];
      vals[fill[i]++] = v[k];
    }
  }
  for (Index i = 0; i < n; ++i) {
    const auto c = low.cols(i);
    const auto v = low.values(i);
    for (std::size_t k = 0; k < c.size(); ++k) {
      if (c[k] == i) continue;
      cols[fill[c[k]]] = i;
      vals[fill[c[k]]++] = v[k];
    }
  }
  return RedundantRows<Scalar>::from_rows(
      CsrBlock<Scalar>(n, 0, std::move(ptr), std::move(cols), std::move(vals)));
}

namespace detail {
template <typename Scalar>
void check_length(Index dim, std::span<const Scalar> x) {
  if (static_cast<Index>(x.size()) != dim) {
    throw std::invalid_argument("spmv_partial: vector length " + std::to_string(x.size()) +
                                " does not match matrix dimension " + std::to_string(dim));
  }
}
}  // namespace detail

/// This rank's rows of A x. Exact zeros are not emitted.
template <typename Scalar>
SparseVector<Scalar> spmv_partial(const RedundantRows<Scalar>& m, std::span<const Scalar> x) {
  const auto& a = m.csr();
  detail::check_length(a.dim(), x);
  SparseVector<Scalar> out;
  out.size = a.dim();
  out.indices.reserve(static_cast<std::size_t>(a.rows()));
  out.values.reserve(static_cast<std::size_t>(a.rows()));
  for (Index i = a.first_row(); i < a.end_row(); ++i) {
    const auto c = a.cols(i);
    const auto v = a.values(i);
    Scalar s(0);
    for (std::size_t k = 0; k < c.size(); ++k) s += v[k] * x[c[k]];
    if (s != Scalar(0)) {
      out.indices.push_back(i);
      out.values.push_back(s);
    }
  }
  return out;
}

/// Contribution of this rank's lower rows to A x: every stored (i, j) acts
/// as both (i, j) and (j, i). Summing the partials of all ranks gives A x.
template <typename Scalar>
SparseVector<Scalar> spmv_partial(const LowerSymmetricRows<Scalar>& m, std::span<const Scalar> x) {
  const auto& a = m.csr();
  detail::check_length(a.dim(), x);
  std::vector<Scalar> acc(static_cast<std::size_t>(a.dim()), Scalar(0));
  std::vector<char> touched(static_cast<std::size_t>(a.dim()), 0);
  for (Index i = a.first_row(); i < a.end_row(); ++i) {
    const auto c = a.cols(i);
    const auto v = a.values(i);
    Scalar s(0);
    for (std::size_t k = 0; k < c.size(); ++k) {
      s += v[k] * x[c[k]];
      if (c[k] != i) {
        acc[c[k]] += v[k] * x[i];
        touched[c[k]] = 1;
      }
    }
    acc[i] += s;
    touched[i] = 1;
  }
  SparseVector<Scalar> out;
  out.size = a.dim();
  for (Index i = 0; i < a.dim(); ++i) {
    if (touched[i] && acc[i] != Scalar(0)) {
      out.indices.push_back(i);
      out.values.push_back(acc[i]);
    }
  }
  return out;
}

/// Dense rows of the logical matrix held by the block (test and export aid).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> densify(const CsrBlock<Scalar>& a) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> d =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(a.dim(), a.dim());
  for (Index i = a.first_row(); i < a.end_row(); ++i) {
    const auto c = a.cols(i);
    const auto v = a.values(i);
    for (std::size_t k = 0; k < c.size(); ++k) d(i, c[k]) = v[k];
  }
  return d;
}

/// Logical symmetric matrix of a lower block: stored entries and their mirrors.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> densify(const LowerSymmetricRows<Scalar>& m) {
  const auto& a = m.csr();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> d =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(a.dim(), a.dim());
  for (Index i = a.first_row(); i < a.end_row(); ++i) {
    const auto c = a.cols(i);
    const auto v = a.values(i);
    for (std::size_t k = 0; k < c.size(); ++k) {
      d(i, c[k]) = v[k];
      d(c[k], i) = v[k];
    }
  }
  return d;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> densify(const RedundantRows<Scalar>& m) {
  return densify(m.csr());
}

/// Builds a block from (row, col, value) triplets of rows [first_row, end_row);
/// duplicates are summed in input order.
template <typename Scalar>
CsrBlock<Scalar> csr_from_triplets(Index dim, Index first_row, Index end_row,
                                   std::vector<std::pair<std::pair<Index, Index>, Scalar>> triplets) {
  std::stable_sort(triplets.begin(), triplets.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Index> ptr(static_cast<std::size_t>(end_row - first_row) + 1, 0);
  std::vector<Index> cols;
  std::vector<Scalar> vals;
  Index last_r = -1;
  Index last_c = -1;
  for (const auto& [rc, v] : triplets) {
    const auto [r, c] = rc;
    if (r < first_row || r >= end_row) throw std::out_of_range("csr_from_triplets: row outside block");
    if (r == last_r && c == last_c) {
      vals.back() += v;
      continue;
    }
    cols.push_back(c);
    vals.push_back(v);
    ++ptr[r - first_row + 1];
    last_r = r;
    last_c = c;
  }
  for (std::size_t k = 1; k < ptr.size(); ++k) ptr[k] += ptr[k - 1];
  return CsrBlock<Scalar>(dim, first_row, std::move(ptr), std::move(cols), std::move(vals));
}

}  // namespace pfem
