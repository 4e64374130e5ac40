// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "pfem/sparse.hpp"
#include "support.hpp"

using namespace pfem;
using pfem::testing::DenseC;
using pfem::testing::rows_of;

TEST(Partition, SmallCases) {
  const auto one = partition_rows(5, 1);
  EXPECT_EQ(one.ranks(), 1);
  EXPECT_EQ(one.node_begin(0), 0);
  EXPECT_EQ(one.node_end(0), 5);

  const auto p = partition_rows(7, 3);
  EXPECT_EQ(p.node_count(0), 3);
  EXPECT_EQ(p.node_count(1), 2);
  EXPECT_EQ(p.node_count(2), 2);
  EXPECT_EQ(p.row_begin(1), 9);
  EXPECT_EQ(p.rows(), 21);
}

TEST(Partition, TenThousandNodesOnTenRanks) {
  const auto p = partition_rows(10000, 10);
  for (int r = 0; r < 10; ++r) EXPECT_EQ(p.node_count(r), 1000);
}

TEST(Partition, CoversEveryRowOnce) {
  for (Index n : {1, 2, 13, 64, 1001}) {
    for (int ranks : {1, 2, 3, 4, 8}) {
      if (ranks > n) continue;
      const auto p = partition_rows(n, ranks);
      Index lo = n, hi = 0;
      for (int r = 0; r < ranks; ++r) {
        lo = std::min(lo, p.node_count(r));
        hi = std::max(hi, p.node_count(r));
        EXPECT_EQ(p.node_end(r), r + 1 < ranks ? p.node_begin(r + 1) : n);
      }
      EXPECT_LE(hi - lo, 1);
      for (Index row = 0; row < p.rows(); ++row) {
        const int owner = p.owner_of_row(row);
        EXPECT_GE(row, p.row_begin(owner));
        EXPECT_LT(row, p.row_end(owner));
      }
    }
  }
}

TEST(Partition, RejectsMoreRanksThanNodes) {
  EXPECT_THROW(partition_rows(3, 4), std::invalid_argument);
  EXPECT_THROW(partition_rows(3, 0), std::invalid_argument);
}

TEST(Storage, DiagonalRoundTrip) {
  DenseC d = DenseC::Zero(5, 5);
  for (int i = 0; i < 5; ++i) d(i, i) = Complex(i + 1, -i);
  const auto lower = LowerSymmetricRows<Complex>::from_rows(rows_of(d));
  const auto red = to_redundant(lower);
  EXPECT_EQ(red.nnz(), 5);
  EXPECT_EQ(densify(red), d);
}

TEST(Storage, FourByFourLowerLayoutExpandsToSixteen) {
  DenseC a(4, 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j <= i; ++j) {
      a(i, j) = a(j, i) = Complex(10 * (i + 1) + (j + 1), 0.5 * j);
    }
  }
  const auto lower = LowerSymmetricRows<Complex>::from_rows(rows_of(a));
  EXPECT_EQ(lower.nnz(), 10);
  const auto red = to_redundant(lower);
  EXPECT_EQ(red.nnz(), 16);
  EXPECT_EQ(densify(red), a);
}

TEST(Storage, RandomPatternRoundTrip) {
  const DenseC a = pfem::testing::random_symmetric(50, 0.15, 7);
  const auto lower = LowerSymmetricRows<Complex>::from_rows(rows_of(a));
  EXPECT_EQ(densify(lower), a);
  EXPECT_EQ(densify(to_redundant(lower)), a);
  EXPECT_EQ(densify(RedundantRows<Complex>::from_rows(rows_of(a))), a);
}

TEST(Storage, ColumnAccessIsContiguous) {
  const DenseC a = pfem::testing::random_symmetric(40, 0.2, 11);
  const auto red = RedundantRows<Complex>::from_rows(rows_of(a));
  Index expected_begin = 0;
  for (Index j = 0; j < 40; ++j) {
    const auto col = red.column(j);
    EXPECT_EQ(red.column_begin(j), expected_begin);
    EXPECT_EQ(red.column_end(j) - red.column_begin(j), static_cast<Index>(col.size()));
    expected_begin = red.column_end(j);
    Index nnz = 0;
    for (Index i = 0; i < 40; ++i) nnz += a(i, j) != Complex(0.0);
    ASSERT_EQ(static_cast<Index>(col.size()), nnz);
    for (std::size_t k = 0; k < col.size(); ++k) {
      EXPECT_EQ(red.value_at_slot(col.slots[k]), a(col.rows[k], j));
      if (k > 0) {
        EXPECT_LT(col.rows[k - 1], col.rows[k]);
      }
    }
  }
  EXPECT_EQ(expected_begin, red.nnz());
}

TEST(Storage, LowerRejectsUpperEntries) {
  DenseC a = DenseC::Zero(2, 2);
  a(0, 1) = 1.0;
  EXPECT_THROW(LowerSymmetricRows<Complex>(rows_of(a)), std::invalid_argument);
}

TEST(Storage, CsrValidation) {
  EXPECT_THROW(CsrBlock<Complex>(3, 0, {0, 2}, {1, 0}, {1.0, 2.0}), std::invalid_argument);
  EXPECT_THROW(CsrBlock<Complex>(3, 0, {0, 1}, {3}, {1.0}), std::out_of_range);
  EXPECT_THROW(CsrBlock<Complex>(3, 3, {0, 0}, {}, {}), std::out_of_range);
}

TEST(Storage, TripletsSumDuplicates) {
  const auto a = csr_from_triplets<Complex>(3, 1, 3, {{{2, 0}, 1.0}, {{1, 2}, 2.0}, {{2, 0}, 0.5}, {{1, 1}, 3.0}});
  EXPECT_EQ(a.nnz(), 3);
  EXPECT_EQ(a.coeff(2, 0), Complex(1.5));
  EXPECT_EQ(a.coeff(1, 1), Complex(3.0));
  EXPECT_EQ(a.coeff(1, 0), Complex(0.0));
  EXPECT_EQ(a.slot(1, 0), -1);
}

namespace {

// Sums the partials of every rank block of a dim x dim matrix.
template <typename Storage>
CVector blockwise_product(const DenseC& a, const RowPartition& p, const CVector& x) {
  CVector y = CVector::Zero(a.rows());
  for (int r = 0; r < p.ranks(); ++r) {
    const auto block = rows_of(a, p.row_begin(r), p.row_end(r));
    const Storage m = [&] {
      if constexpr (std::is_same_v<Storage, RedundantRows<Complex>>) {
        return RedundantRows<Complex>::from_rows(block);
      } else {
        return LowerSymmetricRows<Complex>::from_rows(block);
      }
    }();
    const auto part = spmv_partial(m, std::span<const Complex>(x.data(), x.size()));
    for (Index k = 0; k < part.nnz(); ++k) y[part.indices[k]] += part.values[k];
  }
  return y;
}

}  // namespace

TEST(Spmv, IdentityRestrictsToOwnedRows) {
  const DenseC id = DenseC::Identity(6, 6);
  const CVector x = pfem::testing::random_vector(6, 3);
  const auto block = RedundantRows<Complex>::from_rows(rows_of(id, 2, 4));
  const auto part = spmv_partial(block, std::span<const Complex>(x.data(), x.size()));
  ASSERT_EQ(part.nnz(), 2);
  EXPECT_EQ(part.indices[0], 2);
  EXPECT_EQ(part.values[0], x[2]);
  EXPECT_EQ(part.values[1], x[3]);
}

TEST(Spmv, RandomSymmetricBothStoragesMatchDense) {
  const DenseC a = pfem::testing::random_symmetric(60, 0.2, 21);
  const CVector x = pfem::testing::random_vector(60, 22);
  const CVector ref = a * x;
  const auto p = partition_rows(60, 4, 1);
  const CVector y2 = blockwise_product<RedundantRows<Complex>>(a, p, x);
  const CVector y1 = blockwise_product<LowerSymmetricRows<Complex>>(a, p, x);
  EXPECT_LE((y2 - ref).norm() / ref.norm(), 1e-13);
  EXPECT_LE((y1 - ref).norm() / ref.norm(), 1e-13);

  const auto single = RedundantRows<Complex>::from_rows(rows_of(a));
  const auto full = spmv_partial(single, std::span<const Complex>(x.data(), x.size()));
  CVector y(60);
  y.setZero();
  for (Index k = 0; k < full.nnz(); ++k) y[full.indices[k]] = full.values[k];
  EXPECT_LE((y - ref).norm() / ref.norm(), 1e-13);
}

TEST(Spmv, Linearity) {
  const DenseC a = pfem::testing::random_symmetric(30, 0.3, 5);
  const CVector x = pfem::testing::random_vector(30, 6);
  const CVector z = pfem::testing::random_vector(30, 7);
  const auto p = partition_rows(30, 3, 1);
  for (int which = 0; which < 2; ++which) {
    auto apply = [&](const CVector& v) {
      return which == 0 ? blockwise_product<RedundantRows<Complex>>(a, p, v)
                        : blockwise_product<LowerSymmetricRows<Complex>>(a, p, v);
    };
    const CVector lhs = apply(x + z);
    const CVector rhs = apply(x) + apply(z);
    EXPECT_LE((lhs - rhs).norm() / lhs.norm(), 1e-13);
  }
}

TEST(Spmv, RejectsWrongLength) {
  const auto m = RedundantRows<Complex>::from_rows(rows_of(DenseC::Identity(4, 4)));
  const CVector x = CVector::Ones(3);
  EXPECT_THROW(spmv_partial(m, std::span<const Complex>(x.data(), x.size())), std::invalid_argument);
}
