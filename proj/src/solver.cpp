// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <string>

#include "pfem/solver.hpp"

namespace pfem {

namespace {

Complex bilinear(const CVector& u, const CVector& v) { return (u.array() * v.array()).sum(); }

void forward_rows(const CholeskyFactor& f, const CVector& b, CVector& y) {
  for (Index i = f.first_row(); i < f.end_row(); ++i) {
    const auto c = f.rows.cols(i);
    const auto v = f.rows.values(i);
    Complex s = b[i];
    for (std::size_t k = 0; k + 1 < c.size(); ++k) s -= v[k] * y[c[k]];
    y[i] = s / v.back();
  }
}

void backward_rows(const CholeskyFactor& f, const CVector& y, CVector& x) {
  for (Index j = f.end_row() - 1; j >= f.first_row(); --j) {
    Complex s = y[j];
    for (Index p = f.twin_begin(j); p < f.twin_end(j); ++p) s -= f.twin_value(p) * x[f.twin_rows[p]];
    x[j] = s / f.pivot(j);
  }
}

SparseVector<Complex> segment(const CVector& v, Index first, Index last) {
  SparseVector<Complex> s;
  s.size = v.size();
  for (Index i = first; i < last; ++i) {
    s.indices.push_back(i);
    s.values.push_back(v[i]);
  }
  return s;
}

void broadcast_segment(Communicator& comm, int tag, const CVector& v, Index first, Index last) {
  for (int r = 0; r < comm.size(); ++r) {
    if (r != comm.rank()) comm.send(r, tag, {}, std::vector<Complex>(v.data() + first, v.data() + last));
  }
}

void receive_segment(Communicator& comm, int tag, int source, const RowPartition& partition, CVector& v) {
  const Message m = comm.recv(source, tag);
  const Index first = partition.row_begin(source);
  if (static_cast<Index>(m.values.size()) != partition.row_end(source) - first) {
    throw Error("substitution: segment of rank " + std::to_string(source) + " has the wrong length");
  }
  for (std::size_t k = 0; k < m.values.size(); ++k) v[first + static_cast<Index>(k)] = m.values[k];
}

}  // namespace

CVector forward_back_substitute(Communicator& comm, const CholeskyFactor& factor, const RowPartition& partition,
                                const CVector& b, ConcatStrategy strategy) {
  const Index n = partition.rows();
  if (b.size() != n) throw std::invalid_argument("forward_back_substitute: length mismatch");
  const int me = comm.rank();
  const Index first = factor.first_row();
  const Index last = factor.end_row();
  CVector y = CVector::Zero(n);
  CVector x = CVector::Zero(n);
  if (factor.block_local) {
    forward_rows(factor, b, y);
    y = concat(comm, strategy, segment(y, first, last));
    backward_rows(factor, y, x);
    return concat(comm, strategy, segment(x, first, last));
  }
  for (int q = 0; q < me; ++q) receive_segment(comm, tags::kForward, q, partition, y);
  forward_rows(factor, b, y);
  broadcast_segment(comm, tags::kForward, y, first, last);
  for (int q = me + 1; q < comm.size(); ++q) receive_segment(comm, tags::kForward, q, partition, y);

  for (int q = comm.size() - 1; q > me; --q) receive_segment(comm, tags::kBackward, q, partition, x);
  backward_rows(factor, y, x);
  broadcast_segment(comm, tags::kBackward, x, first, last);
  for (int q = me - 1; q >= 0; --q) receive_segment(comm, tags::kBackward, q, partition, x);
  return x;
}

CVector cg_solve(Communicator& comm, const RankMatrix& a, const CVector& rhs_segment, const Preconditioner& m,
                 const RowPartition& partition, const SolverOptions& options, SolveReport& report) {
  if (!(options.tol > 0.0)) throw std::invalid_argument("cg_solve: tol must be positive");
  const Index n = a.dim();
  const Index first = a.first_row();
  const Index last = a.end_row();
  if (rhs_segment.size() != last - first) throw std::invalid_argument("cg_solve: rhs segment length mismatch");
  report = SolveReport{};

  comm.set_phase(Phase::SolveSetup);
  CVector rhs_full = CVector::Zero(n);
  rhs_full.segment(first, last - first) = rhs_segment;
  const CVector b = concat(comm, options.concat, segment(rhs_full, first, last));
  CVector inverse_diagonal;
  if (m.kind == PrecondKind::Dp) {
    CVector d = CVector::Zero(n);
    d.segment(first, last - first) = m.diagonal.inverse;
    inverse_diagonal = concat(comm, options.concat, segment(d, first, last));
  }
  auto precondition = [&](const CVector& r) -> CVector {
    if (m.kind == PrecondKind::Dp) return inverse_diagonal.cwiseProduct(r);
    return forward_back_substitute(comm, m.factor, partition, r, options.concat);
  };

  CVector x = CVector::Zero(n);
  const double b_norm = b.norm();
  if (b_norm == 0.0) {
    report.residual_history.push_back(0.0);
    report.converged = true;
    return x;
  }
  CVector r = b;
  report.residual_history.push_back(1.0);
  CVector z = precondition(r);
  CVector p = z;
  Complex rho = bilinear(r, z);

  comm.set_phase(Phase::SolveIteration);
  for (Index k = 1; k <= options.max_iter; ++k) {
    const CVector q = concat(comm, options.concat, a.multiply_partial(std::span<const Complex>(p.data(), p.size())));
    const Complex pq = bilinear(p, q);
    if (pq == Complex(0.0)) {
      report.breakdown = true;
      report.breakdown_reason = "p^T A p = 0 at iteration " + std::to_string(k);
      break;
    }
    const Complex alpha = rho / pq;
    x += alpha * p;
    r -= alpha * q;
    report.iterations = k;
    const double rel = r.norm() / b_norm;
    report.residual_history.push_back(rel);
    if (rel <= options.tol) {
      report.converged = true;
      break;
    }
    z = precondition(r);
    const Complex rho_next = bilinear(r, z);
    if (rho_next == Complex(0.0)) {
      report.breakdown = true;
      report.breakdown_reason = "r^T z = 0 at iteration " + std::to_string(k);
      break;
    }
    p = z + (rho_next / rho) * p;
    rho = rho_next;
  }
  return x;
}

}  // namespace pfem
