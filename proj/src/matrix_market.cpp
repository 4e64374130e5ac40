// SPDX-License-Identifier: Apache-2.0

#include "pfem/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace pfem {

namespace {

std::string lower_case(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path);
  return is;
}

void put(std::ostream& os, Index i, Index j, Complex v) {
  os << i + 1 << ' ' << j + 1 << ' ' << v.real() << ' ' << v.imag() << '\n';
}

}  // namespace

void write_matrix_market(std::ostream& os, const CsrBlock<Complex>& a, MatrixSymmetry symmetry) {
  if (a.first_row() != 0 || a.rows() != a.dim()) throw std::invalid_argument("write_matrix_market: needs the whole matrix");
  Index count = 0;
  for (Index i = 0; i < a.dim(); ++i) {
    const auto c = a.cols(i);
    const auto v = a.values(i);
    for (std::size_t k = 0; k < c.size(); ++k) {
      if (symmetry == MatrixSymmetry::General || c[k] <= i) ++count;
      if (symmetry == MatrixSymmetry::Symmetric && c[k] > i && a.coeff(c[k], i) != v[k]) {
        throw std::invalid_argument("write_matrix_market: matrix is not symmetric");
      }
      if (symmetry == MatrixSymmetry::Symmetric && c[k] < i && a.slot(c[k], i) < 0 && v[k] != Complex(0.0)) {
        throw std::invalid_argument("write_matrix_market: matrix is not symmetric");
      }
    }
  }
  os << "%%MatrixMarket matrix coordinate complex "
     << (symmetry == MatrixSymmetry::Symmetric ? "symmetric" : "general") << '\n';
  os << a.dim() << ' ' << a.dim() << ' ' << count << '\n';
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Index i = 0; i < a.dim(); ++i) {
    const auto c = a.cols(i);
    const auto v = a.values(i);
    for (std::size_t k = 0; k < c.size(); ++k) {
      if (symmetry == MatrixSymmetry::General || c[k] <= i) put(os, i, c[k], v[k]);
    }
  }
}

void write_matrix_market(const std::string& path, const CsrBlock<Complex>& a, MatrixSymmetry symmetry) {
  auto os = open_out(path);
  write_matrix_market(os, a, symmetry);
}

void write_matrix_market(std::ostream& os, const LowerSymmetricRows<Complex>& a) {
  const auto& low = a.csr();
  if (low.first_row() != 0 || low.rows() != low.dim()) throw std::invalid_argument("write_matrix_market: needs the whole matrix");
  os << "%%MatrixMarket matrix coordinate complex symmetric\n";
  os << low.dim() << ' ' << low.dim() << ' ' << low.nnz() << '\n';
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Index i = 0; i < low.dim(); ++i) {
    const auto c = low.cols(i);
    const auto v = low.values(i);
    for (std::size_t k = 0; k < c.size(); ++k) put(os, i, c[k], v[k]);
  }
}

MatrixMarketFile read_matrix_market(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("empty Matrix Market file");
  std::istringstream head(line);
  std::string banner, object, format, field, sym;
  head >> banner >> object >> format >> field >> sym;
  if (banner != "%%MatrixMarket" || lower_case(object) != "matrix" || lower_case(format) != "coordinate" ||
      lower_case(field) != "complex") {
    throw FormatError("unsupported Matrix Market header: " + line);
  }
  MatrixMarketFile out;
  if (lower_case(sym) == "symmetric") {
    out.symmetry = MatrixSymmetry::Symmetric;
  } else if (lower_case(sym) != "general") {
    throw FormatError("unsupported symmetry qualifier: " + sym);
  }
  while (std::getline(is, line) && (line.empty() || line[0] == '%')) {
  }
  std::istringstream size_line(line);
  Index rows = 0, cols = 0, nnz = 0;
  if (!(size_line >> rows >> cols >> nnz) || rows <= 0 || rows != cols || nnz < 0) {
    throw FormatError("bad size line: " + line);
  }
  using Triplet = std::pair<std::pair<Index, Index>, Complex>;
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(nnz));
  for (Index k = 0; k < nnz; ++k) {
    Index i = 0, j = 0;
    double re = 0, im = 0;
    if (!(is >> i >> j >> re >> im)) throw FormatError("truncated entry list at entry " + std::to_string(k + 1));
    if (i < 1 || i > rows || j < 1 || j > cols) throw FormatError("index out of bounds at entry " + std::to_string(k + 1));
    if (out.symmetry == MatrixSymmetry::Symmetric && j > i) {
      throw FormatError("symmetric file stores an upper-triangle entry (" + std::to_string(i) + ", " +
                        std::to_string(j) + ")");
    }
    t.push_back({{i - 1, j - 1}, Complex(re, im)});
  }
  std::stable_sort(t.begin(), t.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t k = 1; k < t.size(); ++k) {
    if (t[k].first == t[k - 1].first) throw FormatError("duplicate entry in Matrix Market file");
  }
  out.stored = csr_from_triplets<Complex>(rows, 0, rows, std::move(t));
  return out;
}

MatrixMarketFile read_matrix_market(const std::string& path) {
  auto is = open_in(path);
  return read_matrix_market(is);
}

CsrBlock<Complex> expand(const MatrixMarketFile& file) {
  if (file.symmetry == MatrixSymmetry::General) return file.stored;
  return to_redundant(LowerSymmetricRows<Complex>(file.stored)).csr();
}

LowerSymmetricRows<Complex> as_lower(const MatrixMarketFile& file) {
  if (file.symmetry != MatrixSymmetry::Symmetric) {
    return LowerSymmetricRows<Complex>::from_rows(file.stored);
  }
  return LowerSymmetricRows<Complex>(file.stored);
}

void write_vector(std::ostream& os, const CVector& v) {
  os << v.size() << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Index i = 0; i < v.size(); ++i) os << v[i].real() << ' ' << v[i].imag() << '\n';
}

void write_vector(const std::string& path, const CVector& v) {
  auto os = open_out(path);
  write_vector(os, v);
}

CVector read_vector(std::istream& is) {
  Index n = 0;
  if (!(is >> n) || n < 0) throw FormatError("bad vector length");
  CVector v(n);
  for (Index i = 0; i < n; ++i) {
    double re = 0, im = 0;
    if (!(is >> re >> im)) throw FormatError("truncated vector at entry " + std::to_string(i + 1));
    v[i] = Complex(re, im);
  }
  return v;
}

CVector read_vector(const std::string& path) {
  auto is = open_in(path);
  return read_vector(is);
}

}  // namespace pfem
