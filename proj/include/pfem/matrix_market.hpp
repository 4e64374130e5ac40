// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>

#include "pfem/sparse.hpp"
#include "pfem/types.hpp"

namespace pfem {

enum class MatrixSymmetry { General, Symmetric };

/// Writes a whole-matrix block as "coordinate complex". Symmetric output keeps
/// the lower triangle and refuses matrices that are not exactly symmetric.
void write_matrix_market(std::ostream& os, const CsrBlock<Complex>& a, MatrixSymmetry symmetry);
void write_matrix_market(const std::string& path, const CsrBlock<Complex>& a, MatrixSymmetry symmetry);

/// Storage #1 view of a lower triangle.
void write_matrix_market(std::ostream& os, const LowerSymmetricRows<Complex>& a);

struct MatrixMarketFile {
  MatrixSymmetry symmetry = MatrixSymmetry::General;
  /// Stored entries as they appear in the file (lower triangle only when symmetric).
  CsrBlock<Complex> stored;
};

/// Reads a square "coordinate complex general|symmetric" file. Rejects bad
/// headers, out-of-range indices, and symmetric files with upper entries.
MatrixMarketFile read_matrix_market(std::istream& is);
MatrixMarketFile read_matrix_market(const std::string& path);

/// Whole logical matrix: mirrors are expanded for symmetric files.
CsrBlock<Complex> expand(const MatrixMarketFile& file);

/// Lower storage of a symmetric file.
LowerSymmetricRows<Complex> as_lower(const MatrixMarketFile& file);

/// Complex vector as "re im" lines, preceded by the length.
void write_vector(std::ostream& os, const CVector& v);
void write_vector(const std::string& path, const CVector& v);
CVector read_vector(std::istream& is);
CVector read_vector(const std::string& path);

}  // namespace pfem
