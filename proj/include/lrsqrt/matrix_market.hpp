#pragma once

#include <iosfwd>
#include <string>

#include "lrsqrt/types.hpp"

namespace lrsqrt {

enum class MmSymmetry { kGeneral, kSymmetric };

/// Reads a dense matrix in Matrix Market array format (real, general or
/// symmetric). Throws Error on malformed input.
Matrix read_matrix_market(std::istream& in);
Matrix read_matrix_market(const std::string& path);

/// Symmetric output stores the lower triangle only; the caller is
/// responsible for passing a symmetric matrix.
void write_matrix_market(std::ostream& out, const Matrix& m, MmSymmetry symmetry = MmSymmetry::kGeneral);
void write_matrix_market(const std::string& path, const Matrix& m, MmSymmetry symmetry = MmSymmetry::kGeneral);

}  // namespace lrsqrt
