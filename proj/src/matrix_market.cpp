#include "lrsqrt/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <vector>

namespace lrsqrt {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

Matrix read_matrix_market(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("matrix market: empty input");
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%MatrixMarket" || lower(object) != "matrix") throw Error("matrix market: bad banner");
  if (lower(format) != "array") throw Error("matrix market: only array format is supported");
  if (lower(field) != "real" && lower(field) != "double" && lower(field) != "integer")
    throw Error("matrix market: only real fields are supported");
  const std::string sym = lower(symmetry);
  if (sym != "general" && sym != "symmetric") throw Error("matrix market: unsupported symmetry " + symmetry);
  const bool symmetric = sym == "symmetric";

  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first != std::string::npos && line[first] != '%') break;
  }
  std::istringstream size_line(line);
  long long rows = -1, cols = -1;
  if (!(size_line >> rows >> cols) || rows < 0 || cols < 0) throw Error("matrix market: bad size line");
  if (symmetric && rows != cols) throw Error("matrix market: symmetric matrix must be square");

  Matrix m = Matrix::Zero(rows, cols);
  auto next = [&]() {
    double v;
    while (true) {
      if (in >> v) return v;
      if (in.eof()) throw Error("matrix market: truncated data");
      in.clear();
      std::getline(in, line);
      const auto first = line.find_first_not_of(" \t\r");
      if (first != std::string::npos && line[first] != '%') throw Error("matrix market: bad value");
    }
  };
  for (Index j = 0; j < cols; ++j) {
    for (Index i = symmetric ? j : 0; i < rows; ++i) {
      m(i, j) = next();
      if (symmetric) m(j, i) = m(i, j);
    }
  }
  return m;
}

Matrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("matrix market: cannot open " + path);
  return read_matrix_market(in);
}

void write_matrix_market(std::ostream& out, const Matrix& m, MmSymmetry symmetry) {
  const bool symmetric = symmetry == MmSymmetry::kSymmetric;
  if (symmetric && m.rows() != m.cols()) throw DimensionError("matrix market: symmetric output needs a square matrix");
  out << "%%MatrixMarket matrix array real " << (symmetric ? "symmetric" : "general") << "\n";
  out << m.rows() << " " << m.cols() << "\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = symmetric ? j : 0; i < m.rows(); ++i) out << m(i, j) << "\n";
}

void write_matrix_market(const std::string& path, const Matrix& m, MmSymmetry symmetry) {
  std::ofstream out(path);
  if (!out) throw Error("matrix market: cannot open " + path);
  write_matrix_market(out, m, symmetry);
}

}  // namespace lrsqrt
