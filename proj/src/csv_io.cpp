#include "otkit/csv_io.hpp"

#include <charconv>
#include <fstream>
#include <string>
#include <system_error>
#include <vector>

namespace otkit {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail(ErrorCode::ParseError, "cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::vector<double> row;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      const std::size_t end = comma == std::string::npos ? line.size() : comma;
      // trim surrounding spaces in the cell
      std::size_t s = pos, e = end;
      while (s < e && line[s] == ' ') ++s;
      while (e > s && line[e - 1] == ' ') --e;
      double value = 0.0;
      const auto res = std::from_chars(line.data() + s, line.data() + e, value);
      if (res.ec != std::errc{} || res.ptr != line.data() + e)
        fail(ErrorCode::ParseError,
             path + ": bad number at line " + std::to_string(lineno) +
                 ", column " + std::to_string(pos + 1));
      row.push_back(value);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      fail(ErrorCode::RaggedRows,
           path + ": row at line " + std::to_string(lineno) + " has " +
               std::to_string(row.size()) + " cells, expected " +
               std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorCode::EmptyMatrix, path + " holds no data");

  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::ParseError, "cannot write " + path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

Vector read_vector_csv(const std::string& path) {
  const Matrix m = read_matrix_csv(path);
  if (m.cols() != 1)
    fail(ErrorCode::DimensionMismatch,
         path + ": expected a single-column vector file, got " +
             std::to_string(m.cols()) + " columns");
  return m.col(0);
}

void write_vector_csv(const std::string& path, const Vector& v) {
  write_matrix_csv(path, v);
}

}  // namespace otkit
