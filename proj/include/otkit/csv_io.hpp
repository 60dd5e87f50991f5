#pragma once

#include "otkit/types.hpp"

#include <string>

namespace otkit {

/// Headerless numeric CSV, '.' decimal, one matrix row per line.
/// Values are written in shortest round-trip form, so write-then-read is
/// bit-exact.
Matrix read_matrix_csv(const std::string& path);
void write_matrix_csv(const std::string& path, const Matrix& m);

/// Vectors are single-column files.
Vector read_vector_csv(const std::string& path);
void write_vector_csv(const std::string& path, const Vector& v);

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

}  // namespace otkit
