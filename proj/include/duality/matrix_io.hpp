#pragma once

#include <string>

#include "duality/core.hpp"

namespace duality::io {

/// Row-major CSV, '.' decimal separator, no header. Ragged rows are a ParseError
/// whose message starts with "source:line:column".
Matrix parse_csv_matrix(const std::string& text, const std::string& source = "<csv>");

/// JSON array of arrays of numbers.
Matrix parse_json_matrix(const std::string& text, const std::string& source = "<json>");

/// Reads a matrix file; ".json" selects JSON, anything else CSV.
Matrix read_matrix(const std::string& path);

std::string format_csv_matrix(const Matrix& m);

}  // namespace duality::io
