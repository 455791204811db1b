// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "osora/matrix.hpp"

namespace osora {

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

/// Matrix text format: a "rows cols" header, then rows·cols whitespace
/// separated decimals in row-major order. Throws ParseError.
Matrix parse_matrix_text(std::string_view text);
/// Throws IoFailure, ParseError.
Matrix read_matrix_file(const std::string& path);
void write_matrix_text(std::ostream& out, const Matrix& m);
void write_matrix_file(const std::string& path, const Matrix& m);

/// Minimal CSV writer; fields are quoted only when they contain a comma,
/// quote, or line break.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}
    void row(const std::vector<std::string>& fields);

private:
    std::ostream& out_;
};

std::string csv_escape(std::string_view field);

}  // namespace osora
