// Copyright 2026 The OSoRA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "osora/textio.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "osora/errors.hpp"

namespace osora {

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

class Tokens {
public:
    explicit Tokens(std::string_view text) : text_(text) {}

    std::string_view next() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        const std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        return text_.substr(start, pos_ - start);
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

template <typename T>
T parse_number(std::string_view tok, const char* what) {
    if (tok.empty()) throw ParseError(std::string("unexpected end of input reading ") + what);
    if (tok.front() == '+') tok.remove_prefix(1);
    T value{};
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw ParseError("cannot parse '" + std::string(tok) + "' as " + what);
    }
    return value;
}

}  // namespace

Matrix parse_matrix_text(std::string_view text) {
    Tokens tokens(text);
    const auto rows = parse_number<std::size_t>(tokens.next(), "row count");
    const auto cols = parse_number<std::size_t>(tokens.next(), "column count");
    if (rows == 0 || cols == 0) throw ParseError("matrix dims must be positive");
    Matrix m(rows, cols);
    for (double& v : m.data()) {
        v = parse_number<double>(tokens.next(), "matrix entry");
        if (!std::isfinite(v)) throw ParseError("matrix entry is not finite");
    }
    if (!tokens.next().empty()) throw ParseError("trailing data after " + std::to_string(rows * cols) + " entries");
    return m;
}

Matrix read_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open matrix file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_matrix_text(ss.str());
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void write_matrix_text(std::ostream& out, const Matrix& m) {
    out << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? " " : "") << format_double(m(i, j));
        out << '\n';
    }
}

void write_matrix_file(const std::string& path, const Matrix& m) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoFailure("cannot open " + path + " for writing");
    write_matrix_text(out, m);
    if (!out) throw IoFailure("write failed for " + path);
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void CsvWriter::row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) out_ << (i ? "," : "") << csv_escape(fields[i]);
    out_ << '\n';
}

}  // namespace osora
