// Copyright 2025 The ozmul authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ozmul/io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace ozmul {

namespace {

double parse_entry(const std::string& token, MatrixFormat format) {
  if (format == MatrixFormat::kHex) {
    if (token.size() != 16)
      throw std::runtime_error("matrix read: expected a 16-hex-digit entry, got '" +
                               token + "'");
    std::uint64_t bits = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), bits, 16);
    if (ec != std::errc{} || ptr != token.data() + token.size())
      throw std::runtime_error("matrix read: bad hex entry '" + token + "'");
    return std::bit_cast<double>(bits);
  }
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size())
    throw std::runtime_error("matrix read: bad decimal entry '" + token + "'");
  return value;
}

}  // namespace

Matrix read_matrix(std::istream& in, MatrixFormat format) {
  std::string magic;
  std::size_t rows = 0, cols = 0;
  if (!(in >> magic >> rows >> cols) || magic != "ozm1")
    throw std::runtime_error("matrix read: missing 'ozm1 <rows> <cols>' header");
  Matrix m(rows, cols);
  std::string token;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!(in >> token)) throw std::runtime_error("matrix read: truncated file");
    m.data()[i] = parse_entry(token, format);
  }
  return m;
}

Matrix read_matrix_file(const std::string& path, MatrixFormat format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix file: " + path);
  return read_matrix(in, format);
}

void write_matrix(std::ostream& out, const Matrix& m, MatrixFormat format) {
  out << "ozm1 " << m.rows() << ' ' << m.cols() << '\n';
  char buf[64];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      if (format == MatrixFormat::kHex) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(m(i, j));
        out << std::hex << std::setw(16) << std::setfill('0') << bits << std::dec;
      } else {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), m(i, j));
        out.write(buf, ptr - buf);
        (void)ec;
      }
    }
    out << '\n';
  }
}

void write_matrix_file(const std::string& path, const Matrix& m, MatrixFormat format) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open matrix file for writing: " + path);
  write_matrix(out, m, format);
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

std::vector<std::string> split_on(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t next = text.find(sep, pos);
    if (next == std::string::npos) {
      parts.push_back(text.substr(pos));
      break;
    }
    parts.push_back(text.substr(pos, next - pos));
    pos = next + 1;
  }
  return parts;
}

double parse_number(const std::string& token) {
  try {
    std::size_t used = 0;
    double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("sweep: bad number '" + token + "'");
  }
}

}  // namespace

std::vector<double> parse_double_sweep(const std::string& text) {
  if (text.empty()) throw std::runtime_error("sweep: empty specification");
  std::vector<double> out;
  if (text.front() == '{') {
    if (text.back() != '}') throw std::runtime_error("sweep: unterminated set");
    for (const std::string& tok : split_on(text.substr(1, text.size() - 2), ','))
      out.push_back(parse_number(tok));
    return out;
  }
  std::vector<std::string> parts = split_on(text, ':');
  if (parts.size() == 1) return {parse_number(parts[0])};
  double first = parse_number(parts.front());
  double last = parse_number(parts.back());
  double step = parts.size() == 3 ? parse_number(parts[1]) : 1.0;
  if (parts.size() > 3 || !(step > 0.0)) throw std::runtime_error("sweep: bad range");
  for (double v = first; v <= last + step * 1e-9; v += step) out.push_back(v);
  return out;
}

std::vector<long long> parse_int_sweep(const std::string& text) {
  std::vector<long long> out;
  for (double v : parse_double_sweep(text)) out.push_back(std::llround(v));
  return out;
}

}  // namespace ozmul
