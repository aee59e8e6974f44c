#pragma once

// Matrix and vector files. Two formats:
//  - CSV, row-major, optional single header line (auto-detected on read),
//    written with 17 significant digits so doubles round-trip exactly;
//  - binary: magic "GMPK1", u64 rows, u64 cols, then rows*cols f64 values
//    row-major, all little-endian.

#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gampkit/linear_operator.hpp"

namespace gampkit {

namespace detail {

inline bool parse_double(const std::string& tok, double& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r'))
    --last;
  if (first == last) return false;
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

inline Mat load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto toks = detail::split_csv_line(line);
    std::vector<double> row(toks.size());
    bool ok = true;
    for (std::size_t j = 0; j < toks.size(); ++j) {
      if (!detail::parse_double(toks[j], row[j])) {
        ok = false;
        if (!first_content_line)
          throw std::runtime_error(path + ": line " + std::to_string(lineno) +
                                   ", field " + std::to_string(j + 1) +
                                   ": not a number: '" + toks[j] + "'");
        break;
      }
    }
    if (!ok) {
      // non-numeric first line is treated as a header
      first_content_line = false;
      continue;
    }
    first_content_line = false;
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::runtime_error(path + ": line " + std::to_string(lineno) +
                               " has " + std::to_string(row.size()) +
                               " fields, expected " +
                               std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");
  Mat m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

inline void save_matrix_csv(const std::string& path, const Mat& m,
                            const std::string& header = "") {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  if (!header.empty()) out << header << '\n';
  char buf[40];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

// A vector file is a single CSV column (a single row is also accepted).
inline Vec load_vector_csv(const std::string& path) {
  Mat m = load_matrix_csv(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw std::runtime_error(path + ": expected a single column or row, got " +
                           std::to_string(m.rows()) + "x" +
                           std::to_string(m.cols()));
}

inline void save_vector_csv(const std::string& path, const Vec& v,
                            const std::string& header = "") {
  save_matrix_csv(path, v, header);
}

inline constexpr char kBinMagic[5] = {'G', 'M', 'P', 'K', '1'};

inline void save_matrix_bin(const std::string& path, const Mat& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(kBinMagic, 5);
  const std::uint64_t rows = static_cast<std::uint64_t>(m.rows());
  const std::uint64_t cols = static_cast<std::uint64_t>(m.cols());
  out.write(reinterpret_cast<const char*>(&rows), 8);
  out.write(reinterpret_cast<const char*>(&cols), 8);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline Mat load_matrix_bin(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[5];
  in.read(magic, 5);
  if (!in || std::memcmp(magic, kBinMagic, 5) != 0)
    throw std::runtime_error(path + ": bad magic, not a GMPK1 file");
  std::uint64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), 8);
  in.read(reinterpret_cast<char*>(&cols), 8);
  if (!in || rows == 0 || cols == 0 || rows > (1u << 28) || cols > (1u << 28))
    throw std::runtime_error(path + ": bad dimensions");
  Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::uint64_t i = 0; i < rows; ++i)
    for (std::uint64_t j = 0; j < cols; ++j) {
      double v;
      in.read(reinterpret_cast<char*>(&v), 8);
      if (!in) throw std::runtime_error(path + ": truncated payload");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  return m;
}

}  // namespace gampkit
