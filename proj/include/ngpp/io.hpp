#ifndef NGPP_IO_HPP
#define NGPP_IO_HPP

// Plain-text formats: comma-separated matrices ('.' decimal, optional single
// header row) and ASCII (P2) greymaps with 8-bit depth.

#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ngpp/error.hpp"
#include "ngpp/family.hpp"
#include "ngpp/numcore.hpp"

namespace ngpp::io {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::parse_error, "cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

/// Writes through a temporary sibling file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::invalid_argument, "cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::invalid_argument, "write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

struct CsvTable {
  std::vector<std::string> header;  // empty when the file has none
  Matrix values;
};

namespace detail {

inline std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(ngpp::detail::trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::optional<double> to_number(std::string_view field) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) return std::nullopt;
  return v;
}

}  // namespace detail

inline CsvTable parse_csv(std::string_view text) {
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::size_t width = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (ngpp::detail::trim(line).empty()) {
      if (pos > text.size()) break;
      continue;
    }
    const auto fields = detail::split_line(line);
    std::vector<double> row;
    row.reserve(fields.size());
    std::optional<std::size_t> bad;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto v = detail::to_number(fields[c]);
      if (!v) {
        bad = c;
        break;
      }
      row.push_back(*v);
    }
    if (bad) {
      if (rows.empty() && table.header.empty()) {
        for (auto f : fields) table.header.emplace_back(f);
        width = fields.size();
        continue;
      }
      std::ostringstream os;
      os << "line " << line_no << ", column " << *bad + 1 << ": cannot parse '" << fields[*bad] << "' as a number";
      throw Error(ErrorKind::parse_error, os.str());
    }
    if (width == 0) width = row.size();
    if (row.size() != width) {
      std::ostringstream os;
      os << "line " << line_no << ", column " << std::min(row.size(), width) + 1 << ": expected " << width
         << " fields, found " << row.size();
      throw Error(ErrorKind::parse_error, os.str());
    }
    rows.push_back(std::move(row));
  }
  table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j) table.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return table;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  try {
    return parse_csv(read_file(path));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.detail());
  }
}

inline std::string format_csv(const Matrix& m, const std::vector<std::string>& header = {}) {
  std::string out;
  if (!header.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j) out += ',';
      out += header[j];
    }
    out += '\n';
  }
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

inline void write_csv(const std::filesystem::path& path, const Matrix& m, const std::vector<std::string>& header = {}) {
  write_file_atomic(path, format_csv(m, header));
}

struct GreyImage {
  Index width = 0;
  Index height = 0;
  std::vector<double> pixels;  // row-major
};

inline GreyImage parse_pgm(std::string_view text, const std::string& name = "image") {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else {
      const std::size_t start = i;
      while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) && text[i] != '#') ++i;
      tokens.push_back(text.substr(start, i - start));
    }
  }
  auto fail = [&](const std::string& msg) { throw Error(ErrorKind::parse_error, name + ": " + msg); };
  if (tokens.empty() || tokens[0] != "P2") fail("not an ASCII (P2) PGM file");
  if (tokens.size() < 4) fail("truncated PGM header");
  auto integer = [&](std::string_view t) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size()) fail("bad integer '" + std::string(t) + "'");
    return v;
  };
  GreyImage img;
  img.width = integer(tokens[1]);
  img.height = integer(tokens[2]);
  const long maxval = integer(tokens[3]);
  if (img.width <= 0 || img.height <= 0) fail("non-positive image size");
  if (maxval < 1 || maxval > 255) fail("max value must lie in 1..255");
  const std::size_t count = static_cast<std::size_t>(img.width * img.height);
  if (tokens.size() != 4 + count) {
    fail("expected " + std::to_string(count) + " pixels, found " + std::to_string(tokens.size() - 4));
  }
  img.pixels.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const long v = integer(tokens[4 + k]);
    if (v < 0 || v > maxval) fail("pixel value out of range");
    img.pixels.push_back(static_cast<double>(v));
  }
  return img;
}

inline GreyImage read_pgm(const std::filesystem::path& path) { return parse_pgm(read_file(path), path.string()); }

/// P2 text with values rescaled linearly to 0..255 (constant images map to 0).
inline std::string format_pgm(const GreyImage& img) {
  const auto [lo_it, hi_it] = std::minmax_element(img.pixels.begin(), img.pixels.end());
  const double lo = img.pixels.empty() ? 0.0 : *lo_it;
  const double span = img.pixels.empty() ? 0.0 : *hi_it - lo;
  std::string out = "P2\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::size_t col = 0;
  for (double v : img.pixels) {
    const long q = span > 0.0 ? std::lround((v - lo) / span * 255.0) : 0;
    const std::string s = std::to_string(q);
    if (col + s.size() + 1 > 70) {
      out += '\n';
      col = 0;
    } else if (col > 0) {
      out += ' ';
      ++col;
    }
    out += s;
    col += s.size();
  }
  out += '\n';
  return out;
}

inline void write_pgm(const std::filesystem::path& path, const GreyImage& img) { write_file_atomic(path, format_pgm(img)); }

}  // namespace ngpp::io

#endif  // NGPP_IO_HPP
