#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "pmdiff/errors.hpp"
#include "pmdiff/grid.hpp"
#include "pmdiff/metrics.hpp"

namespace pmdiff::io {

enum class PgmFormat { Ascii /* P2 */, Binary /* P5 */ };

struct PgmImage {
  ScalarField field;
  PgmFormat format = PgmFormat::Binary;
  /// Bytes after the declared payload; reported, never consumed.
  std::size_t trailing_bytes = 0;
};

namespace detail {

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

// Header tokenizer: skips whitespace and `#` comments up to end of line.
class PgmCursor {
public:
  explicit PgmCursor(std::string_view bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  unsigned long read_unsigned(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    unsigned long value = 0;
    const auto [ptr, ec] = std::from_chars(bytes_.data() + pos_, bytes_.data() + bytes_.size(), value);
    if (ec != std::errc{} || ptr == bytes_.data() + pos_) {
      throw ParseError(std::string("expected ") + what + " at byte " + std::to_string(start), start);
    }
    pos_ = static_cast<std::size_t>(ptr - bytes_.data());
    if (pos_ < bytes_.size() && !is_space(bytes_[pos_]) && bytes_[pos_] != '#') {
      throw ParseError(std::string("malformed ") + what + " at byte " + std::to_string(start), start);
    }
    return value;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }
  std::string_view bytes() const { return bytes_; }

private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

inline std::size_t trailing_non_space(std::string_view bytes, std::size_t from) {
  std::size_t count = 0;
  for (std::size_t k = from; k < bytes.size(); ++k) count += is_space(bytes[k]) ? 0 : 1;
  return count;
}

}  // namespace detail

/// Parses a P2 or P5 image with maxval 255; samples map to v/255.
inline PgmImage read_pgm_image(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
    throw ParseError("not a P2/P5 PGM file (bad magic at byte 0)", 0);
  }
  const auto format = bytes[1] == '2' ? PgmFormat::Ascii : PgmFormat::Binary;
  detail::PgmCursor cur(bytes);
  cur.advance(2);
  if (cur.pos() < bytes.size() && !detail::is_space(bytes[cur.pos()]) && bytes[cur.pos()] != '#') {
    throw ParseError("missing whitespace after magic at byte 2", 2);
  }
  const auto width = cur.read_unsigned("width");
  const auto height = cur.read_unsigned("height");
  cur.skip_space_and_comments();
  const std::size_t maxval_pos = cur.pos();
  const auto maxval = cur.read_unsigned("maxval");
  if (width == 0 || height == 0) throw ParseError("image dimensions must be positive", maxval_pos);
  if (maxval != 255) {
    throw ParseError("unsupported maxval " + std::to_string(maxval) + " (only 255)", maxval_pos);
  }

  const Extent extent{height, width};
  std::vector<double> values(extent.size());
  std::size_t trailing = 0;
  if (format == PgmFormat::Binary) {
    // Exactly one whitespace byte separates maxval from the raster.
    if (cur.pos() >= bytes.size() || !detail::is_space(bytes[cur.pos()])) {
      throw ParseError("missing whitespace after maxval at byte " + std::to_string(cur.pos()), cur.pos());
    }
    cur.advance(1);
    const std::size_t start = cur.pos();
    if (bytes.size() - start < values.size()) {
      throw ParseError("truncated payload: expected " + std::to_string(values.size()) + " bytes at byte " +
                           std::to_string(start) + ", found " + std::to_string(bytes.size() - start),
                       bytes.size());
    }
    for (std::size_t k = 0; k < values.size(); ++k) {
      values[k] = static_cast<unsigned char>(bytes[start + k]) / 255.0;
    }
    trailing = bytes.size() - start - values.size();
  } else {
    for (std::size_t k = 0; k < values.size(); ++k) {
      cur.skip_space_and_comments();
      if (cur.pos() >= bytes.size()) {
        throw ParseError("truncated payload: " + std::to_string(k) + " of " + std::to_string(values.size()) +
                             " samples at byte " + std::to_string(cur.pos()),
                         cur.pos());
      }
      const std::size_t at = cur.pos();
      const auto v = cur.read_unsigned("sample");
      if (v > maxval) throw ParseError("sample " + std::to_string(v) + " exceeds maxval at byte " + std::to_string(at), at);
      values[k] = static_cast<double>(v) / 255.0;
    }
    trailing = detail::trailing_non_space(bytes, cur.pos());
  }
  return {ScalarField(extent, std::move(values)), format, trailing};
}

inline ScalarField read_pgm(std::string_view bytes) { return read_pgm_image(bytes).field; }

/// Rounds half away from zero after clamping to [0, 1].
inline std::uint8_t quantize(double value) {
  return static_cast<std::uint8_t>(std::round(std::clamp(value, 0.0, 1.0) * 255.0));
}

/// Values outside [0, 1] are clamped here and only here.
inline std::string write_pgm(const ScalarField& field, PgmFormat format) {
  std::string out = format == PgmFormat::Ascii ? "P2\n" : "P5\n";
  out += std::to_string(field.cols()) + " " + std::to_string(field.rows()) + "\n255\n";
  if (format == PgmFormat::Binary) {
    for (double v : field.values()) out.push_back(static_cast<char>(quantize(v)));
    return out;
  }
  // Netpbm asks for ASCII lines of at most 70 characters.
  for (std::size_t i = 0; i < field.rows(); ++i) {
    std::size_t line = 0;
    for (std::size_t j = 0; j < field.cols(); ++j) {
      const std::string sample = std::to_string(quantize(field(i, j)));
      if (line > 0 && line + 1 + sample.size() > 70) {
        out += "\n";
        line = 0;
      }
      if (line > 0) {
        out += " ";
        ++line;
      }
      out += sample;
      line += sample.size();
    }
    out += "\n";
  }
  return out;
}

inline std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

/// Values separated by newlines and/or commas; blank lines are ignored.
inline ScalarField read_csv_signal(std::string_view text) {
  std::vector<double> values;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    const std::string_view line = text.substr(pos, eol - pos);
    ++line_no;
    std::size_t start = 0;
    while (start <= line.size()) {
      const std::size_t comma = std::min(line.find(',', start), line.size());
      std::string_view token = line.substr(start, comma - start);
      while (!token.empty() && detail::is_space(token.front())) token.remove_prefix(1);
      while (!token.empty() && detail::is_space(token.back())) token.remove_suffix(1);
      const bool lone_blank = token.empty() && comma == line.size() && start == 0;
      if (!lone_blank) {
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(v)) {
          throw ParseError("non-numeric value '" + std::string(token) + "' on line " + std::to_string(line_no), line_no);
        }
        values.push_back(v);
      }
      start = comma + 1;
    }
    pos = eol + 1;
  }
  if (values.empty()) throw ParseError("empty signal", 1);
  return ScalarField::signal(std::move(values));
}

/// One value per line, 17 significant digits.
inline std::string write_csv_signal(const ScalarField& field) {
  std::string out;
  for (double v : field.values()) out += format_double(v) + "\n";
  return out;
}

/// Header `iter,mean,variance,min,max,l1_ref`; l1_ref is empty when not tracked.
inline std::string write_metrics_csv(const MetricsLog& log) {
  std::string out = "iter,mean,variance,min,max,l1_ref\n";
  for (const auto& r : log.records()) {
    out += std::to_string(r.iteration) + "," + format_double(r.mean) + "," + format_double(r.variance) + "," +
           format_double(r.min) + "," + format_double(r.max) + "," + (r.l1_ref ? format_double(*r.l1_ref) : "") +
           "\n";
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return data;
}

inline void write_file(const std::filesystem::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

/// Loads by extension: `.csv` as a 1×N signal, anything else as PGM.
inline ScalarField load_field(const std::filesystem::path& path) {
  const auto data = read_file(path);
  if (path.extension() == ".csv") return read_csv_signal(data);
  return read_pgm(data);
}

/// Saves by extension: `.csv` as a signal, anything else as binary PGM.
inline void save_field(const std::filesystem::path& path, const ScalarField& field) {
  if (path.extension() == ".csv") {
    write_file(path, write_csv_signal(field));
  } else {
    write_file(path, write_pgm(field, PgmFormat::Binary));
  }
}

}  // namespace pmdiff::io
