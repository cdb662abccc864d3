#include "mradon/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mradon/errors.hpp"

namespace mradon::io {

namespace {

[[noreturn]] void fail(const std::string& what, const std::string& path) {
  throw io_error(what + ": " + path);
}

}  // namespace

void write_f64(const std::string& path, std::span<const double> values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("cannot open for writing", path);
  std::vector<unsigned char> buf(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) buf[8 * i + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) fail("short write", path);
}

std::vector<double> read_f64(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open for reading", path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() % 8 != 0) fail("byte count is not a multiple of 8", path);
  std::vector<double> values(buf.size() / 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(buf[8 * i + b]) << (8 * b);
    values[i] = std::bit_cast<double>(bits);
  }
  return values;
}

namespace {

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);  // binary: keep LF endings
  if (!out) fail("cannot open for writing", path);
  std::ostringstream ss;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j) ss << ',';
    ss << csv_escape(header[j]);
  }
  ss << '\n';
  char num[64];
  for (const std::vector<double>& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) ss << ',';
      std::snprintf(num, sizeof(num), "%.17g", row[j]);
      ss << num;
    }
    ss << '\n';
  }
  const std::string s = ss.str();
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
  if (!out) fail("short write", path);
}

void write_pgm16(const std::string& path, int width, int height,
                 std::span<const double> values, double lo, double hi) {
  if (width <= 0 || height <= 0 ||
      values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw io_error("image dimensions do not match the sample count");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("cannot open for writing", path);
  std::ostringstream head;
  head << "P5\n" << width << " " << height << "\n65535\n";
  const std::string h = head.str();
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  const double scale = (hi > lo) ? 65535.0 / (hi - lo) : 0.0;
  std::vector<unsigned char> buf(values.size() * 2);
  for (std::size_t i = 0; i < values.size(); ++i) {
    double v = (values[i] - lo) * scale;
    v = std::min(std::max(v, 0.0), 65535.0);
    const auto s = static_cast<std::uint16_t>(v + 0.5);
    buf[2 * i] = static_cast<unsigned char>(s >> 8);  // big-endian per PGM
    buf[2 * i + 1] = static_cast<unsigned char>(s & 0xff);
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) fail("short write", path);
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("cannot open for writing", path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail("short write", path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open for reading", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace mradon::io
