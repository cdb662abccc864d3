#pragma once

#include <span>
#include <string>
#include <vector>

namespace mradon::io {

// Raw float64 stream, little-endian regardless of host.
void write_f64(const std::string& path, std::span<const double> values);
std::vector<double> read_f64(const std::string& path);

// RFC-4180 CSV: LF line endings, one header row, numbers at 17 significant
// digits (round-trip exact).
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

// Binary 16-bit PGM (P5, maxval 65535, big-endian samples). Values are mapped
// linearly from [lo, hi] to [0, 65535] and clamped; row 0 of the data is the
// top image row.
void write_pgm16(const std::string& path, int width, int height,
                 std::span<const double> values, double lo, double hi);

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

}  // namespace mradon::io
