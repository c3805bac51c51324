#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace homoglab::studies {

using Cell = std::variant<double, std::int64_t, std::string>;

/// Shortest round-trip representation; "nan" / "inf" / "-inf" otherwise.
std::string format_double(double v);

struct Provenance {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version;
  std::string timestamp;  // excluded from the body
};

/// A table with a fixed column set. Output is '#'-prefixed provenance lines
/// followed by the header row and the data rows (the "body").
class CsvReport {
 public:
  explicit CsvReport(std::vector<std::string> columns);

  /// Throws ValidationError when the row width differs from the header.
  void add_row(std::vector<Cell> row);

  const std::vector<std::string>& columns() const noexcept { return columns_; }
  std::size_t rows() const noexcept { return rows_.size(); }
  const std::vector<Cell>& row(std::size_t r) const { return rows_.at(r); }
  std::size_t column_index(const std::string& name) const;
  double number(std::size_t r, const std::string& column) const;
  const std::string& text(std::size_t r, const std::string& column) const;

  std::string body() const;
  std::string render(const Provenance& p) const;
  void write(const std::filesystem::path& path, const Provenance& p) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
};

/// Raw little-endian float64 raster: 8-byte magic "HGLBRAST", uint32 nx,
/// uint32 ny, then nx * ny values in row-major order (row j, column i).
void write_raster_sidecar(const std::filesystem::path& path, std::uint32_t nx, std::uint32_t ny,
                          const std::vector<double>& values);

struct Raster {
  std::uint32_t nx = 0;
  std::uint32_t ny = 0;
  std::vector<double> values;
};

Raster read_raster_sidecar(const std::filesystem::path& path);

}  // namespace homoglab::studies
