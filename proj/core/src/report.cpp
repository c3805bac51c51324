#include "homoglab/report.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "homoglab/errors.hpp"

namespace homoglab::studies {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

namespace {

std::string render_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  const auto& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch == '\n' ? ' ' : ch;
  }
  return q + "\"";
}

}  // namespace

CsvReport::CsvReport(std::vector<std::string> columns) : columns_(std::move(columns)) {
  if (columns_.empty()) throw ValidationError("csv report needs at least one column");
}

void CsvReport::add_row(std::vector<Cell> row) {
  if (row.size() != columns_.size())
    throw ValidationError("csv row has " + std::to_string(row.size()) + " cells, header has " +
                          std::to_string(columns_.size()));
  rows_.push_back(std::move(row));
}

std::size_t CsvReport::column_index(const std::string& name) const {
  const auto it = std::find(columns_.begin(), columns_.end(), name);
  if (it == columns_.end()) throw ValidationError("no column named " + name);
  return static_cast<std::size_t>(it - columns_.begin());
}

double CsvReport::number(std::size_t r, const std::string& column) const {
  const auto& c = row(r)[column_index(column)];
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  throw ValidationError("column " + column + " is not numeric");
}

const std::string& CsvReport::text(std::size_t r, const std::string& column) const {
  const auto& c = row(r)[column_index(column)];
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  throw ValidationError("column " + column + " is not text");
}

std::string CsvReport::body() const {
  std::string out;
  for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + columns_[i];
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += render_cell(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string CsvReport::render(const Provenance& p) const {
  std::ostringstream head;
  head << "# homoglab " << p.version << '\n'
       << "# command: " << p.command << '\n'
       << "# config_hash: " << p.config_hash << '\n'
       << "# seed: " << p.seed << '\n';
  if (!p.timestamp.empty()) head << "# generated: " << p.timestamp << '\n';
  return head.str() + body();
}

void CsvReport::write(const std::filesystem::path& path, const Provenance& p) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  out << render(p);
  if (!out) throw ValidationError("failed writing " + path.string());
}

namespace {

constexpr char kMagic[8] = {'H', 'G', 'L', 'B', 'R', 'A', 'S', 'T'};

template <class T>
void put_le(std::ostream& out, T v) {
  std::array<char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(bytes.data(), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
  std::array<char, sizeof(T)> bytes{};
  in.read(bytes.data(), sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T v;
  std::memcpy(&v, bytes.data(), sizeof(T));
  return v;
}

}  // namespace

void write_raster_sidecar(const std::filesystem::path& path, std::uint32_t nx, std::uint32_t ny,
                          const std::vector<double>& values) {
  if (values.size() != static_cast<std::size_t>(nx) * ny) throw ValidationError("raster size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof kMagic);
  put_le(out, nx);
  put_le(out, ny);
  for (double v : values) put_le(out, v);
}

Raster read_raster_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw ValidationError("not a raster sidecar: " + path.string());
  Raster r;
  r.nx = get_le<std::uint32_t>(in);
  r.ny = get_le<std::uint32_t>(in);
  r.values.resize(static_cast<std::size_t>(r.nx) * r.ny);
  for (auto& v : r.values) v = get_le<double>(in);
  if (!in) throw ValidationError("truncated raster sidecar: " + path.string());
  return r;
}

}  // namespace homoglab::studies
