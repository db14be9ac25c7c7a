#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pmel/errors.hpp"
#include "pmel/grid.hpp"

namespace pmel {

// Shortest round-trip decimal form (17 significant digits).
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Write-to-temp-then-rename so readers never observe partial files.
inline void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("rename " + tmp + " -> " + path + " failed: " + ec.message());
}

// Text format: header line "dim,cells_per_dim", then one value per line
// in row-major order.
inline void save_field_csv(const Field& f, const std::string& path) {
  std::ostringstream os;
  os << f.grid().dim() << "," << f.grid().cells_per_dim() << "\n";
  for (double v : f.values()) os << format_double(v) << "\n";
  write_file_atomic(path, os.str());
}

inline Field load_field_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw Error(path + ": missing header");
  int dim = 0, cells = 0;
  if (std::sscanf(header.c_str(), "%d,%d", &dim, &cells) != 2) {
    throw Error(path + ": bad field header '" + header + "'");
  }
  PeriodicGrid grid(dim, cells);
  std::vector<double> vals;
  vals.reserve(grid.size());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    vals.push_back(std::stod(line));
  }
  if (vals.size() != grid.size()) {
    throw Error(path + ": expected " + std::to_string(grid.size()) + " values, got " +
                std::to_string(vals.size()));
  }
  return Field(grid, std::move(vals));
}

// Binary format: magic "PMELFLD1", uint32 dim, uint32 cells_per_dim,
// row-major float64 values, all little-endian.
inline void save_field_binary(const Field& f, const std::string& path) {
  std::string out;
  out.reserve(16 + f.size() * sizeof(double));
  out.append("PMELFLD1", 8);
  const std::uint32_t dim = static_cast<std::uint32_t>(f.grid().dim());
  const std::uint32_t cells = static_cast<std::uint32_t>(f.grid().cells_per_dim());
  out.append(reinterpret_cast<const char*>(&dim), 4);
  out.append(reinterpret_cast<const char*>(&cells), 4);
  out.append(reinterpret_cast<const char*>(f.values().data()), f.size() * sizeof(double));
  write_file_atomic(path, out);
}

inline Field load_field_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  char magic[8];
  std::uint32_t dim = 0, cells = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&dim), 4);
  in.read(reinterpret_cast<char*>(&cells), 4);
  if (!in || std::memcmp(magic, "PMELFLD1", 8) != 0) {
    throw Error(path + ": not a field file");
  }
  PeriodicGrid grid(static_cast<int>(dim), static_cast<int>(cells));
  std::vector<double> vals(grid.size());
  in.read(reinterpret_cast<char*>(vals.data()),
          static_cast<std::streamsize>(vals.size() * sizeof(double)));
  if (!in) throw Error(path + ": truncated field data");
  return Field(grid, std::move(vals));
}

}  // namespace pmel
