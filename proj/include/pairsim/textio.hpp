#ifndef PAIRSIM_TEXTIO_HPP
#define PAIRSIM_TEXTIO_HPP

// Delimited-text emission for all data products: '#'-prefixed header lines
// (config hash, seed, column names) followed by fixed-format columns, so
// reruns diff cleanly.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "pairsim/errors.hpp"

namespace pairsim {

// FNV-1a, used to stamp outputs with the effective-config hash.
inline std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct TableWriter {
  std::ofstream out;

  TableWriter(const std::string& path, std::uint64_t config_hash, std::uint64_t seed,
              std::span<const std::string> column_names)
      : out(path) {
    if (!out) throw ValidationError("cannot open output file: " + path);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(config_hash));
    out << "# config_hash " << buf << "\n";
    out << "# seed " << seed << "\n";
    out << "# columns";
    for (const auto& c : column_names) out << ' ' << c;
    out << "\n";
  }

  void row(std::span<const double> values) {
    char buf[40];
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.9g", values[i]);
      if (i) out << '\t';
      out << buf;
    }
    out << '\n';
  }
};

}  // namespace pairsim

#endif  // PAIRSIM_TEXTIO_HPP
