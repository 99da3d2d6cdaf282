#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "hartgeom/error.hpp"

namespace hartgeom {

inline constexpr const char* kToolVersion = "0.1.0";

/// 64-bit FNV-1a over a file's bytes.
inline std::uint64_t fnv1a_file(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open " + path + " for digest");
  std::uint64_t h = 14695981039346656037ULL;
  unsigned char buf[65536];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0)
    for (std::size_t i = 0; i < n; ++i) {
      h ^= buf[i];
      h *= 1099511628211ULL;
    }
  std::fclose(f);
  return h;
}

inline std::string fnv1a_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Provenance record written next to every successful CLI output.
struct RunManifest {
  std::string subcommand;
  std::map<std::string, std::string> flags;      // resolved values
  std::map<std::string, std::string> input_digests;  // path -> fnv1a hex
  double duration_ms = 0;

  void add_input(const std::string& path) {
    input_digests[path] = fnv1a_hex(fnv1a_file(path));
  }

  void write(const std::string& path) const {
    nlohmann::json j;
    j["subcommand"] = subcommand;
    j["flags"] = flags;
    j["inputs"] = input_digests;
    j["version"] = kToolVersion;
    j["duration_ms"] = duration_ms;
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
  }
};

}  // namespace hartgeom
