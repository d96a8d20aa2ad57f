#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "lcfuse/error.hpp"

namespace lcfuse {

// FNV-1a, 64 bit. Used for run manifests and determinism checks, not security.
inline std::uint64_t fnv1a64(const void* data, std::size_t size,
                             std::uint64_t seed = 14695981039346656037ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::IoFailure, "cannot open " + path.string());
  std::uint64_t h = 14695981039346656037ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  return h;
}

inline std::string digest_hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setfill('0') << std::setw(16) << h;
  return os.str();
}

}  // namespace lcfuse
