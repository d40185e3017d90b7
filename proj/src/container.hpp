#pragma once

// Internal helpers for the versioned binary containers used by the model
// and dataset files: 8-byte magic, u32 version, JSON manifest, raw little-
// endian float64 payload, FNV-1a checksum over manifest + payload.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace snnadv::detail {

inline constexpr std::uint32_t kContainerVersion = 1;

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h = 0xCBF29CE484222325ull);

void write_container(const std::string& path, const char magic[8], const nlohmann::json& manifest,
                     const std::vector<double>& payload);

// Throws FormatError on bad magic / version / checksum / truncation,
// naming the byte offset where parsing failed.
std::pair<nlohmann::json, std::vector<double>> read_container(const std::string& path,
                                                              const char magic[8]);

}  // namespace snnadv::detail
