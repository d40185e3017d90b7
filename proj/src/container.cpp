#include "container.hpp"

#include <cstring>
#include <fstream>

#include "snnadv/error.hpp"

namespace snnadv::detail {

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ull;
    }
    return h;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::string& buf, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off + i])) << (8 * i);
    return v;
}

std::uint64_t get_u64(const std::string& buf, std::size_t off) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[off + i])) << (8 * i);
    return v;
}

void need(const std::string& buf, std::size_t off, std::size_t n, const std::string& path) {
    if (off + n > buf.size()) {
        throw FormatError(path + ": truncated at byte " + std::to_string(buf.size()) + " (need " +
                          std::to_string(off + n) + ")");
    }
}

}  // namespace

void write_container(const std::string& path, const char magic[8], const nlohmann::json& manifest,
                     const std::vector<double>& payload) {
    const std::string man = manifest.dump();
    std::string body;
    body.append(magic, 8);
    put_u32(body, kContainerVersion);
    put_u64(body, man.size());
    body.append(man);
    put_u64(body, payload.size() * sizeof(double));
    const std::size_t payload_off = body.size();
    body.resize(body.size() + payload.size() * sizeof(double));
    if (!payload.empty()) {
        std::memcpy(body.data() + payload_off, payload.data(), payload.size() * sizeof(double));
    }
    const std::uint64_t checksum = fnv1a(body.data() + 12, body.size() - 12);
    put_u64(body, checksum);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw Error("write failed for " + path);
}

std::pair<nlohmann::json, std::vector<double>> read_container(const std::string& path,
                                                              const char magic[8]) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    need(buf, 0, 8, path);
    if (std::memcmp(buf.data(), magic, 8) != 0) {
        throw FormatError(path + ": bad magic at byte 0");
    }
    need(buf, 8, 4, path);
    const std::uint32_t version = get_u32(buf, 8);
    if (version != kContainerVersion) {
        throw FormatError(path + ": unsupported version " + std::to_string(version) + " (expected " +
                          std::to_string(kContainerVersion) + ")");
    }
    need(buf, 12, 8, path);
    const std::uint64_t man_len = get_u64(buf, 12);
    need(buf, 20, man_len, path);
    const std::string man = buf.substr(20, man_len);
    std::size_t off = 20 + man_len;
    need(buf, off, 8, path);
    const std::uint64_t payload_bytes = get_u64(buf, off);
    off += 8;
    need(buf, off, payload_bytes, path);
    if (payload_bytes % sizeof(double) != 0) {
        throw FormatError(path + ": payload length " + std::to_string(payload_bytes) +
                          " is not a multiple of 8 at byte " + std::to_string(off));
    }
    std::vector<double> payload(payload_bytes / sizeof(double));
    if (payload_bytes) std::memcpy(payload.data(), buf.data() + off, payload_bytes);
    off += payload_bytes;
    need(buf, off, 8, path);
    const std::uint64_t stored = get_u64(buf, off);
    const std::uint64_t actual = fnv1a(buf.data() + 12, off - 12);
    if (stored != actual) throw FormatError(path + ": checksum mismatch");

    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(man);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": bad manifest: " + e.what());
    }
    return {std::move(manifest), std::move(payload)};
}

}  // namespace snnadv::detail
