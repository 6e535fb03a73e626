#pragma once

// Helpers shared by the test binaries. Fixture bytes are assembled here by
// hand, independently of the library's encoders.

#include <stdlib.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "blockprof/types.hpp"

namespace blockprof::testing {

class TempDir {
 public:
  TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "blockprof-test-XXXXXX").string();
    if (::mkdtemp(pattern.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

class ByteWriter {
 public:
  ByteWriter& u8(std::uint8_t v) {
    bytes_.push_back(static_cast<std::byte>(v));
    return *this;
  }
  ByteWriter& u16(std::uint16_t v) { return le(v, 2); }
  ByteWriter& u32(std::uint32_t v) { return le(v, 4); }
  ByteWriter& u64(std::uint64_t v) { return le(v, 8); }
  ByteWriter& i32(std::int32_t v) { return le(static_cast<std::uint32_t>(v), 4); }
  ByteWriter& str(const std::string& s) {
    for (char c : s) bytes_.push_back(static_cast<std::byte>(c));
    return *this;
  }
  ByteWriter& raw(std::span<const std::byte> b) {
    bytes_.insert(bytes_.end(), b.begin(), b.end());
    return *this;
  }

  std::vector<std::byte>& bytes() noexcept { return bytes_; }

 private:
  ByteWriter& le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
    return *this;
  }
  std::vector<std::byte> bytes_;
};

struct Rec {
  std::uint64_t ts;
  std::int32_t tag;
};

inline void putHeader(ByteWriter& w, std::uint8_t handler, std::uint8_t codec, std::uint32_t capacity,
                      const std::string& name) {
  w.str("CPF1").u16(1).u8(handler).u8(codec).u32(capacity).u16(static_cast<std::uint16_t>(name.size())).str(name);
}

inline std::vector<std::byte> rawRecords(const std::vector<Rec>& recs) {
  ByteWriter w;
  for (const auto& r : recs) w.u64(r.ts).i32(r.tag);
  return std::move(w.bytes());
}

/// Identity-codec frame.
inline void putFrame(ByteWriter& w, std::uint64_t seq, const std::vector<Rec>& recs) {
  const auto payload = rawRecords(recs);
  w.u64(seq).u32(static_cast<std::uint32_t>(recs.size())).u8(0).u32(static_cast<std::uint32_t>(payload.size()))
      .u32(static_cast<std::uint32_t>(payload.size()))
      .raw(payload);
}

inline void writeBytes(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline std::vector<std::byte> readBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::vector<char> chars((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> out(chars.size());
  for (std::size_t i = 0; i < chars.size(); ++i) out[i] = static_cast<std::byte>(chars[i]);
  return out;
}

template <typename Entries>
std::vector<std::int32_t> tagsOf(const Entries& entries) {
  std::vector<std::int32_t> out;
  for (const auto& e : entries) out.push_back(e.tag);
  return out;
}

inline std::vector<std::byte> randomBytes(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::byte> out(n);
  for (auto& b : out) b = static_cast<std::byte>(rng() & 0xFF);
  return out;
}

/// Encoded monotone-timestamp records like a real block: small deltas,
/// tags cycling 10..1.
inline std::vector<std::byte> monotoneBlock(std::size_t entries, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  ByteWriter w;
  std::uint64_t ts = 1'000'000'000ull;
  for (std::size_t i = 0; i < entries; ++i) {
    ts += 40 + rng() % 200;
    w.u64(ts).i32(static_cast<std::int32_t>(10 - i % 10));
  }
  return std::move(w.bytes());
}

}  // namespace blockprof::testing
