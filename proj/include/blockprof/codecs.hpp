#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "blockprof/types.hpp"

namespace blockprof::codecs {

inline constexpr int kDefaultZstdLevel = 3;

/// Codec failure: corrupt input, length mismatch, or an internal codec error.
class CodecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Compresses `raw` (non-empty) with `codec`. Identity copies the input.
/// Output is deterministic for a given input, codec and level.
std::vector<std::byte> compress(CodecId codec, std::span<const std::byte> raw,
                                int zstd_level = kDefaultZstdLevel);

/// Same as above but writes into `out`, reusing its capacity.
void compressInto(CodecId codec, std::span<const std::byte> raw, std::vector<std::byte>& out,
                  int zstd_level = kDefaultZstdLevel);

/// Inverts compress(). Throws CodecError unless the output is exactly
/// `expected_len` bytes.
std::vector<std::byte> decompress(CodecId codec, std::span<const std::byte> compressed,
                                  std::size_t expected_len);

void decompressInto(CodecId codec, std::span<const std::byte> compressed,
                    std::size_t expected_len, std::vector<std::byte>& out);

}  // namespace blockprof::codecs
