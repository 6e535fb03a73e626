#include "blockprof/codecs.hpp"

#include <lz4.h>
#include <zstd.h>

#include <limits>
#include <memory>
#include <string>

namespace blockprof::codecs {

namespace {

struct CCtxDeleter {
  void operator()(ZSTD_CCtx* ctx) const noexcept { ZSTD_freeCCtx(ctx); }
};
struct DCtxDeleter {
  void operator()(ZSTD_DCtx* ctx) const noexcept { ZSTD_freeDCtx(ctx); }
};

// Worker-local scratch contexts; codecs are otherwise stateless.
ZSTD_CCtx* compressionContext() {
  thread_local std::unique_ptr<ZSTD_CCtx, CCtxDeleter> ctx{ZSTD_createCCtx()};
  if (!ctx) throw CodecError("zstd: cannot allocate compression context");
  return ctx.get();
}

ZSTD_DCtx* decompressionContext() {
  thread_local std::unique_ptr<ZSTD_DCtx, DCtxDeleter> ctx{ZSTD_createDCtx()};
  if (!ctx) throw CodecError("zstd: cannot allocate decompression context");
  return ctx.get();
}

void checkLz4Size(std::size_t n, const char* what) {
  if (n > static_cast<std::size_t>(LZ4_MAX_INPUT_SIZE)) {
    throw CodecError(std::string("realtime: ") + what + " exceeds LZ4 input limit");
  }
}

}  // namespace

void compressInto(CodecId codec, std::span<const std::byte> raw, std::vector<std::byte>& out,
                  int zstd_level) {
  if (raw.empty()) throw CodecError("compress: empty input");
  switch (codec) {
    case CodecId::Identity:
      out.assign(raw.begin(), raw.end());
      return;
    case CodecId::Zstd: {
      out.resize(ZSTD_compressBound(raw.size()));
      ZSTD_CCtx* ctx = compressionContext();
      ZSTD_CCtx_reset(ctx, ZSTD_reset_session_and_parameters);
      ZSTD_CCtx_setParameter(ctx, ZSTD_c_compressionLevel, zstd_level);
      // 4-byte content checksum: corruption becomes a decode error.
      ZSTD_CCtx_setParameter(ctx, ZSTD_c_checksumFlag, 1);
      const std::size_t n = ZSTD_compress2(ctx, out.data(), out.size(), raw.data(), raw.size());
      if (ZSTD_isError(n)) throw CodecError(std::string("zstd: ") + ZSTD_getErrorName(n));
      out.resize(n);
      return;
    }
    case CodecId::Realtime: {
      checkLz4Size(raw.size(), "input");
      const int bound = LZ4_compressBound(static_cast<int>(raw.size()));
      out.resize(static_cast<std::size_t>(bound));
      const int n = LZ4_compress_default(reinterpret_cast<const char*>(raw.data()),
                                         reinterpret_cast<char*>(out.data()),
                                         static_cast<int>(raw.size()), bound);
      if (n <= 0) throw CodecError("realtime: compression failed");
      out.resize(static_cast<std::size_t>(n));
      return;
    }
  }
  throw CodecError("compress: unknown codec id " + std::to_string(static_cast<int>(codec)));
}

std::vector<std::byte> compress(CodecId codec, std::span<const std::byte> raw, int zstd_level) {
  std::vector<std::byte> out;
  compressInto(codec, raw, out, zstd_level);
  return out;
}

void decompressInto(CodecId codec, std::span<const std::byte> compressed,
                    std::size_t expected_len, std::vector<std::byte>& out) {
  switch (codec) {
    case CodecId::Identity:
      if (compressed.size() != expected_len) {
        throw CodecError("identity: payload is " + std::to_string(compressed.size()) +
                         " bytes, expected " + std::to_string(expected_len));
      }
      out.assign(compressed.begin(), compressed.end());
      return;
    case CodecId::Zstd: {
      const unsigned long long content = ZSTD_getFrameContentSize(compressed.data(), compressed.size());
      if (content == ZSTD_CONTENTSIZE_ERROR) throw CodecError("zstd: corrupt or truncated frame");
      if (content != ZSTD_CONTENTSIZE_UNKNOWN && content != expected_len) {
        throw CodecError("zstd: frame declares " + std::to_string(content) + " bytes, expected " +
                         std::to_string(expected_len));
      }
      out.resize(expected_len);
      const std::size_t n = ZSTD_decompressDCtx(decompressionContext(), out.data(), out.size(),
                                                compressed.data(), compressed.size());
      if (ZSTD_isError(n)) throw CodecError(std::string("zstd: ") + ZSTD_getErrorName(n));
      if (n != expected_len) {
        throw CodecError("zstd: produced " + std::to_string(n) + " bytes, expected " +
                         std::to_string(expected_len));
      }
      return;
    }
    case CodecId::Realtime: {
      checkLz4Size(compressed.size(), "payload");
      checkLz4Size(expected_len, "expected length");
      out.resize(expected_len);
      const int n = LZ4_decompress_safe(reinterpret_cast<const char*>(compressed.data()),
                                        reinterpret_cast<char*>(out.data()),
                                        static_cast<int>(compressed.size()),
                                        static_cast<int>(expected_len));
      if (n < 0) throw CodecError("realtime: corrupt or truncated block");
      if (static_cast<std::size_t>(n) != expected_len) {
        throw CodecError("realtime: produced " + std::to_string(n) + " bytes, expected " +
                         std::to_string(expected_len));
      }
      return;
    }
  }
  throw CodecError("decompress: unknown codec id " + std::to_string(static_cast<int>(codec)));
}

std::vector<std::byte> decompress(CodecId codec, std::span<const std::byte> compressed,
                                  std::size_t expected_len) {
  std::vector<std::byte> out;
  decompressInto(codec, compressed, expected_len, out);
  return out;
}

}  // namespace blockprof::codecs
