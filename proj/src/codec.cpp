// SPDX-License-Identifier: Apache-2.0

#include "lstc/codec.hpp"

#include <lzma.h>
#include <zlib.h>

#include "lstc/error.hpp"

namespace lstc {

Bytes DeflateCodec::compress(std::string_view data) const {
  uLongf size = compressBound(static_cast<uLong>(data.size()));
  Bytes out(size);
  const int rc = compress2(out.data(), &size, reinterpret_cast<const Bytef*>(data.data()),
                           static_cast<uLong>(data.size()), level_);
  if (rc != Z_OK) throw Error("zlib compress failed (" + std::to_string(rc) + ")");
  out.resize(size);
  return out;
}

std::string DeflateCodec::decompress(const Bytes& data, std::size_t original_size) const {
  std::string out(original_size, '\0');
  uLongf size = static_cast<uLongf>(original_size);
  const int rc = uncompress(reinterpret_cast<Bytef*>(out.data()), &size, data.data(),
                            static_cast<uLong>(data.size()));
  if (rc != Z_OK) throw CodecIntegrityError("zlib uncompress failed (" + std::to_string(rc) + ")");
  out.resize(size);
  return out;
}

Bytes LzmaCodec::compress(std::string_view data) const {
  Bytes out(lzma_stream_buffer_bound(data.size()));
  std::size_t pos = 0;
  const lzma_ret rc = lzma_easy_buffer_encode(preset_, LZMA_CHECK_CRC64, nullptr,
                                              reinterpret_cast<const uint8_t*>(data.data()),
                                              data.size(), out.data(), &pos, out.size());
  if (rc != LZMA_OK) throw Error("lzma compress failed (" + std::to_string(rc) + ")");
  out.resize(pos);
  return out;
}

std::string LzmaCodec::decompress(const Bytes& data, std::size_t original_size) const {
  std::string out(original_size, '\0');
  uint64_t memlimit = UINT64_MAX;
  std::size_t in_pos = 0;
  std::size_t out_pos = 0;
  const lzma_ret rc =
      lzma_stream_buffer_decode(&memlimit, 0, nullptr, data.data(), &in_pos, data.size(),
                                reinterpret_cast<uint8_t*>(out.data()), &out_pos, out.size());
  if (rc != LZMA_OK) throw CodecIntegrityError("lzma decompress failed (" + std::to_string(rc) + ")");
  out.resize(out_pos);
  return out;
}

std::unique_ptr<LosslessCodec> make_codec(std::string_view name) {
  if (name == "zlib" || name == "deflate") return std::make_unique<DeflateCodec>();
  if (name == "lzma" || name == "xz") return std::make_unique<LzmaCodec>();
  throw ConfigError("unknown codec '" + std::string(name) + "'");
}

std::size_t checked_compressed_size(const LosslessCodec& codec, std::string_view data) {
  const Bytes packed = codec.compress(data);
  if (codec.decompress(packed, data.size()) != data)
    throw CodecIntegrityError(codec.name() + " round trip does not reproduce the input");
  return packed.size();
}

}  // namespace lstc
