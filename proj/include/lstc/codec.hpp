// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace lstc {

using Bytes = std::vector<uint8_t>;

class LosslessCodec {
 public:
  virtual ~LosslessCodec() = default;
  virtual Bytes compress(std::string_view data) const = 0;
  virtual std::string decompress(const Bytes& data, std::size_t original_size) const = 0;
  virtual std::string name() const = 0;
};

// zlib stream (DEFLATE), default compression level.
class DeflateCodec final : public LosslessCodec {
 public:
  explicit DeflateCodec(int level = -1) : level_(level) {}
  Bytes compress(std::string_view data) const override;
  std::string decompress(const Bytes& data, std::size_t original_size) const override;
  std::string name() const override { return "zlib"; }

 private:
  int level_;
};

// .xz container via liblzma, preset 6.
class LzmaCodec final : public LosslessCodec {
 public:
  explicit LzmaCodec(uint32_t preset = 6) : preset_(preset) {}
  Bytes compress(std::string_view data) const override;
  std::string decompress(const Bytes& data, std::size_t original_size) const override;
  std::string name() const override { return "lzma"; }

 private:
  uint32_t preset_;
};

std::unique_ptr<LosslessCodec> make_codec(std::string_view name);

// compress, verify the round trip (CodecIntegrityError on mismatch), return the size.
std::size_t checked_compressed_size(const LosslessCodec& codec, std::string_view data);

}  // namespace lstc
