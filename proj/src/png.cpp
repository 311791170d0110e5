#include "png.hpp"

#include <zlib.h>

#include <cstring>
#include <stdexcept>

namespace hairkit::detail {

namespace {

void put_u32_be(std::vector<std::byte>& out, uint32_t v) {
  out.push_back(std::byte(v >> 24));
  out.push_back(std::byte((v >> 16) & 0xFF));
  out.push_back(std::byte((v >> 8) & 0xFF));
  out.push_back(std::byte(v & 0xFF));
}

void put_chunk(std::vector<std::byte>& out, const char type[4], const uint8_t* data, size_t len) {
  put_u32_be(out, static_cast<uint32_t>(len));
  size_t start = out.size();
  out.insert(out.end(), reinterpret_cast<const std::byte*>(type),
             reinterpret_cast<const std::byte*>(type) + 4);
  out.insert(out.end(), reinterpret_cast<const std::byte*>(data),
             reinterpret_cast<const std::byte*>(data) + len);
  uint32_t crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(out.data() + start),
              static_cast<uInt>(out.size() - start));
  put_u32_be(out, crc);
}

}  // namespace

std::vector<std::byte> write_png_gray8(int width, int height, const std::vector<uint8_t>& pixels) {
  if (width <= 0 || height <= 0 ||
      pixels.size() != static_cast<size_t>(width) * static_cast<size_t>(height))
    throw std::invalid_argument("write_png_gray8: bad dimensions");

  // Filter byte 0 in front of every scanline.
  std::vector<uint8_t> raw(static_cast<size_t>(height) * (width + 1));
  for (int y = 0; y < height; ++y) {
    raw[static_cast<size_t>(y) * (width + 1)] = 0;
    std::memcpy(raw.data() + static_cast<size_t>(y) * (width + 1) + 1,
                pixels.data() + static_cast<size_t>(y) * width, width);
  }

  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> compressed(bound);
  if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw std::runtime_error("write_png_gray8: deflate failed");
  compressed.resize(bound);

  std::vector<std::byte> out;
  static const uint8_t signature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  out.insert(out.end(), reinterpret_cast<const std::byte*>(signature),
             reinterpret_cast<const std::byte*>(signature) + 8);

  uint8_t ihdr[13];
  auto put_be = [](uint8_t* p, uint32_t v) {
    p[0] = v >> 24; p[1] = (v >> 16) & 0xFF; p[2] = (v >> 8) & 0xFF; p[3] = v & 0xFF;
  };
  put_be(ihdr, static_cast<uint32_t>(width));
  put_be(ihdr + 4, static_cast<uint32_t>(height));
  ihdr[8] = 8;   // bit depth
  ihdr[9] = 0;   // grayscale
  ihdr[10] = 0;  // compression
  ihdr[11] = 0;  // filter
  ihdr[12] = 0;  // interlace
  put_chunk(out, "IHDR", ihdr, sizeof(ihdr));
  put_chunk(out, "IDAT", compressed.data(), compressed.size());
  put_chunk(out, "IEND", nullptr, 0);
  return out;
}

}  // namespace hairkit::detail
