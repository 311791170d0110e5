#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace hairkit::detail {

// Minimal 8-bit grayscale PNG encoder (zlib-deflated, filter 0 scanlines).
std::vector<std::byte> write_png_gray8(int width, int height, const std::vector<uint8_t>& pixels);

}  // namespace hairkit::detail
