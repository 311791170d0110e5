#pragma once

// Little-endian byte-buffer cursors shared by the binary container writers.
// Bounds are checked on every read; overruns surface as Truncated.

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "hairkit/types.hpp"

namespace hairkit::wire {

struct Writer {
  std::vector<std::byte> bytes;

  void magic(const char (&tag)[5]) { raw(tag, 4); }
  void u32(uint32_t v) { raw(&v, sizeof v); }
  void f32(const float* data, size_t count) { raw(data, count * sizeof(float)); }
  void f64(const double* data, size_t count) { raw(data, count * sizeof(double)); }

 private:
  void raw(const void* data, size_t size) {
    const auto* p = static_cast<const std::byte*>(data);
    bytes.insert(bytes.end(), p, p + size);
  }
};

struct Reader {
  const std::vector<std::byte>& bytes;
  std::string name;  // for error messages
  size_t pos = 0;

  void expect_magic(const char (&tag)[5]) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), tag, 4) != 0)
      throw Error(ErrorCode::BadMagic, "expected magic \"" + std::string(tag) + "\" in " + name);
    pos = 4;
  }
  uint32_t u32() {
    uint32_t v;
    raw(&v, sizeof v);
    return v;
  }
  void f32(float* dst, size_t count) { raw(dst, count * sizeof(float)); }
  void f64(double* dst, size_t count) { raw(dst, count * sizeof(double)); }
  size_t remaining() const { return bytes.size() - pos; }

 private:
  void raw(void* dst, size_t size) {
    if (bytes.size() - pos < size)
      throw Error(ErrorCode::Truncated, name + " shorter than its header declares");
    std::memcpy(dst, bytes.data() + pos, size);
    pos += size;
  }
};

}  // namespace hairkit::wire
