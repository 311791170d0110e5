#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "hairkit/types.hpp"

namespace hairkit::io {

// Strands with fewer than 2 points are dropped rather than kept (scanned
// datasets contain stubs); the count is reported here.
struct ParseStats {
  int dropped_short_strands = 0;
};

// Cem Yuksel .hair container. Thickness/transparency/color channels are
// skipped on read and never written.
HairModel parse_hair_binary(std::span<const std::byte> bytes, ParseStats* stats = nullptr);
std::vector<std::byte> write_hair_binary(const HairModel& model);

// USC-HairSalon .data: int32 strand count, then per strand an int32 point
// count followed by that many float32 xyz triplets. Little-endian.
HairModel parse_data_file(std::span<const std::byte> bytes, ParseStats* stats = nullptr);
std::vector<std::byte> write_data_file(const HairModel& model);

// OBJ polylines: `v x y z` and `l i j k ...` lines, `#` comment header with
// strand/point counts. Export re-applies root offsets and the source scale.
std::string export_obj(const HairModel& model);
HairModel parse_obj(std::string_view text);

// Uniform arc-length resampling to exactly L points; endpoints preserved.
Strand resample_strand(const Strand& strand, int L);

// register (optional affine) -> drop short strands -> resample to L ->
// normalize head bounding sphere to radius 10 -> make strands root-relative.
HairModel canonicalize(const HairModel& model, int L,
                       const Eigen::Matrix4d& registration = Eigen::Matrix4d::Identity(),
                       ParseStats* stats = nullptr);

// World-space position of point k of strand i (root offset re-applied, source
// scale restored).
Vec3 world_point(const HairModel& model, size_t strand, int k);

HairModel load_model(const std::filesystem::path& path, ParseStats* stats = nullptr);
void save_model(const std::filesystem::path& path, const HairModel& model);

std::vector<std::byte> read_file(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace hairkit::io
