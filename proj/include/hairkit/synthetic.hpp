#pragma once

#include <cstdint>
#include <vector>

#include "hairkit/scalp.hpp"
#include "hairkit/texture.hpp"
#include "hairkit/types.hpp"

namespace hairkit::synthetic {

// Cross-platform deterministic RNG (the distributions in <random> are
// implementation-defined): splitmix64 bits with explicit mappings.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed * 0x9E3779B97F4A7C15ull + 1) {}
  uint64_t bits();
  double uniform();                    // [0, 1)
  double range(double lo, double hi);  // [lo, hi)
  double normal();                     // Box-Muller
  int index(int n);                    // [0, n)

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Root-relative helix: axis -y (droop), radius/turns/phase in the xz plane,
// point 0 at the origin.
Strand helix_strand(int L, double radius, double turns, double length, double phase = 0.0);

// Root-relative planar wave: sine of the given amplitude/frequency on top of a
// straight drop.
Strand wave_strand(int L, double amplitude, double frequency, double length, double phase = 0.0);

// Procedural corpus of mixed helices/waves with continuous random parameters
// (full spectral rank), root-relative, length L.
std::vector<Strand> strand_corpus(int count, int L, uint64_t seed);

// Corpus drawn from an exact `rank`-dimensional affine family: mean strand
// plus random combinations of `rank` fixed direction strands.
std::vector<Strand> low_rank_corpus(int count, int L, int rank, uint64_t seed);

struct WigStyle {
  double curl_radius = 0.6;   // 0 = straight
  double curl_turns = 3.0;
  double length = 7.0;
  double length_jitter = 0.15;
  double tilt = 0.35;         // outward lean away from the scalp normal
};

// Strands seeded at random uv on the scalp patch, root-relative, roots_uv
// attached; style parameters vary smoothly over the scalp.
HairModel make_wig(const scalp::ScalpMap& scalp, int count, int L, uint64_t seed,
                   const WigStyle& style = {});

// Full-resolution 64-channel geometry textures with smooth random fields and
// an elliptical hair region; channel amplitudes decay with channel index so
// the low/residual split is meaningful. Used by the identifiability tests.
std::vector<texture::GeometryTexture> texture_corpus(int count, int width, int height,
                                                     int channels, uint64_t seed);

}  // namespace hairkit::synthetic
