#include "hairkit/synthetic.hpp"

#include <cmath>
#include <numbers>

namespace hairkit::synthetic {

namespace {
constexpr double kTau = 2.0 * std::numbers::pi;
}

uint64_t Rng::bits() {
  state_ += 0x9E3779B97F4A7C15ull;
  uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

double Rng::range(double lo, double hi) { return lo + uniform() * (hi - lo); }

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  const double r = std::sqrt(-2.0 * std::log(1.0 - uniform()));
  const double angle = kTau * uniform();
  spare_ = r * std::sin(angle);
  have_spare_ = true;
  return r * std::cos(angle);
}

int Rng::index(int n) { return std::min(static_cast<int>(uniform() * n), n - 1); }

Strand helix_strand(int L, double radius, double turns, double length, double phase) {
  Strand s;
  s.points.resize(L, 3);
  for (int j = 0; j < L; ++j) {
    const double t = static_cast<double>(j) / (L - 1);
    const double a = kTau * turns * t + phase;
    s.points.row(j) << radius * (std::cos(a) - std::cos(phase)), -length * t,
        radius * (std::sin(a) - std::sin(phase));
  }
  return s;
}

Strand wave_strand(int L, double amplitude, double frequency, double length, double phase) {
  Strand s;
  s.points.resize(L, 3);
  for (int j = 0; j < L; ++j) {
    const double t = static_cast<double>(j) / (L - 1);
    const double a = kTau * frequency * t + phase;
    s.points.row(j) << amplitude * (std::sin(a) - std::sin(phase)), -length * t, 0.0;
  }
  return s;
}

std::vector<Strand> strand_corpus(int count, int L, uint64_t seed) {
  Rng rng(seed);
  std::vector<Strand> corpus;
  corpus.reserve(count);
  for (int i = 0; i < count; ++i) {
    // Continuous frequencies/turns leak across every DFT band, so the corpus
    // reaches full spectral rank.
    if (i % 2 == 0)
      corpus.push_back(helix_strand(L, rng.range(0.1, 1.2), rng.range(0.5, 5.0),
                                    rng.range(4.0, 9.0), rng.range(0.0, kTau)));
    else
      corpus.push_back(wave_strand(L, rng.range(0.05, 0.8), rng.range(0.5, 6.0),
                                   rng.range(4.0, 9.0), rng.range(0.0, kTau)));
  }
  return corpus;
}

std::vector<Strand> low_rank_corpus(int count, int L, int rank, uint64_t seed) {
  Rng rng(seed);
  const Strand base = helix_strand(L, 0.3, 1.5, 6.0);
  std::vector<Strand> directions;
  directions.reserve(rank);
  for (int i = 0; i < rank; ++i) {
    if (i % 2 == 0)
      directions.push_back(helix_strand(L, rng.range(0.1, 0.6), rng.range(0.5, 4.5),
                                        rng.range(0.5, 2.0), rng.range(0.0, kTau)));
    else
      directions.push_back(wave_strand(L, rng.range(0.05, 0.5), rng.range(0.5, 5.5),
                                       rng.range(0.5, 2.0), rng.range(0.0, kTau)));
  }
  std::vector<Strand> corpus;
  corpus.reserve(count);
  for (int i = 0; i < count; ++i) {
    Strand s = base;
    for (int d = 0; d < rank; ++d) s.points += rng.normal() * directions[d].points;
    corpus.push_back(std::move(s));
  }
  return corpus;
}

HairModel make_wig(const scalp::ScalpMap& scalp, int count, int L, uint64_t seed,
                   const WigStyle& style) {
  Rng rng(seed);
  HairModel wig;
  wig.root_relative = true;
  wig.roots_uv.emplace();
  const Vec3 down(0.0, -1.0, 0.0);
  for (int i = 0; i < count; ++i) {
    const Vec2 uv(rng.range(0.05, 0.95), rng.range(0.05, 0.95));
    const Mat3 frame = scalp.frame(uv);

    // Style parameters drift smoothly over the scalp, with per-strand jitter.
    const double swirl = std::sin(kTau * (uv.x() + 0.3)) * std::cos(kTau * (uv.y() - 0.2));
    const double radius = style.curl_radius * (0.75 + 0.25 * swirl);
    const double turns = style.curl_turns * (0.85 + 0.15 * std::sin(kTau * uv.y()));
    const double length =
        style.length * (1.0 + style.length_jitter * (2.0 * rng.uniform() - 1.0));
    const double phase = rng.range(0.0, kTau);

    Vec3 axis = (1.0 - style.tilt) * frame.col(2) + style.tilt * down;
    axis.normalize();
    const Vec3 b1 = axis.unitOrthogonal();
    const Vec3 b2 = axis.cross(b1);

    Strand s;
    s.points.resize(L, 3);
    for (int j = 0; j < L; ++j) {
      const double t = static_cast<double>(j) / (L - 1);
      const double a = kTau * turns * t + phase;
      s.points.row(j) = (length * t * axis + radius * (std::cos(a) - std::cos(phase)) * b1 +
                         radius * (std::sin(a) - std::sin(phase)) * b2)
                            .transpose();
    }
    wig.strands.push_back(std::move(s));
    wig.roots.push_back(scalp.position(uv));
    wig.roots_uv->push_back(uv);
  }
  return wig;
}

std::vector<texture::GeometryTexture> texture_corpus(int count, int width, int height,
                                                     int channels, uint64_t seed) {
  Rng rng(seed);
  std::vector<texture::GeometryTexture> corpus;
  corpus.reserve(count);
  for (int i = 0; i < count; ++i) {
    texture::GeometryTexture tex = texture::GeometryTexture::zeros(width, height, channels);
    const double rx = rng.range(0.30, 0.45), ry = rng.range(0.30, 0.45);
    for (int row = 0; row < height; ++row)
      for (int col = 0; col < width; ++col) {
        const Vec2 c = texture::texel_center(col, row, width, height);
        const double ex = (c.x() - 0.5) / rx, ey = (c.y() - 0.5) / ry;
        tex.bald(col, row) = ex * ex + ey * ey > 1.0 ? 1.0f : 0.0f;
      }
    for (int ch = 0; ch < channels; ++ch) {
      // Two random low-frequency waves per channel; amplitudes decay with the
      // channel index so the low/residual split carries real structure.
      const double scale = 1.5 * std::pow(0.93, ch);
      double fx[2], fy[2], ph[2], amp[2];
      for (int m = 0; m < 2; ++m) {
        fx[m] = rng.range(0.5, 3.0);
        fy[m] = rng.range(0.5, 3.0);
        ph[m] = rng.range(0.0, kTau);
        amp[m] = rng.range(0.3, 1.0) * scale;
      }
      for (int row = 0; row < height; ++row)
        for (int col = 0; col < width; ++col) {
          if (tex.is_bald(col, row)) continue;
          const Vec2 c = texture::texel_center(col, row, width, height);
          double v = 0.0;
          for (int m = 0; m < 2; ++m)
            v += amp[m] * std::sin(kTau * (fx[m] * c.x() + fy[m] * c.y()) + ph[m]);
          tex.at(col, row)[ch] = static_cast<float>(v);
        }
    }
    corpus.push_back(std::move(tex));
  }
  return corpus;
}

}  // namespace hairkit::synthetic
