#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "hairkit/codec.hpp"
#include "hairkit/io.hpp"
#include "hairkit/scalp.hpp"
#include "hairkit/synthetic.hpp"
#include "hairkit/texture.hpp"
#include "oracles.hpp"

using namespace hairkit;

namespace {

template <typename Fn>
ErrorCode thrown_code(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
}

const char* kQuadObj =
    "v 0 0 0\n"
    "v 2 0 0\n"
    "v 2 0 2\n"
    "v 0 0 2\n"
    "vt 0 0\n"
    "vt 1 0\n"
    "vt 1 1\n"
    "vt 0 1\n"
    "f 1/1 2/2 3/3\n"
    "f 1/1 3/3 4/4\n";

codec::StrandBasis small_basis(int L = 20, int dim = 24) {
  return codec::fit_basis(synthetic::strand_corpus(150, L, 41), dim);
}

VecX through_float(const VecX& v) {
  VecX out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
  return out;
}

}  // namespace

TEST_CASE("hemisphere vertices sit on the head sphere") {
  const auto scalp = scalp::ScalpMap::hemisphere(16);
  for (size_t i = 0; i < scalp.vertex_count(); ++i)
    CHECK(std::abs(scalp.vertex(i).norm() - 10.0) < 1e-12);
  CHECK(thrown_code([] { scalp::ScalpMap::hemisphere(3); }) == ErrorCode::FormatError);
  CHECK(thrown_code([] { scalp::ScalpMap::hemisphere(16, 5.0, 12.0); }) ==
        ErrorCode::FormatError);
}

TEST_CASE("hemisphere is mirror symmetric across u = 0.5") {
  const auto scalp = scalp::ScalpMap::hemisphere(16);
  synthetic::Rng rng(42);
  for (int t = 0; t < 200; ++t) {
    const Vec2 uv(rng.uniform(), rng.uniform());
    const Vec3 a = scalp.position(uv);
    const Vec3 b = scalp.position(Vec2(1.0 - uv.x(), uv.y()));
    CHECK(std::abs(a.x() + b.x()) < 1e-9);
    CHECK(std::abs(a.y() - b.y()) < 1e-9);
    CHECK(std::abs(a.z() - b.z()) < 1e-9);
  }
}

TEST_CASE("uv -> position -> uv round trips through projection") {
  const auto scalp = scalp::ScalpMap::hemisphere(16);
  synthetic::Rng rng(43);
  for (int t = 0; t < 200; ++t) {
    const Vec2 uv(rng.range(0.02, 0.98), rng.range(0.02, 0.98));
    const auto proj = scalp.project(scalp.position(uv));
    CHECK(proj.distance < 1e-9);
    CHECK((proj.uv - uv).norm() < 1e-9);
  }
}

TEST_CASE("frames are orthonormal and outward") {
  const auto scalp = scalp::ScalpMap::hemisphere(16);
  synthetic::Rng rng(44);
  for (int t = 0; t < 100; ++t) {
    const Vec2 uv(rng.uniform(), rng.uniform());
    const Mat3 f = scalp.frame(uv);
    CHECK((f.transpose() * f - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    // Right-handed: tangent x bitangent = normal.
    CHECK((f.col(0).cross(f.col(1)) - f.col(2)).cwiseAbs().maxCoeff() < 1e-9);
    // The patch sits on the upper hemisphere, so normals point up-ish.
    CHECK(f.col(2).dot(scalp.position(uv)) > 0.0);
  }
}

TEST_CASE("projection agrees with a dense uv lattice lower bound") {
  const auto scalp = scalp::ScalpMap::hemisphere(8);
  synthetic::Rng rng(45);
  for (int t = 0; t < 10; ++t) {
    const Vec3 p(rng.range(-7, 7), rng.range(4, 14), rng.range(-7, 7));
    const auto proj = scalp.project(p);
    // The projected point lies on the mesh at the reported uv.
    CHECK((scalp.position(proj.uv) - proj.position).norm() < 1e-9);
    CHECK(std::abs((proj.position - p).norm() - proj.distance) < 1e-12);
    double lattice = std::numeric_limits<double>::max();
    for (int i = 0; i <= 100; ++i)
      for (int j = 0; j <= 100; ++j)
        lattice = std::min(lattice, (scalp.position(Vec2(i / 100.0, j / 100.0)) - p).norm());
    CHECK(proj.distance <= lattice + 1e-9);
  }
}

TEST_CASE("from_obj builds a usable scalp patch") {
  const auto scalp = scalp::ScalpMap::from_obj(kQuadObj);
  CHECK((scalp.position(Vec2(0.25, 0.25)) - Vec3(0.5, 0, 0.5)).norm() < 1e-12);

  const Mat3 f = scalp.frame(Vec2(0.3, 0.6));
  CHECK((f.col(0) - Vec3(1, 0, 0)).norm() < 1e-12);   // d(position)/du
  CHECK((f.col(2) - Vec3(0, -1, 0)).norm() < 1e-12);  // face normal
  CHECK((f.col(1) - Vec3(0, 0, 1)).norm() < 1e-12);

  const auto proj = scalp.project(Vec3(1.0, 5.0, 1.0));
  CHECK(std::abs(proj.distance - 5.0) < 1e-12);
  CHECK((proj.uv - Vec2(0.5, 0.5)).norm() < 1e-12);

  CHECK(thrown_code([] { scalp::ScalpMap::from_obj("v 0 0 0\n"); }) == ErrorCode::FormatError);
  CHECK(thrown_code([] { scalp::ScalpMap::from_obj("v 0 0 0\nvt 0 0\nf 1 2 3\n"); }) ==
        ErrorCode::FormatError);
  CHECK(thrown_code([] {
          scalp::ScalpMap::from_obj("v 0 0 0\nv 1 0 0\nv 0 0 1\nvt 0 0\nvt 1 0\nvt 0 1\nf 1/1 2/2 9/3\n");
        }) == ErrorCode::FormatError);
}

TEST_CASE("project_roots round trips wig roots and flags off-scalp ones") {
  const auto scalp = scalp::ScalpMap::hemisphere(16);
  HairModel wig = synthetic::make_wig(scalp, 50, 15, 46);
  const auto uv_expected = *wig.roots_uv;

  const auto roots = scalp::project_roots(wig, scalp);
  REQUIRE(roots.size() == wig.size());
  for (size_t i = 0; i < roots.size(); ++i) {
    CHECK(roots.distances[i] < 1e-9);
    CHECK((roots.uv[i] - uv_expected[i]).norm() < 1e-9);
    CHECK((roots.positions3d[i] - wig.roots[i]).norm() < 1e-9);
  }

  HairModel off = wig;
  off.roots[3] += Vec3(0, 2, 0);
  CHECK(thrown_code([&] { scalp::project_roots(off, scalp); }) == ErrorCode::RootOffScalp);
  // A generous threshold accepts the same root.
  CHECK(scalp::project_roots(off, scalp, 3.0).size() == wig.size());

  scalp::RootSet wrong;
  wrong.uv.resize(3);
  CHECK(thrown_code([&] { scalp::attach_uv(wig, wrong); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("roots_from_uv evaluates the scalp map") {
  const auto scalp = scalp::ScalpMap::hemisphere(16);
  std::vector<Vec2> uvs{{0.2, 0.3}, {0.7, 0.6}, {0.5, 0.5}};
  const auto roots = scalp::roots_from_uv(uvs, scalp);
  REQUIRE(roots.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK((roots.positions3d[i] - scalp.position(uvs[i])).norm() < 1e-12);
    CHECK(roots.distances[i] == 0.0);
    CHECK((roots.frames[i].transpose() * roots.frames[i] - Mat3::Identity())
              .cwiseAbs()
              .maxCoeff() < 1e-9);
  }
}

TEST_CASE("texel arithmetic") {
  CHECK(texture::texel_of(0.0, 8) == 0);
  CHECK(texture::texel_of(0.12499, 8) == 0);
  CHECK(texture::texel_of(0.125, 8) == 1);
  CHECK(texture::texel_of(0.5, 8) == 4);
  CHECK(texture::texel_of(0.999, 8) == 7);
  CHECK(texture::texel_of(1.0, 8) == 7);   // clamped
  CHECK(texture::texel_of(-0.1, 8) == 0);  // clamped
  CHECK((texture::texel_center(0, 0, 8, 4) - Vec2(0.0625, 0.125)).norm() == 0.0);
  CHECK((texture::texel_center(7, 3, 8, 4) - Vec2(0.9375, 0.875)).norm() == 0.0);
}

TEST_CASE("init_texture matches the brute-force voronoi oracle") {
  const auto basis = small_basis();
  const auto scalp = scalp::ScalpMap::hemisphere(16);
  HairModel wig = synthetic::make_wig(scalp, 12, basis.L, 47);
  const auto& uv = *wig.roots_uv;

  const int W = 8, H = 8;
  const double eps = 0.2;
  const auto tex = texture::init_texture(wig, basis, W, H, eps);
  REQUIRE(tex.width == W);
  REQUIRE(tex.height == H);
  REQUIRE(tex.channels == basis.dim());

  const auto winners = oracle::voronoi_texels(uv, W, H, eps);
  const VecX bald = through_float(codec::bald_coeffs(basis));
  for (int row = 0; row < H; ++row)
    for (int col = 0; col < W; ++col) {
      const int w = winners[static_cast<size_t>(row) * W + col];
      if (w < 0) {
        CHECK(tex.is_bald(col, row));
        CHECK((tex.texel(col, row) - bald).cwiseAbs().maxCoeff() == 0.0);
      } else {
        CHECK(!tex.is_bald(col, row));
        const VecX expect = through_float(codec::encode(wig.strands[w], basis));
        CHECK((tex.texel(col, row) - expect).cwiseAbs().maxCoeff() == 0.0);
      }
    }
}

TEST_CASE("init_texture resolves exact distance ties by lower strand index") {
  const auto basis = small_basis();
  HairModel model;
  auto corpus = synthetic::strand_corpus(2, basis.L, 48);
  // Texel (0,0) of a 4x4 grid has center (0.125, 0.125); both roots sit
  // exactly 0.0625 away in u, on either side.
  model.strands = {corpus[0], corpus[1]};
  model.roots = {Vec3::Zero(), Vec3::Zero()};
  model.roots_uv = std::vector<Vec2>{{0.1875, 0.125}, {0.0625, 0.125}};

  const auto tex = texture::init_texture(model, basis, 4, 4, 0.1);
  const VecX expect = through_float(codec::encode(model.strands[0], basis));
  CHECK((tex.texel(0, 0) - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("init_texture honours epsilon and empty models") {
  const auto basis = small_basis();
  HairModel one;
  one.strands = {synthetic::strand_corpus(1, basis.L, 49)[0]};
  one.roots = {Vec3::Zero()};
  one.roots_uv = std::vector<Vec2>{{0.5, 0.5}};

  const auto tex = texture::init_texture(one, basis, 16, 16, 0.01);
  int live = 0;
  for (int row = 0; row < 16; ++row)
    for (int col = 0; col < 16; ++col)
      if (!tex.is_bald(col, row)) {
        ++live;
        CHECK((texture::texel_center(col, row, 16, 16) - Vec2(0.5, 0.5)).norm() <= 0.01);
      }
  CHECK(live == 0);  // nearest texel centers are ~0.044 away on a 16-grid

  const auto wide = texture::init_texture(one, basis, 16, 16, 0.05);
  int wide_live = 0;
  for (int row = 0; row < 16; ++row)
    for (int col = 0; col < 16; ++col) wide_live += !wide.is_bald(col, row);
  CHECK(wide_live == 4);  // the four centers diagonally adjacent to (0.5, 0.5)

  const auto empty = texture::init_texture(HairModel{}, basis, 4, 4);
  for (int row = 0; row < 4; ++row)
    for (int col = 0; col < 4; ++col) CHECK(empty.is_bald(col, row));

  HairModel no_uv = one;
  no_uv.roots_uv.reset();
  CHECK(thrown_code([&] { texture::init_texture(no_uv, basis, 4, 4); }) ==
        ErrorCode::MissingRoots);
}

TEST_CASE("optimize_texture keeps an already-exact bake at its optimum") {
  const auto basis = small_basis();
  const auto scalp = scalp::ScalpMap::hemisphere(16);
  const int W = 4, H = 4;

  // Strands decoded from in-span coefficients, rooted at texel centers: the
  // init bake already reproduces them up to float32 texel storage.
  synthetic::Rng rng(50);
  auto family = synthetic::strand_corpus(W * H, basis.L, 51);
  HairModel model;
  model.root_relative = true;
  model.roots_uv.emplace();
  for (int row = 0; row < H; ++row)
    for (int col = 0; col < W; ++col) {
      const Vec2 uv = texture::texel_center(col, row, W, H);
      Strand s;
      s.points = codec::decode(codec::encode(family[row * W + col], basis), basis).points;
      model.strands.push_back(std::move(s));
      model.roots.push_back(scalp.position(uv));
      model.roots_uv->push_back(uv);
    }

  const auto init = texture::init_texture(model, basis, W, H, 0.2);
  const auto fit = texture::optimize_texture(init, model, basis, 40, 0.001);
  REQUIRE(fit.loss_trace.size() == 40);
  CHECK(fit.loss_trace.front() < 1e-6);
  // Adam's sign-normalized steps hop out of an exact optimum into a noise
  // ball of radius ~lr, so machine zero does not persist; it must stay far
  // below the real-signal loss scale (~17 for the wig fit below).
  for (double loss : fit.loss_trace) CHECK(loss < 1e-2);
}

TEST_CASE("optimize_texture reduces the objective on a real wig") {
  const auto basis = small_basis();
  const auto scalp = scalp::ScalpMap::hemisphere(16);
  HairModel wig = synthetic::make_wig(scalp, 40, basis.L, 52);

  const auto init = texture::init_texture(wig, basis, 8, 8, 0.2);
  const auto fit = texture::optimize_texture(init, wig, basis, 150, 0.001);
  REQUIRE(fit.loss_trace.size() == 150);
  CHECK(fit.loss_trace.back() < fit.loss_trace.front());
  CHECK(std::isfinite(fit.loss_trace.back()));
  // Non-increasing across 50-iteration checkpoints (oscillation inside a
  // window is fine, the sampled values must descend).
  for (size_t c = 50; c < fit.loss_trace.size(); c += 50)
    CHECK(fit.loss_trace[c] <= fit.loss_trace[c - 50] + 1e-9);

  // Baldness never moves during refinement.
  for (int row = 0; row < 8; ++row)
    for (int col = 0; col < 8; ++col)
      CHECK(fit.texture.is_bald(col, row) == init.is_bald(col, row));

  CHECK(thrown_code([&] {
          texture::optimize_texture(texture::GeometryTexture::zeros(4, 4, basis.dim() + 1), wig,
                                    basis, 1, 0.001);
        }) == ErrorCode::WrongChannelCount);
}

TEST_CASE("sample and decode_at_roots honour the baldness mask") {
  const auto basis = small_basis();
  const auto scalp = scalp::ScalpMap::hemisphere(16);
  HairModel wig = synthetic::make_wig(scalp, 6, basis.L, 53);
  const auto tex = texture::init_texture(wig, basis, 8, 8, 0.2);

  std::vector<Vec2> uvs;
  for (int row = 0; row < 8; ++row)
    for (int col = 0; col < 8; ++col) uvs.push_back(texture::texel_center(col, row, 8, 8));
  const auto roots = scalp::roots_from_uv(uvs, scalp);

  const auto coeffs = texture::sample(tex, roots);
  REQUIRE(coeffs.size() == 64);
  for (int i = 0; i < 64; ++i)
    CHECK((coeffs[i] - tex.texel(i % 8, i / 8)).cwiseAbs().maxCoeff() == 0.0);

  const auto kept = texture::decode_at_roots(tex, roots, basis, false);
  REQUIRE(kept.size() == 64);
  CHECK(kept.root_relative);
  int bald_count = 0;
  for (int i = 0; i < 64; ++i) {
    if (tex.is_bald(i % 8, i / 8)) {
      ++bald_count;
      CHECK(kept.strands[i].points.cwiseAbs().maxCoeff() == 0.0);  // the exact zero strand
    } else {
      CHECK(kept.strands[i].points.cwiseAbs().maxCoeff() > 0.0);
    }
    CHECK((kept.roots[i] - roots.positions3d[i]).norm() == 0.0);
  }
  REQUIRE(bald_count > 0);

  const auto dropped = texture::decode_at_roots(tex, roots, basis, true);
  CHECK(dropped.size() == 64 - static_cast<size_t>(bald_count));
}

TEST_CASE("split_channels and concat_channels are inverses") {
  auto tex = synthetic::texture_corpus(1, 6, 5, 16, 54)[0];
  auto [low, res] = texture::split_channels(tex, 10);
  CHECK(low.channels == 10);
  CHECK(res.channels == 6);
  CHECK(low.baldness == tex.baldness);
  CHECK(res.baldness == tex.baldness);

  const auto back = texture::concat_channels(low, res);
  CHECK(back.data == tex.data);
  CHECK(back.baldness == tex.baldness);

  CHECK(thrown_code([&] { texture::split_channels(tex, 16); }) == ErrorCode::WrongChannelCount);
  CHECK(thrown_code([&] { texture::split_channels(tex, 0); }) == ErrorCode::WrongChannelCount);
  const auto other = texture::GeometryTexture::zeros(3, 3, 2);
  CHECK(thrown_code([&] { texture::concat_channels(low, other); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("geometry texture container round trips bit-exactly") {
  namespace fs = std::filesystem;
  auto tex = synthetic::texture_corpus(1, 7, 9, 12, 55)[0];
  const fs::path path = fs::temp_directory_path() / "hairkit_tex_test.pgt";
  texture::save_texture(path, tex);
  const auto back = texture::load_texture(path);
  CHECK(back.width == tex.width);
  CHECK(back.height == tex.height);
  CHECK(back.channels == tex.channels);
  CHECK(back.data == tex.data);
  CHECK(back.baldness == tex.baldness);

  auto bytes = io::read_file(path);
  bytes[0] = std::byte('X');
  io::write_file_atomic(path, bytes);
  CHECK(thrown_code([&] { texture::load_texture(path); }) == ErrorCode::BadMagic);

  bytes[0] = std::byte('P');
  bytes.resize(bytes.size() - 4);
  io::write_file_atomic(path, bytes);
  CHECK(thrown_code([&] { texture::load_texture(path); }) == ErrorCode::Truncated);

  bytes.resize(bytes.size() + 12, std::byte{0});
  io::write_file_atomic(path, bytes);
  CHECK(thrown_code([&] { texture::load_texture(path); }) == ErrorCode::FormatError);
  fs::remove(path);
}

TEST_CASE("png preview produces a PNG byte stream") {
  const auto tex = synthetic::texture_corpus(1, 8, 8, 5, 56)[0];
  const auto png = texture::png_preview(tex);
  REQUIRE(png.size() > 8);
  const unsigned char sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  for (int i = 0; i < 8; ++i) CHECK(static_cast<unsigned char>(png[i]) == sig[i]);
}
