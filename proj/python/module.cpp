// Python bindings for the main hairkit operations. Geometry crosses the
// boundary as numpy arrays (Eigen casters); textures expose explicit
// (H, W, C) float32 copies.
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hairkit/codec.hpp"
#include "hairkit/edit.hpp"
#include "hairkit/fit.hpp"
#include "hairkit/io.hpp"
#include "hairkit/metrics.hpp"
#include "hairkit/model.hpp"
#include "hairkit/scalp.hpp"
#include "hairkit/synthetic.hpp"
#include "hairkit/texture.hpp"

namespace py = pybind11;
using namespace hairkit;

namespace {

py::array_t<float> texture_array(const texture::GeometryTexture& t) {
  py::array_t<float> arr({t.height, t.width, t.channels});
  std::copy(t.data.begin(), t.data.end(), arr.mutable_data());
  return arr;
}

py::array_t<float> baldness_array(const texture::GeometryTexture& t) {
  py::array_t<float> arr({t.height, t.width});
  std::copy(t.baldness.begin(), t.baldness.end(), arr.mutable_data());
  return arr;
}

void set_texture_array(texture::GeometryTexture& t, py::array_t<float, py::array::c_style> arr) {
  if (arr.ndim() != 3) throw Error(ErrorCode::WrongShape, "expected an (H, W, C) array");
  t.height = static_cast<int>(arr.shape(0));
  t.width = static_cast<int>(arr.shape(1));
  t.channels = static_cast<int>(arr.shape(2));
  t.data.assign(arr.data(), arr.data() + arr.size());
  t.baldness.resize(static_cast<size_t>(t.height) * t.width, 0.0f);
}

}  // namespace

PYBIND11_MODULE(_hairkit, m) {
  m.doc() = "frequency-domain strand codec, scalp geometry textures and the linear "
            "parametric hair model";

  py::register_exception<Error>(m, "HairkitError");

  // ---- core types ----------------------------------------------------------
  py::class_<Strand>(m, "Strand")
      .def(py::init<>())
      .def_readwrite("points", &Strand::points)
      .def("__len__", [](const Strand& s) { return s.points.rows(); })
      .def("__repr__", [](const Strand& s) {
        return "Strand(" + std::to_string(s.points.rows()) + " points)";
      });

  py::class_<HairModel>(m, "HairModel")
      .def(py::init<>())
      .def_readwrite("strands", &HairModel::strands)
      .def_readwrite("roots", &HairModel::roots)
      .def_readwrite("roots_uv", &HairModel::roots_uv)
      .def_readwrite("root_relative", &HairModel::root_relative)
      .def_readwrite("source_scale", &HairModel::source_scale)
      .def("__len__", [](const HairModel& h) { return h.size(); })
      .def("__repr__", [](const HairModel& h) {
        return "HairModel(" + std::to_string(h.size()) + " strands)";
      });

  // ---- io -------------------------------------------------------------------
  m.def("load_model", [](const std::filesystem::path& p) { return io::load_model(p); },
        py::arg("path"));
  m.def("save_model", &io::save_model, py::arg("path"), py::arg("model"));
  m.def("resample_strand", &io::resample_strand, py::arg("strand"), py::arg("points"));
  m.def(
      "canonicalize",
      [](const HairModel& model, int L, const Eigen::Matrix4d& registration) {
        return io::canonicalize(model, L, registration);
      },
      py::arg("model"), py::arg("points") = 100,
      py::arg("registration") = Eigen::Matrix4d(Eigen::Matrix4d::Identity()));

  // ---- scalp ------------------------------------------------------------------
  py::class_<scalp::RootSet>(m, "RootSet")
      .def(py::init<>())
      .def_readwrite("uv", &scalp::RootSet::uv)
      .def_readwrite("positions3d", &scalp::RootSet::positions3d)
      .def_readwrite("distances", &scalp::RootSet::distances)
      .def("__len__", &scalp::RootSet::size);

  py::class_<scalp::ScalpMap>(m, "ScalpMap")
      .def_static("hemisphere", &scalp::ScalpMap::hemisphere, py::arg("grid") = 64,
                  py::arg("radius") = 10.0, py::arg("patch_width") = 12.0)
      .def_static("from_obj", &scalp::ScalpMap::from_obj, py::arg("obj_text"))
      .def("position", &scalp::ScalpMap::position, py::arg("uv"))
      .def("frame", &scalp::ScalpMap::frame, py::arg("uv"))
      .def("project",
           [](const scalp::ScalpMap& s, const Vec3& p) {
             const auto proj = s.project(p);
             return py::make_tuple(proj.uv, proj.position, proj.distance);
           },
           py::arg("point"), "returns (uv, position, distance)");

  m.def("project_roots", &scalp::project_roots, py::arg("model"), py::arg("scalp"),
        py::arg("max_distance") = 0.05);
  m.def("attach_uv", &scalp::attach_uv, py::arg("model"), py::arg("roots"));
  m.def("roots_from_uv", &scalp::roots_from_uv, py::arg("uv"), py::arg("scalp"));

  // ---- strand codec -------------------------------------------------------------
  py::class_<codec::StrandBasis>(m, "StrandBasis")
      .def_readonly("L", &codec::StrandBasis::L)
      .def_readonly("mean", &codec::StrandBasis::mean)
      .def_readonly("components", &codec::StrandBasis::components)
      .def_readonly("explained_variance", &codec::StrandBasis::explained_variance)
      .def_readonly("total_variance", &codec::StrandBasis::total_variance)
      .def_property_readonly("dim", &codec::StrandBasis::dim)
      .def("__repr__", [](const codec::StrandBasis& b) {
        return "StrandBasis(L=" + std::to_string(b.L) + ", dim=" + std::to_string(b.dim()) + ")";
      });

  m.def("fit_basis",
        [](const std::vector<Strand>& corpus, int num_components) {
          return codec::fit_basis(corpus, num_components);
        },
        py::arg("corpus"), py::arg("num_components") = 64);
  m.def("encode", &codec::encode, py::arg("strand"), py::arg("basis"));
  m.def("decode", &codec::decode, py::arg("gamma"), py::arg("basis"));
  m.def("truncate", &codec::truncate, py::arg("gamma"), py::arg("n"));
  m.def("transfer_detail", &codec::transfer_detail, py::arg("structure"), py::arg("detail"),
        py::arg("split") = 10);
  m.def("explained_variance_curve", &codec::explained_variance_curve, py::arg("basis"));
  m.def("bald_coeffs", &codec::bald_coeffs, py::arg("basis"));
  m.def("save_basis", &codec::save_basis, py::arg("path"), py::arg("basis"));
  m.def("load_basis", &codec::load_basis, py::arg("path"));

  // ---- geometry textures ----------------------------------------------------------
  py::class_<texture::GeometryTexture>(m, "GeometryTexture")
      .def(py::init<>())
      .def_static("zeros", &texture::GeometryTexture::zeros, py::arg("width"), py::arg("height"),
                  py::arg("channels"))
      .def_readonly("width", &texture::GeometryTexture::width)
      .def_readonly("height", &texture::GeometryTexture::height)
      .def_readonly("channels", &texture::GeometryTexture::channels)
      .def("array", &texture_array, "(H, W, C) float32 copy of the texel data")
      .def("baldness", &baldness_array, "(H, W) float32 copy of the baldness plane")
      .def("set_array", &set_texture_array, py::arg("array"),
           "replace the texel data from an (H, W, C) array; baldness resets to live")
      .def("set_baldness",
           [](texture::GeometryTexture& t, py::array_t<float, py::array::c_style> arr) {
             if (arr.ndim() != 2 || arr.shape(0) != t.height || arr.shape(1) != t.width)
               throw Error(ErrorCode::WrongShape, "baldness must be (H, W)");
             t.baldness.assign(arr.data(), arr.data() + arr.size());
           },
           py::arg("array"))
      .def("is_bald", &texture::GeometryTexture::is_bald, py::arg("col"), py::arg("row"))
      .def("__repr__", [](const texture::GeometryTexture& t) {
        return "GeometryTexture(" + std::to_string(t.width) + "x" + std::to_string(t.height) +
               "x" + std::to_string(t.channels) + ")";
      });

  m.def("init_texture", &texture::init_texture, py::arg("model"), py::arg("basis"),
        py::arg("width") = 256, py::arg("height") = 256, py::arg("epsilon") = 0.01);
  m.def("optimize_texture",
        [](const texture::GeometryTexture& tex, const HairModel& model,
           const codec::StrandBasis& basis, int iters, double lr) {
          auto result = texture::optimize_texture(tex, model, basis, iters, lr);
          return py::make_tuple(std::move(result.texture), std::move(result.loss_trace));
        },
        py::arg("texture"), py::arg("model"), py::arg("basis"), py::arg("iters") = 500,
        py::arg("lr") = 0.001, "returns (texture, loss_trace)");
  m.def("decode_at_roots", &texture::decode_at_roots, py::arg("texture"), py::arg("roots"),
        py::arg("basis"), py::arg("drop_bald") = false);
  m.def("split_channels", &texture::split_channels, py::arg("texture"),
        py::arg("low_channels") = 10);
  m.def("concat_channels", &texture::concat_channels, py::arg("low"), py::arg("residual"));
  m.def("save_texture", &texture::save_texture, py::arg("path"), py::arg("texture"));
  m.def("load_texture", &texture::load_texture, py::arg("path"));

  // ---- parametric model ------------------------------------------------------------
  py::class_<model::TexturePCA>(m, "TexturePCA")
      .def_readonly("width", &model::TexturePCA::width)
      .def_readonly("height", &model::TexturePCA::height)
      .def_readonly("channels", &model::TexturePCA::channels)
      .def_readonly("has_mask", &model::TexturePCA::has_mask)
      .def_readonly("dim", &model::TexturePCA::dim)
      .def_readonly("rank", &model::TexturePCA::rank)
      .def_readonly("mean", &model::TexturePCA::mean)
      .def_readonly("components", &model::TexturePCA::components)
      .def_readonly("variance", &model::TexturePCA::variance);

  py::class_<model::UpsamplerField>(m, "UpsamplerField")
      .def_readonly("guide_width", &model::UpsamplerField::guide_width)
      .def_readonly("guide_height", &model::UpsamplerField::guide_height)
      .def_readonly("out_width", &model::UpsamplerField::out_width)
      .def_readonly("out_height", &model::UpsamplerField::out_height)
      .def_readonly("channels", &model::UpsamplerField::channels);

  py::class_<model::ModelAssets>(m, "ModelAssets")
      .def(py::init<>())
      .def_readwrite("basis", &model::ModelAssets::basis)
      .def_readwrite("guide_space", &model::ModelAssets::guide_space)
      .def_readwrite("residual_space", &model::ModelAssets::residual_space)
      .def_readwrite("upsampler", &model::ModelAssets::upsampler);

  m.def("downsample_guide", &model::downsample_guide, py::arg("texture"), py::arg("factor") = 8,
        py::arg("low_channels") = 10);
  m.def("upsample_nearest", &model::upsample_nearest, py::arg("guide"), py::arg("factor") = 8);
  m.def("upsample_bilinear", &model::upsample_bilinear, py::arg("guide"), py::arg("factor") = 8);
  m.def("blend_upsample", &model::blend_upsample, py::arg("guide"), py::arg("field"));
  m.def("fit_upsampler", &model::fit_upsampler, py::arg("pairs"), py::arg("ridge") = 0.1);
  m.def("fit_guide_space", &model::fit_guide_space, py::arg("guides"), py::arg("dim") = 512);
  m.def("fit_residual_space", &model::fit_residual_space, py::arg("residuals"),
        py::arg("dim") = 512);
  m.def("synth_guide", &model::synth_guide, py::arg("theta"), py::arg("space"));
  m.def("synth_residual", &model::synth_residual, py::arg("beta"), py::arg("space"));
  m.def("encode_texture", &model::encode_texture, py::arg("texture"), py::arg("space"));
  m.def("compose_texture", &model::compose_texture, py::arg("theta"), py::arg("beta"),
        py::arg("assets"));
  m.def("evaluate_model", &model::evaluate_model, py::arg("theta"), py::arg("beta"),
        py::arg("roots"), py::arg("assets"), py::arg("keep_bald") = false);
  m.def("sample_params", &model::sample_params, py::arg("space"), py::arg("seed"),
        py::arg("scale") = 1.0, py::arg("plain_gaussian") = false);
  m.def("save_assets", &model::save_assets, py::arg("dir"), py::arg("assets"));
  m.def("load_assets", &model::load_assets, py::arg("dir"));

  // ---- parameterization ---------------------------------------------------------------
  py::class_<fit::ParameterizeOptions>(m, "ParameterizeOptions")
      .def(py::init<>())
      .def_readwrite("warmup_iters", &fit::ParameterizeOptions::warmup_iters)
      .def_readwrite("joint_iters", &fit::ParameterizeOptions::joint_iters)
      .def_readwrite("lr", &fit::ParameterizeOptions::lr)
      .def_readwrite("tex_weight", &fit::ParameterizeOptions::tex_weight)
      .def_readwrite("geo_weight", &fit::ParameterizeOptions::geo_weight)
      .def_readwrite("huber_delta", &fit::ParameterizeOptions::huber_delta)
      .def_readwrite("checkpoint_every", &fit::ParameterizeOptions::checkpoint_every);

  py::class_<metrics::StrandPairReport>(m, "StrandPairReport")
      .def_readonly("position_error", &metrics::StrandPairReport::position_error)
      .def_readonly("position_error_strand", &metrics::StrandPairReport::position_error_strand)
      .def_readonly("curvature_error", &metrics::StrandPairReport::curvature_error)
      .def_readonly("curvature_error_strand",
                    &metrics::StrandPairReport::curvature_error_strand)
      .def_readonly("geo_loss", &metrics::StrandPairReport::geo_loss)
      .def("__repr__", [](const metrics::StrandPairReport& r) {
        return metrics::report_text(r);
      });

  py::class_<fit::FitResult>(m, "FitResult")
      .def(py::init<>())
      .def_readwrite("theta", &fit::FitResult::theta)
      .def_readwrite("beta", &fit::FitResult::beta)
      .def_readonly("loss_trace", &fit::FitResult::loss_trace)
      .def_readonly("final_report", &fit::FitResult::final_report)
      .def_readonly("texture_report", &fit::FitResult::texture_report)
      .def_readonly("texture_loss_trace", &fit::FitResult::texture_loss_trace);

  m.def("parameterize_hair", &fit::parameterize_hair, py::arg("target"), py::arg("assets"),
        py::arg("options") = fit::ParameterizeOptions{});

  py::class_<fit::EmbedOptions>(m, "EmbedOptions")
      .def(py::init<>())
      .def_readwrite("texture_width", &fit::EmbedOptions::texture_width)
      .def_readwrite("texture_height", &fit::EmbedOptions::texture_height)
      .def_readwrite("epsilon", &fit::EmbedOptions::epsilon)
      .def_readwrite("texture_iters", &fit::EmbedOptions::texture_iters)
      .def_readwrite("texture_lr", &fit::EmbedOptions::texture_lr)
      .def_readwrite("fit", &fit::EmbedOptions::fit);

  m.def("embed_strand_set", &fit::embed_strand_set, py::arg("model"), py::arg("assets"),
        py::arg("scalp"), py::arg("options") = fit::EmbedOptions{});
  m.def("save_fit_result", &fit::save_fit_result, py::arg("path"), py::arg("result"));
  m.def("load_fit_params", &fit::load_fit_params, py::arg("path"));

  // ---- metrics / editing -----------------------------------------------------------
  m.def("compare", &metrics::compare, py::arg("a"), py::arg("b"));
  m.def("report_text", &metrics::report_text, py::arg("report"));
  m.def("total_curvature", &metrics::total_curvature, py::arg("strand"));
  m.def("geometric_loss", &metrics::geometric_loss, py::arg("pred"), py::arg("gt"));

  m.def("smooth_hair", &edit::smooth_hair, py::arg("model"), py::arg("basis"), py::arg("n"));

  py::enum_<edit::TransferMode>(m, "TransferMode")
      .value("TexelAligned", edit::TransferMode::TexelAligned)
      .value("IndexAligned", edit::TransferMode::IndexAligned);

  py::class_<edit::TransferOptions>(m, "TransferOptions")
      .def(py::init<>())
      .def_readwrite("split", &edit::TransferOptions::split)
      .def_readwrite("mode", &edit::TransferOptions::mode)
      .def_readwrite("texture_width", &edit::TransferOptions::texture_width)
      .def_readwrite("texture_height", &edit::TransferOptions::texture_height)
      .def_readwrite("epsilon", &edit::TransferOptions::epsilon);

  m.def("transfer_style", &edit::transfer_style, py::arg("structure"), py::arg("detail"),
        py::arg("basis"), py::arg("options") = edit::TransferOptions{});

  py::enum_<edit::InterpMode>(m, "InterpMode")
      .value("Joint", edit::InterpMode::Joint)
      .value("ThetaOnly", edit::InterpMode::ThetaOnly)
      .value("BetaOnly", edit::InterpMode::BetaOnly);

  py::class_<edit::ParamPair>(m, "ParamPair")
      .def(py::init<>())
      .def_readwrite("theta", &edit::ParamPair::theta)
      .def_readwrite("beta", &edit::ParamPair::beta);

  m.def("interpolate_params", &edit::interpolate_params, py::arg("a"), py::arg("b"), py::arg("t"),
        py::arg("mode") = edit::InterpMode::Joint);

  // ---- synthetic data ---------------------------------------------------------------
  py::class_<synthetic::WigStyle>(m, "WigStyle")
      .def(py::init<>())
      .def_readwrite("curl_radius", &synthetic::WigStyle::curl_radius)
      .def_readwrite("curl_turns", &synthetic::WigStyle::curl_turns)
      .def_readwrite("length", &synthetic::WigStyle::length)
      .def_readwrite("length_jitter", &synthetic::WigStyle::length_jitter)
      .def_readwrite("tilt", &synthetic::WigStyle::tilt);

  m.def("make_wig", &synthetic::make_wig, py::arg("scalp"), py::arg("count"), py::arg("L"),
        py::arg("seed"), py::arg("style") = synthetic::WigStyle{});
  m.def("helix_strand", &synthetic::helix_strand, py::arg("L"), py::arg("radius"),
        py::arg("turns"), py::arg("length"), py::arg("phase") = 0.0);
  m.def("wave_strand", &synthetic::wave_strand, py::arg("L"), py::arg("amplitude"),
        py::arg("frequency"), py::arg("length"), py::arg("phase") = 0.0);
  m.def("strand_corpus", &synthetic::strand_corpus, py::arg("count"), py::arg("L"),
        py::arg("seed"));
  m.def("texture_corpus", &synthetic::texture_corpus, py::arg("count"), py::arg("width"),
        py::arg("height"), py::arg("channels"), py::arg("seed"));
}
