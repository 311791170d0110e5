#include "hairkit/codec.hpp"

#include <cmath>
#include <cstring>
#include <numbers>

#include <Eigen/Dense>

#include "hairkit/io.hpp"
#include "hairkit/pca.hpp"

namespace hairkit::codec {

namespace {

// Trig tables for one L: forward k x L (cos, -sin) and the scaled inverse
// L x 2k acting on [real | imag] with conjugate-symmetry weights.
struct DftPlan {
  int L, k;
  MatX fwd_re, fwd_im;  // k x L
  MatX inv;             // L x 2k

  explicit DftPlan(int L_) : L(L_), k(L_ / 2 + 1) {
    fwd_re.resize(k, L);
    fwd_im.resize(k, L);
    inv.resize(L, 2 * k);
    const double twopi = 2.0 * std::numbers::pi;
    for (int j = 0; j < k; ++j) {
      const bool full = j == 0 || (L % 2 == 0 && j == k - 1);  // DC / Nyquist
      const double w = (full ? 1.0 : 2.0) / L;
      for (int n = 0; n < L; ++n) {
        const double c = std::cos(twopi * j * n / L);
        const double s = std::sin(twopi * j * n / L);
        fwd_re(j, n) = c;
        fwd_im(j, n) = -s;
        inv(n, j) = w * c;
        inv(n, k + j) = -w * s;
      }
    }
  }
};

// Flat layout: [real | imag] halves, axis-major inside each (axis*k + band).
VecX flatten(const Eigen::MatrixXcd& coeffs) {
  const int k = static_cast<int>(coeffs.rows());
  VecX flat(6 * k);
  for (int a = 0; a < 3; ++a)
    for (int j = 0; j < k; ++j) {
      flat[a * k + j] = coeffs(j, a).real();
      flat[3 * k + a * k + j] = coeffs(j, a).imag();
    }
  return flat;
}

VecX flat_spectrum_of(const Strand& strand, const DftPlan& plan) {
  VecX flat(6 * plan.k);
  for (int a = 0; a < 3; ++a) {
    flat.segment(a * plan.k, plan.k) = plan.fwd_re * strand.points.col(a);
    flat.segment(3 * plan.k + a * plan.k, plan.k) = plan.fwd_im * strand.points.col(a);
  }
  return flat;
}

Strand strand_of_flat(const VecX& flat, const DftPlan& plan) {
  Strand out;
  out.points.resize(plan.L, 3);
  VecX axis(2 * plan.k);
  for (int a = 0; a < 3; ++a) {
    axis.head(plan.k) = flat.segment(a * plan.k, plan.k);
    axis.tail(plan.k) = flat.segment(3 * plan.k + a * plan.k, plan.k);
    out.points.col(a) = plan.inv * axis;
  }
  return out;
}

void check_fitted(const StrandBasis& basis) {
  if (basis.L < 2 || basis.mean.size() != basis.spectral_size() ||
      basis.components.cols() != basis.spectral_size())
    throw Error(ErrorCode::DimensionMismatch, "basis not fitted");
}

}  // namespace

SpectralStrand dft(const Strand& strand) {
  const int L = strand.num_points();
  if (L < 2) throw Error(ErrorCode::WrongLength, "strand too short for the DFT");
  DftPlan plan(L);
  SpectralStrand out;
  out.coeffs.resize(plan.k, 3);
  for (int a = 0; a < 3; ++a) {
    VecX re = plan.fwd_re * strand.points.col(a);
    VecX im = plan.fwd_im * strand.points.col(a);
    for (int j = 0; j < plan.k; ++j) out.coeffs(j, a) = std::complex<double>(re[j], im[j]);
  }
  return out;
}

Strand idft(const SpectralStrand& spectral, int L) {
  if (L < 2) throw Error(ErrorCode::WrongLength, "L must be >= 2");
  if (spectral.num_bands() != L / 2 + 1)
    throw Error(ErrorCode::BandMismatch,
                "expected " + std::to_string(L / 2 + 1) + " bands, got " +
                    std::to_string(spectral.num_bands()));
  DftPlan plan(L);
  return strand_of_flat(flatten(spectral.coeffs), plan);
}

VecX flatten_spectrum(const SpectralStrand& spectral) { return flatten(spectral.coeffs); }

SpectralStrand unflatten_spectrum(const VecX& flat, int L) {
  const int k = L / 2 + 1;
  if (flat.size() != 6 * k)
    throw Error(ErrorCode::BandMismatch, "flat spectrum size does not match L");
  SpectralStrand out;
  out.coeffs.resize(k, 3);
  for (int a = 0; a < 3; ++a)
    for (int j = 0; j < k; ++j)
      out.coeffs(j, a) = std::complex<double>(flat[a * k + j], flat[3 * k + a * k + j]);
  return out;
}

StrandBasis fit_basis(const std::vector<Strand>& corpus, int num_components,
                      BasisFitMethod method) {
  if (corpus.empty()) throw Error(ErrorCode::TooFewSamples, "empty corpus");
  const int L = corpus[0].num_points();
  const int D = 6 * (L / 2 + 1);
  if (num_components < 1 || num_components > D)
    throw Error(ErrorCode::DimensionMismatch,
                "component count must be in [1, " + std::to_string(D) + "]");
  if (static_cast<int>(corpus.size()) < num_components)
    throw Error(ErrorCode::TooFewSamples,
                "corpus of " + std::to_string(corpus.size()) + " strands cannot support " +
                    std::to_string(num_components) + " components");

  DftPlan plan(L);
  const auto n = static_cast<Eigen::Index>(corpus.size());
  for (const Strand& s : corpus)
    if (s.num_points() != L)
      throw Error(ErrorCode::WrongLength, "corpus strands must share one length");

  if (method == BasisFitMethod::Auto)
    method = n * D * static_cast<long long>(D) > 2'000'000'000LL ? BasisFitMethod::StreamingGram
                                                                 : BasisFitMethod::Svd;

  pca::Result res;
  if (method == BasisFitMethod::Svd) {
    MatX data(n, D);
    for (Eigen::Index i = 0; i < n; ++i)
      data.row(i) = flat_spectrum_of(corpus[i], plan).transpose();
    res = pca::fit_svd(data, num_components, pca::Padding::Complement);
  } else {
    // Two passes over the corpus in fixed chunk order; only a chunk of spectra
    // and the 6k x 6k covariance are ever held.
    constexpr Eigen::Index kChunk = 4096;
    MatX chunk(std::min(kChunk, n), D);
    VecX mean = VecX::Zero(D);
    for (Eigen::Index start = 0; start < n; start += kChunk) {
      const Eigen::Index c = std::min(kChunk, n - start);
      for (Eigen::Index i = 0; i < c; ++i)
        chunk.row(i) = flat_spectrum_of(corpus[start + i], plan).transpose();
      mean += chunk.topRows(c).colwise().sum().transpose();
    }
    mean /= static_cast<double>(n);
    MatX cov = MatX::Zero(D, D);
    for (Eigen::Index start = 0; start < n; start += kChunk) {
      const Eigen::Index c = std::min(kChunk, n - start);
      for (Eigen::Index i = 0; i < c; ++i)
        chunk.row(i) = (flat_spectrum_of(corpus[start + i], plan) - mean).transpose();
      cov.noalias() += chunk.topRows(c).transpose() * chunk.topRows(c);
    }
    cov /= std::max<double>(static_cast<double>(n - 1), 1.0);
    res = pca::from_covariance(std::move(mean), cov, num_components);
  }

  StrandBasis basis;
  basis.L = L;
  basis.mean = std::move(res.mean);
  basis.components = std::move(res.components);
  basis.explained_variance = std::move(res.variance);
  basis.total_variance = res.total_variance;
  return basis;
}

StrandCoeffs encode(const Strand& strand, const StrandBasis& basis) {
  check_fitted(basis);
  if (strand.num_points() != basis.L)
    throw Error(ErrorCode::WrongLength, "strand length does not match basis.L");
  DftPlan plan(basis.L);
  return basis.components * (flat_spectrum_of(strand, plan) - basis.mean);
}

Strand decode(const StrandCoeffs& coeffs, const StrandBasis& basis) {
  check_fitted(basis);
  if (coeffs.size() != basis.dim())
    throw Error(ErrorCode::DimensionMismatch, "coefficient count does not match the basis");
  DftPlan plan(basis.L);
  return strand_of_flat(basis.mean + basis.components.transpose() * coeffs, plan);
}

StrandCoeffs truncate(const StrandCoeffs& coeffs, int n) {
  StrandCoeffs out = coeffs;
  n = std::clamp<int>(n, 0, static_cast<int>(out.size()));
  out.tail(out.size() - n).setZero();
  return out;
}

StrandCoeffs transfer_detail(const StrandCoeffs& low_source, const StrandCoeffs& high_source,
                             int split) {
  if (low_source.size() != high_source.size())
    throw Error(ErrorCode::DimensionMismatch, "coefficient vectors differ in length");
  split = std::clamp<int>(split, 0, static_cast<int>(low_source.size()));
  StrandCoeffs out = high_source;
  out.head(split) = low_source.head(split);
  return out;
}

VecX explained_variance_curve(const StrandBasis& basis) {
  check_fitted(basis);
  const double scale = std::max(1.0, basis.mean.squaredNorm());
  if (basis.total_variance <= 1e-16 * scale)
    throw Error(ErrorCode::DegenerateVariance, "zero total corpus variance");
  VecX curve(basis.dim());
  double cum = 0.0;
  for (int i = 0; i < basis.dim(); ++i) {
    cum += basis.explained_variance[i];
    curve[i] = cum / basis.total_variance;
  }
  return curve;
}

StrandCoeffs bald_coeffs(const StrandBasis& basis) {
  check_fitted(basis);
  return basis.components * (-basis.mean);  // the zero strand has a zero spectrum
}

StrandDecoder::StrandDecoder(const StrandBasis& basis) : L_(basis.L) {
  check_fitted(basis);
  DftPlan plan(basis.L);
  const int k = plan.k;
  // op: flat points (axis-major) = op * flat spectrum.
  MatX op = MatX::Zero(3 * L_, 6 * k);
  for (int a = 0; a < 3; ++a)
    for (int n = 0; n < L_; ++n)
      for (int j = 0; j < k; ++j) {
        op(a * L_ + n, a * k + j) = plan.inv(n, j);
        op(a * L_ + n, 3 * k + a * k + j) = plan.inv(n, k + j);
      }
  map_ = op * basis.components.transpose();
  offset_ = op * basis.mean;
}

PointMat StrandDecoder::decode_points(const StrandCoeffs& coeffs) const {
  if (coeffs.size() != map_.cols())
    throw Error(ErrorCode::DimensionMismatch, "coefficient count does not match the decoder");
  VecX flat = offset_ + map_ * coeffs;
  PointMat pts(L_, 3);
  for (int a = 0; a < 3; ++a) pts.col(a) = flat.segment(a * L_, L_);
  return pts;
}

Strand StrandDecoder::decode(const StrandCoeffs& coeffs) const {
  Strand s;
  s.points = decode_points(coeffs);
  return s;
}

StrandCoeffs StrandDecoder::backprop(const PointMat& point_grads) const {
  VecX flat(3 * L_);
  for (int a = 0; a < 3; ++a) flat.segment(a * L_, L_) = point_grads.col(a);
  return map_.transpose() * flat;
}

namespace {

constexpr char kBasisMagic[4] = {'P', 'S', 'B', '1'};

template <typename T>
void put(std::vector<std::byte>& out, const T* data, size_t count) {
  const auto* p = reinterpret_cast<const std::byte*>(data);
  out.insert(out.end(), p, p + sizeof(T) * count);
}

}  // namespace

void save_basis(const std::filesystem::path& path, const StrandBasis& basis) {
  std::vector<std::byte> out;
  put(out, kBasisMagic, 4);
  const uint32_t L = static_cast<uint32_t>(basis.L), m = static_cast<uint32_t>(basis.dim());
  put(out, &L, 1);
  put(out, &m, 1);
  put(out, basis.mean.data(), basis.mean.size());
  MatX components = basis.components;  // row-major on disk
  for (int i = 0; i < components.rows(); ++i)
    put(out, components.row(i).eval().data(), components.cols());
  put(out, basis.explained_variance.data(), basis.explained_variance.size());
  put(out, &basis.total_variance, 1);
  io::write_file_atomic(path, out);
}

StrandBasis load_basis(const std::filesystem::path& path) {
  auto bytes = io::read_file(path);
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kBasisMagic, 4) != 0)
    throw Error(ErrorCode::BadMagic, "expected magic \"PSB1\" in " + path.string());
  size_t pos = 4;
  auto get_u32 = [&] {
    uint32_t v;
    std::memcpy(&v, bytes.data() + pos, 4);
    pos += 4;
    return v;
  };
  auto get_f64 = [&](double* dst, size_t count) {
    if (bytes.size() - pos < count * 8)
      throw Error(ErrorCode::Truncated, "basis file shorter than declared");
    std::memcpy(dst, bytes.data() + pos, count * 8);
    pos += count * 8;
  };

  StrandBasis basis;
  basis.L = static_cast<int>(get_u32());
  const uint32_t m = get_u32();
  if (basis.L < 2 || m < 1) throw Error(ErrorCode::FormatError, "bad basis header");
  const int D = basis.spectral_size();
  basis.mean.resize(D);
  get_f64(basis.mean.data(), D);
  basis.components.resize(m, D);
  for (uint32_t i = 0; i < m; ++i) {
    VecX row(D);
    get_f64(row.data(), D);
    basis.components.row(i) = row;
  }
  basis.explained_variance.resize(m);
  get_f64(basis.explained_variance.data(), m);
  if (bytes.size() - pos >= 8)
    get_f64(&basis.total_variance, 1);
  else
    basis.total_variance = basis.explained_variance.sum();
  return basis;
}

}  // namespace hairkit::codec
