#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "hairkit/types.hpp"

namespace hairkit::codec {

// Per-axis complex Fourier coefficients of one strand, k = L/2 + 1 bands.
struct SpectralStrand {
  Eigen::MatrixXcd coeffs;  // k x 3 (band, axis)

  int num_bands() const { return static_cast<int>(coeffs.rows()); }
};

// Frequency-domain PCA basis: mean spectrum plus orthonormal principal rows.
// Flattened spectra have length 6k, laid out as [real | imag] halves with
// axis-major order inside each half (index = axis*k + band).
struct StrandBasis {
  int L = 0;
  VecX mean;                    // 6k
  MatX components;              // |gamma| x 6k, orthonormal rows
  VecX explained_variance;      // |gamma|, non-increasing, >= 0
  double total_variance = 0.0;  // total corpus variance over all 6k dims

  int num_bands() const { return L / 2 + 1; }
  int spectral_size() const { return 6 * num_bands(); }
  int dim() const { return static_cast<int>(components.rows()); }
};

using StrandCoeffs = VecX;

// Unnormalized forward DFT per axis; idft applies the 1/L factor.
SpectralStrand dft(const Strand& strand);
Strand idft(const SpectralStrand& spectral, int L);

VecX flatten_spectrum(const SpectralStrand& spectral);
SpectralStrand unflatten_spectrum(const VecX& flat, int L);

enum class BasisFitMethod {
  Auto,           // Svd unless the data matrix would be large
  Svd,            // SVD of the row-centered data matrix
  StreamingGram,  // two-pass 6k x 6k Gram accumulation in fixed chunk order
};

StrandBasis fit_basis(const std::vector<Strand>& corpus, int num_components,
                      BasisFitMethod method = BasisFitMethod::Auto);

// Orthogonal projection gamma = X (DFT(s) - mean); exact for orthonormal X.
StrandCoeffs encode(const Strand& strand, const StrandBasis& basis);
Strand decode(const StrandCoeffs& coeffs, const StrandBasis& basis);

StrandCoeffs truncate(const StrandCoeffs& coeffs, int n);
StrandCoeffs transfer_detail(const StrandCoeffs& low_source, const StrandCoeffs& high_source,
                             int split);

// Cumulative explained variance relative to the total corpus variance.
VecX explained_variance_curve(const StrandBasis& basis);

// The coefficient vector stored in bald texels: encode of the all-origin strand.
StrandCoeffs bald_coeffs(const StrandBasis& basis);

// Cached affine decode map: flat points (axis-major [x0..x_{L-1}, y.., z..])
// = offset + map * gamma. Used by every gradient-based fit, since the whole
// decode chain is linear.
class StrandDecoder {
 public:
  explicit StrandDecoder(const StrandBasis& basis);

  Strand decode(const StrandCoeffs& coeffs) const;
  PointMat decode_points(const StrandCoeffs& coeffs) const;
  // Pull a d(loss)/d(points) gradient back to coefficient space.
  StrandCoeffs backprop(const PointMat& point_grads) const;

  int L() const { return L_; }
  int dim() const { return static_cast<int>(map_.cols()); }
  const MatX& map() const { return map_; }        // 3L x |gamma|
  const VecX& offset() const { return offset_; }  // 3L

 private:
  int L_ = 0;
  MatX map_;
  VecX offset_;
};

// "PSB1" container. A trailing float64 total_variance follows the core
// arrays so truncated bases can still normalize their variance curve;
// readers fall back to the sum of stored variances when absent.
void save_basis(const std::filesystem::path& path, const StrandBasis& basis);
StrandBasis load_basis(const std::filesystem::path& path);

}  // namespace hairkit::codec
