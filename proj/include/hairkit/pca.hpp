#pragma once

#include "hairkit/types.hpp"

namespace hairkit::pca {

struct Result {
  VecX mean;        // D
  MatX components;  // dim x D rows, orthonormal up to `rank`, then padding
  VecX variance;    // dim, non-increasing, >= 0 (sample covariance eigenvalues)
  double total_variance = 0.0;
  int rank = 0;     // rows beyond rank are padded (complement or zero rows)
};

enum class Padding {
  Complement,  // pad from the orthogonal complement (requires dim <= D)
  Zero,        // pad with zero rows, flagged via rank (used when D is huge)
};

// PCA of an N x D row-sample matrix via SVD of the centered data. Component
// signs are canonicalized (largest-magnitude entry positive) so independent
// fitting paths agree.
Result fit_svd(const Eigen::Ref<const MatX>& rows, int dim, Padding padding);

// Same decomposition via a D x D Gram/covariance accumulated in fixed chunk
// order; agrees with fit_svd within 1e-6 for well-separated spectra.
Result fit_gram(const Eigen::Ref<const MatX>& rows, int dim);

// PCA for D >> N via the N x N sample Gram matrix; zero-row padding.
Result fit_sample_gram(const Eigen::Ref<const MatX>& rows, int dim);

// Eigendecomposition of a precomputed covariance (for streaming callers that
// never materialize the data matrix).
Result from_covariance(VecX mean, const MatX& covariance, int dim);

}  // namespace hairkit::pca
