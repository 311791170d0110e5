#include "hairkit/pca.hpp"

#include <algorithm>

#include <Eigen/Dense>

namespace hairkit::pca {

namespace {

// Eigenvalues below noise scale are true zeros (identical-sample corpora leave
// rounding dust of order eps^2 * |data|^2).
double clamp_threshold(const VecX& mean) { return 1e-18 * std::max(1.0, mean.squaredNorm()); }

void canonicalize_sign(MatX& components, int rank) {
  for (int i = 0; i < rank; ++i) {
    Eigen::Index at;
    components.row(i).cwiseAbs().maxCoeff(&at);
    if (components(i, at) < 0.0) components.row(i) = -components.row(i);
  }
}

// Shared tail: sort/clamp a full descending eigenvalue spectrum, cut to dim,
// count the rank.
void finalize(Result& res, const VecX& all_eigs_desc, int dim) {
  const double tau = clamp_threshold(res.mean);
  res.total_variance = 0.0;
  for (Eigen::Index i = 0; i < all_eigs_desc.size(); ++i)
    res.total_variance += std::max(all_eigs_desc[i], 0.0);

  res.variance = VecX::Zero(dim);
  res.rank = 0;
  for (int i = 0; i < dim && i < all_eigs_desc.size(); ++i) {
    double v = std::max(all_eigs_desc[i], 0.0);
    if (v <= tau) v = 0.0;
    res.variance[i] = v;
    if (v > 0.0) res.rank = i + 1;
  }
}

}  // namespace

Result fit_svd(const Eigen::Ref<const MatX>& rows, int dim, Padding padding) {
  const Eigen::Index n = rows.rows(), D = rows.cols();
  if (n < 1 || dim < 1) throw Error(ErrorCode::TooFewSamples, "empty sample matrix");
  if (padding == Padding::Complement && dim > D)
    throw Error(ErrorCode::DimensionMismatch, "complement padding needs dim <= D");

  Result res;
  res.mean = rows.colwise().mean();
  MatX centered = rows.rowwise() - res.mean.transpose();
  const double denom = std::max<double>(n - 1, 1);

  if (padding == Padding::Zero && D > n) return fit_sample_gram(rows, dim);

  Eigen::BDCSVD<MatX> svd(centered, Eigen::ComputeFullV);
  const VecX& sigma = svd.singularValues();  // min(n, D), descending
  VecX eigs = VecX::Zero(D);
  eigs.head(sigma.size()) = sigma.array().square() / denom;
  finalize(res, eigs, dim);

  res.components = MatX::Zero(dim, D);
  const int avail = padding == Padding::Complement
                        ? static_cast<int>(D)
                        : static_cast<int>(sigma.size());
  for (int i = 0; i < dim && i < avail; ++i) res.components.row(i) = svd.matrixV().col(i);
  canonicalize_sign(res.components, std::min(dim, avail));
  return res;
}

Result fit_gram(const Eigen::Ref<const MatX>& rows, int dim) {
  const Eigen::Index n = rows.rows(), D = rows.cols();
  if (n < 1 || dim < 1) throw Error(ErrorCode::TooFewSamples, "empty sample matrix");

  // Two passes in fixed chunk order: results independent of any parallel split.
  constexpr Eigen::Index kChunk = 4096;
  VecX mean = VecX::Zero(D);
  for (Eigen::Index start = 0; start < n; start += kChunk) {
    const Eigen::Index c = std::min(kChunk, n - start);
    mean += rows.middleRows(start, c).colwise().sum().transpose();
  }
  mean /= static_cast<double>(n);

  MatX cov = MatX::Zero(D, D);
  for (Eigen::Index start = 0; start < n; start += kChunk) {
    const Eigen::Index c = std::min(kChunk, n - start);
    MatX centered = rows.middleRows(start, c).rowwise() - mean.transpose();
    cov.noalias() += centered.transpose() * centered;
  }
  cov /= std::max<double>(n - 1, 1);
  return from_covariance(std::move(mean), cov, dim);
}

Result from_covariance(VecX mean, const MatX& covariance, int dim) {
  const Eigen::Index D = covariance.rows();
  if (dim < 1 || dim > D)
    throw Error(ErrorCode::DimensionMismatch, "dim must be in [1, D] for covariance PCA");

  Eigen::SelfAdjointEigenSolver<MatX> eig(covariance);
  if (eig.info() != Eigen::Success)
    throw Error(ErrorCode::DegenerateVariance, "eigendecomposition failed");

  Result res;
  res.mean = std::move(mean);
  VecX eigs_desc = eig.eigenvalues().reverse();
  finalize(res, eigs_desc, dim);

  res.components.resize(dim, D);
  for (int i = 0; i < dim; ++i) res.components.row(i) = eig.eigenvectors().col(D - 1 - i);
  canonicalize_sign(res.components, dim);
  return res;
}

Result fit_sample_gram(const Eigen::Ref<const MatX>& rows, int dim) {
  const Eigen::Index n = rows.rows(), D = rows.cols();
  if (n < 1 || dim < 1) throw Error(ErrorCode::TooFewSamples, "empty sample matrix");

  Result res;
  res.mean = rows.colwise().mean();
  MatX centered = rows.rowwise() - res.mean.transpose();
  const double denom = std::max<double>(n - 1, 1);

  MatX gram = centered * centered.transpose();  // n x n
  Eigen::SelfAdjointEigenSolver<MatX> eig(gram);
  if (eig.info() != Eigen::Success)
    throw Error(ErrorCode::DegenerateVariance, "eigendecomposition failed");

  VecX eigs_desc = eig.eigenvalues().reverse() / denom;
  finalize(res, eigs_desc, dim);

  res.components = MatX::Zero(dim, D);
  for (int i = 0; i < dim && i < n; ++i) {
    const double mu = eig.eigenvalues()[n - 1 - i];
    if (mu / denom <= 0.0 || res.variance[i] == 0.0) break;
    res.components.row(i) =
        (centered.transpose() * eig.eigenvectors().col(n - 1 - i)).transpose() / std::sqrt(mu);
  }
  canonicalize_sign(res.components, res.rank);
  return res;
}

}  // namespace hairkit::pca
