#pragma once

#include <Eigen/Core>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hairkit {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
// One strand as an L x 3 row-per-point matrix.
using PointMat = Eigen::Matrix<double, Eigen::Dynamic, 3>;

enum class ErrorCode {
  BadMagic,
  Truncated,
  ZeroStrands,
  NegativeCount,
  DegenerateStrand,
  EmptyModel,
  WrongLength,
  BandMismatch,
  TooFewSamples,
  DimensionMismatch,
  DegenerateVariance,
  WrongChannelCount,
  WrongShape,
  MissingRoots,
  RootOffScalp,
  IndexOutOfRange,
  EmptyCorpus,
  ShapeMismatch,
  NonFiniteGradient,
  DivergenceDetected,
  AssetMismatch,
  AlignmentMismatch,
  IoError,
  FormatError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::ZeroStrands: return "ZeroStrands";
    case ErrorCode::NegativeCount: return "NegativeCount";
    case ErrorCode::DegenerateStrand: return "DegenerateStrand";
    case ErrorCode::EmptyModel: return "EmptyModel";
    case ErrorCode::WrongLength: return "WrongLength";
    case ErrorCode::BandMismatch: return "BandMismatch";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::WrongChannelCount: return "WrongChannelCount";
    case ErrorCode::WrongShape: return "WrongShape";
    case ErrorCode::MissingRoots: return "MissingRoots";
    case ErrorCode::RootOffScalp: return "RootOffScalp";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::AssetMismatch: return "AssetMismatch";
    case ErrorCode::AlignmentMismatch: return "AlignmentMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct Strand {
  PointMat points;  // root-relative in canonical models: row 0 is the origin

  int num_points() const { return static_cast<int>(points.rows()); }
  double arc_length() const {
    double len = 0.0;
    for (int i = 0; i + 1 < points.rows(); ++i) len += (points.row(i + 1) - points.row(i)).norm();
    return len;
  }
};

// A full groom. Canonical form (after canonicalize()): every strand has the
// same point count, points are root-relative, and the head bounding sphere of
// the source data has been scaled to radius 10.
struct HairModel {
  std::vector<Strand> strands;
  std::vector<Vec3> roots;                    // world-space root positions
  std::optional<std::vector<Vec2>> roots_uv;  // filled by project_roots
  double source_scale = 1.0;                  // multiply by this to restore source units
  bool root_relative = false;

  size_t size() const { return strands.size(); }
  bool empty() const { return strands.empty(); }
};

}  // namespace hairkit
