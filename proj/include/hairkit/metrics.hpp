#pragma once

#include <string>

#include "hairkit/types.hpp"

namespace hairkit::metrics {

// Reciprocal circumradius of three consecutive points:
//   cur(p) = 2|(p_prev - p_next) x (p - p_next)| / (|p_prev - p_next| |p - p_next| |p_prev - p|).
// Degenerate triples (any pairwise distance <= 1e-12) return 0 and set the
// flag instead of erroring: bald-texel strands are legitimately all-coincident.
double curvature(const Vec3& p_prev, const Vec3& p, const Vec3& p_next,
                 bool* degenerate = nullptr);

// Sum of curvature over interior points of a strand.
double total_curvature(const Strand& strand);

// Mean per-point Euclidean distance between corresponding points, world frame.
double position_error(const HairModel& a, const HairModel& b);

// Mean per-interior-point L1 difference of curvatures.
double curvature_error(const HairModel& a, const HairModel& b);

// L_geo = sum_n |p^_n - p_n|_1 + (1 - d^_n . d_n) + |b^_n - b_n|
// with d_n the segment difference (normalized for the dot product; zero-length
// segments contribute 0) and b_n = |d_n x d_{n+1}|_2 on raw segments.
double geometric_loss(const Strand& pred, const Strand& gt);

// geometric_loss with the L1 terms replaced by a Huber surrogate (transition
// `delta`), plus an analytic gradient wrt the predicted points. This is the
// objective used inside the gradient-based fits; `geometric_loss` itself stays
// the exact reported metric.
double smooth_geometric_loss(const PointMat& pred, const PointMat& gt, double delta,
                             PointMat* grad = nullptr);

struct StrandPairReport {
  double position_error = 0.0;         // global per-point mean (primary)
  double position_error_strand = 0.0;  // per-strand means averaged
  double curvature_error = 0.0;
  double curvature_error_strand = 0.0;
  double geo_loss = 0.0;               // geometric_loss averaged over strands
};

StrandPairReport compare(const HairModel& a, const HairModel& b);

// key=value lines for the CLI's eval output.
std::string report_text(const StrandPairReport& report);

}  // namespace hairkit::metrics
