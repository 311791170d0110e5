#include "hairkit/metrics.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Geometry>  // cross()

namespace hairkit::metrics {

namespace {

constexpr double kDegenerate = 1e-12;

void check_same_shape(const HairModel& a, const HairModel& b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::ShapeMismatch, "strand counts differ: " + std::to_string(a.size()) +
                                              " vs " + std::to_string(b.size()));
  for (size_t i = 0; i < a.size(); ++i)
    if (a.strands[i].points.rows() != b.strands[i].points.rows())
      throw Error(ErrorCode::ShapeMismatch, "strand " + std::to_string(i) + " lengths differ");
}

Vec3 world(const HairModel& m, size_t i, int k) {
  Vec3 root = Vec3::Zero();
  if (m.root_relative && i < m.roots.size()) root = m.roots[i];
  return m.strands[i].points.row(k).transpose() + root;
}

// Huber (smooth-L1): quadratic within |x| <= delta, |x| - delta/2 beyond.
double huber(double x, double delta) {
  const double a = std::abs(x);
  return a <= delta ? x * x / (2.0 * delta) : a - 0.5 * delta;
}

double huber_grad(double x, double delta) {
  return x >= delta ? 1.0 : (x <= -delta ? -1.0 : x / delta);
}

}  // namespace

double curvature(const Vec3& p_prev, const Vec3& p, const Vec3& p_next, bool* degenerate) {
  if (degenerate) *degenerate = false;
  const Vec3 u = p_prev - p_next;
  const Vec3 v = p - p_next;
  const Vec3 w = p_prev - p;
  const double lu = u.norm(), lv = v.norm(), lw = w.norm();
  if (lu <= kDegenerate || lv <= kDegenerate || lw <= kDegenerate) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  return 2.0 * u.cross(v).norm() / (lu * lv * lw);
}

double total_curvature(const Strand& strand) {
  double sum = 0.0;
  for (int i = 1; i + 1 < strand.points.rows(); ++i)
    sum += curvature(strand.points.row(i - 1), strand.points.row(i), strand.points.row(i + 1));
  return sum;
}

double position_error(const HairModel& a, const HairModel& b) {
  check_same_shape(a, b);
  double sum = 0.0;
  long count = 0;
  for (size_t i = 0; i < a.size(); ++i)
    for (int k = 0; k < a.strands[i].points.rows(); ++k, ++count)
      sum += (world(a, i, k) - world(b, i, k)).norm();
  return count ? sum / count : 0.0;
}

double curvature_error(const HairModel& a, const HairModel& b) {
  check_same_shape(a, b);
  double sum = 0.0;
  long count = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const auto& pa = a.strands[i].points;
    const auto& pb = b.strands[i].points;
    for (int k = 1; k + 1 < pa.rows(); ++k, ++count) {
      const double ca = curvature(pa.row(k - 1), pa.row(k), pa.row(k + 1));
      const double cb = curvature(pb.row(k - 1), pb.row(k), pb.row(k + 1));
      sum += std::abs(ca - cb);
    }
  }
  return count ? sum / count : 0.0;
}

double geometric_loss(const Strand& pred, const Strand& gt) {
  const auto& p = pred.points;
  const auto& q = gt.points;
  if (p.rows() != q.rows()) throw Error(ErrorCode::ShapeMismatch, "strand lengths differ");
  const int L = static_cast<int>(p.rows());

  double loss = 0.0;
  for (int n = 0; n < L; ++n) loss += (p.row(n) - q.row(n)).cwiseAbs().sum();

  for (int n = 0; n + 1 < L; ++n) {
    const Vec3 dp = p.row(n + 1) - p.row(n);
    const Vec3 dq = q.row(n + 1) - q.row(n);
    const double lp = dp.norm(), lq = dq.norm();
    if (lp > kDegenerate && lq > kDegenerate) loss += 1.0 - dp.dot(dq) / (lp * lq);
  }

  for (int n = 0; n + 2 < L; ++n) {
    const Vec3 bp = (p.row(n + 1) - p.row(n)).cross(p.row(n + 2) - p.row(n + 1));
    const Vec3 bq = (q.row(n + 1) - q.row(n)).cross(q.row(n + 2) - q.row(n + 1));
    loss += std::abs(bp.norm() - bq.norm());
  }
  return loss;
}

double smooth_geometric_loss(const PointMat& pred, const PointMat& gt, double delta,
                             PointMat* grad) {
  if (pred.rows() != gt.rows()) throw Error(ErrorCode::ShapeMismatch, "strand lengths differ");
  const int L = static_cast<int>(pred.rows());
  if (grad) grad->setZero(L, 3);

  double loss = 0.0;
  for (int n = 0; n < L; ++n)
    for (int a = 0; a < 3; ++a) {
      const double d = pred(n, a) - gt(n, a);
      loss += huber(d, delta);
      if (grad) (*grad)(n, a) += huber_grad(d, delta);
    }

  for (int n = 0; n + 1 < L; ++n) {
    const Vec3 u = pred.row(n + 1) - pred.row(n);
    const Vec3 vq = gt.row(n + 1) - gt.row(n);
    const double lu = u.norm(), lq = vq.norm();
    if (lu <= kDegenerate || lq <= kDegenerate) continue;
    const Vec3 uh = u / lu, qh = vq / lq;
    loss += 1.0 - uh.dot(qh);
    if (grad) {
      const Vec3 g = -(qh - uh.dot(qh) * uh) / lu;  // d(1 - uh.qh)/du
      grad->row(n) -= g.transpose();
      grad->row(n + 1) += g.transpose();
    }
  }

  for (int n = 0; n + 2 < L; ++n) {
    const Vec3 u0 = pred.row(n + 1) - pred.row(n);
    const Vec3 u1 = pred.row(n + 2) - pred.row(n + 1);
    const Vec3 c = u0.cross(u1);
    const double bp = c.norm();
    const Vec3 v0 = gt.row(n + 1) - gt.row(n);
    const Vec3 v1 = gt.row(n + 2) - gt.row(n + 1);
    const double bq = v0.cross(v1).norm();
    loss += huber(bp - bq, delta);
    if (grad && bp > kDegenerate) {
      const Vec3 ch = c / bp;
      const double g = huber_grad(bp - bq, delta);
      const Vec3 g0 = g * u1.cross(ch);  // d|c|/du0
      const Vec3 g1 = g * ch.cross(u0);  // d|c|/du1
      grad->row(n) -= g0.transpose();
      grad->row(n + 1) += (g0 - g1).transpose();
      grad->row(n + 2) += g1.transpose();
    }
  }
  return loss;
}

StrandPairReport compare(const HairModel& a, const HairModel& b) {
  check_same_shape(a, b);
  StrandPairReport r;
  r.position_error = position_error(a, b);
  r.curvature_error = curvature_error(a, b);

  double pos_strand = 0.0, cur_strand = 0.0, geo = 0.0;
  long strands_with_interior = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const auto& pa = a.strands[i].points;
    const auto& pb = b.strands[i].points;
    double pos = 0.0;
    for (int k = 0; k < pa.rows(); ++k) pos += (world(a, i, k) - world(b, i, k)).norm();
    pos_strand += pos / pa.rows();
    if (pa.rows() >= 3) {
      double cur = 0.0;
      for (int k = 1; k + 1 < pa.rows(); ++k)
        cur += std::abs(curvature(pa.row(k - 1), pa.row(k), pa.row(k + 1)) -
                        curvature(pb.row(k - 1), pb.row(k), pb.row(k + 1)));
      cur_strand += cur / (pa.rows() - 2);
      ++strands_with_interior;
    }
    geo += geometric_loss(a.strands[i], b.strands[i]);
  }
  const double n = static_cast<double>(a.size());
  if (n > 0) {
    r.position_error_strand = pos_strand / n;
    r.curvature_error_strand = strands_with_interior ? cur_strand / strands_with_interior : 0.0;
    r.geo_loss = geo / n;
  }
  return r;
}

std::string report_text(const StrandPairReport& report) {
  std::ostringstream out;
  out.precision(9);
  out << "position_error=" << report.position_error << "\n"
      << "position_error_strand=" << report.position_error_strand << "\n"
      << "curvature_error=" << report.curvature_error << "\n"
      << "curvature_error_strand=" << report.curvature_error_strand << "\n"
      << "geo_loss=" << report.geo_loss << "\n";
  return out.str();
}

}  // namespace hairkit::metrics
