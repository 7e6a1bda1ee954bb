#include "activeloop/geometry.hpp"

#include <algorithm>

namespace activeloop {

std::array<Eigen::Vector2d, 4> footprint_corners(const Box3D& box) {
  double c = std::cos(box.yaw), s = std::sin(box.yaw);
  double hl = 0.5 * box.dims.x(), hw = 0.5 * box.dims.y();
  std::array<Eigen::Vector2d, 4> local = {
      Eigen::Vector2d(hl, hw), Eigen::Vector2d(-hl, hw),
      Eigen::Vector2d(-hl, -hw), Eigen::Vector2d(hl, -hw)};
  std::array<Eigen::Vector2d, 4> out;
  for (int i = 0; i < 4; ++i) {
    out[i] = {c * local[i].x() - s * local[i].y() + box.center.x(),
              s * local[i].x() + c * local[i].y() + box.center.y()};
  }
  return out;
}

namespace {

double cross2(const Eigen::Vector2d& o, const Eigen::Vector2d& a,
              const Eigen::Vector2d& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

double shoelace_area(const std::vector<Eigen::Vector2d>& poly) {
  double acc = 0.0;
  std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % n];
    acc += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * std::abs(acc);
}

// Clip a convex polygon by the half-plane left of edge (e0 -> e1).
std::vector<Eigen::Vector2d> clip_half_plane(const std::vector<Eigen::Vector2d>& poly,
                                             const Eigen::Vector2d& e0,
                                             const Eigen::Vector2d& e1) {
  std::vector<Eigen::Vector2d> out;
  std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d& cur = poly[i];
    const Eigen::Vector2d& nxt = poly[(i + 1) % n];
    double dc = cross2(e0, e1, cur);
    double dn = cross2(e0, e1, nxt);
    if (dc >= 0.0) out.push_back(cur);
    if ((dc > 0.0 && dn < 0.0) || (dc < 0.0 && dn > 0.0)) {
      double t = dc / (dc - dn);
      out.push_back(cur + t * (nxt - cur));
    }
  }
  return out;
}

}  // namespace

double bev_intersection_area(const Box3D& a, const Box3D& b) {
  auto ca = footprint_corners(a);
  auto cb = footprint_corners(b);
  std::vector<Eigen::Vector2d> poly(ca.begin(), ca.end());
  for (int i = 0; i < 4 && !poly.empty(); ++i) {
    poly = clip_half_plane(poly, cb[i], cb[(i + 1) % 4]);
  }
  if (poly.size() < 3) return 0.0;  // collinear degeneracy counts as zero
  return shoelace_area(poly);
}

double bev_iou(const Box3D& a, const Box3D& b) {
  double inter = bev_intersection_area(a, b);
  double area_a = a.dims.x() * a.dims.y();
  double area_b = b.dims.x() * b.dims.y();
  double uni = area_a + area_b - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_3d(const Box3D& a, const Box3D& b) {
  double inter_area = bev_intersection_area(a, b);
  double za0 = a.center.z() - 0.5 * a.dims.z(), za1 = a.center.z() + 0.5 * a.dims.z();
  double zb0 = b.center.z() - 0.5 * b.dims.z(), zb1 = b.center.z() + 0.5 * b.dims.z();
  double dz = std::max(0.0, std::min(za1, zb1) - std::max(za0, zb0));
  double inter_vol = inter_area * dz;
  double uni = a.volume() + b.volume() - inter_vol;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter_vol / uni, 0.0, 1.0);
}

int points_in_box(const PointCloud& cloud, const Box3D& box) {
  int count = 0;
  for (const Point& p : cloud.points) {
    if (point_in_box(p, box)) ++count;
  }
  return count;
}

}  // namespace activeloop
