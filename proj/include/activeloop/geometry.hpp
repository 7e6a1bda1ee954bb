#ifndef ACTIVELOOP_GEOMETRY_HPP
#define ACTIVELOOP_GEOMETRY_HPP

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <vector>

namespace activeloop {

struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double reflectance = 0.0;  // in [0, 1]
};

struct PointCloud {
  std::vector<Point> points;  // order carries no meaning; sensor at origin
};

// Normalize an angle into [-pi, pi).
inline double normalize_yaw(double yaw) {
  double a = std::fmod(yaw + M_PI, 2.0 * M_PI);
  if (a < 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

// Oriented 3D box: center (px,py,pz), dims (l,w,h), yaw about +z.
// Boxes with yaw differing by pi and swapped l/w denote the same footprint;
// we do not canonicalize since all overlap math is geometric.
struct Box3D {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d dims = Eigen::Vector3d::Ones();  // (l, w, h), all > 0
  double yaw = 0.0;                                // in [-pi, pi)
  int class_id = -1;

  double volume() const { return dims.x() * dims.y() * dims.z(); }
};

// Footprint corners in the x-y plane, counter-clockwise.
std::array<Eigen::Vector2d, 4> footprint_corners(const Box3D& box);

// Intersection area of the two yaw-rotated footprint rectangles
// (Sutherland-Hodgman clipping + shoelace).
double bev_intersection_area(const Box3D& a, const Box3D& b);

double bev_iou(const Box3D& a, const Box3D& b);

double iou_3d(const Box3D& a, const Box3D& b);

// Points strictly inside the oriented box (boundary counts as outside).
int points_in_box(const PointCloud& cloud, const Box3D& box);

inline bool point_in_box(const Point& p, const Box3D& box) {
  double c = std::cos(-box.yaw), s = std::sin(-box.yaw);
  double dx = p.x - box.center.x(), dy = p.y - box.center.y();
  double u = c * dx - s * dy;
  double v = s * dx + c * dy;
  double wz = p.z - box.center.z();
  return std::abs(u) < 0.5 * box.dims.x() && std::abs(v) < 0.5 * box.dims.y() &&
         std::abs(wz) < 0.5 * box.dims.z();
}

// BEV range of the box center from the sensor origin.
inline double box_distance(const Box3D& box) {
  return std::hypot(box.center.x(), box.center.y());
}

}  // namespace activeloop

#endif  // ACTIVELOOP_GEOMETRY_HPP
