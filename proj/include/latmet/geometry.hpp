#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <vector>

namespace latmet {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline Vec2 rot90(const Vec2& v) { return Vec2(-v.y(), v.x()); }

Mat2 rotation(double theta);

/// Decomposition of a conformal matrix m = c * R(theta), if m is one.
struct Conformal {
    double c;
    double theta;
};
std::optional<Conformal> as_conformal(const Mat2& m, double tol = 1e-9);

/// Signed area of the triangle (a, b, c); positive when counter-clockwise.
double triangle_signed_area(const Vec2& a, const Vec2& b, const Vec2& c);

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);

/// Area of the intersection of two convex polygons (Sutherland-Hodgman).
double convex_intersection_area(const std::vector<Vec2>& subject,
                                const std::vector<Vec2>& clip);

double polygon_area(const std::vector<Vec2>& pts);

bool is_convex_polygon(const std::vector<Vec2>& pts, double tol = 1e-12);

/// Axis box or convex polygon; the only domain shapes the toolkit accepts.
class Domain {
  public:
    static Domain box(const Vec2& lo, const Vec2& hi);
    static Domain polygon(std::vector<Vec2> vertices);  // convex, any winding

    /// Distance from p to the boundary, positive inside, negative outside.
    double inside_distance(const Vec2& p) const;

    double diameter() const;
    double area() const;
    void bounding_box(Vec2& lo, Vec2& hi) const;
    Domain translated(const Vec2& d) const;

    const std::vector<Vec2>& vertices() const { return verts_; }

  private:
    std::vector<Vec2> verts_;  // ccw
};

/// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace latmet
