#include "latmet/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace latmet {

Mat2 rotation(double theta) {
    Mat2 r;
    r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    return r;
}

std::optional<Conformal> as_conformal(const Mat2& m, double tol) {
    const double scale = std::max(1.0, m.norm());
    if (std::abs(m(0, 0) - m(1, 1)) > tol * scale) return std::nullopt;
    if (std::abs(m(0, 1) + m(1, 0)) > tol * scale) return std::nullopt;
    Conformal c;
    c.c = std::hypot(m(0, 0), m(1, 0));
    c.theta = (c.c > 0) ? std::atan2(m(1, 0), m(0, 0)) : 0.0;
    return c;
}

double triangle_signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 d = b - a;
    const double len2 = d.squaredNorm();
    if (len2 == 0.0) return (p - a).norm();
    const double t = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
    return (p - (a + t * d)).norm();
}

double polygon_area(const std::vector<Vec2>& pts) {
    double s = 0;
    const size_t n = pts.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2& a = pts[i];
        const Vec2& b = pts[(i + 1) % n];
        s += a.x() * b.y() - b.x() * a.y();
    }
    return 0.5 * std::abs(s);
}

bool is_convex_polygon(const std::vector<Vec2>& pts, double tol) {
    const size_t n = pts.size();
    if (n < 3) return false;
    int sign = 0;
    for (size_t i = 0; i < n; ++i) {
        const Vec2 e1 = pts[(i + 1) % n] - pts[i];
        const Vec2 e2 = pts[(i + 2) % n] - pts[(i + 1) % n];
        const double cr = e1.x() * e2.y() - e1.y() * e2.x();
        if (std::abs(cr) <= tol) continue;
        const int s = cr > 0 ? 1 : -1;
        if (sign == 0) sign = s;
        else if (s != sign) return false;
    }
    return sign != 0;
}

double convex_intersection_area(const std::vector<Vec2>& subject,
                                const std::vector<Vec2>& clip) {
    // Clip polygon must be traversed ccw for the half-plane tests below.
    std::vector<Vec2> c = clip;
    {
        double s = 0;
        for (size_t i = 0; i < c.size(); ++i) {
            const Vec2& a = c[i];
            const Vec2& b = c[(i + 1) % c.size()];
            s += a.x() * b.y() - b.x() * a.y();
        }
        if (s < 0) std::reverse(c.begin(), c.end());
    }
    std::vector<Vec2> poly = subject;
    for (size_t i = 0; i < c.size() && !poly.empty(); ++i) {
        const Vec2 a = c[i];
        const Vec2 b = c[(i + 1) % c.size()];
        const Vec2 e = b - a;
        auto inside = [&](const Vec2& p) {
            return e.x() * (p.y() - a.y()) - e.y() * (p.x() - a.x()) >= 0.0;
        };
        auto intersect = [&](const Vec2& p, const Vec2& q) {
            const Vec2 d = q - p;
            const double denom = e.x() * d.y() - e.y() * d.x();
            const double t = (e.x() * (a.y() - p.y()) - e.y() * (a.x() - p.x())) / denom;
            return Vec2(p + t * d);
        };
        std::vector<Vec2> out;
        for (size_t j = 0; j < poly.size(); ++j) {
            const Vec2& p = poly[j];
            const Vec2& q = poly[(j + 1) % poly.size()];
            const bool pin = inside(p), qin = inside(q);
            if (pin) {
                out.push_back(p);
                if (!qin) out.push_back(intersect(p, q));
            } else if (qin) {
                out.push_back(intersect(p, q));
            }
        }
        poly = std::move(out);
    }
    if (poly.size() < 3) return 0.0;
    return polygon_area(poly);
}

Domain Domain::box(const Vec2& lo, const Vec2& hi) {
    if (!(hi.x() > lo.x()) || !(hi.y() > lo.y()))
        throw std::invalid_argument("Domain::box: hi must exceed lo in each coordinate");
    Domain d;
    d.verts_ = {lo, Vec2(hi.x(), lo.y()), hi, Vec2(lo.x(), hi.y())};
    return d;
}

Domain Domain::polygon(std::vector<Vec2> vertices) {
    if (vertices.size() < 3) throw std::invalid_argument("Domain::polygon: need >= 3 vertices");
    double s = 0;
    for (size_t i = 0; i < vertices.size(); ++i) {
        const Vec2& a = vertices[i];
        const Vec2& b = vertices[(i + 1) % vertices.size()];
        s += a.x() * b.y() - b.x() * a.y();
    }
    if (s < 0) std::reverse(vertices.begin(), vertices.end());
    if (!is_convex_polygon(vertices))
        throw std::invalid_argument("Domain::polygon: vertices do not bound a convex polygon");
    Domain d;
    d.verts_ = std::move(vertices);
    return d;
}

double Domain::inside_distance(const Vec2& p) const {
    // ccw winding: distance to each edge's half-plane, min over edges.
    double dist = std::numeric_limits<double>::infinity();
    const size_t n = verts_.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2& a = verts_[i];
        const Vec2& b = verts_[(i + 1) % n];
        const Vec2 e = b - a;
        const double len = e.norm();
        const double signed_d = (e.x() * (p.y() - a.y()) - e.y() * (p.x() - a.x())) / len;
        dist = std::min(dist, signed_d);
    }
    return dist;
}

double Domain::diameter() const {
    double d = 0;
    for (size_t i = 0; i < verts_.size(); ++i)
        for (size_t j = i + 1; j < verts_.size(); ++j)
            d = std::max(d, (verts_[i] - verts_[j]).norm());
    return d;
}

double Domain::area() const { return polygon_area(verts_); }

void Domain::bounding_box(Vec2& lo, Vec2& hi) const {
    lo = verts_[0];
    hi = verts_[0];
    for (const Vec2& v : verts_) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
}

Domain Domain::translated(const Vec2& d) const {
    Domain out = *this;
    for (Vec2& v : out.verts_) v += d;
    return out;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    if (n < 2 || y.size() != n) throw std::invalid_argument("fit_slope: need matched lists, n >= 2");
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= double(n);
    my /= double(n);
    double num = 0, den = 0;
    for (size_t i = 0; i < n; ++i) {
        num += (x[i] - mx) * (y[i] - my);
        den += (x[i] - mx) * (x[i] - mx);
    }
    return num / den;
}

}  // namespace latmet
