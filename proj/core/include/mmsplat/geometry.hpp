#pragma once

#include <cmath>
#include <stdexcept>

namespace mmsplat {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(const Vec2& o) {
        x += o.x;
        y += o.y;
        return *this;
    }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

// Row-major 2x2 matrix. Only what the splatting math needs.
struct Mat2 {
    double a = 1.0, b = 0.0;  // [a b]
    double c = 0.0, d = 1.0;  // [c d]

    static Mat2 rotation(double theta) {
        const double ct = std::cos(theta), st = std::sin(theta);
        return {ct, -st, st, ct};
    }
    static Mat2 diag(double dx, double dy) { return {dx, 0.0, 0.0, dy}; }

    Vec2 operator*(const Vec2& v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
    Mat2 operator*(const Mat2& o) const {
        return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
    }
    Mat2 transpose() const { return {a, c, b, d}; }
    double det() const { return a * d - b * c; }
    Mat2 inverse() const {
        const double dt = det();
        if (dt == 0.0 || !std::isfinite(dt))
            throw std::runtime_error("Mat2::inverse: singular matrix");
        const double inv = 1.0 / dt;
        return {d * inv, -b * inv, -c * inv, a * inv};
    }
    // Largest singular value; used for conservative screen-space extent bounds.
    double operator_norm() const {
        const double s1 = a * a + b * b + c * c + d * d;
        const double dt = det();
        const double disc = std::sqrt(std::max(0.0, s1 * s1 - 4.0 * dt * dt));
        return std::sqrt(0.5 * (s1 + disc));
    }
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Inverse of sigmoid; p must lie strictly inside (0,1).
inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace mmsplat
