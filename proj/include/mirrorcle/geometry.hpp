#pragma once

// Mirror-plane geometry. Frame: origin at the depth camera on the mirror
// plane (z = 0), +z toward the viewer, +y up, meters throughout.

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "mirrorcle/errors.hpp"

namespace mirrorcle {

struct SpatialPoint {
    double x{0.0};
    double y{0.0};
    double z{0.0};

    constexpr SpatialPoint operator+(const SpatialPoint& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr SpatialPoint operator-(const SpatialPoint& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr SpatialPoint operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr bool operator==(const SpatialPoint&) const = default;

    bool is_finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

constexpr double dot(const SpatialPoint& a, const SpatialPoint& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr SpatialPoint cross(const SpatialPoint& a, const SpatialPoint& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const SpatialPoint& a) { return std::sqrt(dot(a, a)); }

struct EyePose {
    SpatialPoint left;
    SpatialPoint right;
    double timestamp_ms{0.0};
};

/// Throws InvariantViolation unless both eyes are finite and in front of the mirror.
inline void validate(const EyePose& eyes) {
    if (!eyes.left.is_finite() || !eyes.right.is_finite())
        throw InvariantViolation("eyes", "non-finite eye coordinate");
    if (!(eyes.left.z > 0.0) || !(eyes.right.z > 0.0))
        throw InvariantViolation("eyes", "eye behind mirror plane");
}

/// Camera-frame to screen-raster transform: pixel = (q + offset) * theta, with v flipped.
struct ScreenMap {
    double camera_offset_x{0.0};  ///< meters from the screen's top-left corner to the camera, along x
    double camera_offset_y{0.0};  ///< same along the downward screen axis
    double theta_x{1.0};          ///< pixels per meter
    double theta_y{1.0};
    int width_px{1};
    int height_px{1};

    /// Physical screen extent in the camera frame, meters.
    double x_min() const { return -camera_offset_x; }
    double x_max() const { return width_px / theta_x - camera_offset_x; }
};

inline void validate(const ScreenMap& map) {
    if (!(map.theta_x > 0.0) || !(map.theta_y > 0.0))
        throw InvariantViolation("screen.theta", "must be positive");
    if (map.width_px <= 0 || map.height_px <= 0)
        throw InvariantViolation("screen.size", "must be positive");
    if (!std::isfinite(map.camera_offset_x) || !std::isfinite(map.camera_offset_y))
        throw InvariantViolation("screen.camera_offset", "must be finite");
}

struct PixelCoord {
    double u{0.0};  ///< column, rightward
    double v{0.0};  ///< row, downward
    constexpr bool operator==(const PixelCoord&) const = default;
};

struct ScreenPair {
    SpatialPoint q_left;
    SpatialPoint q_right;
};

constexpr SpatialPoint reflect_point(const SpatialPoint& p) { return {p.x, p.y, -p.z}; }

/// Point where the segment eye -> target crosses z = 0.
inline SpatialPoint sight_screen_intersection(const SpatialPoint& eye, const SpatialPoint& target) {
    if (eye.z == 0.0)
        throw DegenerateGeometry("eye lies on the mirror plane");
    if (eye.z == target.z)
        throw DegenerateGeometry("sight line is parallel to the mirror plane");
    if (target.z == 0.0)
        return target;
    if ((eye.z > 0.0) == (target.z > 0.0))
        throw DegenerateGeometry("sight line does not cross the mirror plane");

    const double t = -eye.z / (target.z - eye.z);
    return {eye.x + t * (target.x - eye.x), eye.y + t * (target.y - eye.y), 0.0};
}

/// Screen points at which each eye's sight line to the reflection of p_real crosses the mirror.
inline ScreenPair align_point(const EyePose& eyes, const SpatialPoint& p_real) {
    if (!(p_real.z >= 0.0))
        throw DegenerateGeometry("target lies behind the mirror plane");
    const SpatialPoint image = reflect_point(p_real);
    return {sight_screen_intersection(eyes.left, image), sight_screen_intersection(eyes.right, image)};
}

inline PixelCoord to_screen_pixels(const SpatialPoint& q, const ScreenMap& map) {
    if (q.z != 0.0)
        throw NotOnScreenPlane("point is not on the screen plane");
    return {(q.x + map.camera_offset_x) * map.theta_x, (-q.y + map.camera_offset_y) * map.theta_y};
}

using PixelPair = std::pair<PixelCoord, PixelCoord>;

/// Batch align_point + to_screen_pixels; a degenerate point is reported by index.
inline std::vector<PixelPair> align_contour(const EyePose& eyes, std::span<const SpatialPoint> points,
                                            const ScreenMap& map) {
    std::vector<PixelPair> out;
    out.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        ScreenPair pair;
        try {
            pair = align_point(eyes, points[i]);
        } catch (const DegenerateGeometry& e) {
            throw DegenerateGeometry(e.what(), static_cast<std::ptrdiff_t>(i));
        }
        out.emplace_back(to_screen_pixels(pair.q_left, map), to_screen_pixels(pair.q_right, map));
    }
    return out;
}

}  // namespace mirrorcle
