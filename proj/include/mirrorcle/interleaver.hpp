#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

#include "mirrorcle/errors.hpp"
#include "mirrorcle/framebuffer.hpp"
#include "mirrorcle/geometry.hpp"
#include "mirrorcle/grating.hpp"

namespace mirrorcle {

inline constexpr int kDefaultAnchorRadiusPx = 3;

struct Anchor {
    SpatialPoint point;
    Rgb8 color;
    int radius_px{kDefaultAnchorRadiusPx};
};

struct Contour {
    std::vector<SpatialPoint> points;
    Rgb8 color;
};

/// AR content in real space (z >= 0).
struct ArScene {
    std::vector<Anchor> anchors;
    std::vector<Contour> contours;
};

inline void validate(const ArScene& scene) {
    for (std::size_t i = 0; i < scene.anchors.size(); ++i) {
        const Anchor& a = scene.anchors[i];
        if (!a.point.is_finite() || !(a.point.z >= 0.0))
            throw InvariantViolation("anchor " + std::to_string(i), "point must be finite with z >= 0");
        if (a.radius_px < 0)
            throw InvariantViolation("anchor " + std::to_string(i), "radius must be non-negative");
    }
    for (std::size_t i = 0; i < scene.contours.size(); ++i)
        for (const SpatialPoint& p : scene.contours[i].points)
            if (!p.is_finite() || !(p.z >= 0.0))
                throw InvariantViolation("contour " + std::to_string(i), "points must be finite with z >= 0");
}

/// Interleaved output plus overlap bookkeeping.
struct InterleavedFrame {
    FrameBuffer frame;
    bool crosstalk_free{true};
    std::size_t overlapping_columns{0};  ///< columns claimed by more than one stripe
};

namespace detail {

enum class ColumnSource : std::uint8_t { None, Left, Right };

inline std::vector<ColumnSource> column_sources(const StripePlan& plan, int width, std::size_t& overlaps) {
    std::vector<ColumnSource> src(static_cast<std::size_t>(width), ColumnSource::None);
    std::vector<std::uint16_t> claims(static_cast<std::size_t>(width), 0);
    // Left entries are applied first and never overwritten.
    for (Eye pass : {Eye::Left, Eye::Right}) {
        for (const StripeEntry& s : plan.entries) {
            if (s.eye != pass)
                continue;
            const int first = s.first_column();
            for (int c = std::max(first, 0); c < std::min(first + s.width_px, width); ++c) {
                auto& slot = src[static_cast<std::size_t>(c)];
                if (slot == ColumnSource::None)
                    slot = pass == Eye::Left ? ColumnSource::Left : ColumnSource::Right;
                ++claims[static_cast<std::size_t>(c)];
            }
        }
    }
    overlaps = 0;
    for (auto n : claims)
        overlaps += n > 1 ? 1 : 0;
    return src;
}

inline void fill_disk(FrameBuffer& fb, const PixelCoord& c, int radius, Rgb8 color) {
    const int cx = static_cast<int>(std::floor(c.u));
    const int cy = static_cast<int>(std::floor(c.v));
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= radius * radius && fb.contains(cx + dx, cy + dy))
                fb.at(cx + dx, cy + dy) = color;
}

inline void draw_line(FrameBuffer& fb, const PixelCoord& a, const PixelCoord& b, Rgb8 color) {
    int x0 = static_cast<int>(std::floor(a.u));
    int y0 = static_cast<int>(std::floor(a.v));
    const int x1 = static_cast<int>(std::floor(b.u));
    const int y1 = static_cast<int>(std::floor(b.v));
    const int dx = std::abs(x1 - x0);
    const int dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1;
    const int sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
        if (fb.contains(x0, y0))
            fb.at(x0, y0) = color;
        if (x0 == x1 && y0 == y1)
            break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

}  // namespace detail

/// Copies each stripe's columns from the matching eye's buffer; uncovered columns stay black.
inline InterleavedFrame interleave(const FrameBuffer& left, const FrameBuffer& right, const StripePlan& plan) {
    if (!left.same_size(right))
        throw DimensionMismatch("left and right views differ in size");
    InterleavedFrame out{FrameBuffer(left.width(), left.height()), plan.crosstalk_free, 0};
    const auto src = detail::column_sources(plan, left.width(), out.overlapping_columns);
    for (int y = 0; y < left.height(); ++y) {
        const Rgb8* l = left.row(y);
        const Rgb8* r = right.row(y);
        Rgb8* o = out.frame.row(y);
        for (int x = 0; x < left.width(); ++x) {
            switch (src[static_cast<std::size_t>(x)]) {
                case detail::ColumnSource::Left: o[x] = l[x]; break;
                case detail::ColumnSource::Right: o[x] = r[x]; break;
                case detail::ColumnSource::None: break;
            }
        }
    }
    return out;
}

/// Rasterizes the scene into per-eye buffers at the Q_left / Q_right pixels.
inline std::pair<FrameBuffer, FrameBuffer> render_eye_views(const ArScene& scene, const EyePose& eyes,
                                                            const ScreenMap& map) {
    validate(map);
    std::pair<FrameBuffer, FrameBuffer> views{FrameBuffer(map.width_px, map.height_px),
                                              FrameBuffer(map.width_px, map.height_px)};

    std::vector<SpatialPoint> anchor_points;
    anchor_points.reserve(scene.anchors.size());
    for (const Anchor& a : scene.anchors)
        anchor_points.push_back(a.point);
    const auto anchor_px = align_contour(eyes, anchor_points, map);
    for (std::size_t i = 0; i < anchor_px.size(); ++i) {
        const Anchor& a = scene.anchors[i];
        detail::fill_disk(views.first, anchor_px[i].first, a.radius_px, a.color);
        detail::fill_disk(views.second, anchor_px[i].second, a.radius_px, a.color);
    }

    for (std::size_t k = 0; k < scene.contours.size(); ++k) {
        const Contour& c = scene.contours[k];
        std::vector<PixelPair> px;
        try {
            px = align_contour(eyes, c.points, map);
        } catch (const DegenerateGeometry& e) {
            throw DegenerateGeometry("contour " + std::to_string(k) + ": " + e.what(), e.index());
        }
        for (std::size_t i = 0; i < px.size(); ++i) {
            const PixelPair& next = px[i + 1 < px.size() ? i + 1 : i];
            detail::draw_line(views.first, px[i].first, next.first, c.color);
            detail::draw_line(views.second, px[i].second, next.second, c.color);
        }
    }
    return views;
}

struct ComposeOptions {
    ViewerOptions viewer;
    EyeAssignment assignment{EyeAssignment::LensInverted};
};

/// End-to-end per-frame function: render both eye views, plan stripes from the eyes, interleave.
inline InterleavedFrame compose_ar_frame(const ArScene& scene, const EyePose& eyes, const GratingSpec& spec,
                                         const ScreenMap& map, const ComposeOptions& options = {}) {
    const auto [left, right] = render_eye_views(scene, eyes, map);
    const StripePlan plan = build_stripe_plan(viewer_state(eyes, options.viewer), spec, map, options.assignment);
    return interleave(left, right, plan);
}

}  // namespace mirrorcle
