#pragma once

// Ray-traced check of the lenticular model. Rays from a viewing zone are
// refracted with the exact vector form of Snell's law at each lenslet's
// circular cap and followed through the substrate to the pixel plane. Nothing
// here uses the paraxial stripe formulas.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "mirrorcle/errors.hpp"
#include "mirrorcle/framebuffer.hpp"
#include "mirrorcle/geometry.hpp"
#include "mirrorcle/grating.hpp"

namespace mirrorcle {

inline constexpr int kDefaultTraceSamples = 64;

/// Lenslet array over the screen: cap apexes on z = 0, lenslet m centered at x = m*T,
/// pixels immersed in the substrate at depth substrate_thickness_mm.
struct LensletSurface {
    GratingSpec spec;
    double substrate_thickness_mm{0.0};

    /// Pixels on the back focal plane of a single refracting surface seen from inside
    /// the glass, n r / (n - 1).
    static LensletSurface at_focal_plane(const GratingSpec& spec) {
        return {spec, spec.n * focal_length(spec)};
    }
};

inline void validate(const LensletSurface& surface) {
    validate(surface.spec);
    if (!(surface.substrate_thickness_mm > 0.0))
        throw InvalidSpec("substrate thickness must be positive");
    if (surface.spec.r_mm < 0.5 * surface.spec.period_mm)
        throw InvalidSpec("cap radius is smaller than half the lenslet pitch");
}

/// An eye modelled as a horizontal viewing zone of the given width centered on the eye.
/// Width 0 is a point eye.
struct EyeZone {
    SpatialPoint center;
    double width_mm{0.0};
};

/// Left and right zones of width e, abutting at the eye midpoint.
inline std::pair<EyeZone, EyeZone> eye_zones(const EyePose& eyes, const ViewerOptions& options = {}) {
    const double e = viewer_state(eyes, options).e_mm;
    return {{eyes.left, e}, {eyes.right, e}};
}

struct TracedInterval {
    double lo_mm{std::numeric_limits<double>::infinity()};
    double hi_mm{-std::numeric_limits<double>::infinity()};
    int traced{0};
    int excluded{0};  ///< samples lost to total internal reflection or grazing the cap from behind

    double width() const { return hi_mm - lo_mm; }
    double center() const { return 0.5 * (lo_mm + hi_mm); }
};

namespace detail {

/// Symmetric sample offsets in [-0.5, 0.5]; offset(S-1-i) == -offset(i) exactly.
inline double sample_offset(int i, int samples) {
    return static_cast<double>(2 * i - (samples - 1)) / (2.0 * (samples - 1));
}

/// Screen x (mm) reached by the ray from (x0, z0) through the cap point above x_cap, or NaN.
inline double trace_single(double x0, double z0, double x_cap, double center, const LensletSurface& s) {
    const double r = s.spec.r_mm;
    const double dx_c = x_cap - center;
    const double z_cap = -r + std::sqrt(r * r - dx_c * dx_c);

    double dx = x_cap - x0;
    double dz = z_cap - z0;
    const double len = std::hypot(dx, dz);
    dx /= len;
    dz /= len;

    // Outward normal of the cap; the center of curvature sits at (center, -r).
    const double nx = dx_c / r;
    const double nz = (z_cap + r) / r;
    const double cos_i = -(nx * dx + nz * dz);
    if (!(cos_i > 0.0))
        return std::numeric_limits<double>::quiet_NaN();
    const double eta = 1.0 / s.spec.n;
    const double k = 1.0 - eta * eta * (1.0 - cos_i * cos_i);
    if (k < 0.0)
        return std::numeric_limits<double>::quiet_NaN();
    const double a = eta * cos_i - std::sqrt(k);
    const double tx = eta * dx + a * nx;
    const double tz = eta * dz + a * nz;
    if (!(tz < 0.0))
        return std::numeric_limits<double>::quiet_NaN();
    const double travel = (-s.substrate_thickness_mm - z_cap) / tz;
    return x_cap + travel * tx;
}

}  // namespace detail

/// Region of the pixel plane (camera-frame x, mm) that a viewing zone sees through lenslet m.
/// `samples` points across the zone times `samples` points across the cap; min/max of the hits.
inline TracedInterval trace_eye_ray(const EyeZone& zone, int lenslet_index, const LensletSurface& surface,
                                    int samples = kDefaultTraceSamples) {
    validate(surface);
    if (!(zone.center.z > 0.0))
        throw InvalidViewing("eye must be in front of the mirror plane");
    if (samples < 3)
        throw InvalidSpec("at least 3 trace samples are required");

    const double eye_x = zone.center.x * kMillimetersPerMeter;
    const double eye_z = zone.center.z * kMillimetersPerMeter;
    const double center = lenslet_index * surface.spec.period_mm;
    const int zone_samples = zone.width_mm > 0.0 ? samples : 1;

    TracedInterval out;
    for (int i = 0; i < zone_samples; ++i) {
        const double x0 = zone_samples == 1 ? eye_x : eye_x + detail::sample_offset(i, samples) * zone.width_mm;
        for (int j = 0; j < samples; ++j) {
            const double x_cap = center + detail::sample_offset(j, samples) * surface.spec.period_mm;
            const double hit = detail::trace_single(x0, eye_z, x_cap, center, surface);
            if (std::isnan(hit)) {
                ++out.excluded;
                continue;
            }
            ++out.traced;
            out.lo_mm = std::min(out.lo_mm, hit);
            out.hi_mm = std::max(out.hi_mm, hit);
        }
    }
    if (out.traced == 0)
        throw NoIntersection("viewing zone cannot see lenslet " + std::to_string(lenslet_index));
    return out;
}

/// Point-eye form.
inline TracedInterval trace_eye_ray(const SpatialPoint& eye, int lenslet_index, const LensletSurface& surface,
                                    int samples = kDefaultTraceSamples) {
    return trace_eye_ray(EyeZone{eye, 0.0}, lenslet_index, surface, samples);
}

/// Screen columns visible to one viewing zone.
struct VisibilityMap {
    std::vector<std::uint8_t> visible;  ///< one flag per pixel column

    int width() const { return static_cast<int>(visible.size()); }
    bool is_visible(int column) const { return visible[static_cast<std::size_t>(column)] != 0; }
    std::size_t count() const {
        return static_cast<std::size_t>(std::count(visible.begin(), visible.end(), std::uint8_t{1}));
    }
};

/// Columns whose pixel center lies within some traced interval of an on-screen lenslet.
inline VisibilityMap visibility_map(const EyeZone& zone, const LensletSurface& surface, const ScreenMap& map,
                                    int samples = kDefaultTraceSamples) {
    validate(map);
    validate(surface);
    VisibilityMap vis;
    vis.visible.assign(static_cast<std::size_t>(map.width_px), 0);

    const double T = surface.spec.period_mm;
    const double x_lo = map.x_min() * kMillimetersPerMeter;
    const double x_hi = map.x_max() * kMillimetersPerMeter;
    const int m_first = static_cast<int>(std::floor(x_lo / T)) - 1;
    const int m_last = static_cast<int>(std::ceil(x_hi / T)) + 1;
    auto to_px = [&](double x_mm) { return (x_mm / kMillimetersPerMeter + map.camera_offset_x) * map.theta_x; };

    for (int m = m_first; m <= m_last; ++m) {
        TracedInterval iv;
        try {
            iv = trace_eye_ray(zone, m, surface, samples);
        } catch (const NoIntersection&) {
            continue;
        }
        // Column u is sampled at u + 0.5.
        const double lo = to_px(iv.lo_mm) - 0.5;
        const double hi = to_px(iv.hi_mm) - 0.5;
        const int first = std::max(0, static_cast<int>(std::ceil(lo)));
        const int last = std::min(map.width_px - 1, static_cast<int>(std::floor(hi)));
        for (int u = first; u <= last; ++u)
            vis.visible[static_cast<std::size_t>(u)] = 1;
    }
    return vis;
}

/// The frame as one eye sees it: visible columns kept, the rest black.
inline FrameBuffer perceived_view(const VisibilityMap& vis, const FrameBuffer& frame) {
    if (frame.width() != vis.width())
        throw DimensionMismatch("frame width does not match the visibility map");
    FrameBuffer out(frame.width(), frame.height());
    for (int y = 0; y < frame.height(); ++y) {
        const Rgb8* src = frame.row(y);
        Rgb8* dst = out.row(y);
        for (int x = 0; x < frame.width(); ++x)
            if (vis.is_visible(x))
                dst[x] = src[x];
    }
    return out;
}

inline FrameBuffer perceived_view(const EyeZone& zone, const FrameBuffer& frame, const LensletSurface& surface,
                                  const ScreenMap& map, int samples = kDefaultTraceSamples) {
    if (frame.width() != map.width_px || frame.height() != map.height_px)
        throw DimensionMismatch("frame does not match the screen map");
    return perceived_view(visibility_map(zone, surface, map, samples), frame);
}

/// Fraction of non-black pixels of `frame` that fall in columns visible to `vis`.
inline double visible_content_fraction(const FrameBuffer& frame, const VisibilityMap& vis) {
    if (frame.width() != vis.width())
        throw DimensionMismatch("frame width does not match the visibility map");
    std::size_t content = 0;
    std::size_t seen = 0;
    for (int y = 0; y < frame.height(); ++y) {
        const Rgb8* row = frame.row(y);
        for (int x = 0; x < frame.width(); ++x) {
            if (row[x].is_black())
                continue;
            ++content;
            seen += vis.is_visible(x) ? 1 : 0;
        }
    }
    return content == 0 ? 0.0 : static_cast<double>(seen) / static_cast<double>(content);
}

/// Share of left-only content that reaches the right viewing zone; 0 means no crosstalk.
inline double crosstalk_ratio(const FrameBuffer& frame_left_only, const EyeZone& eye_right,
                              const LensletSurface& surface, const ScreenMap& map,
                              int samples = kDefaultTraceSamples) {
    if (frame_left_only.width() != map.width_px || frame_left_only.height() != map.height_px)
        throw DimensionMismatch("frame does not match the screen map");
    return visible_content_fraction(frame_left_only, visibility_map(eye_right, surface, map, samples));
}

/// Midpoint of the shortest segment between the lines eye_left -> q_left and eye_right -> q_right.
inline SpatialPoint triangulate_perceived(const EyePose& eyes, const SpatialPoint& q_left,
                                          const SpatialPoint& q_right) {
    if (q_left.z != 0.0 || q_right.z != 0.0)
        throw NotOnScreenPlane("screen points must lie on z = 0");
    const SpatialPoint d1 = q_left - eyes.left;
    const SpatialPoint d2 = q_right - eyes.right;
    const SpatialPoint n = cross(d1, d2);
    const double denom = dot(n, n);
    if (!(denom > 1e-24 * dot(d1, d1) * dot(d2, d2)))
        throw ParallelRays("sight rays are parallel");
    const SpatialPoint w0 = eyes.right - eyes.left;
    const double s = dot(cross(w0, d2), n) / denom;
    const double t = dot(cross(w0, d1), n) / denom;
    const SpatialPoint a = eyes.left + d1 * s;
    const SpatialPoint b = eyes.right + d2 * t;
    return (a + b) * 0.5;
}

/// Traced stripe for one eye of a viewer at (mid_x, l) with zone width e, through lenslet m.
inline TracedInterval trace_stripe(const ViewerState& view, const LensletSurface& surface, int m, Eye eye,
                                   int samples = kDefaultTraceSamples) {
    const double half = eye == Eye::Left ? -0.5 * view.e_mm : 0.5 * view.e_mm;
    const SpatialPoint center{(view.mid_x_mm + half) / kMillimetersPerMeter, 0.0,
                              view.l_mm / kMillimetersPerMeter};
    return trace_eye_ray(EyeZone{center, view.e_mm}, m, surface, samples);
}

}  // namespace mirrorcle
