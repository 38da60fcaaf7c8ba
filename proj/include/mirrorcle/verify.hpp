#pragma once

// Per-frame optics verification: composes the AR frame exactly as the display
// would, then checks it against the ray-traced visibility of each eye.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "mirrorcle/framebuffer.hpp"
#include "mirrorcle/geometry.hpp"
#include "mirrorcle/grating.hpp"
#include "mirrorcle/interleaver.hpp"
#include "mirrorcle/optics.hpp"
#include "mirrorcle/report.hpp"

namespace mirrorcle {

struct VerifyOptions {
    ComposeOptions compose;
    int samples{kDefaultTraceSamples};
    double roundtrip_bound_m{1e-9};
    double crosstalk_bound{0.01};
    double position_tolerance_px{1.0};
    int agreement_lenslets{5};  ///< lenslets, spread across the screen, compared with the stripe plan
    std::string prefix;         ///< prepended to every record name
};

namespace detail {

struct AnchorFootprint {
    double max_distance{-1.0};  ///< farthest content pixel from the target, -1 when none
    std::size_t near_other{0};  ///< content pixels inside the other eye's footprint
};

inline AnchorFootprint measure_footprint(const FrameBuffer& perceived, const PixelCoord& target,
                                         const PixelCoord& other, double reach) {
    AnchorFootprint fp;
    for (int y = 0; y < perceived.height(); ++y) {
        const Rgb8* row = perceived.row(y);
        for (int x = 0; x < perceived.width(); ++x) {
            if (row[x].is_black())
                continue;
            const double cx = x + 0.5;
            const double cy = y + 0.5;
            fp.max_distance = std::max(fp.max_distance, std::hypot(cx - target.u, cy - target.v));
            if (std::hypot(cx - other.u, cy - other.v) <= reach)
                ++fp.near_other;
        }
    }
    return fp;
}

}  // namespace detail

/// Runs every oracle check for one frame. Records are named `<prefix><check>`.
inline std::vector<CheckRecord> verify_frame(const ArScene& scene, const EyePose& eyes, const GratingSpec& spec,
                                             const ScreenMap& map, const LensletSurface& surface,
                                             const VerifyOptions& opt = {}) {
    std::vector<CheckRecord> out;
    const std::string& p = opt.prefix;

    const ViewerState view = viewer_state(eyes, opt.compose.viewer);
    const StripePlan plan = build_stripe_plan(view, spec, map, opt.compose.assignment);
    out.push_back({p + "viewing_distance_mm", view.l_mm, plan.min_viewing_distance_mm, plan.crosstalk_free});

    // Sight-line round trip for every scene point.
    double worst = 0.0;
    auto roundtrip = [&](const SpatialPoint& pt) {
        const ScreenPair q = align_point(eyes, pt);
        worst = std::max(worst, norm(triangulate_perceived(eyes, q.q_left, q.q_right) - reflect_point(pt)));
    };
    for (const Anchor& a : scene.anchors)
        roundtrip(a.point);
    for (const Contour& c : scene.contours)
        for (const SpatialPoint& pt : c.points)
            roundtrip(pt);
    out.push_back({p + "alignment_roundtrip_m", worst, opt.roundtrip_bound_m, worst < opt.roundtrip_bound_m});

    const EyeZone left_zone{eyes.left, view.e_mm};
    const EyeZone right_zone{eyes.right, view.e_mm};
    const VisibilityMap vis_left = visibility_map(left_zone, surface, map, opt.samples);
    const VisibilityMap vis_right = visibility_map(right_zone, surface, map, opt.samples);

    // Crosstalk on the full scene, one eye's content at a time.
    const auto [left_view, right_view] = render_eye_views(scene, eyes, map);
    const FrameBuffer black(map.width_px, map.height_px);
    const double l2r = visible_content_fraction(interleave(left_view, black, plan).frame, vis_right);
    const double r2l = visible_content_fraction(interleave(black, right_view, plan).frame, vis_left);
    out.push_back({p + "crosstalk_left_to_right", l2r, opt.crosstalk_bound, l2r <= opt.crosstalk_bound});
    out.push_back({p + "crosstalk_right_to_left", r2l, opt.crosstalk_bound, r2l <= opt.crosstalk_bound});

    // Each anchor alone: seen by its own eye at its Q, absent from the other eye's Q.
    for (std::size_t i = 0; i < scene.anchors.size(); ++i) {
        const Anchor& a = scene.anchors[i];
        ArScene single;
        single.anchors.push_back(a);
        const auto views = render_eye_views(single, eyes, map);
        const FrameBuffer frame = interleave(views.first, views.second, plan).frame;
        const auto px = align_contour(eyes, std::vector<SpatialPoint>{a.point}, map).front();
        const double reach = a.radius_px + std::sqrt(0.5);
        const bool separated = std::hypot(px.first.u - px.second.u, px.first.v - px.second.v) > 2.0 * reach;

        const std::string tag = p + "anchor" + std::to_string(i);
        for (Eye eye : {Eye::Left, Eye::Right}) {
            const bool is_left = eye == Eye::Left;
            const FrameBuffer seen = perceived_view(is_left ? vis_left : vis_right, frame);
            const PixelCoord own = is_left ? px.first : px.second;
            const PixelCoord other = is_left ? px.second : px.first;
            const auto fp = detail::measure_footprint(seen, own, other, reach);
            const double err = fp.max_distance < 0.0 ? std::numeric_limits<double>::infinity()
                                                     : std::max(0.0, fp.max_distance - reach);
            const std::string side = is_left ? ".left" : ".right";
            out.push_back({tag + side + "_position_error_px", err, opt.position_tolerance_px,
                           err <= opt.position_tolerance_px});
            if (separated)
                out.push_back({tag + side + "_ghost_px", static_cast<double>(fp.near_other), 0.0,
                               fp.near_other == 0});
        }
    }

    // Traced stripe centers against the plan, lenslet by lenslet.
    if (opt.agreement_lenslets > 0) {
        const double T = spec.period_mm;
        const double x_lo = map.x_min() * kMillimetersPerMeter;
        const double x_hi = map.x_max() * kMillimetersPerMeter;
        const bool inverted = opt.compose.assignment == EyeAssignment::LensInverted;
        double dev = 0.0;
        for (int k = 0; k < opt.agreement_lenslets; ++k) {
            const double frac = opt.agreement_lenslets == 1 ? 0.5 : (k + 0.5) / opt.agreement_lenslets;
            const int m = static_cast<int>(std::lround((x_lo + frac * (x_hi - x_lo)) / T));
            const StripeCenters c = stripe_centers(view, spec, m);
            for (Eye eye : {Eye::Left, Eye::Right}) {
                const double planned = (eye == Eye::Left) == inverted ? c.right_mm : c.left_mm;
                const TracedInterval iv = trace_stripe(view, surface, m, eye, opt.samples);
                dev = std::max(dev, std::abs(iv.center() - planned));
            }
        }
        out.push_back({p + "stripe_center_deviation_mm", dev, 0.25 * T, dev <= 0.25 * T});
    }
    return out;
}

}  // namespace mirrorcle
