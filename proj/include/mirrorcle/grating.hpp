#pragma once

// Lenticular imaging law. Grating and viewer quantities are in millimeters;
// the only mm -> m conversion happens where stripe centers meet the ScreenMap.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "mirrorcle/errors.hpp"
#include "mirrorcle/geometry.hpp"

namespace mirrorcle {

inline constexpr double kMillimetersPerMeter = 1000.0;

/// Lenticular sheet: radius of curvature r, refractive index n, lenslet pitch T.
struct GratingSpec {
    double r_mm{0.0};
    double n{1.0};
    double period_mm{0.0};
};

inline void validate(const GratingSpec& spec) {
    if (!(spec.n > 1.0))
        throw InvalidSpec("grating refractive index must exceed 1");
    if (!(spec.r_mm > 0.0) || !std::isfinite(spec.r_mm))
        throw InvalidSpec("grating radius of curvature must be positive");
    if (!(spec.period_mm > 0.0) || !std::isfinite(spec.period_mm))
        throw InvalidSpec("grating period must be positive");
}

/// f = r / (n - 1).
inline double focal_length(const GratingSpec& spec) {
    validate(spec);
    return spec.r_mm / (spec.n - 1.0);
}

/// Per-frame viewing quantities: eye midpoint x, interocular distance e, viewing distance l.
struct ViewerState {
    double mid_x_mm{0.0};
    double e_mm{0.0};
    double l_mm{0.0};
};

/// Optional replacements for the tracked e and l (constant-e mode, CLI overrides).
struct ViewerOptions {
    std::optional<double> e_mm;
    std::optional<double> l_mm;
};

/// l is the depth of the eye midpoint; e the 3D distance between the eyes.
inline ViewerState viewer_state(const EyePose& eyes, const ViewerOptions& options = {}) {
    ViewerState view;
    view.mid_x_mm = 0.5 * (eyes.left.x + eyes.right.x) * kMillimetersPerMeter;
    view.e_mm = options.e_mm.value_or(norm(eyes.left - eyes.right) * kMillimetersPerMeter);
    view.l_mm = options.l_mm.value_or(0.5 * (eyes.left.z + eyes.right.z) * kMillimetersPerMeter);
    return view;
}

namespace detail {

inline double checked_focal(const GratingSpec& spec, const ViewerState& view) {
    const double f = focal_length(spec);
    if (!(view.e_mm > 0.0))
        throw InvalidViewing("interocular distance must be positive");
    if (!(view.l_mm > f))
        throw InvalidViewing("viewing distance must exceed the grating focal length");
    return f;
}

}  // namespace detail

/// w = e f / (l - f).
inline double stripe_width(const GratingSpec& spec, const ViewerState& view) {
    const double f = detail::checked_focal(spec, view);
    return view.e_mm * f / (view.l_mm - f);
}

/// Spacing of successive same-eye stripes, T l / (l - f).
inline double stripe_pitch(const GratingSpec& spec, const ViewerState& view) {
    const double f = detail::checked_focal(spec, view);
    return spec.period_mm * view.l_mm / (view.l_mm - f);
}

/// Smallest viewing distance free of crosstalk, 2 e f / T.
inline double min_viewing_distance(const GratingSpec& spec, double e_mm) {
    const double f = focal_length(spec);
    if (!(e_mm > 0.0))
        throw InvalidSpec("interocular distance must be positive");
    return 2.0 * e_mm * f / spec.period_mm;
}

enum class Eye { Left, Right };

inline const char* to_string(Eye eye) { return eye == Eye::Left ? "L" : "R"; }

struct StripeCenters {
    double left_mm{0.0};
    double right_mm{0.0};

    double side(Eye eye) const { return eye == Eye::Left ? left_mm : right_mm; }
};

/// Stripe centers x_l(m), x_r(m) for lenslet index m, in the camera-frame x axis (mm).
inline StripeCenters stripe_centers(const ViewerState& view, const GratingSpec& spec, int m) {
    const double f = detail::checked_focal(spec, view);
    const double mT = m * spec.period_mm;
    // Shared center plus/minus half the offset: the two lines differ by one rounding each.
    const double center = view.mid_x_mm + f * mT / (view.l_mm - f) + mT;
    const double half_offset = 0.5 * view.e_mm * f / (view.l_mm - f);
    return {center - half_offset, center + half_offset};
}

/// Index m whose stripe center for `eye` is nearest x_target; exact ties go to the smaller m.
inline int stripe_index_for(double x_target_mm, const ViewerState& view, const GratingSpec& spec, Eye eye) {
    const double origin = stripe_centers(view, spec, 0).side(eye);
    const double pitch = stripe_pitch(spec, view);
    const double coord = (x_target_mm - origin) / pitch;
    const double below = std::floor(coord);
    // Tolerance absorbs rounding in `coord` so exact midpoints tie-break downward.
    constexpr double kTieTolerance = 1e-9;
    const double m = (coord - below <= 0.5 + kTieTolerance) ? below : below + 1.0;
    return static_cast<int>(m);
}

struct StripeEntry {
    int m{0};
    Eye eye{Eye::Left};
    double center_px{0.0};
    int width_px{0};

    /// First pixel column of the rasterized stripe.
    int first_column() const { return static_cast<int>(std::lround(center_px - 0.5 * width_px)); }
};

/// Which stripe-center line (x_l or x_r) each eye's content is drawn on.
enum class EyeAssignment {
    /// Left content at x_r(m), right at x_l(m): a converging lenslet images each
    /// viewing zone onto the opposite side of its axis.
    LensInverted,
    /// Left content at x_l(m), right at x_r(m), literally as the lines are labelled.
    AsWritten,
};

struct StripePlan {
    std::vector<StripeEntry> entries;  ///< sorted by center_px
    double l_mm{0.0};
    double width_mm{0.0};  ///< analytic stripe width w
    double pitch_mm{0.0};
    double min_viewing_distance_mm{0.0};
    bool crosstalk_free{false};
    EyeAssignment assignment{EyeAssignment::LensInverted};
};

/// Lays out left/right stripes for every lenslet index whose stripe lands on the screen.
inline StripePlan build_stripe_plan(const ViewerState& view, const GratingSpec& spec, const ScreenMap& map,
                                    EyeAssignment assignment = EyeAssignment::LensInverted) {
    validate(map);
    StripePlan plan;
    plan.assignment = assignment;
    plan.l_mm = view.l_mm;
    plan.width_mm = stripe_width(spec, view);
    plan.pitch_mm = stripe_pitch(spec, view);
    plan.min_viewing_distance_mm = min_viewing_distance(spec, view.e_mm);
    plan.crosstalk_free = view.l_mm >= plan.min_viewing_distance_mm;

    const double px_per_mm = map.theta_x / kMillimetersPerMeter;
    const int width_px = static_cast<int>(std::floor(plan.width_mm * px_per_mm));

    const double x_lo = map.x_min() * kMillimetersPerMeter;
    const double x_hi = map.x_max() * kMillimetersPerMeter;
    const StripeCenters base = stripe_centers(view, spec, 0);
    const double base_lo = std::min(base.left_mm, base.right_mm);
    const double base_hi = std::max(base.left_mm, base.right_mm);
    const int m_first = static_cast<int>(std::floor((x_lo - base_hi) / plan.pitch_mm)) - 1;
    const int m_last = static_cast<int>(std::ceil((x_hi - base_lo) / plan.pitch_mm)) + 1;

    auto on_screen = [&](double x) { return x >= x_lo && x < x_hi; };
    auto to_px = [&](double x_mm) { return (x_mm / kMillimetersPerMeter + map.camera_offset_x) * map.theta_x; };

    for (int m = m_first; m <= m_last; ++m) {
        const StripeCenters c = stripe_centers(view, spec, m);
        if (!on_screen(c.left_mm) && !on_screen(c.right_mm))
            continue;
        const bool inverted = assignment == EyeAssignment::LensInverted;
        plan.entries.push_back({m, Eye::Left, to_px(inverted ? c.right_mm : c.left_mm), width_px});
        plan.entries.push_back({m, Eye::Right, to_px(inverted ? c.left_mm : c.right_mm), width_px});
    }
    std::stable_sort(plan.entries.begin(), plan.entries.end(),
                     [](const StripeEntry& a, const StripeEntry& b) { return a.center_px < b.center_px; });
    return plan;
}

}  // namespace mirrorcle
