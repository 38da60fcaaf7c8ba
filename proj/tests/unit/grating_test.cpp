#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "mirrorcle/grating.hpp"

namespace mirrorcle {
namespace {

const GratingSpec kSpec{0.5, 1.5, 0.26};  // f = 1 mm

ViewerState view_at(double l_mm, double e_mm = 65.0, double mid_mm = 0.0) { return {mid_mm, e_mm, l_mm}; }

double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

TEST(FocalLength, Examples) {
    EXPECT_DOUBLE_EQ(focal_length({0.5, 1.5, 0.26}), 1.0);
    EXPECT_DOUBLE_EQ(focal_length({1.0, 2.0, 0.26}), 1.0);
    EXPECT_NEAR(focal_length({0.3, 1.49, 0.26}), 0.6122448979591837, 1e-15);
}

TEST(FocalLength, RejectsInvalidSpecs) {
    EXPECT_THROW(focal_length({0.5, 1.0, 0.26}), InvalidSpec);
    EXPECT_THROW(focal_length({0.5, 0.9, 0.26}), InvalidSpec);
    EXPECT_THROW(focal_length({0.0, 1.5, 0.26}), InvalidSpec);
    EXPECT_THROW(focal_length({0.5, 1.5, -1.0}), InvalidSpec);
}

TEST(StripeWidth, Examples) {
    EXPECT_NEAR(stripe_width(kSpec, view_at(501.0)), 0.13, 1e-15);
    EXPECT_NEAR(stripe_width(kSpec, view_at(1001.0)), 0.065, 1e-15);
    const GratingSpec f08{0.4, 1.5, 0.26};
    EXPECT_NEAR(stripe_width(f08, view_at(600.0, 63.0)), 0.08411214953271029, 1e-15);
}

TEST(StripeWidth, RequiresViewerBeyondFocalPlane) {
    EXPECT_THROW(stripe_width(kSpec, view_at(1.0)), InvalidViewing);
    EXPECT_THROW(stripe_width(kSpec, view_at(0.5)), InvalidViewing);
    EXPECT_THROW(stripe_pitch(kSpec, view_at(1.0)), InvalidViewing);
    EXPECT_THROW(stripe_centers(view_at(0.9), kSpec, 0), InvalidViewing);
    EXPECT_THROW(stripe_width(kSpec, view_at(600.0, 0.0)), InvalidViewing);
}

TEST(StripeCenters, Examples) {
    const ViewerState v = view_at(501.0);
    const StripeCenters c0 = stripe_centers(v, kSpec, 0);
    EXPECT_NEAR(c0.left_mm, -0.065, 1e-15);
    EXPECT_NEAR(c0.right_mm, 0.065, 1e-15);
    const StripeCenters c1 = stripe_centers(v, kSpec, 1);
    EXPECT_NEAR(c1.left_mm, 0.19552, 1e-14);
    EXPECT_LT(rel_err(c1.left_mm - c0.left_mm, 0.26052), 1e-12);
}

TEST(StripePitch, Examples) {
    EXPECT_NEAR(stripe_pitch(kSpec, view_at(501.0)), 0.26052, 1e-15);
    double previous = std::numeric_limits<double>::infinity();
    for (double l : {1e3, 1e4, 1e5, 1e6, 1e8}) {
        const double p = stripe_pitch(kSpec, view_at(l));
        EXPECT_GT(p, 0.26);
        EXPECT_LT(p, previous);
        previous = p;
    }
    EXPECT_NEAR(previous, 0.26, 1e-8);
}

TEST(StripePitch, MatchesSuccessiveCenters) {
    const ViewerState v = view_at(501.0, 65.0, 12.5);
    const double pitch = stripe_pitch(kSpec, v);
    for (int m = -50; m <= 50; ++m) {
        const StripeCenters a = stripe_centers(v, kSpec, m - 1);
        const StripeCenters b = stripe_centers(v, kSpec, m);
        EXPECT_LT(rel_err(b.left_mm - a.left_mm, pitch), 1e-12) << m;
        EXPECT_LT(rel_err(b.right_mm - a.right_mm, pitch), 1e-12) << m;
    }
}

TEST(StripeCenters, LeftRightOffsetIsStripeWidth) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> l(200.0, 2000.0);
    std::uniform_real_distribution<double> mid(-50.0, 50.0);
    for (int i = 0; i < 200; ++i) {
        const ViewerState v = view_at(l(rng), 65.0, mid(rng));
        const double w = stripe_width(kSpec, v);
        for (int m = -100; m <= 100; m += 7) {
            const StripeCenters c = stripe_centers(v, kSpec, m);
            EXPECT_LT(rel_err(c.right_mm - c.left_mm, w), 1e-12);
        }
    }
}

TEST(StripeCenters, TranslationCovariance) {
    const ViewerState v = view_at(620.0, 64.0, 3.0);
    for (double delta : {-40.0, -1.25, 0.001, 17.0}) {
        const ViewerState shifted = view_at(620.0, 64.0, 3.0 + delta);
        for (int m = -30; m <= 30; ++m) {
            const StripeCenters a = stripe_centers(v, kSpec, m);
            const StripeCenters b = stripe_centers(shifted, kSpec, m);
            EXPECT_NEAR(b.left_mm - a.left_mm, delta, 1e-12);
            EXPECT_NEAR(b.right_mm - a.right_mm, delta, 1e-12);
        }
    }
}

TEST(MinViewingDistance, Examples) {
    EXPECT_NEAR(min_viewing_distance(kSpec, 65.0), 500.0, 1e-12);
    EXPECT_NEAR(min_viewing_distance({0.5, 1.5, 0.52}, 65.0), 250.0, 1e-12);
    EXPECT_THROW(min_viewing_distance(kSpec, 0.0), InvalidSpec);
    EXPECT_THROW(min_viewing_distance({0.5, 1.0, 0.26}, 65.0), InvalidSpec);
}

TEST(MinViewingDistance, BoundaryStripesTouch) {
    const ViewerState v = view_at(500.0);
    const double two_w = 2.0 * stripe_width(kSpec, v);
    const double pitch = stripe_pitch(kSpec, v);
    EXPECT_NEAR(two_w, 0.2605210420841683, 1e-15);
    EXPECT_NEAR(pitch, 0.2605210420841683, 1e-15);
}

TEST(StripeIndexFor, RoundTripsAndTieBreaks) {
    const ViewerState v = view_at(613.0, 63.0, 4.2);
    for (Eye eye : {Eye::Left, Eye::Right}) {
        EXPECT_EQ(stripe_index_for(stripe_centers(v, kSpec, 7).side(eye), v, kSpec, eye), 7);
        EXPECT_EQ(stripe_index_for(stripe_centers(v, kSpec, -12).side(eye), v, kSpec, eye), -12);
        const double mid = 0.5 * (stripe_centers(v, kSpec, 3).side(eye) + stripe_centers(v, kSpec, 4).side(eye));
        EXPECT_EQ(stripe_index_for(mid, v, kSpec, eye), 3);
    }
}

TEST(StripeIndexFor, MatchesBruteForceScan) {
    const ViewerState v = view_at(555.0, 66.0, -7.0);
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> x(-100.0, 100.0);
    for (int i = 0; i < 300; ++i) {
        const double target = x(rng);
        for (Eye eye : {Eye::Left, Eye::Right}) {
            const int got = stripe_index_for(target, v, kSpec, eye);
            const double got_d = std::abs(stripe_centers(v, kSpec, got).side(eye) - target);
            for (int m = -1000; m <= 1000; ++m) {
                const double d = std::abs(stripe_centers(v, kSpec, m).side(eye) - target);
                ASSERT_GE(d, got_d - 1e-12) << "m=" << m << " beats " << got;
            }
        }
    }
}

TEST(ViewerStateFromEyes, UsesMidpointDistanceAndDepth) {
    const EyePose eyes{{-0.03, 0.0, 0.60}, {0.04, 0.0, 0.62}, 0.0};
    const ViewerState v = viewer_state(eyes);
    EXPECT_NEAR(v.mid_x_mm, 5.0, 1e-12);
    EXPECT_NEAR(v.l_mm, 610.0, 1e-9);
    EXPECT_NEAR(v.e_mm, std::hypot(70.0, 20.0), 1e-9);

    const ViewerState fixed = viewer_state(eyes, {65.0, 700.0});
    EXPECT_EQ(fixed.e_mm, 65.0);
    EXPECT_EQ(fixed.l_mm, 700.0);
}

ScreenMap wide_screen() { return {0.1, 0.0, 10000.0, 10000.0, 2000, 100}; }  // 0.2 m

TEST(BuildStripePlan, FlagsCrosstalkBelowMinimumDistance) {
    const StripePlan plan = build_stripe_plan(view_at(400.0), kSpec, wide_screen());
    EXPECT_FALSE(plan.crosstalk_free);
    EXPECT_FALSE(plan.entries.empty());
}

TEST(BuildStripePlan, IntervalsDisjointWhenCrosstalkFree) {
    const ScreenMap map{0.01, 0.0, 200000.0, 200000.0, 4000, 10};
    const StripePlan plan = build_stripe_plan(view_at(600.0, 65.0, 1.3), kSpec, map);
    ASSERT_TRUE(plan.crosstalk_free);
    ASSERT_GT(plan.entries.front().width_px, 0);
    for (std::size_t i = 1; i < plan.entries.size(); ++i) {
        const StripeEntry& a = plan.entries[i - 1];
        const StripeEntry& b = plan.entries[i];
        ASSERT_LT(a.center_px, b.center_px);
        EXPECT_LE(a.center_px + 0.5 * a.width_px, b.center_px - 0.5 * b.width_px);
        EXPECT_LE(a.first_column() + a.width_px, b.first_column());
    }
}

TEST(BuildStripePlan, CountMatchesPitch) {
    const StripePlan plan = build_stripe_plan(view_at(501.0), kSpec, wide_screen());
    const double expected_m = 0.2 * kMillimetersPerMeter / 0.26052;  // about 767.7
    EXPECT_EQ(plan.entries.size() % 2, 0u);
    const double m_count = static_cast<double>(plan.entries.size()) / 2.0;
    EXPECT_NEAR(m_count, expected_m, 2.0);
    const auto left = std::count_if(plan.entries.begin(), plan.entries.end(),
                                    [](const StripeEntry& s) { return s.eye == Eye::Left; });
    EXPECT_EQ(static_cast<std::size_t>(left) * 2, plan.entries.size());
}

TEST(BuildStripePlan, WidthIsRoundedDown) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> theta(3000.0, 90000.0);
    std::uniform_real_distribution<double> l(501.0, 3000.0);
    for (int i = 0; i < 200; ++i) {
        const ScreenMap map{0.01, 0.0, theta(rng), 5000.0, 400, 10};
        const ViewerState v = view_at(l(rng));
        const StripePlan plan = build_stripe_plan(v, kSpec, map);
        const double analytic = stripe_width(kSpec, v) * map.theta_x / kMillimetersPerMeter;
        for (const StripeEntry& s : plan.entries) {
            ASSERT_LE(s.width_px, analytic);
            ASSERT_GT(s.width_px + 1, analytic);
            ASSERT_EQ(s.width_px, plan.entries.front().width_px);
        }
    }
}

TEST(BuildStripePlan, AssignmentSelectsEq2Line) {
    const ScreenMap map{0.01, 0.0, 100000.0, 100000.0, 2000, 10};
    const ViewerState v = view_at(600.0);
    auto to_px = [&](double x_mm) { return (x_mm / kMillimetersPerMeter + map.camera_offset_x) * map.theta_x; };
    for (EyeAssignment a : {EyeAssignment::LensInverted, EyeAssignment::AsWritten}) {
        const StripePlan plan = build_stripe_plan(v, kSpec, map, a);
        for (const StripeEntry& s : plan.entries) {
            const StripeCenters c = stripe_centers(v, kSpec, s.m);
            const bool uses_right_line = (s.eye == Eye::Left) == (a == EyeAssignment::LensInverted);
            EXPECT_DOUBLE_EQ(s.center_px, to_px(uses_right_line ? c.right_mm : c.left_mm));
        }
    }
}

TEST(BuildStripePlan, CrosstalkFlagAtThreshold) {
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> r(0.3, 2.0);
    std::uniform_real_distribution<double> n(1.4, 1.7);
    std::uniform_real_distribution<double> period(0.1, 0.8);
    std::uniform_real_distribution<double> e(55.0, 75.0);
    const ScreenMap map{0.01, 0.0, 50000.0, 50000.0, 1000, 10};
    for (int i = 0; i < 50; ++i) {
        const GratingSpec spec{r(rng), n(rng), period(rng)};
        const double e_mm = e(rng);
        const double l_min = min_viewing_distance(spec, e_mm);
        EXPECT_FALSE(build_stripe_plan(view_at(0.9 * l_min, e_mm), spec, map).crosstalk_free);
        EXPECT_TRUE(build_stripe_plan(view_at(l_min, e_mm), spec, map).crosstalk_free);
        EXPECT_TRUE(build_stripe_plan(view_at(1.1 * l_min, e_mm), spec, map).crosstalk_free);
    }
}

}  // namespace
}  // namespace mirrorcle
