#pragma once

// Command-line front end. Exit codes: 0 success, 1 verification failure,
// 2 input error, 3 geometry error.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mirrorcle.hpp"

namespace mirrorcle::cli {

enum ExitCode : int { kOk = 0, kVerificationFailed = 1, kInputError = 2, kGeometryError = 3 };

struct Invocation {
    std::string subcommand;
    std::string config;
    std::string trace;
    std::string scene;
    std::string out;
    std::string left;
    std::string right;
    std::optional<int> frame;
    std::optional<double> e_mm;
    std::optional<double> l_mm;
    unsigned seed{0};
    int frames{100};
};

class UsageError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline std::string general(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

/// Writes to --out when given, otherwise to `fallback`.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
        if (!path.empty()) {
            file_.open(path, std::ios::binary);
            if (!file_)
                throw UsageError("cannot open output '" + path + "'");
            os_ = &file_;
        }
    }
    std::ostream& stream() { return *os_; }

private:
    std::ofstream file_;
    std::ostream* os_;
};

inline DisplayConfig require_config(const Invocation& inv) {
    if (inv.config.empty())
        throw UsageError("--config is required");
    return load_config(inv.config);
}

inline EyeTrace require_trace(const Invocation& inv, const DisplayConfig& cfg) {
    if (inv.trace.empty())
        throw UsageError("--trace is required");
    return load_trace(inv.trace, cfg.camera);
}

inline ArScene require_scene(const Invocation& inv) {
    if (inv.scene.empty())
        throw UsageError("--scene is required");
    return load_scene(inv.scene);
}

/// Frames selected by --frame (all frames when absent).
inline std::vector<std::size_t> selected_frames(const Invocation& inv, const EyeTrace& trace) {
    if (inv.frame) {
        if (*inv.frame < 0 || static_cast<std::size_t>(*inv.frame) >= trace.poses.size())
            throw UsageError("--frame " + std::to_string(*inv.frame) + " is out of range");
        return {static_cast<std::size_t>(*inv.frame)};
    }
    std::vector<std::size_t> all(trace.poses.size());
    for (std::size_t i = 0; i < all.size(); ++i)
        all[i] = i;
    return all;
}

inline ViewerOptions viewer_options(const Invocation& inv, const DisplayConfig& cfg) {
    ViewerOptions v;
    v.e_mm = inv.e_mm ? inv.e_mm : cfg.fixed_e_mm;
    v.l_mm = inv.l_mm;
    return v;
}

inline double percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace detail

inline int cmd_align(const Invocation& inv, std::ostream& out) {
    const DisplayConfig cfg = detail::require_config(inv);
    const EyeTrace trace = detail::require_trace(inv, cfg);
    const ArScene scene = detail::require_scene(inv);
    detail::Sink sink(inv.out, out);
    std::ostream& os = sink.stream();
    os << "# frame t_ms anchor uL vL uR vR\n";
    for (std::size_t k : detail::selected_frames(inv, trace)) {
        const EyePose& eyes = trace.poses[k];
        for (std::size_t i = 0; i < scene.anchors.size(); ++i) {
            PixelPair px;
            try {
                const ScreenPair q = align_point(eyes, scene.anchors[i].point);
                px = {to_screen_pixels(q.q_left, cfg.screen), to_screen_pixels(q.q_right, cfg.screen)};
            } catch (const DegenerateGeometry& e) {
                throw DegenerateGeometry("frame " + std::to_string(k) + " anchor " + std::to_string(i) + ": " +
                                         e.what());
            }
            os << k << ' ' << format_double(eyes.timestamp_ms) << ' ' << i << ' ' << detail::fixed(px.first.u)
               << ' ' << detail::fixed(px.first.v) << ' ' << detail::fixed(px.second.u) << ' '
               << detail::fixed(px.second.v) << '\n';
        }
    }
    return kOk;
}

inline int cmd_design(const Invocation& inv, std::ostream& out) {
    const DisplayConfig cfg = detail::require_config(inv);
    std::optional<double> e = inv.e_mm ? inv.e_mm : cfg.fixed_e_mm;
    std::optional<double> l = inv.l_mm;
    if ((!e || !l) && !inv.trace.empty()) {
        const EyeTrace trace = detail::require_trace(inv, cfg);
        const ViewerState v = viewer_state(trace.poses[detail::selected_frames(inv, trace).front()]);
        e = e.value_or(v.e_mm);
        l = l.value_or(v.l_mm);
    }
    if (!e || !l)
        throw UsageError("design needs --e and --l (or --trace)");

    const ViewerState view{0.0, *e, *l};
    const double f = focal_length(cfg.grating);
    const double w = stripe_width(cfg.grating, view);
    const double pitch = stripe_pitch(cfg.grating, view);
    const double l_min = min_viewing_distance(cfg.grating, *e);
    detail::Sink sink(inv.out, out);
    std::ostream& os = sink.stream();
    os << "f_mm " << detail::general(f) << '\n'
       << "w_mm " << detail::general(w) << '\n'
       << "pitch_mm " << detail::general(pitch) << '\n'
       << "l_min_mm " << detail::general(l_min) << '\n'
       << "width_px " << static_cast<int>(std::floor(w * cfg.screen.theta_x / kMillimetersPerMeter)) << '\n'
       << "verdict " << (*l >= l_min ? "OK" : "CROSSTALK") << '\n';
    return kOk;
}

inline int cmd_interleave(const Invocation& inv, std::ostream& out) {
    const DisplayConfig cfg = detail::require_config(inv);
    const EyeTrace trace = detail::require_trace(inv, cfg);
    if (inv.left.empty() || inv.right.empty() || inv.out.empty())
        throw UsageError("interleave needs --left, --right and --out");
    const EyePose& eyes = trace.poses[detail::selected_frames(inv, trace).front()];
    const FrameBuffer left = read_ppm(inv.left);
    const FrameBuffer right = read_ppm(inv.right);
    if (left.width() != cfg.screen.width_px || left.height() != cfg.screen.height_px)
        throw DimensionMismatch("input images do not match the configured screen size");
    const StripePlan plan =
        build_stripe_plan(viewer_state(eyes, detail::viewer_options(inv, cfg)), cfg.grating, cfg.screen);
    const InterleavedFrame result = interleave(left, right, plan);
    write_ppm(result.frame, inv.out);
    out << "stripes " << plan.entries.size() << '\n'
        << "crosstalk_free " << (result.crosstalk_free ? 1 : 0) << '\n'
        << "overlapping_columns " << result.overlapping_columns << '\n';
    return kOk;
}

inline int cmd_simulate(const Invocation& inv, std::ostream& out) {
    const DisplayConfig cfg = detail::require_config(inv);
    const EyeTrace trace = detail::require_trace(inv, cfg);
    const ArScene scene = detail::require_scene(inv);
    validate(scene);
    std::vector<CheckRecord> records;
    for (std::size_t k : detail::selected_frames(inv, trace)) {
        VerifyOptions opt;
        opt.compose.viewer = detail::viewer_options(inv, cfg);
        opt.samples = cfg.samples;
        opt.prefix = "frame" + std::to_string(k) + ".";
        const auto r = verify_frame(scene, trace.poses[k], cfg.grating, cfg.screen, cfg.surface(), opt);
        records.insert(records.end(), r.begin(), r.end());
    }
    detail::Sink sink(inv.out, out);
    write_report(sink.stream(), records);
    return all_passed(records) ? kOk : kVerificationFailed;
}

/// Default bench display: 1920x1080 over 0.2 m, lenslets three pixels wide.
inline DisplayConfig bench_default_config() {
    DisplayConfig cfg;
    cfg.grating = {0.5, 1.5, 0.3125};
    cfg.screen = {0.1, 0.0, 9600.0, 9600.0, 1920, 1080};
    return cfg;
}

inline int cmd_bench(const Invocation& inv, std::ostream& out) {
    if (inv.frames <= 0)
        throw UsageError("--frames must be positive");
    const DisplayConfig cfg = inv.config.empty() ? bench_default_config() : load_config(inv.config);

    std::mt19937_64 rng(inv.seed);
    std::uniform_real_distribution<double> jitter(-0.01, 0.01);
    ArScene scene;
    scene.anchors = {{{0.0, -0.02, 0.10}, {255, 0, 0}, 3},
                     {{0.02, -0.04, 0.05}, {0, 255, 0}, 3},
                     {{-0.03, -0.03, 0.20}, {0, 0, 255}, 3}};
    scene.contours = {{{{-0.02, -0.01, 0.1}, {0.0, -0.05, 0.1}, {0.02, -0.01, 0.1}}, {255, 255, 0}}};

    using clock = std::chrono::steady_clock;
    auto ms = [](clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); };
    std::vector<double> t_plan, t_render, t_interleave, t_sum;
    std::size_t checksum = 0;
    for (int i = 0; i < inv.frames; ++i) {
        const double dx = jitter(rng);
        const double dz = jitter(rng);
        const EyePose eyes{{-0.0325 + dx, 0.0, 0.6 + dz}, {0.0325 + dx, 0.0, 0.6 + dz}, static_cast<double>(i)};

        const auto t0 = clock::now();
        const StripePlan plan =
            build_stripe_plan(viewer_state(eyes, detail::viewer_options(inv, cfg)), cfg.grating, cfg.screen);
        const auto t1 = clock::now();
        const auto views = render_eye_views(scene, eyes, cfg.screen);
        const auto t2 = clock::now();
        const InterleavedFrame frame = interleave(views.first, views.second, plan);
        const auto t3 = clock::now();

        checksum += frame.overlapping_columns + plan.entries.size();
        t_plan.push_back(ms(t1 - t0));
        t_render.push_back(ms(t2 - t1));
        t_interleave.push_back(ms(t3 - t2));
        t_sum.push_back(ms(t1 - t0) + ms(t3 - t2));
    }

    constexpr double kFrameBudgetMs = 16.0;
    const double sum_median = detail::percentile(t_sum, 0.5);
    detail::Sink sink(inv.out, out);
    std::ostream& os = sink.stream();
    os << "frames " << inv.frames << '\n'
       << "resolution " << cfg.screen.width_px << 'x' << cfg.screen.height_px << '\n';
    auto stage = [&](const char* name, const std::vector<double>& v) {
        os << "stage " << name << " median_ms=" << detail::fixed(detail::percentile(v, 0.5), 3)
           << " p95_ms=" << detail::fixed(detail::percentile(v, 0.95), 3) << '\n';
    };
    stage("plan", t_plan);
    stage("render", t_render);
    stage("interleave", t_interleave);
    os << "plan+interleave median_ms=" << detail::fixed(sum_median, 3) << " budget_ms=" << kFrameBudgetMs << ' '
       << (sum_median < kFrameBudgetMs ? "OK" : "WARN") << '\n';
    (void)checksum;
    return kOk;
}

inline void add_common(CLI::App& cmd, Invocation& inv) {
    cmd.add_option("--config", inv.config, "display configuration file");
    cmd.add_option("--trace", inv.trace, "eye-pose trace file");
    cmd.add_option("--scene", inv.scene, "AR scene file");
    cmd.add_option("--out", inv.out, "output path (default: standard output)");
    cmd.add_option("--seed", inv.seed, "seed for randomized runs");
    cmd.add_option("--frame", inv.frame, "trace frame index");
    cmd.add_option("--e", inv.e_mm, "interocular distance override, mm");
    cmd.add_option("--l", inv.l_mm, "viewing distance override, mm");
}

/// Parses argv and runs one subcommand.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Mirror AR lenticular geometry, interleaving and optics verification", "mirrorcle"};
    app.require_subcommand(1, 1);
    Invocation inv;

    struct Sub {
        const char* name;
        const char* help;
        int (*fn)(const Invocation&, std::ostream&);
    };
    const Sub subs[] = {
        {"align", "per-frame screen pixels of every anchor for both eyes", cmd_align},
        {"design", "grating design report: f, w, pitch, minimum distance, verdict", cmd_design},
        {"interleave", "interleave two eye views into one PPM frame", cmd_interleave},
        {"simulate", "ray-trace verification report; exit 1 when a check fails", cmd_simulate},
        {"bench", "per-stage timing over synthetic frames", cmd_bench},
    };
    for (const Sub& s : subs) {
        CLI::App* cmd = app.add_subcommand(s.name, s.help);
        add_common(*cmd, inv);
        if (std::string(s.name) == "interleave") {
            cmd->add_option("--left", inv.left, "left-eye PPM");
            cmd->add_option("--right", inv.right, "right-eye PPM");
        }
        if (std::string(s.name) == "bench")
            cmd->add_option("--frames", inv.frames, "number of synthetic frames");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kInputError;
    }

    for (const Sub& s : subs) {
        if (!app.got_subcommand(s.name))
            continue;
        try {
            return s.fn(inv, out);
        } catch (const DegenerateGeometry& e) {
            err << "geometry error: " << e.what() << '\n';
            return kGeometryError;
        } catch (const InvalidViewing& e) {
            err << "geometry error: " << e.what() << '\n';
            return kGeometryError;
        } catch (const ParallelRays& e) {
            err << "geometry error: " << e.what() << '\n';
            return kGeometryError;
        } catch (const Error& e) {
            err << "input error: " << e.what() << '\n';
            return kInputError;
        }
    }
    return kInputError;
}

}  // namespace mirrorcle::cli
