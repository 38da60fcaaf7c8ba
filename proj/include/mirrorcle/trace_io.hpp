#pragma once

// Text formats (line-oriented, '#' starts a comment, blank lines ignored):
//
//   mirrorcle-trace v1 SPATIAL       t_ms xL yL zL xR yR zR        (meters)
//   mirrorcle-trace v1 PIXEL_DEPTH   t_ms uL vL dL uR vR dR        (pixels, meters)
//   mirrorcle-scene v1               anchor x y z r g b radius_px
//                                    contour r g b n x1 y1 z1 ... xn yn zn
//   mirrorcle-config v1              key = value
//
// Numbers are written in shortest round-trip form, so save -> load is bit-exact.
// Images are binary PPM (P6, maxval 255).

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "mirrorcle/errors.hpp"
#include "mirrorcle/framebuffer.hpp"
#include "mirrorcle/geometry.hpp"
#include "mirrorcle/grating.hpp"
#include "mirrorcle/interleaver.hpp"
#include "mirrorcle/optics.hpp"
#include "mirrorcle/report.hpp"

namespace mirrorcle {

/// Pinhole model of the depth camera.
struct CameraIntrinsics {
    double fx{1.0};
    double fy{1.0};
    double cx{0.0};
    double cy{0.0};
};

inline void validate(const CameraIntrinsics& intr) {
    if (!(intr.fx > 0.0) || !(intr.fy > 0.0))
        throw InvariantViolation("camera.f", "focal lengths must be positive");
    if (!std::isfinite(intr.cx) || !std::isfinite(intr.cy))
        throw InvariantViolation("camera.c", "principal point must be finite");
}

/// Inverse pinhole with the image v-down axis flipped to spatial y-up.
inline SpatialPoint deproject(double u, double v, double depth, const CameraIntrinsics& intr) {
    if (!(depth > 0.0) || !std::isfinite(depth))
        throw InvalidDepth("depth must be positive");
    return {(u - intr.cx) * depth / intr.fx, -(v - intr.cy) * depth / intr.fy, depth};
}

struct PixelDepth {
    double u{0.0};
    double v{0.0};
    double depth{0.0};
};

/// Forward pinhole matching deproject.
inline PixelDepth project(const SpatialPoint& p, const CameraIntrinsics& intr) {
    if (!(p.z > 0.0))
        throw InvalidDepth("point must be in front of the camera");
    return {intr.cx + p.x * intr.fx / p.z, intr.cy - p.y * intr.fy / p.z, p.z};
}

enum class TraceMode { Spatial, PixelDepth };

/// Eye poses in strictly increasing time order. PIXEL_DEPTH input is deprojected on load.
struct EyeTrace {
    std::vector<EyePose> poses;
    TraceMode mode{TraceMode::Spatial};
};

/// Everything a display needs: grating, screen transform, optional camera and oracle settings.
struct DisplayConfig {
    GratingSpec grating;
    ScreenMap screen;
    std::optional<CameraIntrinsics> camera;
    std::optional<double> substrate_thickness_mm;
    int samples{kDefaultTraceSamples};
    std::optional<double> fixed_e_mm;

    LensletSurface surface() const {
        LensletSurface s = LensletSurface::at_focal_plane(grating);
        if (substrate_thickness_mm)
            s.substrate_thickness_mm = *substrate_thickness_mm;
        return s;
    }
};

namespace detail {

struct Line {
    std::size_t number{0};
    std::vector<std::string_view> tokens;
};

/// Splits text into non-empty, comment-stripped lines of whitespace-separated tokens.
/// The views point into `text`.
inline std::vector<Line> tokenize(std::string_view text) {
    std::vector<Line> lines;
    std::size_t number = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        std::string_view raw = text.substr(pos, end - pos);
        ++number;
        if (const auto hash = raw.find('#'); hash != std::string_view::npos)
            raw = raw.substr(0, hash);
        Line line{number, {}};
        std::size_t i = 0;
        while (i < raw.size()) {
            while (i < raw.size() && (raw[i] == ' ' || raw[i] == '\t' || raw[i] == '\r'))
                ++i;
            std::size_t j = i;
            while (j < raw.size() && raw[j] != ' ' && raw[j] != '\t' && raw[j] != '\r')
                ++j;
            if (j > i)
                line.tokens.push_back(raw.substr(i, j - i));
            i = j;
        }
        if (!line.tokens.empty())
            lines.push_back(std::move(line));
        if (end == text.size())
            break;
        pos = end + 1;
    }
    return lines;
}

inline double parse_number(std::string_view tok, std::size_t line) {
    double v = 0.0;
    const char* first = tok.data();
    if (!tok.empty() && tok.front() == '+')
        ++first;
    const auto res = std::from_chars(first, tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size() || !std::isfinite(v))
        throw ParseError("invalid number '" + std::string(tok) + "'", line);
    return v;
}

inline long long parse_integer(std::string_view tok, std::size_t line) {
    long long v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw ParseError("invalid integer '" + std::string(tok) + "'", line);
    return v;
}

inline std::uint8_t parse_channel(std::string_view tok, std::size_t line) {
    const long long v = parse_integer(tok, line);
    if (v < 0 || v > 255)
        throw ParseError("color channel out of range", line);
    return static_cast<std::uint8_t>(v);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open '" + path + "'", 0);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, std::string_view data) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write '" + path + "'");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out)
        throw Error("write failed for '" + path + "'");
}

inline void expect_header(const std::vector<Line>& lines, std::string_view magic, std::size_t min_tokens) {
    if (lines.empty())
        throw ParseError("no records", 0);
    const Line& h = lines.front();
    if (h.tokens.size() < min_tokens || h.tokens[0] != magic || h.tokens[1] != "v1")
        throw ParseError("expected header '" + std::string(magic) + " v1'", h.number);
}

inline std::string join_point(const SpatialPoint& p) {
    return format_double(p.x) + ' ' + format_double(p.y) + ' ' + format_double(p.z);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Eye traces

inline EyeTrace parse_trace(std::string_view text, const std::optional<CameraIntrinsics>& intr = std::nullopt) {
    const auto lines = detail::tokenize(text);
    detail::expect_header(lines, "mirrorcle-trace", 3);
    const detail::Line& header = lines.front();
    if (header.tokens.size() != 3)
        throw ParseError("trace header must name a mode", header.number);

    EyeTrace trace;
    if (header.tokens[2] == "SPATIAL")
        trace.mode = TraceMode::Spatial;
    else if (header.tokens[2] == "PIXEL_DEPTH")
        trace.mode = TraceMode::PixelDepth;
    else
        throw ParseError("unknown trace mode '" + std::string(header.tokens[2]) + "'", header.number);
    if (trace.mode == TraceMode::PixelDepth) {
        if (!intr)
            throw InvariantViolation("camera", "PIXEL_DEPTH traces need camera intrinsics");
        validate(*intr);
    }

    for (std::size_t k = 1; k < lines.size(); ++k) {
        const auto& [number, tok] = lines[k];
        if (tok.size() != 7)
            throw ParseError("trace record needs 7 fields", number);
        double v[7];
        for (int i = 0; i < 7; ++i)
            v[i] = detail::parse_number(tok[static_cast<std::size_t>(i)], number);

        EyePose pose;
        pose.timestamp_ms = v[0];
        try {
            if (trace.mode == TraceMode::Spatial) {
                pose.left = {v[1], v[2], v[3]};
                pose.right = {v[4], v[5], v[6]};
            } else {
                pose.left = deproject(v[1], v[2], v[3], *intr);
                pose.right = deproject(v[4], v[5], v[6], *intr);
            }
        } catch (const InvalidDepth&) {
            throw InvariantViolation("line " + std::to_string(number) + " depth", "eye behind mirror plane");
        }
        if (!(pose.left.z > 0.0) || !(pose.right.z > 0.0))
            throw InvariantViolation("line " + std::to_string(number) + " z", "eye behind mirror plane");
        if (!trace.poses.empty() && !(pose.timestamp_ms > trace.poses.back().timestamp_ms))
            throw InvariantViolation("line " + std::to_string(number) + " t_ms",
                                     "timestamps must be strictly increasing");
        trace.poses.push_back(pose);
    }
    if (trace.poses.empty())
        throw ParseError("no records", header.number);
    return trace;
}

/// Always written in SPATIAL form.
inline std::string format_trace(const EyeTrace& trace) {
    std::string out = "mirrorcle-trace v1 SPATIAL\n";
    for (const EyePose& p : trace.poses)
        out += format_double(p.timestamp_ms) + ' ' + detail::join_point(p.left) + ' ' +
               detail::join_point(p.right) + '\n';
    return out;
}

inline EyeTrace load_trace(const std::string& path, const std::optional<CameraIntrinsics>& intr = std::nullopt) {
    return parse_trace(detail::read_file(path), intr);
}

inline void save_trace(const EyeTrace& trace, const std::string& path) {
    detail::write_file(path, format_trace(trace));
}

// ---------------------------------------------------------------------------
// Scenes

inline ArScene parse_scene(std::string_view text) {
    const auto lines = detail::tokenize(text);
    detail::expect_header(lines, "mirrorcle-scene", 2);
    ArScene scene;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const auto& [number, tok] = lines[k];
        if (tok[0] == "anchor") {
            if (tok.size() != 8)
                throw ParseError("anchor needs x y z r g b radius_px", number);
            Anchor a;
            a.point = {detail::parse_number(tok[1], number), detail::parse_number(tok[2], number),
                       detail::parse_number(tok[3], number)};
            a.color = {detail::parse_channel(tok[4], number), detail::parse_channel(tok[5], number),
                       detail::parse_channel(tok[6], number)};
            const long long radius = detail::parse_integer(tok[7], number);
            if (radius < 0 || radius > 100000)
                throw InvariantViolation("line " + std::to_string(number) + " radius_px", "out of range");
            a.radius_px = static_cast<int>(radius);
            if (!(a.point.z >= 0.0))
                throw InvariantViolation("line " + std::to_string(number) + " z", "anchor behind mirror plane");
            scene.anchors.push_back(a);
        } else if (tok[0] == "contour") {
            if (tok.size() < 5)
                throw ParseError("contour needs r g b n followed by n points", number);
            Contour c;
            c.color = {detail::parse_channel(tok[1], number), detail::parse_channel(tok[2], number),
                       detail::parse_channel(tok[3], number)};
            const long long n = detail::parse_integer(tok[4], number);
            if (n < 1 || tok.size() != 5 + 3 * static_cast<std::size_t>(n))
                throw ParseError("contour point count does not match its coordinates", number);
            for (long long i = 0; i < n; ++i) {
                const std::size_t b = 5 + 3 * static_cast<std::size_t>(i);
                SpatialPoint p{detail::parse_number(tok[b], number), detail::parse_number(tok[b + 1], number),
                               detail::parse_number(tok[b + 2], number)};
                if (!(p.z >= 0.0))
                    throw InvariantViolation("line " + std::to_string(number) + " z",
                                             "contour point behind mirror plane");
                c.points.push_back(p);
            }
            scene.contours.push_back(std::move(c));
        } else {
            throw ParseError("unknown scene record '" + std::string(tok[0]) + "'", number);
        }
    }
    return scene;
}

inline std::string format_scene(const ArScene& scene) {
    std::string out = "mirrorcle-scene v1\n";
    auto color = [](Rgb8 c) {
        return std::to_string(c.r) + ' ' + std::to_string(c.g) + ' ' + std::to_string(c.b);
    };
    for (const Anchor& a : scene.anchors)
        out += "anchor " + detail::join_point(a.point) + ' ' + color(a.color) + ' ' + std::to_string(a.radius_px) +
               '\n';
    for (const Contour& c : scene.contours) {
        out += "contour " + color(c.color) + ' ' + std::to_string(c.points.size());
        for (const SpatialPoint& p : c.points)
            out += ' ' + detail::join_point(p);
        out += '\n';
    }
    return out;
}

inline ArScene load_scene(const std::string& path) { return parse_scene(detail::read_file(path)); }

inline void save_scene(const ArScene& scene, const std::string& path) {
    detail::write_file(path, format_scene(scene));
}

// ---------------------------------------------------------------------------
// Display configuration

inline DisplayConfig parse_config(std::string_view text) {
    const auto lines = detail::tokenize(text);
    detail::expect_header(lines, "mirrorcle-config", 2);

    std::map<std::string, std::pair<std::string_view, std::size_t>, std::less<>> values;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const auto& [number, tok] = lines[k];
        if (tok.size() != 3 || tok[1] != "=")
            throw ParseError("expected 'key = value'", number);
        if (!values.emplace(std::string(tok[0]), std::make_pair(tok[2], number)).second)
            throw ParseError("duplicate key '" + std::string(tok[0]) + "'", number);
    }

    auto take = [&](std::string_view key) -> std::optional<double> {
        const auto it = values.find(key);
        if (it == values.end())
            return std::nullopt;
        const double v = detail::parse_number(it->second.first, it->second.second);
        values.erase(it);
        return v;
    };
    auto require = [&](std::string_view key) {
        const auto v = take(key);
        if (!v)
            throw InvariantViolation(std::string(key), "missing");
        return *v;
    };
    auto whole = [](std::string_view key, double v) {
        if (v != std::floor(v) || v < 1.0 || v > 1e9)
            throw InvariantViolation(std::string(key), "must be a positive integer");
        return static_cast<int>(v);
    };

    DisplayConfig cfg;
    cfg.grating = {require("grating.r_mm"), require("grating.n"), require("grating.period_mm")};
    cfg.screen.camera_offset_x = require("screen.camera_offset_x_m");
    cfg.screen.camera_offset_y = take("screen.camera_offset_y_m").value_or(0.0);
    cfg.screen.theta_x = require("screen.theta_x");
    cfg.screen.theta_y = require("screen.theta_y");
    cfg.screen.width_px = whole("screen.width_px", require("screen.width_px"));
    cfg.screen.height_px = whole("screen.height_px", require("screen.height_px"));

    const auto fx = take("camera.fx");
    const auto fy = take("camera.fy");
    const auto cx = take("camera.cx");
    const auto cy = take("camera.cy");
    if (fx || fy || cx || cy) {
        if (!(fx && fy && cx && cy))
            throw InvariantViolation("camera", "fx, fy, cx, cy must be given together");
        cfg.camera = CameraIntrinsics{*fx, *fy, *cx, *cy};
        validate(*cfg.camera);
    }
    cfg.substrate_thickness_mm = take("optics.substrate_thickness_mm");
    if (const auto s = take("optics.samples")) {
        cfg.samples = whole("optics.samples", *s);
        if (cfg.samples < 3)
            throw InvariantViolation("optics.samples", "must be at least 3");
    }
    cfg.fixed_e_mm = take("viewer.e_mm");
    if (cfg.fixed_e_mm && !(*cfg.fixed_e_mm > 0.0))
        throw InvariantViolation("viewer.e_mm", "must be positive");

    if (!values.empty()) {
        const auto& [key, where] = *values.begin();
        throw ParseError("unknown key '" + key + "'", where.second);
    }

    try {
        validate(cfg.grating);
    } catch (const InvalidSpec& e) {
        throw InvariantViolation("grating", e.what());
    }
    validate(cfg.screen);
    if (cfg.substrate_thickness_mm && !(*cfg.substrate_thickness_mm > 0.0))
        throw InvariantViolation("optics.substrate_thickness_mm", "must be positive");
    return cfg;
}

inline std::string format_config(const DisplayConfig& cfg) {
    std::string out = "mirrorcle-config v1\n";
    auto kv = [&](std::string_view key, double v) {
        out += std::string(key) + " = " + format_double(v) + '\n';
    };
    kv("grating.r_mm", cfg.grating.r_mm);
    kv("grating.n", cfg.grating.n);
    kv("grating.period_mm", cfg.grating.period_mm);
    kv("screen.camera_offset_x_m", cfg.screen.camera_offset_x);
    kv("screen.camera_offset_y_m", cfg.screen.camera_offset_y);
    kv("screen.theta_x", cfg.screen.theta_x);
    kv("screen.theta_y", cfg.screen.theta_y);
    kv("screen.width_px", cfg.screen.width_px);
    kv("screen.height_px", cfg.screen.height_px);
    if (cfg.camera) {
        kv("camera.fx", cfg.camera->fx);
        kv("camera.fy", cfg.camera->fy);
        kv("camera.cx", cfg.camera->cx);
        kv("camera.cy", cfg.camera->cy);
    }
    if (cfg.substrate_thickness_mm)
        kv("optics.substrate_thickness_mm", *cfg.substrate_thickness_mm);
    kv("optics.samples", cfg.samples);
    if (cfg.fixed_e_mm)
        kv("viewer.e_mm", *cfg.fixed_e_mm);
    return out;
}

inline DisplayConfig load_config(const std::string& path) { return parse_config(detail::read_file(path)); }

inline void save_config(const DisplayConfig& cfg, const std::string& path) {
    detail::write_file(path, format_config(cfg));
}

// ---------------------------------------------------------------------------
// PPM

inline std::string encode_ppm(const FrameBuffer& frame) {
    std::string out = "P6\n" + std::to_string(frame.width()) + ' ' + std::to_string(frame.height()) + "\n255\n";
    out.reserve(out.size() + frame.pixels().size() * 3);
    for (const Rgb8& p : frame.pixels()) {
        out.push_back(static_cast<char>(p.r));
        out.push_back(static_cast<char>(p.g));
        out.push_back(static_cast<char>(p.b));
    }
    return out;
}

/// Accepts any netpbm-conformant P6 header (comments, arbitrary whitespace) with maxval 255.
inline FrameBuffer decode_ppm(std::string_view data) {
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < data.size()) {
            const char c = data[pos];
            if (c == '#') {
                while (pos < data.size() && data[pos] != '\n')
                    ++pos;
            } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto header_int = [&]() -> long long {
        skip_space();
        const std::size_t start = pos;
        while (pos < data.size() && data[pos] >= '0' && data[pos] <= '9')
            ++pos;
        if (pos == start)
            throw UnsupportedFormat("malformed PPM header");
        return detail::parse_integer(data.substr(start, pos - start), 0);
    };

    if (data.size() < 2 || data[0] != 'P' || data[1] != '6')
        throw UnsupportedFormat("only binary PPM (P6) is supported");
    pos = 2;
    const long long w = header_int();
    const long long h = header_int();
    const long long maxval = header_int();
    if (maxval != 255)
        throw UnsupportedFormat("only maxval 255 is supported");
    if (w < 0 || h < 0 || w > 1 << 16 || h > 1 << 16)
        throw UnsupportedFormat("unsupported PPM dimensions");
    if (pos >= data.size() || !(data[pos] == ' ' || data[pos] == '\t' || data[pos] == '\n' || data[pos] == '\r'))
        throw UnsupportedFormat("malformed PPM header");
    ++pos;

    FrameBuffer frame(static_cast<int>(w), static_cast<int>(h));
    const std::size_t need = frame.pixels().size() * 3;
    if (data.size() - pos < need)
        throw UnsupportedFormat("truncated PPM pixel data");
    for (std::size_t i = 0; i < frame.pixels().size(); ++i) {
        const std::size_t b = pos + 3 * i;
        frame.pixels()[i] = {static_cast<std::uint8_t>(data[b]), static_cast<std::uint8_t>(data[b + 1]),
                             static_cast<std::uint8_t>(data[b + 2])};
    }
    return frame;
}

inline FrameBuffer read_ppm(const std::string& path) { return decode_ppm(detail::read_file(path)); }

inline void write_ppm(const FrameBuffer& frame, const std::string& path) {
    detail::write_file(path, encode_ppm(frame));
}

}  // namespace mirrorcle
