#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mirrorcle/errors.hpp"

namespace mirrorcle {

struct Rgb8 {
    std::uint8_t r{0};
    std::uint8_t g{0};
    std::uint8_t b{0};

    constexpr bool operator==(const Rgb8&) const = default;
    constexpr bool is_black() const { return r == 0 && g == 0 && b == 0; }
};

inline constexpr Rgb8 kBlack{0, 0, 0};

/// Row-major RGB8 raster.
class FrameBuffer {
public:
    FrameBuffer() = default;

    FrameBuffer(int width, int height, Rgb8 fill = kBlack) : width_(width), height_(height) {
        if (width < 0 || height < 0)
            throw DimensionMismatch("framebuffer dimensions must be non-negative");
        pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }

    int width() const { return width_; }
    int height() const { return height_; }

    Rgb8& at(int x, int y) { return pixels_[index(x, y)]; }
    const Rgb8& at(int x, int y) const { return pixels_[index(x, y)]; }

    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    Rgb8* row(int y) { return pixels_.data() + static_cast<std::size_t>(y) * width_; }
    const Rgb8* row(int y) const { return pixels_.data() + static_cast<std::size_t>(y) * width_; }

    std::vector<Rgb8>& pixels() { return pixels_; }
    const std::vector<Rgb8>& pixels() const { return pixels_; }

    bool same_size(const FrameBuffer& o) const { return width_ == o.width_ && height_ == o.height_; }

    bool operator==(const FrameBuffer&) const = default;

private:
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_{0};
    int height_{0};
    std::vector<Rgb8> pixels_;
};

}  // namespace mirrorcle
