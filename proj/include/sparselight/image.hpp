#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sparselight/math.hpp"

namespace sparselight {

/// Row-major RGB buffer. Stored as float so the raw sidecar round-trips
/// bit-exactly.
class Image {
public:
    Image() = default;
    Image(int width, int height);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

    Color at(std::size_t pixel) const;
    Color at(int x, int y) const { return at(static_cast<std::size_t>(y) * width_ + x); }
    void set(std::size_t pixel, const Color& c);

    const std::vector<float>& raw() const { return data_; }
    std::vector<float>& raw() { return data_; }

    friend bool operator==(const Image&, const Image&) = default;

private:
    int width_ = 0, height_ = 0;
    std::vector<float> data_;
};

/// Writes `path` as binary PPM (gamma 2.2 after scaling by exposure) and the
/// raw floats to `path` + ".f32". Throws std::runtime_error naming the path.
void write_image(const Image& img, const std::filesystem::path& path, double exposure = 1.0);

/// Reads the dimensions from the PPM header and the pixels from the sidecar.
Image read_image(const std::filesystem::path& path);

std::uint8_t tonemap_channel(double value, double exposure);

/// 100 * sqrt(mean dlum^2) / sqrt(mean lum_ref^2). Throws on size mismatch.
double image_error(const Image& test, const Image& reference);

/// Root mean square of the per-channel difference.
double rms_difference(const Image& a, const Image& b);

}  // namespace sparselight
