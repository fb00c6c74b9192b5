#include "sparselight/image.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sparselight {

Image::Image(int width, int height) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw std::invalid_argument("negative image size");
    data_.assign(pixel_count() * 3, 0.0f);
}

Color Image::at(std::size_t pixel) const {
    return {data_[3 * pixel], data_[3 * pixel + 1], data_[3 * pixel + 2]};
}

void Image::set(std::size_t pixel, const Color& c) {
    data_[3 * pixel] = static_cast<float>(c.r);
    data_[3 * pixel + 1] = static_cast<float>(c.g);
    data_[3 * pixel + 2] = static_cast<float>(c.b);
}

std::uint8_t tonemap_channel(double value, double exposure) {
    const double v = std::clamp(value * exposure, 0.0, 1.0);
    if (!(v > 0.0)) return 0;
    return static_cast<std::uint8_t>(std::lround(255.0 * std::pow(v, 1.0 / 2.2)));
}

namespace {

std::string sidecar(const std::filesystem::path& path) { return path.string() + ".f32"; }

std::uint32_t to_le(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::big) return __builtin_bswap32(v);
    return v;
}

}  // namespace

void write_image(const Image& img, const std::filesystem::path& path, double exposure) {
    std::ofstream ppm(path, std::ios::binary);
    if (!ppm) throw std::runtime_error("cannot write " + path.string());
    ppm << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
    std::vector<std::uint8_t> bytes(img.raw().size());
    for (std::size_t k = 0; k < bytes.size(); ++k) bytes[k] = tonemap_channel(img.raw()[k], exposure);
    ppm.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!ppm) throw std::runtime_error("cannot write " + path.string());

    std::ofstream raw(sidecar(path), std::ios::binary);
    if (!raw) throw std::runtime_error("cannot write " + sidecar(path));
    for (const float f : img.raw()) {
        const std::uint32_t w = to_le(std::bit_cast<std::uint32_t>(f));
        raw.write(reinterpret_cast<const char*>(&w), 4);
    }
    if (!raw) throw std::runtime_error("cannot write " + sidecar(path));
}

Image read_image(const std::filesystem::path& path) {
    std::ifstream ppm(path, std::ios::binary);
    if (!ppm) throw std::runtime_error("cannot read " + path.string());
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    ppm >> magic >> w >> h >> maxval;
    if (!ppm || magic != "P6" || w < 0 || h < 0) throw std::runtime_error(path.string() + ": not a P6 pixmap");
    Image img(w, h);
    std::ifstream raw(sidecar(path), std::ios::binary);
    if (!raw) throw std::runtime_error("cannot read " + sidecar(path));
    for (auto& f : img.raw()) {
        std::uint32_t word = 0;
        if (!raw.read(reinterpret_cast<char*>(&word), 4)) throw std::runtime_error(sidecar(path) + ": truncated");
        f = std::bit_cast<float>(to_le(word));
    }
    return img;
}

double image_error(const Image& test, const Image& reference) {
    if (test.width() != reference.width() || test.height() != reference.height())
        throw std::invalid_argument("image_error: dimension mismatch");
    double diff = 0.0, ref = 0.0;
    for (std::size_t p = 0; p < reference.pixel_count(); ++p) {
        const double lr = luminance(reference.at(p));
        const double d = luminance(test.at(p)) - lr;
        diff += d * d;
        ref += lr * lr;
    }
    if (ref == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return 100.0 * std::sqrt(diff / ref);
}

double rms_difference(const Image& a, const Image& b) {
    if (a.raw().size() != b.raw().size()) throw std::invalid_argument("rms_difference: dimension mismatch");
    if (a.raw().empty()) return 0.0;
    double s = 0.0;
    for (std::size_t k = 0; k < a.raw().size(); ++k) {
        const double d = static_cast<double>(a.raw()[k]) - b.raw()[k];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(a.raw().size()));
}

}  // namespace sparselight
