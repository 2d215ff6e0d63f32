#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace nf {

/// Interleaved float image, row-major with the top row first.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<float> data;

    Image() = default;
    Image(int w, int h, int c, float fill = 0.0f)
        : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

    float& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    float at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    bool operator==(const Image&) const = default;
};

/// 8-bit sRGB bytes, row-major, top row first, channels interleaved.
struct Image8 {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<std::uint8_t> data;
    bool operator==(const Image8&) const = default;
};

/// Rounds [0, 1] values to bytes.
Image8 quantize(const Image& img);
Image dequantize(const Image8& img);

void write_png(const std::filesystem::path& path, const Image8& img);
Image8 read_png(const std::filesystem::path& path);

/// Portable float map, little-endian (scale -1.0). 3 channels use "PF",
/// 1 channel uses "Pf". Rows are stored bottom-up as the format requires.
void write_pfm(const std::filesystem::path& path, const Image& img);
Image read_pfm(const std::filesystem::path& path);

}  // namespace nf
