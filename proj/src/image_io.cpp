#include "normalfield/image_io.hpp"

#include <png.h>

#include <csetjmp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "normalfield/error.hpp"

namespace nf {

Image8 quantize(const Image& img) {
    Image8 out{img.width, img.height, img.channels, std::vector<std::uint8_t>(img.data.size())};
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const float v = std::clamp(img.data[i], 0.0f, 1.0f);
        out.data[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    return out;
}

Image dequantize(const Image8& img) {
    Image out(img.width, img.height, img.channels);
    for (std::size_t i = 0; i < img.data.size(); ++i) out.data[i] = img.data[i] / 255.0f;
    return out;
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

int color_type_for(int channels) {
    switch (channels) {
        case 1: return PNG_COLOR_TYPE_GRAY;
        case 3: return PNG_COLOR_TYPE_RGB;
        case 4: return PNG_COLOR_TYPE_RGBA;
        default: throw InvalidInput("PNG supports 1, 3 or 4 channels");
    }
}

// libpng reports errors by longjmp; these helpers keep only trivially
// destructible state between setjmp and the libpng calls.
bool png_write_rows(std::FILE* file, const Image8& img, int color_type) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_init_io(png, file);
    png_set_IHDR(png, info, img.width, img.height, 8, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
    for (int y = 0; y < img.height; ++y) png_write_row(png, img.data.data() + y * stride);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

struct PngHeader {
    png_uint_32 width = 0, height = 0;
    int channels = 0;
    std::size_t stride = 0;
};

bool png_read_all(std::FILE* file, PngHeader& header, std::vector<std::uint8_t>& data) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_init_io(png, file);
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    png_read_update_info(png, info);
    header.width = png_get_image_width(png, info);
    header.height = png_get_image_height(png, info);
    header.channels = png_get_channels(png, info);
    header.stride = png_get_rowbytes(png, info);
    data.resize(header.stride * header.height);
    for (png_uint_32 y = 0; y < header.height; ++y) png_read_row(png, data.data() + y * header.stride, nullptr);
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

}  // namespace

void write_png(const std::filesystem::path& path, const Image8& img) {
    const int color_type = color_type_for(img.channels);
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw DataError("cannot open " + path.string() + " for writing");
    if (!png_write_rows(file.get(), img, color_type)) throw DataError("failed to encode PNG " + path.string());
}

Image8 read_png(const std::filesystem::path& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw DataError("cannot open " + path.string());
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8))
        throw DataError(path.string() + " is not a PNG file");
    PngHeader header;
    Image8 img;
    if (!png_read_all(file.get(), header, img.data)) throw DataError("corrupt PNG " + path.string());
    img.width = static_cast<int>(header.width);
    img.height = static_cast<int>(header.height);
    img.channels = header.channels;
    return img;
}

void write_pfm(const std::filesystem::path& path, const Image& img) {
    if (img.channels != 1 && img.channels != 3) throw InvalidInput("PFM supports 1 or 3 channels");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << (img.channels == 3 ? "PF" : "Pf") << "\n" << img.width << " " << img.height << "\n-1.0\n";
    const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
    std::vector<unsigned char> row(stride * 4);
    for (int y = img.height - 1; y >= 0; --y) {
        for (std::size_t i = 0; i < stride; ++i) {
            std::uint32_t bits = std::bit_cast<std::uint32_t>(img.data[y * stride + i]);
            for (int k = 0; k < 4; ++k) row[i * 4 + k] = static_cast<unsigned char>((bits >> (8 * k)) & 0xff);
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw DataError("failed writing " + path.string());
}

Image read_pfm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::string magic;
    int w = 0, h = 0;
    double scale = 0.0;
    in >> magic >> w >> h >> scale;
    if (!in || (magic != "PF" && magic != "Pf") || w <= 0 || h <= 0 || scale == 0.0)
        throw DataError(path.string() + " has a malformed PFM header");
    in.get();
    const bool little = scale < 0.0;
    Image img(w, h, magic == "PF" ? 3 : 1);
    const std::size_t stride = static_cast<std::size_t>(w) * img.channels;
    std::vector<unsigned char> row(stride * 4);
    for (int y = h - 1; y >= 0; --y) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
        if (!in) throw DataError(path.string() + " is truncated");
        for (std::size_t i = 0; i < stride; ++i) {
            std::uint32_t bits = 0;
            for (int k = 0; k < 4; ++k) {
                const int shift = little ? 8 * k : 8 * (3 - k);
                bits |= static_cast<std::uint32_t>(row[i * 4 + k]) << shift;
            }
            img.data[y * stride + i] = std::bit_cast<float>(bits);
        }
    }
    return img;
}

}  // namespace nf
