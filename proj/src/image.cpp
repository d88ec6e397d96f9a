#include "poseloop/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

#include <png.h>

namespace poseloop {

namespace {

struct PngWriter {
    FILE* fp = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;

    PngWriter(const std::string& path, int width, int height, int bit_depth, int color_type) {
        fp = std::fopen(path.c_str(), "wb");
        if (!fp) throw std::runtime_error("cannot write " + path);
        png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        info = png_create_info_struct(png);
        if (setjmp(png_jmpbuf(png))) throw std::runtime_error("png write failed: " + path);
        png_init_io(png, fp);
        png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), bit_depth, color_type,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
    }
    void rows(std::vector<png_bytep>& r) {
        if (setjmp(png_jmpbuf(png))) throw std::runtime_error("png write failed");
        png_write_image(png, r.data());
        png_write_end(png, nullptr);
    }
    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, &info);
        if (fp) std::fclose(fp);
    }
};

struct PngReader {
    FILE* fp = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;
    int width = 0, height = 0, bit_depth = 0, color_type = 0;

    explicit PngReader(const std::string& path) {
        fp = std::fopen(path.c_str(), "rb");
        if (!fp) throw std::runtime_error("cannot read " + path);
        png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        info = png_create_info_struct(png);
        if (setjmp(png_jmpbuf(png))) throw std::runtime_error("png read failed: " + path);
        png_init_io(png, fp);
        png_read_info(png, info);
        width = int(png_get_image_width(png, info));
        height = int(png_get_image_height(png, info));
        bit_depth = png_get_bit_depth(png, info);
        color_type = png_get_color_type(png, info);
    }
    void rows(std::vector<png_bytep>& r) {
        if (setjmp(png_jmpbuf(png))) throw std::runtime_error("png read failed");
        png_read_image(png, r.data());
    }
    ~PngReader() {
        if (png) png_destroy_read_struct(&png, &info, nullptr);
        if (fp) std::fclose(fp);
    }
};

}  // namespace

void save_rgb_png(const RgbImage& img, const std::string& path) {
    std::vector<std::uint8_t> buf(std::size_t(img.width) * img.height * 3);
    for (int v = 0; v < img.height; ++v)
        for (int u = 0; u < img.width; ++u) {
            const auto& c = img.at(u, v);
            for (int k = 0; k < 3; ++k)
                buf[(std::size_t(v) * img.width + u) * 3 + k] =
                    std::uint8_t(std::lround(std::clamp(double(c[k]), 0.0, 1.0) * 255.0));
        }
    PngWriter w(path, img.width, img.height, 8, PNG_COLOR_TYPE_RGB);
    std::vector<png_bytep> rows(img.height);
    for (int v = 0; v < img.height; ++v) rows[v] = buf.data() + std::size_t(v) * img.width * 3;
    w.rows(rows);
}

RgbImage load_rgb_png(const std::string& path) {
    PngReader r(path);
    if (r.color_type != PNG_COLOR_TYPE_RGB || r.bit_depth != 8)
        throw std::runtime_error(path + " is not an 8-bit RGB png");
    std::vector<std::uint8_t> buf(std::size_t(r.width) * r.height * 3);
    std::vector<png_bytep> rows(r.height);
    for (int v = 0; v < r.height; ++v) rows[v] = buf.data() + std::size_t(v) * r.width * 3;
    r.rows(rows);
    RgbImage img(r.width, r.height);
    for (int v = 0; v < r.height; ++v)
        for (int u = 0; u < r.width; ++u)
            for (int k = 0; k < 3; ++k)
                img.at(u, v)[k] = buf[(std::size_t(v) * r.width + u) * 3 + k] / 255.0f;
    return img;
}

void save_depth_png(const DepthImage& img, const std::string& path) {
    std::vector<std::uint8_t> buf(std::size_t(img.width) * img.height * 2);
    for (int v = 0; v < img.height; ++v)
        for (int u = 0; u < img.width; ++u) {
            double mm = std::clamp(double(img.at(u, v)) * 1000.0, 0.0, 65535.0);
            auto q = std::uint16_t(std::lround(mm));
            buf[(std::size_t(v) * img.width + u) * 2 + 0] = std::uint8_t(q >> 8);
            buf[(std::size_t(v) * img.width + u) * 2 + 1] = std::uint8_t(q & 0xff);
        }
    PngWriter w(path, img.width, img.height, 16, PNG_COLOR_TYPE_GRAY);
    std::vector<png_bytep> rows(img.height);
    for (int v = 0; v < img.height; ++v) rows[v] = buf.data() + std::size_t(v) * img.width * 2;
    w.rows(rows);
}

DepthImage load_depth_png(const std::string& path) {
    PngReader r(path);
    if (r.color_type != PNG_COLOR_TYPE_GRAY || r.bit_depth != 16)
        throw std::runtime_error(path + " is not a 16-bit gray png");
    std::vector<std::uint8_t> buf(std::size_t(r.width) * r.height * 2);
    std::vector<png_bytep> rows(r.height);
    for (int v = 0; v < r.height; ++v) rows[v] = buf.data() + std::size_t(v) * r.width * 2;
    r.rows(rows);
    DepthImage img(r.width, r.height);
    for (int v = 0; v < r.height; ++v)
        for (int u = 0; u < r.width; ++u) {
            std::size_t i = (std::size_t(v) * r.width + u) * 2;
            auto q = std::uint16_t((buf[i] << 8) | buf[i + 1]);
            img.at(u, v) = float(q) / 1000.0f;
        }
    return img;
}

void save_mask_png(const MaskImage& img, const std::string& path) {
    PngWriter w(path, img.width, img.height, 8, PNG_COLOR_TYPE_GRAY);
    std::vector<png_bytep> rows(img.height);
    std::vector<std::uint8_t> buf(img.data.begin(), img.data.end());
    for (int v = 0; v < img.height; ++v) rows[v] = buf.data() + std::size_t(v) * img.width;
    w.rows(rows);
}

MaskImage load_mask_png(const std::string& path) {
    PngReader r(path);
    if (r.color_type != PNG_COLOR_TYPE_GRAY || r.bit_depth != 8)
        throw std::runtime_error(path + " is not an 8-bit gray png");
    MaskImage img(r.width, r.height);
    std::vector<png_bytep> rows(r.height);
    for (int v = 0; v < r.height; ++v)
        rows[v] = reinterpret_cast<png_bytep>(img.data.data()) + std::size_t(v) * r.width;
    r.rows(rows);
    return img;
}

CameraIntrinsics default_intrinsics(int width, int height) {
    CameraIntrinsics k;
    k.width = width;
    k.height = height;
    // ~60 deg horizontal fov
    k.fx = k.fy = 0.87 * width;
    k.cx = width / 2.0;
    k.cy = height / 2.0;
    return k;
}

}  // namespace poseloop
