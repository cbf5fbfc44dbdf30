// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0
#include "nff/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace nff {

namespace {

constexpr char kImageMagic[] = "nffimg1";
constexpr char kDepthMagic[] = "nffdep1";

void write_header(std::ofstream& out, const char* magic, int64_t width, int64_t height) {
    out.write(magic, 7);
    out.write(reinterpret_cast<const char*>(&width), sizeof width);
    out.write(reinterpret_cast<const char*>(&height), sizeof height);
}

void read_header(std::ifstream& in, const char* magic, const std::string& path, int64_t& width,
                 int64_t& height) {
    char got[7];
    in.read(got, 7);
    NFF_CHECK(in.good() && std::memcmp(got, magic, 7) == 0, ErrKind::data, path,
              ": bad file header");
    in.read(reinterpret_cast<char*>(&width), sizeof width);
    in.read(reinterpret_cast<char*>(&height), sizeof height);
    NFF_CHECK(in.good() && width > 0 && height > 0 && width < (1 << 20) && height < (1 << 20),
              ErrKind::data, path, ": implausible dimensions ", width, "x", height);
}

} // namespace

Image Image::create(int width, int height) {
    NFF_CHECK(width > 0 && height > 0, ErrKind::config, "image dimensions must be positive");
    Image img;
    img.width = width;
    img.height = height;
    img.rgb.assign(static_cast<size_t>(width) * static_cast<size_t>(height) * 3, 0.0);
    return img;
}

void save_image(const std::string& path, const Image& img) {
    NFF_CHECK(img.rgb.size() ==
                  static_cast<size_t>(img.width) * static_cast<size_t>(img.height) * 3,
              ErrKind::config, "image buffer does not match its dimensions");
    std::ofstream out(path, std::ios::binary);
    NFF_CHECK(out.good(), ErrKind::data, "cannot open ", path, " for writing");
    write_header(out, kImageMagic, img.width, img.height);
    out.write(reinterpret_cast<const char*>(img.rgb.data()),
              static_cast<std::streamsize>(sizeof(double) * img.rgb.size()));
    NFF_CHECK(out.good(), ErrKind::data, "failed writing ", path);
}

Image load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    NFF_CHECK(in.good(), ErrKind::data, "cannot open ", path);
    int64_t w = 0, h = 0;
    read_header(in, kImageMagic, path, w, h);
    Image img = Image::create(static_cast<int>(w), static_cast<int>(h));
    in.read(reinterpret_cast<char*>(img.rgb.data()),
            static_cast<std::streamsize>(sizeof(double) * img.rgb.size()));
    NFF_CHECK(in.good(), ErrKind::data, path, ": truncated image data");
    return img;
}

void save_depth(const std::string& path, const std::vector<double>& depth, int width,
                int height) {
    NFF_CHECK(depth.size() == static_cast<size_t>(width) * static_cast<size_t>(height),
              ErrKind::config, "depth buffer does not match its dimensions");
    std::ofstream out(path, std::ios::binary);
    NFF_CHECK(out.good(), ErrKind::data, "cannot open ", path, " for writing");
    write_header(out, kDepthMagic, width, height);
    out.write(reinterpret_cast<const char*>(depth.data()),
              static_cast<std::streamsize>(sizeof(double) * depth.size()));
    NFF_CHECK(out.good(), ErrKind::data, "failed writing ", path);
}

std::vector<double> load_depth(const std::string& path, int& width, int& height) {
    std::ifstream in(path, std::ios::binary);
    NFF_CHECK(in.good(), ErrKind::data, "cannot open ", path);
    int64_t w = 0, h = 0;
    read_header(in, kDepthMagic, path, w, h);
    std::vector<double> depth(static_cast<size_t>(w) * static_cast<size_t>(h));
    in.read(reinterpret_cast<char*>(depth.data()),
            static_cast<std::streamsize>(sizeof(double) * depth.size()));
    NFF_CHECK(in.good(), ErrKind::data, path, ": truncated depth data");
    width = static_cast<int>(w);
    height = static_cast<int>(h);
    return depth;
}

void save_png(const std::string& path, const Image& img) {
    NFF_CHECK(img.rgb.size() ==
                  static_cast<size_t>(img.width) * static_cast<size_t>(img.height) * 3,
              ErrKind::config, "image buffer does not match its dimensions");
    std::vector<uint8_t> bytes(img.rgb.size());
    for (size_t i = 0; i < img.rgb.size(); ++i) {
        const double v = std::min(1.0, std::max(0.0, img.rgb[i]));
        bytes[i] = static_cast<uint8_t>(std::lround(v * 255.0));
    }
    png_image pi;
    std::memset(&pi, 0, sizeof pi);
    pi.version = PNG_IMAGE_VERSION;
    pi.width = static_cast<png_uint_32>(img.width);
    pi.height = static_cast<png_uint_32>(img.height);
    pi.format = PNG_FORMAT_RGB;
    const int ok = png_image_write_to_file(&pi, path.c_str(), 0, bytes.data(), 0, nullptr);
    NFF_CHECK(ok != 0, ErrKind::data, "png write failed for ", path, ": ", pi.message);
}

Image load_png(const std::string& path) {
    png_image pi;
    std::memset(&pi, 0, sizeof pi);
    pi.version = PNG_IMAGE_VERSION;
    NFF_CHECK(png_image_begin_read_from_file(&pi, path.c_str()) != 0, ErrKind::data,
              "cannot read ", path, ": ", pi.message);
    pi.format = PNG_FORMAT_RGB;
    std::vector<uint8_t> bytes(PNG_IMAGE_SIZE(pi));
    if (png_image_finish_read(&pi, nullptr, bytes.data(), 0, nullptr) == 0) {
        const std::string msg = pi.message;
        png_image_free(&pi);
        NFF_CHECK(false, ErrKind::data, "png decode failed for ", path, ": ", msg);
    }
    Image img = Image::create(static_cast<int>(pi.width), static_cast<int>(pi.height));
    for (size_t i = 0; i < img.rgb.size(); ++i)
        img.rgb[i] = static_cast<double>(bytes[i]) / 255.0;
    return img;
}

} // namespace nff
