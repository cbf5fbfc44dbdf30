// Copyright Contributors to the nff Project
// SPDX-License-Identifier: Apache-2.0

// RGB images as row-major double planes in [0,1], with a lossless binary
// format for training data and 8-bit PNG export for inspection.

#pragma once

#include <string>
#include <vector>

#include "nff/common.hpp"

namespace nff {

struct Image {
    int width = 0, height = 0;
    std::vector<double> rgb; // height*width*3, row-major

    static Image create(int width, int height);

    double& at(int y, int x, int c) {
        return rgb[(static_cast<size_t>(y) * static_cast<size_t>(width) +
                    static_cast<size_t>(x)) *
                       3 +
                   static_cast<size_t>(c)];
    }
    double at(int y, int x, int c) const {
        return rgb[(static_cast<size_t>(y) * static_cast<size_t>(width) +
                    static_cast<size_t>(x)) *
                       3 +
                   static_cast<size_t>(c)];
    }
};

// Lossless binary image/depth files (little-endian doubles).
void save_image(const std::string& path, const Image& img);
Image load_image(const std::string& path);
void save_depth(const std::string& path, const std::vector<double>& depth, int width, int height);
std::vector<double> load_depth(const std::string& path, int& width, int& height);

// 8-bit RGB PNG; values clamped to [0,1].
void save_png(const std::string& path, const Image& img);
Image load_png(const std::string& path);

} // namespace nff
