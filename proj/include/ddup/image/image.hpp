// Copyright 2026-present the ddup authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ddup/core/error.hpp"

namespace ddup {

/// 8-bit image, row-major, channels interleaved (1 = gray, 3 = RGB).
struct Image {
    size_t width = 0;
    size_t height = 0;
    size_t channels = 1;
    std::vector<uint8_t> pixels;

    static Image
    filled(size_t w, size_t h, size_t c, uint8_t value = 0) {
        require(w >= 1 && h >= 1, ErrorCode::kInvalidArgument, "image: dimensions must be positive");
        require(c == 1 || c == 3, ErrorCode::kInvalidArgument, "image: channels must be 1 or 3");
        return Image{w, h, c, std::vector<uint8_t>(w * h * c, value)};
    }

    void
    validate() const {
        require(width >= 1 && height >= 1, ErrorCode::kInvalidArgument, "image: dimensions must be positive");
        require(channels == 1 || channels == 3, ErrorCode::kInvalidArgument, "image: channels must be 1 or 3");
        require(pixels.size() == width * height * channels, ErrorCode::kInvalidArgument,
                "image: pixel buffer has " + std::to_string(pixels.size()) + " bytes, expected " +
                    std::to_string(width * height * channels));
    }

    uint8_t&
    at(size_t x, size_t y, size_t c = 0) {
        return pixels[(y * width + x) * channels + c];
    }

    uint8_t
    at(size_t x, size_t y, size_t c = 0) const {
        return pixels[(y * width + x) * channels + c];
    }

    bool
    operator==(const Image&) const = default;
};

/// Inclusive pixel rectangle.
struct BoundingBox {
    size_t x_min = 0;
    size_t y_min = 0;
    size_t x_max = 0;
    size_t y_max = 0;

    size_t
    width() const noexcept {
        return x_max - x_min + 1;
    }

    size_t
    height() const noexcept {
        return y_max - y_min + 1;
    }

    bool
    operator==(const BoundingBox&) const = default;
};

inline uint8_t
round_pixel(double v) {
    return static_cast<uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

/// ITU-R 601 luma, unrounded.
inline double
gray_value(const Image& img, size_t x, size_t y) {
    if (img.channels == 1) {
        return img.at(x, y);
    }
    return 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
}

inline Image
to_gray(const Image& img) {
    img.validate();
    if (img.channels == 1) {
        return img;
    }
    Image out = Image::filled(img.width, img.height, 1);
    for (size_t y = 0; y < img.height; ++y) {
        for (size_t x = 0; x < img.width; ++x) {
            out.at(x, y) = round_pixel(gray_value(img, x, y));
        }
    }
    return out;
}

/// Bilinear resampling with pixel centres aligned (x_src = (x + 0.5) * sw / dw - 0.5,
/// clamped at the borders); results rounded half up.
inline Image
resize(const Image& img, size_t new_w, size_t new_h) {
    img.validate();
    require(new_w >= 1 && new_h >= 1, ErrorCode::kInvalidArgument, "resize: target dimensions must be positive");
    Image out = Image::filled(new_w, new_h, img.channels);
    const double sx = static_cast<double>(img.width) / static_cast<double>(new_w);
    const double sy = static_cast<double>(img.height) / static_cast<double>(new_h);
    auto coord = [](size_t i, double scale, size_t src_len, size_t& i0, size_t& i1, double& f) {
        const double s = std::clamp((static_cast<double>(i) + 0.5) * scale - 0.5, 0.0,
                                    static_cast<double>(src_len - 1));
        i0 = static_cast<size_t>(std::floor(s));
        i1 = std::min(i0 + 1, src_len - 1);
        f = s - static_cast<double>(i0);
    };
    for (size_t y = 0; y < new_h; ++y) {
        size_t y0, y1;
        double fy;
        coord(y, sy, img.height, y0, y1, fy);
        for (size_t x = 0; x < new_w; ++x) {
            size_t x0, x1;
            double fx;
            coord(x, sx, img.width, x0, x1, fx);
            for (size_t c = 0; c < img.channels; ++c) {
                const double top = (1 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
                const double bottom = (1 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
                out.at(x, y, c) = round_pixel((1 - fy) * top + fy * bottom);
            }
        }
    }
    return out;
}

inline Image
crop(const Image& img, const BoundingBox& box) {
    img.validate();
    require(box.x_min <= box.x_max && box.y_min <= box.y_max && box.x_max < img.width && box.y_max < img.height,
            ErrorCode::kInvalidArgument, "crop: box outside image");
    Image out = Image::filled(box.width(), box.height(), img.channels);
    const size_t row = box.width() * img.channels;
    for (size_t y = 0; y < box.height(); ++y) {
        const auto src = img.pixels.begin() +
                         static_cast<std::ptrdiff_t>(((box.y_min + y) * img.width + box.x_min) * img.channels);
        std::copy(src, src + static_cast<std::ptrdiff_t>(row),
                  out.pixels.begin() + static_cast<std::ptrdiff_t>(y * row));
    }
    return out;
}

/// Copies `src` into `dst` with its top-left corner at (x, y); must fit.
inline void
paste(Image& dst, const Image& src, size_t x, size_t y) {
    require(src.channels == dst.channels, ErrorCode::kInvalidArgument, "paste: channel count differs");
    require(x + src.width <= dst.width && y + src.height <= dst.height, ErrorCode::kInvalidArgument,
            "paste: source does not fit");
    const size_t row = src.width * src.channels;
    for (size_t r = 0; r < src.height; ++r) {
        std::copy(src.pixels.begin() + static_cast<std::ptrdiff_t>(r * row),
                  src.pixels.begin() + static_cast<std::ptrdiff_t>((r + 1) * row),
                  dst.pixels.begin() + static_cast<std::ptrdiff_t>(((y + r) * dst.width + x) * dst.channels));
    }
}

}  // namespace ddup
