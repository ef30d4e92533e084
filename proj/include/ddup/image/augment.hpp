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
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>

#include "ddup/core/random.hpp"
#include "ddup/image/image.hpp"

namespace ddup {

inline constexpr double kDefaultBackgroundTolerance = 10.0 / 255.0;

struct Background {
    uint8_t gray = 0;              // rounded luma
    std::array<uint8_t, 3> color;  // RGB (all equal for gray images)
};

/// Most frequent rounded corner gray value; ties resolve in the order
/// top-left, top-right, bottom-left, bottom-right.
inline Background
detect_background(const Image& img) {
    img.validate();
    const std::array<std::array<size_t, 2>, 4> corners = {
        {{0, 0}, {img.width - 1, 0}, {0, img.height - 1}, {img.width - 1, img.height - 1}}};
    std::array<uint8_t, 4> gray;
    for (size_t i = 0; i < 4; ++i) {
        gray[i] = round_pixel(gray_value(img, corners[i][0], corners[i][1]));
    }
    size_t best = 0;
    size_t best_count = 0;
    for (size_t i = 0; i < 4; ++i) {
        const auto count = static_cast<size_t>(std::count(gray.begin(), gray.end(), gray[i]));
        if (count > best_count) {
            best = i;
            best_count = count;
        }
    }
    Background bg;
    bg.gray = gray[best];
    for (size_t c = 0; c < 3; ++c) {
        bg.color[c] = img.at(corners[best][0], corners[best][1], img.channels == 3 ? c : 0);
    }
    return bg;
}

/// Tight box around pixels whose gray value differs from the background by
/// more than tolerance * 255. The full image when there are none.
inline BoundingBox
content_bbox(const Image& img, double tolerance = kDefaultBackgroundTolerance) {
    const Background bg = detect_background(img);
    const double limit = tolerance * 255.0;
    bool any = false;
    BoundingBox box{img.width, img.height, 0, 0};
    for (size_t y = 0; y < img.height; ++y) {
        for (size_t x = 0; x < img.width; ++x) {
            if (std::abs(gray_value(img, x, y) - bg.gray) > limit) {
                any = true;
                box.x_min = std::min(box.x_min, x);
                box.y_min = std::min(box.y_min, y);
                box.x_max = std::max(box.x_max, x);
                box.y_max = std::max(box.y_max, y);
            }
        }
    }
    if (!any) {
        return BoundingBox{0, 0, img.width - 1, img.height - 1};
    }
    return box;
}

struct ScaleAugmentOptions {
    double apply_threshold = 0.3;
    double scale_min = 0.6;
    double scale_max = 1.0;
    double background_tolerance = kDefaultBackgroundTolerance;

    void
    validate() const {
        require(apply_threshold >= 0.0 && apply_threshold <= 1.0, ErrorCode::kInvalidArgument,
                "scale_augment: apply_threshold must be in [0, 1]");
        require(scale_min > 0.0 && scale_min <= scale_max && scale_max <= 1.0, ErrorCode::kInvalidArgument,
                "scale_augment: scale range must satisfy 0 < min <= max <= 1");
    }
};

/// Where and how large the object was placed, for callers that need it.
struct AugmentTrace {
    bool applied = false;
    double u = 0.0;
    double factor = 1.0;  // fraction of the maximal fit
    BoundingBox source;
    BoundingBox placed;
};

/// With probability apply_threshold, crops the content box, rescales it to a
/// random fraction of the largest size that fits, and centres it on a canvas
/// of the original size filled with the background colour.
inline Image
scale_augment(const Image& img, uint64_t seed, const ScaleAugmentOptions& opt = {}, AugmentTrace* trace = nullptr) {
    img.validate();
    opt.validate();
    Rng rng(seed);
    AugmentTrace t;
    t.u = rng.uniform();
    if (t.u >= opt.apply_threshold) {
        if (trace) {
            *trace = t;
        }
        return img;
    }
    t.applied = true;
    t.factor = rng.uniform(opt.scale_min, opt.scale_max);
    const Background bg = detect_background(img);
    t.source = content_bbox(img, opt.background_tolerance);
    const double bw = static_cast<double>(t.source.width());
    const double bh = static_cast<double>(t.source.height());
    const double fit = std::min(static_cast<double>(img.width) / bw, static_cast<double>(img.height) / bh);
    const double s = fit * t.factor;
    const auto nw = static_cast<size_t>(std::min(std::floor(bw * s + 0.5), static_cast<double>(img.width)));
    const auto nh = static_cast<size_t>(std::min(std::floor(bh * s + 0.5), static_cast<double>(img.height)));
    require(nw >= 1 && nh >= 1, ErrorCode::kInvalidArgument, "scale_augment: content box shrinks below one pixel");

    Image out = Image::filled(img.width, img.height, img.channels);
    for (size_t i = 0; i < img.width * img.height; ++i) {
        for (size_t c = 0; c < img.channels; ++c) {
            out.pixels[i * img.channels + c] = bg.color[c];
        }
    }
    const Image object = resize(crop(img, t.source), nw, nh);
    const size_t x0 = (img.width - nw) / 2;
    const size_t y0 = (img.height - nh) / 2;
    paste(out, object, x0, y0);
    t.placed = BoundingBox{x0, y0, x0 + nw - 1, y0 + nh - 1};
    if (trace) {
        *trace = t;
    }
    return out;
}

}  // namespace ddup
