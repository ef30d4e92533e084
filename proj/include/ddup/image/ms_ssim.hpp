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
#include <string>
#include <vector>

#include "ddup/image/image.hpp"

namespace ddup {

namespace detail {

struct Plane {
    size_t w = 0;
    size_t h = 0;
    std::vector<double> v;
};

inline Plane
gray_plane(const Image& img) {
    Plane p{img.width, img.height, std::vector<double>(img.width * img.height)};
    for (size_t y = 0; y < img.height; ++y) {
        for (size_t x = 0; x < img.width; ++x) {
            p.v[y * img.width + x] = gray_value(img, x, y);
        }
    }
    return p;
}

inline constexpr size_t kSsimWindow = 11;

inline std::array<double, kSsimWindow>
gaussian_window(double sigma) {
    std::array<double, kSsimWindow> g;
    double sum = 0.0;
    for (size_t i = 0; i < kSsimWindow; ++i) {
        const double d = static_cast<double>(i) - 5.0;
        g[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += g[i];
    }
    for (auto& x : g) {
        x /= sum;
    }
    return g;
}

// Separable "valid" filtering: output is (w - 10) x (h - 10).
inline Plane
filter_valid(const Plane& in, const std::array<double, kSsimWindow>& g) {
    const size_t ow = in.w - kSsimWindow + 1;
    const size_t oh = in.h - kSsimWindow + 1;
    std::vector<double> rows(ow * in.h);
    for (size_t y = 0; y < in.h; ++y) {
        const double* src = &in.v[y * in.w];
        for (size_t x = 0; x < ow; ++x) {
            double s = 0.0;
            for (size_t k = 0; k < kSsimWindow; ++k) {
                s += g[k] * src[x + k];
            }
            rows[y * ow + x] = s;
        }
    }
    Plane out{ow, oh, std::vector<double>(ow * oh)};
    for (size_t y = 0; y < oh; ++y) {
        for (size_t x = 0; x < ow; ++x) {
            double s = 0.0;
            for (size_t k = 0; k < kSsimWindow; ++k) {
                s += g[k] * rows[(y + k) * ow + x];
            }
            out.v[y * ow + x] = s;
        }
    }
    return out;
}

inline Plane
product(const Plane& a, const Plane& b) {
    Plane p{a.w, a.h, std::vector<double>(a.v.size())};
    for (size_t i = 0; i < a.v.size(); ++i) {
        p.v[i] = a.v[i] * b.v[i];
    }
    return p;
}

// 2x2 box average, dimensions floored.
inline Plane
downsample(const Plane& in) {
    Plane out{in.w / 2, in.h / 2, {}};
    out.v.resize(out.w * out.h);
    for (size_t y = 0; y < out.h; ++y) {
        for (size_t x = 0; x < out.w; ++x) {
            const size_t i = 2 * y * in.w + 2 * x;
            out.v[y * out.w + x] = 0.25 * (in.v[i] + in.v[i + 1] + in.v[i + in.w] + in.v[i + in.w + 1]);
        }
    }
    return out;
}

struct SsimTerms {
    double ssim = 0.0;  // mean of luminance * contrast-structure
    double cs = 0.0;    // mean of contrast-structure
};

inline SsimTerms
ssim_terms(const Plane& x, const Plane& y) {
    constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
    constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);
    const auto g = gaussian_window(1.5);
    const Plane mx = filter_valid(x, g);
    const Plane my = filter_valid(y, g);
    const Plane sxx = filter_valid(product(x, x), g);
    const Plane syy = filter_valid(product(y, y), g);
    const Plane sxy = filter_valid(product(x, y), g);
    SsimTerms t;
    const size_t n = mx.v.size();
    for (size_t i = 0; i < n; ++i) {
        const double m1 = mx.v[i];
        const double m2 = my.v[i];
        const double v1 = sxx.v[i] - m1 * m1;
        const double v2 = syy.v[i] - m2 * m2;
        const double c12 = sxy.v[i] - m1 * m2;
        const double cs = (2.0 * c12 + kC2) / (v1 + v2 + kC2);
        const double l = (2.0 * m1 * m2 + kC1) / (m1 * m1 + m2 * m2 + kC1);
        t.cs += cs;
        t.ssim += l * cs;
    }
    t.cs /= static_cast<double>(n);
    t.ssim /= static_cast<double>(n);
    return t;
}

}  // namespace detail

inline constexpr std::array<double, 5> kMsSsimWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

inline size_t
ms_ssim_min_side(size_t num_scales) {
    return detail::kSsimWindow << (num_scales - 1);
}

/// Multi-scale SSIM on luma with dynamic range 255. Contrast-structure terms
/// come from every scale, luminance from the coarsest; negative terms are
/// clamped to 0. Fewer than five scales use the leading weights renormalised
/// to sum to one.
inline double
ms_ssim(const Image& a, const Image& b, size_t num_scales = 5) {
    a.validate();
    b.validate();
    require(a.width == b.width && a.height == b.height, ErrorCode::kDimensionMismatch,
            "ms_ssim: image dimensions differ");
    require(num_scales >= 1 && num_scales <= kMsSsimWeights.size(), ErrorCode::kInvalidArgument,
            "ms_ssim: num_scales must be in [1, 5]");
    const size_t min_side = ms_ssim_min_side(num_scales);
    require(std::min(a.width, a.height) >= min_side, ErrorCode::kInvalidArgument,
            "ms_ssim: images must be at least " + std::to_string(min_side) + " pixels on each side for " +
                std::to_string(num_scales) + " scales");
    double wsum = 0.0;
    for (size_t s = 0; s < num_scales; ++s) {
        wsum += kMsSsimWeights[s];
    }
    detail::Plane x = detail::gray_plane(a);
    detail::Plane y = detail::gray_plane(b);
    double result = 1.0;
    for (size_t s = 0; s < num_scales; ++s) {
        const auto t = detail::ssim_terms(x, y);
        const double w = kMsSsimWeights[s] / wsum;
        const double term = s + 1 < num_scales ? t.cs : t.ssim;
        result *= std::pow(std::max(term, 0.0), w);
        if (s + 1 < num_scales) {
            x = detail::downsample(x);
            y = detail::downsample(y);
        }
    }
    return std::clamp(result, 0.0, 1.0);
}

/// Single-scale mean SSIM.
inline double
ssim(const Image& a, const Image& b) {
    a.validate();
    b.validate();
    require(a.width == b.width && a.height == b.height, ErrorCode::kDimensionMismatch,
            "ssim: image dimensions differ");
    require(std::min(a.width, a.height) >= detail::kSsimWindow, ErrorCode::kInvalidArgument,
            "ssim: images must be at least 11 pixels on each side");
    return detail::ssim_terms(detail::gray_plane(a), detail::gray_plane(b)).ssim;
}

}  // namespace ddup
