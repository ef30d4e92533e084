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

// Scalar reference MS-SSIM: direct 11x11 window sums, no separable filtering.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ddup/image/image.hpp"

namespace oracle {

struct GrayGrid {
    int w = 0;
    int h = 0;
    std::vector<double> px;

    double
    at(int x, int y) const {
        return px[static_cast<size_t>(y * w + x)];
    }
};

inline GrayGrid
luma(const ddup::Image& img) {
    GrayGrid g{static_cast<int>(img.width), static_cast<int>(img.height), {}};
    for (size_t i = 0; i < img.width * img.height; ++i) {
        if (img.channels == 1) {
            g.px.push_back(img.pixels[i]);
        } else {
            const uint8_t* p = &img.pixels[3 * i];
            g.px.push_back(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
        }
    }
    return g;
}

inline GrayGrid
halve(const GrayGrid& g) {
    GrayGrid o{g.w / 2, g.h / 2, {}};
    for (int y = 0; y < o.h; ++y) {
        for (int x = 0; x < o.w; ++x) {
            o.px.push_back((g.at(2 * x, 2 * y) + g.at(2 * x + 1, 2 * y) + g.at(2 * x, 2 * y + 1) +
                            g.at(2 * x + 1, 2 * y + 1)) /
                           4.0);
        }
    }
    return o;
}

/// Mean (ssim, cs) over all fully contained 11x11 windows.
inline std::pair<double, double>
ssim_cs(const GrayGrid& a, const GrayGrid& b) {
    double w2[11][11];
    double total = 0.0;
    for (int i = 0; i < 11; ++i) {
        for (int j = 0; j < 11; ++j) {
            w2[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
            total += w2[i][j];
        }
    }
    const double c1 = 6.5025;   // (0.01 * 255)^2
    const double c2 = 58.5225;  // (0.03 * 255)^2
    double ssim_sum = 0.0, cs_sum = 0.0;
    int count = 0;
    for (int y = 0; y + 11 <= a.h; ++y) {
        for (int x = 0; x + 11 <= a.w; ++x) {
            double ma = 0, mb = 0, aa = 0, bb = 0, ab = 0;
            for (int i = 0; i < 11; ++i) {
                for (int j = 0; j < 11; ++j) {
                    const double wt = w2[i][j] / total;
                    const double pa = a.at(x + j, y + i);
                    const double pb = b.at(x + j, y + i);
                    ma += wt * pa;
                    mb += wt * pb;
                    aa += wt * pa * pa;
                    bb += wt * pb * pb;
                    ab += wt * pa * pb;
                }
            }
            const double va = aa - ma * ma, vb = bb - mb * mb, cov = ab - ma * mb;
            const double cs = (2 * cov + c2) / (va + vb + c2);
            ssim_sum += (2 * ma * mb + c1) / (ma * ma + mb * mb + c1) * cs;
            cs_sum += cs;
            ++count;
        }
    }
    return {ssim_sum / count, cs_sum / count};
}

inline double
ms_ssim(const ddup::Image& a, const ddup::Image& b, int scales = 5) {
    const double weights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
    double wsum = 0.0;
    for (int s = 0; s < scales; ++s) {
        wsum += weights[s];
    }
    GrayGrid ga = luma(a), gb = luma(b);
    double out = 1.0;
    for (int s = 0; s < scales; ++s) {
        const auto [ss, cs] = ssim_cs(ga, gb);
        const double v = s == scales - 1 ? ss : cs;
        out *= std::pow(std::max(0.0, v), weights[s] / wsum);
        ga = halve(ga);
        gb = halve(gb);
    }
    return out;
}

}  // namespace oracle
