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

// Test-only reference implementations. Deliberately naive: plain scalar loops
// in double, no shared code with the library kernels.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

inline std::vector<float>
to_vec(std::span<const float> v) {
    return {v.begin(), v.end()};
}

inline double
l2(const std::vector<float>& a, const std::vector<float>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += d * d;
    }
    return std::sqrt(s);
}

inline double
dot(const std::vector<float>& a, const std::vector<float>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return s;
}

inline double
cosine(const std::vector<float>& a, const std::vector<float>& b) {
    return dot(a, b) / std::sqrt(dot(a, a) * dot(b, b));
}

inline std::vector<float>
random_vector(std::mt19937_64& gen, size_t dim, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    std::vector<float> v(dim);
    for (auto& x : v) {
        x = static_cast<float>(nd(gen));
    }
    return v;
}

/// Exhaustive top-n over raw rows; returns (score, index) best-first with
/// ties on ascending id. `larger_better` selects similarity ordering.
inline std::vector<std::pair<double, std::string>>
scan_top_n(const std::vector<std::vector<float>>& rows, const std::vector<std::string>& ids,
           const std::vector<float>& q, size_t n, bool use_l2) {
    std::vector<std::pair<double, std::string>> all;
    for (size_t i = 0; i < rows.size(); ++i) {
        all.emplace_back(use_l2 ? l2(rows[i], q) : -dot(rows[i], q), ids[i]);
    }
    std::sort(all.begin(), all.end());
    all.resize(std::min(n, all.size()));
    return all;
}

/// Eigenvalues of a symmetric 3x3 matrix via the trigonometric solution of
/// its characteristic polynomial, descending.
inline std::vector<double>
eig3_values(const double a[3][3]) {
    const double p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    const double q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    const double p2 = (a[0][0] - q) * (a[0][0] - q) + (a[1][1] - q) * (a[1][1] - q) + (a[2][2] - q) * (a[2][2] - q) +
                      2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    double b[3][3];
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            b[i][j] = (a[i][j] - (i == j ? q : 0.0)) / p;
        }
    }
    const double detb = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) -
                        b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0]) +
                        b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    const double r = std::clamp(detb / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double pi = std::acos(-1.0);
    const double e1 = q + 2.0 * p * std::cos(phi);
    const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * pi / 3.0);
    const double e2 = 3.0 * q - e1 - e3;
    return {e1, e2, e3};
}

/// Unit eigenvector for eigenvalue `lambda` by inverse iteration on (A - shift I).
inline std::vector<double>
eig3_vector(const double a[3][3], double lambda) {
    double m[3][3];
    const double shift = lambda + 1e-10;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            m[i][j] = a[i][j] - (i == j ? shift : 0.0);
        }
    }
    std::vector<double> v = {1.0, 0.7, 0.3};
    for (int it = 0; it < 50; ++it) {
        // Solve m x = v by Cramer's rule.
        const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        std::vector<double> x(3);
        for (int c = 0; c < 3; ++c) {
            double t[3][3];
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    t[i][j] = (j == c) ? v[i] : m[i][j];
                }
            }
            x[c] = (t[0][0] * (t[1][1] * t[2][2] - t[1][2] * t[2][1]) - t[0][1] * (t[1][0] * t[2][2] - t[1][2] * t[2][0]) +
                    t[0][2] * (t[1][0] * t[2][1] - t[1][1] * t[2][0])) /
                   det;
        }
        const double n = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        for (int i = 0; i < 3; ++i) {
            v[i] = x[i] / n;
        }
    }
    return v;
}

}  // namespace oracle
