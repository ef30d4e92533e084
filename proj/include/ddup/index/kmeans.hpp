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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "ddup/core/error.hpp"
#include "ddup/core/random.hpp"
#include "ddup/core/vector.hpp"

namespace ddup {

struct KMeansOptions {
    size_t k = 1;
    size_t max_iters = 25;
    uint64_t seed = 0;
    // Renormalise centroids to unit length after every update (for data that
    // lives on the unit sphere and is searched by inner product).
    bool spherical = false;
};

struct KMeansResult {
    size_t k = 0;
    size_t dim = 0;
    std::vector<float> centroids;  // k x dim
    std::vector<uint32_t> assignment;
    size_t iterations = 0;
};

namespace detail {

inline uint32_t
nearest_l2(const float* x, const std::vector<float>& centroids, size_t k, size_t dim, double* out_dist) {
    uint32_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < k; ++c) {
        const double d = kernels::l2_sq<double>(x, &centroids[c * dim], dim);
        if (d < best_d) {
            best_d = d;
            best = static_cast<uint32_t>(c);
        }
    }
    if (out_dist != nullptr) {
        *out_dist = best_d;
    }
    return best;
}

}  // namespace detail

/// Lloyd's algorithm from k-means++ seeding.
///
/// Stops after max_iters or once an assignment pass changes nothing. Clusters
/// that end up empty are reseeded with the point farthest from its centroid,
/// so every centroid owns at least one point when n >= k.
inline KMeansResult
kmeans_fit(std::span<const float> data, size_t n, size_t dim, const KMeansOptions& opt) {
    require(dim >= 1 && data.size() == n * dim, ErrorCode::kDimensionMismatch, "kmeans: data is not n x dim");
    require(opt.k >= 1, ErrorCode::kInvalidArgument, "kmeans: k must be >= 1");
    require(n >= opt.k, ErrorCode::kInvalidArgument,
            "kmeans: fewer points (" + std::to_string(n) + ") than clusters (" + std::to_string(opt.k) + ")");
    const size_t k = opt.k;
    Rng rng(opt.seed);

    KMeansResult res;
    res.k = k;
    res.dim = dim;
    res.centroids.resize(k * dim);
    res.assignment.assign(n, 0);

    auto row = [&](size_t i) { return &data[i * dim]; };
    auto set_centroid = [&](size_t c, size_t i) { std::copy_n(row(i), dim, &res.centroids[c * dim]); };

    // k-means++ seeding.
    std::vector<double> d2(n);
    std::vector<char> chosen(n, 0);
    size_t first = rng.uniform_int(n);
    set_centroid(0, first);
    chosen[first] = 1;
    for (size_t i = 0; i < n; ++i) {
        d2[i] = kernels::l2_sq<double>(row(i), row(first), dim);
    }
    for (size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (double v : d2) {
            total += v;
        }
        size_t pick = n;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double cum = 0.0;
            size_t last_positive = n;
            for (size_t i = 0; i < n; ++i) {
                if (d2[i] <= 0.0) {
                    continue;
                }
                last_positive = i;
                cum += d2[i];
                if (cum > target) {
                    pick = i;
                    break;
                }
            }
            if (pick == n) {
                pick = last_positive;
            }
        }
        if (pick == n) {
            // Fewer distinct points than clusters; take the next unused row and
            // let the empty-cluster pass sort it out.
            for (size_t i = 0; i < n; ++i) {
                if (!chosen[i]) {
                    pick = i;
                    break;
                }
            }
        }
        chosen[pick] = 1;
        set_centroid(c, pick);
        for (size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], kernels::l2_sq<double>(row(i), row(pick), dim));
        }
    }
    if (opt.spherical) {
        for (size_t c = 0; c < k; ++c) {
            float* cen = &res.centroids[c * dim];
            const double nrm = std::sqrt(kernels::dot<double>(cen, cen, dim));
            if (nrm > 0.0) {
                for (size_t j = 0; j < dim; ++j) {
                    cen[j] = static_cast<float>(cen[j] / nrm);
                }
            }
        }
    }

    std::vector<double> sums(k * dim);
    std::vector<size_t> counts(k);
    std::vector<double> dist(n);
    for (size_t iter = 0; iter < opt.max_iters; ++iter) {
        size_t changed = 0;
        for (size_t i = 0; i < n; ++i) {
            const uint32_t a = detail::nearest_l2(row(i), res.centroids, k, dim, &dist[i]);
            if (iter == 0 || a != res.assignment[i]) {
                ++changed;
            }
            res.assignment[i] = a;
        }
        res.iterations = iter + 1;
        if (iter > 0 && changed == 0) {
            break;
        }

        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), size_t{0});
        for (size_t i = 0; i < n; ++i) {
            const size_t c = res.assignment[i];
            ++counts[c];
            double* s = &sums[c * dim];
            const float* x = row(i);
            for (size_t j = 0; j < dim; ++j) {
                s[j] += x[j];
            }
        }

        for (size_t e = 0; e < k; ++e) {
            if (counts[e] != 0) {
                continue;
            }
            size_t far = n;
            for (size_t i = 0; i < n; ++i) {
                if (counts[res.assignment[i]] >= 2 && (far == n || dist[i] > dist[far])) {
                    far = i;
                }
            }
            if (far == n) {
                break;
            }
            const size_t donor = res.assignment[far];
            const float* x = row(far);
            for (size_t j = 0; j < dim; ++j) {
                sums[donor * dim + j] -= x[j];
                sums[e * dim + j] = x[j];
            }
            --counts[donor];
            counts[e] = 1;
            res.assignment[far] = static_cast<uint32_t>(e);
            dist[far] = 0.0;
        }

        for (size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                continue;
            }
            float* cen = &res.centroids[c * dim];
            const double inv = 1.0 / static_cast<double>(counts[c]);
            double nrm2 = 0.0;
            for (size_t j = 0; j < dim; ++j) {
                const double v = sums[c * dim + j] * inv;
                nrm2 += v * v;
                cen[j] = static_cast<float>(v);
            }
            if (opt.spherical && nrm2 > 0.0) {
                const double nrm = std::sqrt(nrm2);
                for (size_t j = 0; j < dim; ++j) {
                    cen[j] = static_cast<float>(sums[c * dim + j] * inv / nrm);
                }
            }
        }
    }
    return res;
}

inline std::vector<EmbeddingVector>
kmeans_fit(std::span<const EmbeddingVector> vectors, size_t k, size_t max_iters, uint64_t seed) {
    require(!vectors.empty(), ErrorCode::kInvalidArgument, "kmeans: no input vectors");
    const size_t dim = vectors.front().dim();
    std::vector<float> flat;
    flat.reserve(vectors.size() * dim);
    for (const auto& v : vectors) {
        require(v.dim() == dim, ErrorCode::kDimensionMismatch, "kmeans: vectors have differing dims");
        flat.insert(flat.end(), v.values().begin(), v.values().end());
    }
    KMeansOptions opt;
    opt.k = k;
    opt.max_iters = max_iters;
    opt.seed = seed;
    const KMeansResult res = kmeans_fit(flat, vectors.size(), dim, opt);
    std::vector<EmbeddingVector> out;
    out.reserve(k);
    for (size_t c = 0; c < k; ++c) {
        out.push_back(EmbeddingVector::from_span(std::span<const float>(res.centroids).subspan(c * dim, dim)));
    }
    return out;
}

}  // namespace ddup
