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
#include <span>
#include <string>
#include <vector>

#include "ddup/core/error.hpp"
#include "ddup/core/vector.hpp"
#include "ddup/pca/symmetric_eigen.hpp"

namespace ddup {

/// Linear projection from source_dim to target_dim: z = components * (v - mean).
///
/// Components are the leading eigenvectors of the 1/(n-1) sample covariance,
/// ordered by descending eigenvalue, with each row's largest-magnitude entry
/// forced positive so refits on the same data are bit-identical.
class PcaModel {
public:
    PcaModel(EmbeddingVector mean, std::vector<float> components, std::vector<float> explained_variance)
        : mean_(std::move(mean)),
          components_(std::move(components)),
          explained_variance_(std::move(explained_variance)) {
        const size_t k = explained_variance_.size();
        require(k >= 1 && k <= mean_.dim(), ErrorCode::kInvalidArgument, "pca: target dim must be in [1, source dim]");
        require(components_.size() == k * mean_.dim(), ErrorCode::kDimensionMismatch,
                "pca: component matrix does not match target x source dims");
        for (float c : components_) {
            require(std::isfinite(c), ErrorCode::kNonFinite, "pca: non-finite component");
        }
        for (size_t i = 0; i < k; ++i) {
            require(explained_variance_[i] >= 0.0F, ErrorCode::kInvalidArgument, "pca: negative variance");
            if (i > 0) {
                require(explained_variance_[i] <= explained_variance_[i - 1], ErrorCode::kInvalidArgument,
                        "pca: explained variance must be nonincreasing");
            }
        }
    }

    /// Fits on n row-major rows of dimension d.
    static PcaModel
    fit(std::span<const float> data, size_t n, size_t d, size_t k) {
        require(d >= 1 && data.size() == n * d, ErrorCode::kDimensionMismatch, "pca fit: data is not n x d");
        require(n >= 2, ErrorCode::kInvalidArgument, "pca fit: need at least two rows");
        require(k >= 1 && k <= std::min(n, d), ErrorCode::kInvalidArgument,
                "pca fit: target dim " + std::to_string(k) + " exceeds min(n, d) = " + std::to_string(std::min(n, d)));
        for (float x : data) {
            require(std::isfinite(x), ErrorCode::kNonFinite, "pca fit: non-finite input");
        }

        std::vector<double> mean(d, 0.0);
        for (size_t r = 0; r < n; ++r) {
            const float* row = &data[r * d];
            for (size_t j = 0; j < d; ++j) {
                mean[j] += row[j];
            }
        }
        for (auto& m : mean) {
            m /= static_cast<double>(n);
        }

        // Upper triangle of sum of outer products of centred rows.
        std::vector<double> cov(d * d, 0.0);
        std::vector<double> c(d);
        for (size_t r = 0; r < n; ++r) {
            const float* row = &data[r * d];
            for (size_t j = 0; j < d; ++j) {
                c[j] = static_cast<double>(row[j]) - mean[j];
            }
            for (size_t i = 0; i < d; ++i) {
                kernels::axpy(c[i], &c[i], &cov[i * d + i], d - i);
            }
        }
        double trace = 0.0;
        const double denom = static_cast<double>(n - 1);
        for (size_t i = 0; i < d; ++i) {
            for (size_t j = i; j < d; ++j) {
                cov[i * d + j] /= denom;
            }
            trace += cov[i * d + i];
        }
        require(trace > 0.0, ErrorCode::kInvalidArgument, "pca fit: degenerate data (all rows identical)");

        SymmetricEigen eig = symmetric_eigen(std::move(cov), d);

        std::vector<float> components(k * d);
        std::vector<float> variance(k);
        for (size_t i = 0; i < k; ++i) {
            const double* vec = &eig.vectors[i * d];
            size_t arg = 0;
            for (size_t j = 1; j < d; ++j) {
                if (std::abs(vec[j]) > std::abs(vec[arg])) {
                    arg = j;
                }
            }
            const double sign = vec[arg] < 0.0 ? -1.0 : 1.0;
            for (size_t j = 0; j < d; ++j) {
                components[i * d + j] = static_cast<float>(sign * vec[j]);
            }
            variance[i] = static_cast<float>(std::max(0.0, eig.values[i]));
        }
        // Rounding to float can break the ordering between near-equal values.
        for (size_t i = 1; i < k; ++i) {
            variance[i] = std::min(variance[i], variance[i - 1]);
        }

        std::vector<float> mean_f(d);
        std::transform(mean.begin(), mean.end(), mean_f.begin(), [](double m) { return static_cast<float>(m); });
        return PcaModel(EmbeddingVector(std::move(mean_f)), std::move(components), std::move(variance));
    }

    static PcaModel
    fit(std::span<const EmbeddingVector> rows, size_t k) {
        require(!rows.empty(), ErrorCode::kInvalidArgument, "pca fit: no data");
        const size_t d = rows.front().dim();
        std::vector<float> flat;
        flat.reserve(rows.size() * d);
        for (const auto& r : rows) {
            require(r.dim() == d, ErrorCode::kDimensionMismatch, "pca fit: rows have differing dims");
            flat.insert(flat.end(), r.values().begin(), r.values().end());
        }
        return fit(flat, rows.size(), d, k);
    }

    size_t
    source_dim() const noexcept {
        return mean_.dim();
    }

    size_t
    target_dim() const noexcept {
        return explained_variance_.size();
    }

    const EmbeddingVector&
    mean() const noexcept {
        return mean_;
    }

    /// k x d row-major.
    std::span<const float>
    components() const noexcept {
        return components_;
    }

    std::span<const float>
    component(size_t i) const {
        return std::span<const float>(components_).subspan(i * source_dim(), source_dim());
    }

    std::span<const float>
    explained_variance() const noexcept {
        return explained_variance_;
    }

    EmbeddingVector
    transform(const EmbeddingVector& v) const {
        check_source(v.dim());
        const size_t d = source_dim();
        std::vector<double> centred(d);
        for (size_t j = 0; j < d; ++j) {
            centred[j] = static_cast<double>(v[j]) - static_cast<double>(mean_[j]);
        }
        std::vector<float> out(target_dim());
        for (size_t i = 0; i < target_dim(); ++i) {
            out[i] = static_cast<float>(kernels::dot<double>(&components_[i * d], centred.data(), d));
        }
        return EmbeddingVector(std::move(out));
    }

    EmbeddingVector
    inverse_transform(const EmbeddingVector& z) const {
        require(z.dim() == target_dim(), ErrorCode::kDimensionMismatch,
                "pca inverse: expected dim " + std::to_string(target_dim()) + ", got " + std::to_string(z.dim()));
        const size_t d = source_dim();
        std::vector<double> acc(mean_.values().begin(), mean_.values().end());
        for (size_t i = 0; i < target_dim(); ++i) {
            const double zi = z[i];
            const float* row = &components_[i * d];
            for (size_t j = 0; j < d; ++j) {
                acc[j] += zi * static_cast<double>(row[j]);
            }
        }
        std::vector<float> out(d);
        std::transform(acc.begin(), acc.end(), out.begin(), [](double x) { return static_cast<float>(x); });
        return EmbeddingVector(std::move(out));
    }

    /// Mean squared L2 distance between each row and its round trip.
    double
    reconstruction_error(std::span<const EmbeddingVector> rows) const {
        require(!rows.empty(), ErrorCode::kInvalidArgument, "reconstruction_error: empty data");
        double total = 0.0;
        for (const auto& r : rows) {
            const EmbeddingVector back = inverse_transform(transform(r));
            total += kernels::l2_sq<double>(r.data(), back.data(), r.dim());
        }
        return total / static_cast<double>(rows.size());
    }

    bool
    operator==(const PcaModel&) const = default;

private:
    void
    check_source(size_t dim) const {
        require(dim == source_dim(), ErrorCode::kDimensionMismatch,
                "pca transform: expected dim " + std::to_string(source_dim()) + ", got " + std::to_string(dim));
    }

    EmbeddingVector mean_;
    std::vector<float> components_;
    std::vector<float> explained_variance_;
};

}  // namespace ddup
