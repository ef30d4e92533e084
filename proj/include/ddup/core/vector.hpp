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

#include <cctype>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ddup/core/error.hpp"

namespace ddup {

namespace kernels {

// Reductions accumulate in four 8-lane vectors with a fixed combination order,
// so results are bit-reproducible without -ffast-math. GCC vector extensions
// keep the auto-vectorizer from reshuffling the lanes.

namespace detail {

template <typename Acc>
using Lanes8 [[gnu::vector_size(8 * sizeof(Acc))]] = Acc;

template <typename Acc, typename T>
inline Lanes8<Acc>
load8(const T* p) {
    Lanes8<Acc> v;
    for (size_t l = 0; l < 8; ++l) {
        v[l] = static_cast<Acc>(p[l]);
    }
    return v;
}

template <typename Acc>
inline Acc
hsum(Lanes8<Acc> s) {
    return ((s[0] + s[1]) + (s[2] + s[3])) + ((s[4] + s[5]) + (s[6] + s[7]));
}

}  // namespace detail

template <typename Acc, typename TA, typename TB>
inline Acc
dot(const TA* a, const TB* b, size_t n) {
    using detail::load8;
    detail::Lanes8<Acc> s0 = {}, s1 = {}, s2 = {}, s3 = {};
    size_t i = 0;
    for (; i + 32 <= n; i += 32) {
        s0 += load8<Acc>(a + i) * load8<Acc>(b + i);
        s1 += load8<Acc>(a + i + 8) * load8<Acc>(b + i + 8);
        s2 += load8<Acc>(a + i + 16) * load8<Acc>(b + i + 16);
        s3 += load8<Acc>(a + i + 24) * load8<Acc>(b + i + 24);
    }
    for (; i + 8 <= n; i += 8) {
        s0 += load8<Acc>(a + i) * load8<Acc>(b + i);
    }
    Acc r = detail::hsum<Acc>((s0 + s1) + (s2 + s3));
    for (size_t l = 0; l < 8 && i + l < n; ++l) {
        r += static_cast<Acc>(a[i + l]) * static_cast<Acc>(b[i + l]);
    }
    return r;
}

template <typename Acc, typename TA, typename TB>
inline Acc
l2_sq(const TA* a, const TB* b, size_t n) {
    using detail::load8;
    detail::Lanes8<Acc> s0 = {}, s1 = {}, s2 = {}, s3 = {};
    size_t i = 0;
    for (; i + 32 <= n; i += 32) {
        const auto d0 = load8<Acc>(a + i) - load8<Acc>(b + i);
        const auto d1 = load8<Acc>(a + i + 8) - load8<Acc>(b + i + 8);
        const auto d2 = load8<Acc>(a + i + 16) - load8<Acc>(b + i + 16);
        const auto d3 = load8<Acc>(a + i + 24) - load8<Acc>(b + i + 24);
        s0 += d0 * d0;
        s1 += d1 * d1;
        s2 += d2 * d2;
        s3 += d3 * d3;
    }
    for (; i + 8 <= n; i += 8) {
        const auto d = load8<Acc>(a + i) - load8<Acc>(b + i);
        s0 += d * d;
    }
    Acc r = detail::hsum<Acc>((s0 + s1) + (s2 + s3));
    for (size_t l = 0; l < 8 && i + l < n; ++l) {
        const Acc d = static_cast<Acc>(a[i + l]) - static_cast<Acc>(b[i + l]);
        r += d * d;
    }
    return r;
}

// y += alpha * x
template <typename T>
inline void
axpy(T alpha, const T* x, T* y, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

}  // namespace kernels

/// Fixed-dimension embedding of one modality of one product. Immutable; the
/// constructor rejects empty and non-finite input.
class EmbeddingVector {
public:
    explicit EmbeddingVector(std::vector<float> values) : values_(std::move(values)) {
        require(!values_.empty(), ErrorCode::kInvalidArgument, "embedding vector must be non-empty");
        for (float v : values_) {
            require(std::isfinite(v), ErrorCode::kNonFinite, "embedding vector has non-finite value");
        }
    }

    EmbeddingVector(std::initializer_list<float> values)
        : EmbeddingVector(std::vector<float>(values)) {
    }

    static EmbeddingVector
    zeros(size_t dim) {
        return EmbeddingVector(std::vector<float>(dim, 0.0F));
    }

    static EmbeddingVector
    from_span(std::span<const float> values) {
        return EmbeddingVector(std::vector<float>(values.begin(), values.end()));
    }

    size_t
    dim() const noexcept {
        return values_.size();
    }

    std::span<const float>
    values() const noexcept {
        return values_;
    }

    const float*
    data() const noexcept {
        return values_.data();
    }

    float
    operator[](size_t i) const {
        return values_[i];
    }

    bool
    operator==(const EmbeddingVector&) const = default;

private:
    std::vector<float> values_;
};

inline void
check_same_dim(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        fail(ErrorCode::kDimensionMismatch,
             "dimension mismatch: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
    }
}

inline double
l2_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
    check_same_dim(a, b);
    return std::sqrt(kernels::l2_sq<double>(a.data(), b.data(), a.dim()));
}

inline double
inner_product(const EmbeddingVector& a, const EmbeddingVector& b) {
    check_same_dim(a, b);
    return kernels::dot<double>(a.data(), b.data(), a.dim());
}

inline double
norm(const EmbeddingVector& v) {
    return std::sqrt(kernels::dot<double>(v.data(), v.data(), v.dim()));
}

inline EmbeddingVector
normalize(const EmbeddingVector& v) {
    const double n = norm(v);
    require(n > 0.0, ErrorCode::kZeroVector, "cannot normalize a zero vector");
    std::vector<float> out(v.dim());
    for (size_t i = 0; i < v.dim(); ++i) {
        out[i] = static_cast<float>(static_cast<double>(v[i]) / n);
    }
    return EmbeddingVector(std::move(out));
}

inline double
cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    check_same_dim(a, b);
    const double na = norm(a);
    const double nb = norm(b);
    require(na > 0.0 && nb > 0.0, ErrorCode::kZeroVector, "cosine of a zero vector");
    const double c = kernels::dot<double>(a.data(), b.data(), a.dim()) / (na * nb);
    return std::fmax(-1.0, std::fmin(1.0, c));
}

enum class Metric { kL2, kInnerProduct, kCosine };

inline std::string_view
to_string(Metric m) {
    switch (m) {
        case Metric::kL2:
            return "L2";
        case Metric::kInnerProduct:
            return "IP";
        case Metric::kCosine:
            return "COSINE";
    }
    return "?";
}

inline Metric
parse_metric(std::string_view s) {
    std::string up(s);
    for (auto& c : up) {
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    if (up == "L2") {
        return Metric::kL2;
    }
    if (up == "IP" || up == "INNER_PRODUCT" || up == "INNERPRODUCT") {
        return Metric::kInnerProduct;
    }
    if (up == "COSINE" || up == "COS") {
        return Metric::kCosine;
    }
    fail(ErrorCode::kInvalidArgument, "unknown metric: " + std::string(s));
}

/// L2 ranks ascending (distance); IP and Cosine rank descending (similarity).
constexpr bool
higher_is_better(Metric m) noexcept {
    return m != Metric::kL2;
}

}  // namespace ddup
