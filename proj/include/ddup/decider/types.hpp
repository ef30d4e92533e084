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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ddup/core/error.hpp"
#include "ddup/core/product.hpp"
#include "ddup/core/vector.hpp"

namespace ddup {

enum class Label : uint8_t { kNotMatch = 0, kMatch = 1 };

inline std::string_view
to_string(Label l) {
    return l == Label::kMatch ? "match" : "not_match";
}

/// Two products, each described by a text and an image vector.
struct PairSample {
    EmbeddingVector text_a;
    EmbeddingVector image_a;
    EmbeddingVector text_b;
    EmbeddingVector image_b;
    Label label = Label::kNotMatch;
    bool image_present_a = true;
    bool image_present_b = true;
};

/// Builds a sample from two catalog records; a missing image becomes the zero
/// vector with its presence flag cleared.
inline PairSample
make_pair_sample(const ProductRecord& a, const ProductRecord& b, size_t image_dim, Label label = Label::kNotMatch) {
    auto image_or_zero = [&](const ProductRecord& r) {
        return r.image_vec ? *r.image_vec : EmbeddingVector::zeros(image_dim);
    };
    return PairSample{a.text_vec,   image_or_zero(a), b.text_vec, image_or_zero(b), label,
                      a.image_vec.has_value(), b.image_vec.has_value()};
}

struct DeciderConfig {
    size_t text_dim = 128;
    size_t image_dim = 128;
    // Append a per-channel image-present flag after the concatenated vectors.
    bool presence_flag = true;
    size_t conv_filters = 16;
    size_t kernel_size = 3;
    std::vector<size_t> hidden_dims = {256, 64};
    double dropout_rate = 0.2;
    uint64_t seed = 0;

    size_t
    channel_length() const noexcept {
        return text_dim + image_dim + (presence_flag ? 1 : 0);
    }

    size_t
    input_size() const noexcept {
        return 2 * channel_length();
    }

    void
    validate() const {
        require(text_dim >= 1 && image_dim >= 1, ErrorCode::kInvalidArgument, "decider: vector dims must be positive");
        require(conv_filters >= 1, ErrorCode::kInvalidArgument, "decider: conv_filters must be positive");
        require(kernel_size >= 1 && kernel_size % 2 == 1, ErrorCode::kInvalidArgument,
                "decider: kernel_size must be odd and positive");
        for (size_t h : hidden_dims) {
            require(h >= 1, ErrorCode::kInvalidArgument, "decider: hidden dims must be positive");
        }
        require(dropout_rate >= 0.0 && dropout_rate < 1.0, ErrorCode::kInvalidArgument,
                "decider: dropout_rate must be in [0, 1)");
    }

    bool
    operator==(const DeciderConfig&) const = default;
};

/// Two channels, one per product: row 0 = text_a ++ image_a, row 1 = text_b ++ image_b.
struct PairInput {
    size_t length = 0;
    std::vector<float> values;  // 2 x length, channel-major

    float
    at(size_t channel, size_t i) const {
        return values[channel * length + i];
    }
};

inline void
check_sample_dims(const PairSample& s) {
    require(s.text_a.dim() == s.text_b.dim(), ErrorCode::kDimensionMismatch, "pair sample: text dims differ");
    require(s.image_a.dim() == s.image_b.dim(), ErrorCode::kDimensionMismatch, "pair sample: image dims differ");
}

inline PairInput
assemble_input(const PairSample& s) {
    check_sample_dims(s);
    PairInput in;
    in.length = s.text_a.dim() + s.image_a.dim();
    in.values.reserve(2 * in.length);
    for (const auto* v : {&s.text_a, &s.image_a, &s.text_b, &s.image_b}) {
        in.values.insert(in.values.end(), v->values().begin(), v->values().end());
    }
    return in;
}

/// Writes the network input for `s` (config.input_size() values) to `out`.
template <typename T>
inline void
write_model_input(const PairSample& s, const DeciderConfig& cfg, T* out) {
    check_sample_dims(s);
    require(s.text_a.dim() == cfg.text_dim && s.image_a.dim() == cfg.image_dim, ErrorCode::kDimensionMismatch,
            "decider input: sample dims (" + std::to_string(s.text_a.dim()) + ", " + std::to_string(s.image_a.dim()) +
                ") do not match model (" + std::to_string(cfg.text_dim) + ", " + std::to_string(cfg.image_dim) + ")");
    const size_t len = cfg.channel_length();
    auto put = [&](size_t channel, const EmbeddingVector& text, const EmbeddingVector& image, bool present) {
        T* row = out + channel * len;
        for (size_t i = 0; i < cfg.text_dim; ++i) {
            row[i] = static_cast<T>(text[i]);
        }
        for (size_t i = 0; i < cfg.image_dim; ++i) {
            row[cfg.text_dim + i] = static_cast<T>(image[i]);
        }
        if (cfg.presence_flag) {
            row[len - 1] = present ? T(1) : T(0);
        }
    };
    put(0, s.text_a, s.image_a, s.image_present_a);
    put(1, s.text_b, s.image_b, s.image_present_b);
}

template <typename T>
inline std::vector<T>
make_model_inputs(std::span<const PairSample> samples, const DeciderConfig& cfg) {
    std::vector<T> out(samples.size() * cfg.input_size());
    for (size_t i = 0; i < samples.size(); ++i) {
        write_model_input(samples[i], cfg, &out[i * cfg.input_size()]);
    }
    return out;
}

}  // namespace ddup
