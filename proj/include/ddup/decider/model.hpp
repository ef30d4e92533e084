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
#include <string>
#include <vector>

#include "ddup/core/random.hpp"
#include "ddup/decider/types.hpp"

namespace ddup {

/// Fully connected layer, y = x W + b with W stored in x out (row per input).
template <typename T>
struct DenseLayer {
    size_t in = 0;
    size_t out = 0;
    std::vector<T> weight;
    std::vector<T> bias;

    bool
    operator==(const DenseLayer&) const = default;
};

/// Parameters of the pair classifier:
///   conv1d(2 -> F, kernel K, same padding) -> layer norm (per-filter scale and
///   shift) -> ReLU -> flatten -> [dense -> ReLU -> dropout]* -> dense(2) -> softmax
/// Gradients use the same layout.
template <typename T>
struct DeciderParams {
    std::vector<T> conv_weight;  // F x 2 x K
    std::vector<T> conv_bias;    // F
    std::vector<T> norm_scale;   // F
    std::vector<T> norm_shift;   // F
    std::vector<DenseLayer<T>> dense;

    /// Every tensor in a fixed order; serialisation and the optimiser rely on it.
    std::vector<std::vector<T>*>
    tensors() {
        std::vector<std::vector<T>*> out = {&conv_weight, &conv_bias, &norm_scale, &norm_shift};
        for (auto& d : dense) {
            out.push_back(&d.weight);
            out.push_back(&d.bias);
        }
        return out;
    }

    std::vector<const std::vector<T>*>
    tensors() const {
        std::vector<const std::vector<T>*> out = {&conv_weight, &conv_bias, &norm_scale, &norm_shift};
        for (const auto& d : dense) {
            out.push_back(&d.weight);
            out.push_back(&d.bias);
        }
        return out;
    }

    std::vector<std::string>
    tensor_names() const {
        std::vector<std::string> out = {"conv.weight", "conv.bias", "norm.scale", "norm.shift"};
        for (size_t i = 0; i < dense.size(); ++i) {
            out.push_back("dense" + std::to_string(i) + ".weight");
            out.push_back("dense" + std::to_string(i) + ".bias");
        }
        return out;
    }

    size_t
    parameter_count() const {
        size_t n = 0;
        for (const auto* t : tensors()) {
            n += t->size();
        }
        return n;
    }

    DeciderParams
    zeros_like() const {
        DeciderParams z = *this;
        for (auto* t : z.tensors()) {
            std::fill(t->begin(), t->end(), T(0));
        }
        return z;
    }

    bool
    all_finite() const {
        for (const auto* t : tensors()) {
            for (T x : *t) {
                if (!std::isfinite(x)) {
                    return false;
                }
            }
        }
        return true;
    }

    bool
    operator==(const DeciderParams&) const = default;
};

template <typename T>
struct DeciderModel {
    DeciderConfig config;
    DeciderParams<T> params;
    bool trained = false;

    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases; unit
    /// scale and zero shift for the normalisation.
    static DeciderModel
    init(const DeciderConfig& cfg) {
        cfg.validate();
        DeciderModel m;
        m.config = cfg;
        Rng rng(cfg.seed);
        auto fill = [&](std::vector<T>& v, size_t n, double bound) {
            v.resize(n);
            for (auto& x : v) {
                x = static_cast<T>(rng.uniform(-bound, bound));
            }
        };
        const size_t f = cfg.conv_filters;
        const double conv_bound = 1.0 / std::sqrt(static_cast<double>(2 * cfg.kernel_size));
        fill(m.params.conv_weight, f * 2 * cfg.kernel_size, conv_bound);
        fill(m.params.conv_bias, f, conv_bound);
        m.params.norm_scale.assign(f, T(1));
        m.params.norm_shift.assign(f, T(0));

        size_t in = f * cfg.channel_length();
        std::vector<size_t> outs = cfg.hidden_dims;
        outs.push_back(2);
        for (size_t out : outs) {
            DenseLayer<T> layer;
            layer.in = in;
            layer.out = out;
            const double bound = 1.0 / std::sqrt(static_cast<double>(in));
            fill(layer.weight, in * out, bound);
            fill(layer.bias, out, bound);
            m.params.dense.push_back(std::move(layer));
            in = out;
        }
        return m;
    }

    template <typename U>
    DeciderModel<U>
    cast() const {
        DeciderModel<U> m;
        m.config = config;
        m.trained = trained;
        auto conv = [](const std::vector<T>& v) { return std::vector<U>(v.begin(), v.end()); };
        m.params.conv_weight = conv(params.conv_weight);
        m.params.conv_bias = conv(params.conv_bias);
        m.params.norm_scale = conv(params.norm_scale);
        m.params.norm_shift = conv(params.norm_shift);
        for (const auto& d : params.dense) {
            m.params.dense.push_back({d.in, d.out, conv(d.weight), conv(d.bias)});
        }
        return m;
    }

    /// Shapes agree with the config.
    bool
    consistent() const {
        const size_t f = config.conv_filters;
        if (params.conv_weight.size() != f * 2 * config.kernel_size || params.conv_bias.size() != f ||
            params.norm_scale.size() != f || params.norm_shift.size() != f ||
            params.dense.size() != config.hidden_dims.size() + 1) {
            return false;
        }
        size_t in = f * config.channel_length();
        for (size_t i = 0; i < params.dense.size(); ++i) {
            const auto& d = params.dense[i];
            const size_t out = i < config.hidden_dims.size() ? config.hidden_dims[i] : 2;
            if (d.in != in || d.out != out || d.weight.size() != in * out || d.bias.size() != out) {
                return false;
            }
            in = out;
        }
        return true;
    }

    bool
    operator==(const DeciderModel&) const = default;
};

}  // namespace ddup
