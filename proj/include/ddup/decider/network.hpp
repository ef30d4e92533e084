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
#include <thread>
#include <vector>

#include "ddup/core/random.hpp"
#include "ddup/core/vector.hpp"
#include "ddup/decider/model.hpp"

namespace ddup {

enum class Mode { kEval, kTrain };

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kProbabilityFloor = 1e-12;

/// Activations kept by forward() for backward(). Layouts are sample-major.
template <typename T>
struct ForwardCache {
    size_t batch = 0;
    Mode mode = Mode::kEval;
    std::vector<T> input;                // B x 2 x L
    std::vector<T> xhat;                 // B x F x L, normalised conv output
    std::vector<T> inv_std;              // B
    std::vector<T> act;                  // B x F x L, after scale/shift and ReLU
    std::vector<std::vector<T>> hidden;  // per hidden layer: B x width, after ReLU and dropout
    std::vector<std::vector<T>> keep;    // per hidden layer dropout multipliers (train mode only)
    std::vector<T> logits;               // B x 2
    std::vector<T> probs;                // B x 2

    T
    match_probability(size_t b) const {
        return probs[2 * b + 1];
    }
};

namespace detail {

template <typename T>
inline void
check_model(const DeciderModel<T>& m) {
    require(m.consistent(), ErrorCode::kInvalidArgument, "decider: parameter shapes disagree with config");
    require(m.params.all_finite(), ErrorCode::kNonFinite, "decider: non-finite parameters");
}

// y[b] = x[b] W + bias. Zero inputs (ReLU, dropout) are skipped.
template <typename T>
inline void
dense_forward(const DenseLayer<T>& d, const T* x, size_t batch, T* y) {
    for (size_t b = 0; b < batch; ++b) {
        std::copy(d.bias.begin(), d.bias.end(), y + b * d.out);
    }
    for (size_t i = 0; i < d.in; ++i) {
        const T* w = d.weight.data() + i * d.out;
        for (size_t b = 0; b < batch; ++b) {
            const T xi = x[b * d.in + i];
            if (xi != T(0)) {
                kernels::axpy(xi, w, y + b * d.out, d.out);
            }
        }
    }
}

template <typename T>
inline void
dense_backward(const DenseLayer<T>& d, const T* x, const T* dy, size_t batch, DenseLayer<T>& g, T* dx) {
    for (size_t b = 0; b < batch; ++b) {
        for (size_t o = 0; o < d.out; ++o) {
            g.bias[o] += dy[b * d.out + o];
        }
    }
    for (size_t i = 0; i < d.in; ++i) {
        const T* w = d.weight.data() + i * d.out;
        T* gw = g.weight.data() + i * d.out;
        for (size_t b = 0; b < batch; ++b) {
            const T xi = x[b * d.in + i];
            const T* dyb = dy + b * d.out;
            // Every dense input comes out of a ReLU, so its gradient is only
            // consumed where the input is positive.
            if (xi != T(0)) {
                kernels::axpy(xi, dyb, gw, d.out);
                if (dx != nullptr) {
                    dx[b * d.in + i] = kernels::dot<T>(w, dyb, d.out);
                }
            }
        }
    }
}

}  // namespace detail

/// Runs the network on `batch` inputs laid out back to back (config.input_size()
/// values each). Train mode needs `rng` for dropout.
template <typename T>
ForwardCache<T>
forward(const DeciderModel<T>& model, std::span<const T> inputs, size_t batch, Mode mode = Mode::kEval,
        Rng* rng = nullptr) {
    detail::check_model(model);
    const auto& cfg = model.config;
    const auto& p = model.params;
    const size_t len = cfg.channel_length();
    const size_t nf = cfg.conv_filters;
    const size_t ks = cfg.kernel_size;
    const size_t pad = ks / 2;
    const size_t feat = nf * len;
    require(batch >= 1, ErrorCode::kInvalidArgument, "decider forward: empty batch");
    require(inputs.size() == batch * cfg.input_size(), ErrorCode::kDimensionMismatch,
            "decider forward: expected " + std::to_string(batch * cfg.input_size()) + " input values, got " +
                std::to_string(inputs.size()));
    const bool dropout = mode == Mode::kTrain && cfg.dropout_rate > 0.0;
    require(!dropout || rng != nullptr, ErrorCode::kInvalidArgument, "decider forward: train mode needs an rng");

    ForwardCache<T> c;
    c.batch = batch;
    c.mode = mode;
    c.input.assign(inputs.begin(), inputs.end());
    c.xhat.assign(batch * feat, T(0));
    c.inv_std.resize(batch);
    c.act.resize(batch * feat);

    for (size_t b = 0; b < batch; ++b) {
        const T* in = c.input.data() + b * 2 * len;
        T* y = c.xhat.data() + b * feat;
        for (size_t f = 0; f < nf; ++f) {
            T* yf = y + f * len;
            std::fill(yf, yf + len, p.conv_bias[f]);
            for (size_t ch = 0; ch < 2; ++ch) {
                const T* x = in + ch * len;
                for (size_t k = 0; k < ks; ++k) {
                    const T w = p.conv_weight[(f * 2 + ch) * ks + k];
                    // output t reads x[t + k - pad]
                    const size_t t0 = k < pad ? pad - k : 0;
                    const size_t t1 = k > pad ? len - (k - pad) : len;
                    if (t1 > t0) {
                        kernels::axpy(w, x + t0 + k - pad, yf + t0, t1 - t0);
                    }
                }
            }
        }
        double mean = 0.0;
        for (size_t i = 0; i < feat; ++i) {
            mean += y[i];
        }
        mean /= static_cast<double>(feat);
        double var = 0.0;
        for (size_t i = 0; i < feat; ++i) {
            const double d = y[i] - mean;
            var += d * d;
        }
        var /= static_cast<double>(feat);
        const T inv = static_cast<T>(1.0 / std::sqrt(var + kLayerNormEps));
        c.inv_std[b] = inv;
        const T mu = static_cast<T>(mean);
        T* a = c.act.data() + b * feat;
        for (size_t f = 0; f < nf; ++f) {
            for (size_t t = 0; t < len; ++t) {
                const size_t i = f * len + t;
                y[i] = (y[i] - mu) * inv;
                a[i] = std::max(T(0), p.norm_scale[f] * y[i] + p.norm_shift[f]);
            }
        }
    }

    const size_t n_hidden = cfg.hidden_dims.size();
    c.hidden.resize(n_hidden);
    c.keep.resize(n_hidden);
    const T* x = c.act.data();
    const T scale = dropout ? static_cast<T>(1.0 / (1.0 - cfg.dropout_rate)) : T(1);
    for (size_t l = 0; l < n_hidden; ++l) {
        const auto& d = p.dense[l];
        auto& h = c.hidden[l];
        h.resize(batch * d.out);
        detail::dense_forward(d, x, batch, h.data());
        for (auto& v : h) {
            v = std::max(T(0), v);
        }
        if (dropout) {
            auto& keep = c.keep[l];
            keep.resize(h.size());
            for (size_t i = 0; i < h.size(); ++i) {
                keep[i] = rng->uniform() >= cfg.dropout_rate ? scale : T(0);
                h[i] *= keep[i];
            }
        }
        x = h.data();
    }

    c.logits.resize(batch * 2);
    detail::dense_forward(p.dense.back(), x, batch, c.logits.data());
    c.probs.resize(batch * 2);
    for (size_t b = 0; b < batch; ++b) {
        const T l0 = c.logits[2 * b];
        const T l1 = c.logits[2 * b + 1];
        const T m = std::max(l0, l1);
        const T e0 = std::exp(l0 - m);
        const T e1 = std::exp(l1 - m);
        const T s = e0 + e1;
        c.probs[2 * b] = e0 / s;
        c.probs[2 * b + 1] = e1 / s;
        require(std::isfinite(c.probs[2 * b]) && std::isfinite(c.probs[2 * b + 1]), ErrorCode::kNonFinite,
                "decider forward: non-finite output");
    }
    return c;
}

/// Mean of -log p[label] with p clamped to [1e-12, 1]. `probs` holds one
/// (NotMatch, Match) pair per label.
template <typename T>
double
cross_entropy_loss(std::span<const T> probs, std::span<const Label> labels) {
    require(!labels.empty(), ErrorCode::kInvalidArgument, "cross entropy: empty batch");
    require(probs.size() == 2 * labels.size(), ErrorCode::kDimensionMismatch,
            "cross entropy: " + std::to_string(probs.size()) + " probabilities for " + std::to_string(labels.size()) +
                " labels");
    double sum = 0.0;
    for (size_t b = 0; b < labels.size(); ++b) {
        const double pl = static_cast<double>(probs[2 * b + static_cast<size_t>(labels[b])]);
        sum -= std::log(std::clamp(pl, kProbabilityFloor, 1.0));
    }
    return sum / static_cast<double>(labels.size());
}

/// Gradient of the mean cross-entropy loss of the batch in `cache`.
template <typename T>
DeciderParams<T>
backward(const DeciderModel<T>& model, const ForwardCache<T>& c, std::span<const Label> labels) {
    const auto& cfg = model.config;
    const auto& p = model.params;
    require(labels.size() == c.batch && c.batch >= 1, ErrorCode::kDimensionMismatch,
            "decider backward: label count does not match forward batch");
    require(c.input.size() == c.batch * cfg.input_size(), ErrorCode::kDimensionMismatch,
            "decider backward: cache does not belong to this model");
    const size_t batch = c.batch;
    const size_t len = cfg.channel_length();
    const size_t nf = cfg.conv_filters;
    const size_t ks = cfg.kernel_size;
    const size_t pad = ks / 2;
    const size_t feat = nf * len;
    const size_t n_hidden = cfg.hidden_dims.size();

    DeciderParams<T> g = p.zeros_like();

    std::vector<T> dy(batch * 2);
    const T inv_b = static_cast<T>(1.0 / static_cast<double>(batch));
    for (size_t b = 0; b < batch; ++b) {
        const size_t lab = static_cast<size_t>(labels[b]);
        if (static_cast<double>(c.probs[2 * b + lab]) < kProbabilityFloor) {
            continue;  // clamped: loss is locally constant
        }
        for (size_t j = 0; j < 2; ++j) {
            dy[2 * b + j] = (c.probs[2 * b + j] - (j == lab ? T(1) : T(0))) * inv_b;
        }
    }

    std::vector<T> dx;
    for (size_t l = n_hidden + 1; l-- > 0;) {
        const auto& d = p.dense[l];
        const T* x = l == 0 ? c.act.data() : c.hidden[l - 1].data();
        dx.assign(batch * d.in, T(0));
        detail::dense_backward(d, x, dy.data(), batch, g.dense[l], dx.data());
        if (l > 0) {
            // through dropout and ReLU of hidden layer l-1
            const auto& h = c.hidden[l - 1];
            const auto& keep = c.keep[l - 1];
            for (size_t i = 0; i < dx.size(); ++i) {
                dx[i] = h[i] > T(0) ? dx[i] * (keep.empty() ? T(1) : keep[i]) : T(0);
            }
        }
        dy.swap(dx);
    }

    // dy now holds d loss / d act, B x F x L
    std::vector<T> dxhat(feat);
    for (size_t b = 0; b < batch; ++b) {
        const T* a = c.act.data() + b * feat;
        const T* xh = c.xhat.data() + b * feat;
        const T* da = dy.data() + b * feat;
        double s1 = 0.0;
        double s2 = 0.0;
        for (size_t f = 0; f < nf; ++f) {
            T gs = 0;
            T gb = 0;
            for (size_t t = 0; t < len; ++t) {
                const size_t i = f * len + t;
                const T dpre = a[i] > T(0) ? da[i] : T(0);
                gs += dpre * xh[i];
                gb += dpre;
                dxhat[i] = dpre * p.norm_scale[f];
                s1 += dxhat[i];
                s2 += static_cast<double>(dxhat[i]) * xh[i];
            }
            g.norm_scale[f] += gs;
            g.norm_shift[f] += gb;
        }
        const T m1 = static_cast<T>(s1 / static_cast<double>(feat));
        const T m2 = static_cast<T>(s2 / static_cast<double>(feat));
        const T inv = c.inv_std[b];
        for (size_t i = 0; i < feat; ++i) {
            dxhat[i] = inv * (dxhat[i] - m1 - xh[i] * m2);
        }
        const T* in = c.input.data() + b * 2 * len;
        for (size_t f = 0; f < nf; ++f) {
            const T* dz = dxhat.data() + f * len;
            T gb = 0;
            for (size_t t = 0; t < len; ++t) {
                gb += dz[t];
            }
            g.conv_bias[f] += gb;
            for (size_t ch = 0; ch < 2; ++ch) {
                const T* x = in + ch * len;
                for (size_t k = 0; k < ks; ++k) {
                    const size_t t0 = k < pad ? pad - k : 0;
                    const size_t t1 = k > pad ? len - (k - pad) : len;
                    if (t1 > t0) {
                        g.conv_weight[(f * 2 + ch) * ks + k] += kernels::dot<T>(dz + t0, x + t0 + k - pad, t1 - t0);
                    }
                }
            }
        }
    }
    require(g.all_finite(), ErrorCode::kNonFinite, "decider backward: non-finite gradient");
    return g;
}

/// Match probability for every sample, evaluated in eval mode. Work is split
/// over `threads` disjoint slices.
template <typename T>
std::vector<double>
match_probabilities(const DeciderModel<T>& model, std::span<const PairSample> samples, size_t threads = 1,
                    size_t batch_size = 64) {
    std::vector<double> out(samples.size());
    if (samples.empty()) {
        return out;
    }
    detail::check_model(model);
    batch_size = std::max<size_t>(batch_size, 1);
    const size_t n_batches = (samples.size() + batch_size - 1) / batch_size;
    threads = std::clamp<size_t>(threads, 1, n_batches);
    auto run = [&](size_t first_batch, size_t last_batch) {
        for (size_t bi = first_batch; bi < last_batch; ++bi) {
            const size_t lo = bi * batch_size;
            const size_t hi = std::min(samples.size(), lo + batch_size);
            const auto inputs = make_model_inputs<T>(samples.subspan(lo, hi - lo), model.config);
            const auto c = forward(model, std::span<const T>(inputs), hi - lo);
            for (size_t i = lo; i < hi; ++i) {
                out[i] = static_cast<double>(c.match_probability(i - lo));
            }
        }
    };
    if (threads == 1) {
        run(0, n_batches);
        return out;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (size_t t = 0; t < threads; ++t) {
        const size_t lo = n_batches * t / threads;
        const size_t hi = n_batches * (t + 1) / threads;
        pool.emplace_back([&, t, lo, hi] {
            try {
                run(lo, hi);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return out;
}

}  // namespace ddup
