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
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>

#include "ddup/decider/model.hpp"

namespace ddup {

enum class SchedulerKind { kReduceOnPlateau, kCosine };

struct TrainConfig {
    double learning_rate = 1e-4;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    size_t batch_size = 64;
    size_t max_epochs = 20;
    SchedulerKind scheduler = SchedulerKind::kReduceOnPlateau;
    double plateau_factor = 0.5;
    size_t plateau_patience = 3;
    double min_learning_rate = 0.0;
    uint64_t seed = 0;

    void
    validate() const {
        require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorCode::kInvalidArgument,
                "train config: learning_rate must be positive");
        require(weight_decay >= 0.0, ErrorCode::kInvalidArgument, "train config: weight_decay must be >= 0");
        require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, ErrorCode::kInvalidArgument,
                "train config: betas must be in [0, 1)");
        require(eps > 0.0, ErrorCode::kInvalidArgument, "train config: eps must be positive");
        require(batch_size >= 1, ErrorCode::kInvalidArgument, "train config: batch_size must be positive");
        require(max_epochs >= 1, ErrorCode::kInvalidArgument, "train config: max_epochs must be positive");
        require(plateau_factor >= 0.0 && plateau_factor < 1.0, ErrorCode::kInvalidArgument,
                "train config: plateau factor must be in [0, 1)");
        require(min_learning_rate >= 0.0 && min_learning_rate <= learning_rate, ErrorCode::kInvalidArgument,
                "train config: min_learning_rate must be in [0, learning_rate]");
    }
};

namespace detail {

// Exponent-bits test; unlike std::isfinite it vectorizes inside reductions.
inline bool
non_finite(float x) {
    return (std::bit_cast<uint32_t>(x) & 0x7f800000u) == 0x7f800000u;
}

inline bool
non_finite(double x) {
    return (std::bit_cast<uint64_t>(x) & 0x7ff0000000000000ull) == 0x7ff0000000000000ull;
}

}  // namespace detail

template <typename T>
struct AdamWState {
    size_t step = 0;
    DeciderParams<T> m;
    DeciderParams<T> v;
    // Reused output buffers; swapped with the live tensors after each step.
    std::vector<std::vector<T>> scratch;
};

/// One AdamW update with the given learning rate. Weight decay is applied to
/// the parameters directly, before the moment-based step.
template <typename T>
void
adamw_step(DeciderParams<T>& params, const DeciderParams<T>& grads, AdamWState<T>& state, const TrainConfig& cfg,
           double lr) {
    auto p = params.tensors();
    const auto g = grads.tensors();
    if (state.step == 0) {
        state.m = params.zeros_like();
        state.v = params.zeros_like();
    }
    auto m = state.m.tensors();
    auto v = state.v.tensors();
    require(g.size() == p.size() && m.size() == p.size() && v.size() == p.size(), ErrorCode::kDimensionMismatch,
            "adamw: tensor count mismatch");
    for (size_t t = 0; t < p.size(); ++t) {
        require(g[t]->size() == p[t]->size() && m[t]->size() == p[t]->size() && v[t]->size() == p[t]->size(),
                ErrorCode::kDimensionMismatch, "adamw: tensor shape mismatch");
    }
    require(grads.all_finite(), ErrorCode::kNonFinite, "adamw: non-finite gradient");

    const size_t step = state.step + 1;
    const double b1 = cfg.beta1;
    const double b2 = cfg.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
    const double decay = 1.0 - lr * cfg.weight_decay;

    // Compute into scratch first so a non-finite result leaves everything untouched.
    auto& scratch = state.scratch;
    scratch.resize(3 * p.size());
    bool finite = true;
    for (size_t t = 0; t < p.size(); ++t) {
        const size_t n = p[t]->size();
        T* np = (scratch[3 * t].resize(n), scratch[3 * t].data());
        T* nm = (scratch[3 * t + 1].resize(n), scratch[3 * t + 1].data());
        T* nv = (scratch[3 * t + 2].resize(n), scratch[3 * t + 2].data());
        const T* pg = g[t]->data();
        const T* pp = p[t]->data();
        const T* pm = m[t]->data();
        const T* pv = v[t]->data();
        const T tb1 = static_cast<T>(b1), tb2 = static_cast<T>(b2);
        const T tdecay = static_cast<T>(decay), tlr = static_cast<T>(lr / c1);
        const T tc2 = static_cast<T>(1.0 / std::sqrt(c2)), teps = static_cast<T>(cfg.eps);
        bool bad = false;
        for (size_t i = 0; i < n; ++i) {
            const T gi = pg[i];
            const T mi = tb1 * pm[i] + (T(1) - tb1) * gi;
            const T vi = tb2 * pv[i] + (T(1) - tb2) * gi * gi;
            np[i] = pp[i] * tdecay - tlr * mi / (std::sqrt(vi) * tc2 + teps);
            nm[i] = mi;
            nv[i] = vi;
            bad |= detail::non_finite(np[i]);
        }
        finite = finite && !bad;
    }
    require(finite, ErrorCode::kNonFinite, "adamw: non-finite update");
    for (size_t t = 0; t < p.size(); ++t) {
        p[t]->swap(scratch[3 * t]);
        m[t]->swap(scratch[3 * t + 1]);
        v[t]->swap(scratch[3 * t + 2]);
    }
    state.step = step;
}

/// Multiplies the learning rate by `factor` once the validation loss has not
/// improved (relative threshold) for `patience` consecutive epochs.
class PlateauScheduler {
public:
    PlateauScheduler(double lr, double factor, size_t patience, double min_lr = 0.0, double threshold = 1e-4)
        : lr_(lr), factor_(factor), patience_(patience), min_lr_(min_lr), threshold_(threshold) {}

    double
    lr() const noexcept {
        return lr_;
    }

    size_t
    bad_epochs() const noexcept {
        return bad_;
    }

    /// Records one epoch's validation loss; returns the learning rate for the next epoch.
    double
    step(double val_loss) {
        if (!seen_ || val_loss < best_ * (1.0 - threshold_)) {
            best_ = val_loss;
            seen_ = true;
            bad_ = 0;
        } else if (++bad_ >= patience_) {
            lr_ = std::max(min_lr_, lr_ * factor_);
            bad_ = 0;
        }
        return lr_;
    }

private:
    double lr_;
    double factor_;
    size_t patience_;
    double min_lr_;
    double threshold_;
    double best_ = 0.0;
    bool seen_ = false;
    size_t bad_ = 0;
};

/// Cosine annealing from `base` at epoch 0 towards `min_lr` at `max_epochs`.
inline double
cosine_lr(double base, double min_lr, size_t epoch, size_t max_epochs) {
    const double x = static_cast<double>(epoch) / static_cast<double>(std::max<size_t>(max_epochs, 1));
    return min_lr + 0.5 * (base - min_lr) * (1.0 + std::cos(std::numbers::pi * x));
}

}  // namespace ddup
