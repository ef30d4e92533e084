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
#include <functional>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ddup/core/random.hpp"
#include "ddup/decider/metrics.hpp"
#include "ddup/decider/network.hpp"
#include "ddup/decider/optimizer.hpp"

namespace ddup {

struct EpochStats {
    size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double learning_rate = 0.0;  // rate used during this epoch

    bool
    operator==(const EpochStats&) const = default;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;

    void
    write_csv(std::ostream& os) const {
        os << "epoch,train_loss,val_loss,lr\n";
        os.precision(9);
        for (const auto& e : epochs) {
            os << e.epoch << ',' << e.train_loss << ',' << e.val_loss << ',' << e.learning_rate << '\n';
        }
    }

    bool
    operator==(const TrainHistory&) const = default;
};

template <typename T>
struct TrainResult {
    DeciderModel<T> model;
    TrainHistory history;
};

using EpochCallback = std::function<void(const EpochStats&)>;

namespace detail {

inline std::vector<Label>
labels_of(std::span<const PairSample> samples) {
    std::vector<Label> out(samples.size());
    std::transform(samples.begin(), samples.end(), out.begin(), [](const PairSample& s) { return s.label; });
    return out;
}

template <typename T>
double
dataset_loss(const DeciderModel<T>& model, const std::vector<T>& inputs, const std::vector<Label>& labels,
             size_t batch_size) {
    const size_t stride = model.config.input_size();
    double sum = 0.0;
    for (size_t lo = 0; lo < labels.size(); lo += batch_size) {
        const size_t n = std::min(batch_size, labels.size() - lo);
        const auto c = forward(model, std::span<const T>(inputs.data() + lo * stride, n * stride), n);
        sum += cross_entropy_loss(std::span<const T>(c.probs), std::span<const Label>(labels.data() + lo, n)) *
               static_cast<double>(n);
    }
    return sum / static_cast<double>(labels.size());
}

}  // namespace detail

/// Mini-batch training with seeded shuffling and dropout. The learning rate
/// follows the configured scheduler, stepped once per epoch on validation loss.
template <typename T>
TrainResult<T>
train(DeciderModel<T> model, std::span<const PairSample> train_set, std::span<const PairSample> val_set,
      const TrainConfig& cfg, const EpochCallback& on_epoch = {}) {
    cfg.validate();
    require(!train_set.empty(), ErrorCode::kInvalidArgument, "train: empty training set");
    require(!val_set.empty(), ErrorCode::kInvalidArgument, "train: empty validation set");
    detail::check_model(model);

    const size_t stride = model.config.input_size();
    const auto train_x = make_model_inputs<T>(train_set, model.config);
    const auto train_y = detail::labels_of(train_set);
    const auto val_x = make_model_inputs<T>(val_set, model.config);
    const auto val_y = detail::labels_of(val_set);

    Rng rng(cfg.seed);
    AdamWState<T> state;
    PlateauScheduler plateau(cfg.learning_rate, cfg.plateau_factor, cfg.plateau_patience, cfg.min_learning_rate);
    double lr = cfg.learning_rate;

    TrainResult<T> result;
    std::vector<size_t> order(train_set.size());
    std::vector<T> batch_x;
    std::vector<Label> batch_y;
    for (size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        if (cfg.scheduler == SchedulerKind::kCosine) {
            lr = cosine_lr(cfg.learning_rate, cfg.min_learning_rate, epoch, cfg.max_epochs);
        }
        std::iota(order.begin(), order.end(), size_t{0});
        rng.shuffle(order.begin(), order.end());
        double loss_sum = 0.0;
        for (size_t lo = 0, bi = 0; lo < order.size(); lo += cfg.batch_size, ++bi) {
            const size_t n = std::min(cfg.batch_size, order.size() - lo);
            batch_x.resize(n * stride);
            batch_y.resize(n);
            for (size_t i = 0; i < n; ++i) {
                const size_t s = order[lo + i];
                std::copy_n(train_x.begin() + static_cast<std::ptrdiff_t>(s * stride), stride,
                            batch_x.begin() + static_cast<std::ptrdiff_t>(i * stride));
                batch_y[i] = train_y[s];
            }
            try {
                const auto cache = forward(model, std::span<const T>(batch_x), n, Mode::kTrain, &rng);
                const double loss =
                    cross_entropy_loss(std::span<const T>(cache.probs), std::span<const Label>(batch_y));
                require(std::isfinite(loss), ErrorCode::kNonFinite, "loss is not finite");
                loss_sum += loss * static_cast<double>(n);
                const auto grads = backward(model, cache, std::span<const Label>(batch_y));
                adamw_step(model.params, grads, state, cfg, lr);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::kNonFinite) {
                    throw;
                }
                std::ostringstream msg;
                msg << "train: diverged at epoch " << epoch << " batch " << bi << " (lr " << lr << "): " << e.what();
                fail(ErrorCode::kDiverged, msg.str());
            }
        }
        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_sum / static_cast<double>(order.size());
        stats.learning_rate = lr;
        try {
            stats.val_loss = detail::dataset_loss(model, val_x, val_y, cfg.batch_size);
            require(std::isfinite(stats.val_loss), ErrorCode::kNonFinite, "loss is not finite");
        } catch (const Error& e) {
            if (e.code() != ErrorCode::kNonFinite) {
                throw;
            }
            fail(ErrorCode::kDiverged,
                 "train: validation diverged at epoch " + std::to_string(epoch) + ": " + e.what());
        }
        result.history.epochs.push_back(stats);
        if (on_epoch) {
            on_epoch(stats);
        }
        if (cfg.scheduler == SchedulerKind::kReduceOnPlateau) {
            lr = plateau.step(stats.val_loss);
        }
    }
    model.trained = true;
    result.model = std::move(model);
    return result;
}

/// Metrics at the argmax decision (Match iff p(Match) > p(NotMatch)).
template <typename T>
EvalReport
evaluate(const DeciderModel<T>& model, std::span<const PairSample> samples, size_t threads = 1) {
    require(!samples.empty(), ErrorCode::kInvalidArgument, "evaluate: empty set");
    const auto probs = match_probabilities(model, samples, threads);
    std::vector<Label> predicted(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) {
        predicted[i] = probs[i] > 0.5 ? Label::kMatch : Label::kNotMatch;
    }
    const auto truth = detail::labels_of(samples);
    return evaluate_predictions(truth, predicted);
}

struct MatchDecision {
    double probability = 0.0;  // of the Match class
    Label label = Label::kNotMatch;
};

inline void
check_threshold(double threshold) {
    require(threshold > 0.0 && threshold < 1.0, ErrorCode::kInvalidArgument, "decide: threshold must be in (0, 1)");
}

inline MatchDecision
decision_from_probability(double p, double threshold) {
    return {p, p >= threshold ? Label::kMatch : Label::kNotMatch};
}

template <typename T>
MatchDecision
decide(const DeciderModel<T>& model, const PairSample& sample, double threshold = 0.5) {
    check_threshold(threshold);
    require(model.trained, ErrorCode::kNotReady, "decide: model has not been trained");
    const auto p = match_probabilities(model, std::span<const PairSample>(&sample, 1));
    return decision_from_probability(p[0], threshold);
}

/// |p(A, B) - p(B, A)| over a sample set. The network is not symmetric in
/// its two channels, so this is measured rather than assumed.
struct AsymmetryReport {
    double mean_abs = 0.0;
    double max_abs = 0.0;
    size_t decision_flips = 0;  // at threshold 0.5
};

inline PairSample
swapped(const PairSample& s) {
    return PairSample{s.text_b, s.image_b, s.text_a, s.image_a, s.label, s.image_present_b, s.image_present_a};
}

template <typename T>
AsymmetryReport
measure_asymmetry(const DeciderModel<T>& model, std::span<const PairSample> samples, size_t threads = 1) {
    require(!samples.empty(), ErrorCode::kInvalidArgument, "asymmetry: empty set");
    std::vector<PairSample> rev;
    rev.reserve(samples.size());
    for (const auto& s : samples) {
        rev.push_back(swapped(s));
    }
    const auto p = match_probabilities(model, samples, threads);
    const auto q = match_probabilities(model, std::span<const PairSample>(rev), threads);
    AsymmetryReport r;
    for (size_t i = 0; i < p.size(); ++i) {
        const double d = std::abs(p[i] - q[i]);
        r.mean_abs += d;
        r.max_abs = std::max(r.max_abs, d);
        r.decision_flips += (p[i] >= 0.5) != (q[i] >= 0.5);
    }
    r.mean_abs /= static_cast<double>(p.size());
    return r;
}

}  // namespace ddup
