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
#include <span>

#include "ddup/core/error.hpp"
#include "ddup/decider/types.hpp"

namespace ddup {

/// Confusion counts with Match as the positive class.
struct Confusion {
    size_t tp = 0;
    size_t fp = 0;
    size_t fn = 0;
    size_t tn = 0;

    size_t
    total() const noexcept {
        return tp + fp + fn + tn;
    }

    bool
    operator==(const Confusion&) const = default;
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    size_t support = 0;
};

struct EvalReport {
    ClassMetrics match;
    ClassMetrics not_match;
    double macro_f1 = 0.0;
    Confusion confusion;
    // Set when one class never occurs in the labels; its F1 is reported as 0.
    bool missing_class = false;
};

namespace detail {

inline ClassMetrics
class_metrics(size_t tp, size_t fp, size_t fn) {
    ClassMetrics m;
    m.support = tp + fn;
    m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

}  // namespace detail

inline EvalReport
report_from_confusion(const Confusion& c) {
    require(c.total() > 0, ErrorCode::kInvalidArgument, "evaluate: empty set");
    EvalReport r;
    r.confusion = c;
    r.match = detail::class_metrics(c.tp, c.fp, c.fn);
    r.not_match = detail::class_metrics(c.tn, c.fn, c.fp);
    r.missing_class = r.match.support == 0 || r.not_match.support == 0;
    r.macro_f1 = (r.match.f1 + r.not_match.f1) / 2.0;
    return r;
}

inline EvalReport
evaluate_predictions(std::span<const Label> truth, std::span<const Label> predicted) {
    require(truth.size() == predicted.size(), ErrorCode::kDimensionMismatch,
            "evaluate: label and prediction counts differ");
    Confusion c;
    for (size_t i = 0; i < truth.size(); ++i) {
        const bool t = truth[i] == Label::kMatch;
        const bool p = predicted[i] == Label::kMatch;
        c.tp += t && p;
        c.fn += t && !p;
        c.fp += !t && p;
        c.tn += !t && !p;
    }
    return report_from_confusion(c);
}

}  // namespace ddup
