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
#include <string>
#include <string_view>
#include <vector>

#include "ddup/core/vector.hpp"

namespace ddup {

/// Score is the L2 distance for Metric::kL2 and the inner product (cosine
/// similarity for Metric::kCosine) otherwise. Rank starts at 1.
struct SearchResult {
    std::string id;
    double score = 0.0;
    size_t rank = 0;

    bool
    operator==(const SearchResult&) const = default;
};

namespace detail {

// Search internals rank by a key where smaller is better: squared distance for
// L2, negated inner product otherwise. Ties break on ascending id.
inline double
score_key(Metric metric, const float* a, const float* b, size_t dim) {
    if (metric == Metric::kL2) {
        return kernels::l2_sq<double>(a, b, dim);
    }
    return -kernels::dot<double>(a, b, dim);
}

inline double
key_to_score(Metric metric, double key) {
    return metric == Metric::kL2 ? std::sqrt(key) : -key;
}

// Bounded best-n collector over (key, handle) pairs. `id_of(handle)` must
// return something comparable as a string_view.
template <typename Handle, typename IdOf>
class TopN {
public:
    TopN(size_t n, IdOf id_of) : n_(n), id_of_(std::move(id_of)) {
        heap_.reserve(n + 1);
    }

    void
    push(double key, Handle h) {
        if (n_ == 0) {
            return;
        }
        if (heap_.size() < n_) {
            heap_.push_back({key, h});
            std::push_heap(heap_.begin(), heap_.end(), cmp());
        } else if (before({key, h}, heap_.front())) {
            std::pop_heap(heap_.begin(), heap_.end(), cmp());
            heap_.back() = {key, h};
            std::push_heap(heap_.begin(), heap_.end(), cmp());
        }
    }

    /// Best-first.
    std::vector<std::pair<double, Handle>>
    take() {
        std::sort(heap_.begin(), heap_.end(), cmp());
        return std::move(heap_);
    }

private:
    using Entry = std::pair<double, Handle>;

    bool
    before(const Entry& a, const Entry& b) const {
        if (a.first != b.first) {
            return a.first < b.first;
        }
        return std::string_view(id_of_(a.second)) < std::string_view(id_of_(b.second));
    }

    auto
    cmp() const {
        return [this](const Entry& a, const Entry& b) { return before(a, b); };
    }

    size_t n_;
    IdOf id_of_;
    std::vector<Entry> heap_;
};

}  // namespace detail

}  // namespace ddup
