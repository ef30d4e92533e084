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

#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "ddup/core/error.hpp"
#include "ddup/core/product.hpp"
#include "ddup/index/search_result.hpp"

namespace ddup {

/// Exhaustive scan over every stored vector. Used as the correctness oracle
/// for IvfIndex and for small stores where clustering is not worth it.
class FlatIndex {
public:
    FlatIndex(std::span<const IdVector> records, Metric metric) : metric_(metric) {
        require(!records.empty(), ErrorCode::kInvalidArgument, "flat index: empty store");
        dim_ = records.front().vec.dim();
        ids_.reserve(records.size());
        data_.reserve(records.size() * dim_);
        std::unordered_set<std::string_view> seen;
        for (const auto& r : records) {
            require(r.vec.dim() == dim_, ErrorCode::kDimensionMismatch, "flat index: records have differing dims");
            require(seen.insert(r.id).second, ErrorCode::kDuplicateId, "flat index: duplicate id " + r.id);
            const EmbeddingVector v = metric == Metric::kCosine ? normalize(r.vec) : r.vec;
            ids_.push_back(r.id);
            data_.insert(data_.end(), v.values().begin(), v.values().end());
        }
    }

    std::vector<SearchResult>
    search(const EmbeddingVector& query, size_t top_n) const {
        require(query.dim() == dim_, ErrorCode::kDimensionMismatch,
                "flat search: query dim " + std::to_string(query.dim()) + " != " + std::to_string(dim_));
        require(top_n >= 1, ErrorCode::kInvalidArgument, "flat search: top_n must be >= 1");
        const EmbeddingVector q = metric_ == Metric::kCosine ? normalize(query) : query;
        auto id_of = [this](size_t i) -> const std::string& { return ids_[i]; };
        detail::TopN<size_t, decltype(id_of)> top(top_n, id_of);
        for (size_t i = 0; i < ids_.size(); ++i) {
            top.push(detail::score_key(metric_, q.data(), &data_[i * dim_], dim_), i);
        }
        std::vector<SearchResult> out;
        size_t rank = 1;
        for (const auto& [key, i] : top.take()) {
            out.push_back({ids_[i], detail::key_to_score(metric_, key), rank++});
        }
        return out;
    }

    size_t
    size() const noexcept {
        return ids_.size();
    }

    size_t
    dim() const noexcept {
        return dim_;
    }

private:
    Metric metric_;
    size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<float> data_;
};

/// Exact top_n by full scan; ties by ascending id.
inline std::vector<SearchResult>
brute_force_search(std::span<const IdVector> records, const EmbeddingVector& query, size_t top_n, Metric metric) {
    return FlatIndex(records, metric).search(query, top_n);
}

}  // namespace ddup
