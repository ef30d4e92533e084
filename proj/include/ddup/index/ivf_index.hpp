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
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ddup/core/error.hpp"
#include "ddup/core/product.hpp"
#include "ddup/core/random.hpp"
#include "ddup/index/kmeans.hpp"
#include "ddup/index/search_result.hpp"

namespace ddup {

struct IvfParams {
    size_t nlist = 0;  // 0 selects default_nlist(count)
    Metric metric = Metric::kCosine;
    uint64_t seed = 0;
    size_t max_iters = 25;
    // k-means trains on at most nlist * max_points_per_centroid sampled points.
    size_t max_points_per_centroid = 256;
};

inline size_t
default_nlist(size_t count) {
    return std::max<size_t>(1, static_cast<size_t>(std::ceil(std::sqrt(static_cast<double>(count)))));
}

inline size_t
default_nprobe(size_t nlist) {
    return std::max<size_t>(1, nlist / 16);
}

/// Byte accounting of an IvfIndex. Capacity-based: allocator slack inside the
/// containers is charged to list_overhead.
struct MemoryFootprint {
    size_t count = 0;
    size_t vector_payload = 0;
    size_t centroid_payload = 0;
    size_t id_bytes = 0;
    size_t list_overhead = 0;
    size_t total = 0;

    double
    bytes_per_vector() const {
        return count == 0 ? 0.0 : static_cast<double>(total) / static_cast<double>(count);
    }
};

/// IVF_FLAT: coarse k-means centroids plus one inverted list of raw (flat)
/// vectors per centroid. A query scans only the nprobe lists whose centroids
/// score best; with nprobe == nlist the result equals an exhaustive scan.
///
/// For Metric::kCosine vectors and queries are L2-normalised on the way in and
/// scored by inner product. Inserts never retrain centroids; rebuild() does.
///
/// Concurrency: const members are safe to call concurrently; mutation needs
/// exclusive access.
class IvfIndex {
public:
    /// Centroids only, no entries.
    static IvfIndex
    train(std::span<const EmbeddingVector> training, IvfParams params) {
        require(!training.empty(), ErrorCode::kInvalidArgument, "ivf train: no training vectors");
        IvfIndex idx;
        idx.params_ = params;
        idx.dim_ = training.front().dim();
        std::vector<float> flat;
        flat.reserve(training.size() * idx.dim_);
        for (const auto& v : training) {
            require(v.dim() == idx.dim_, ErrorCode::kDimensionMismatch, "ivf train: vectors have differing dims");
            const EmbeddingVector p = idx.prepare(v);
            flat.insert(flat.end(), p.values().begin(), p.values().end());
        }
        idx.train_centroids(flat, training.size());
        idx.lists_.resize(idx.params_.nlist);
        idx.reserve_slots(0, 0);
        return idx;
    }

    static IvfIndex
    build(std::span<const IdVector> records, IvfParams params) {
        require(!records.empty(), ErrorCode::kInvalidArgument, "ivf build: no records");
        IvfIndex idx;
        idx.params_ = params;
        idx.dim_ = records.front().vec.dim();
        const size_t n = records.size();
        if (idx.params_.nlist == 0) {
            idx.params_.nlist = default_nlist(n);
        }
        require(idx.params_.nlist <= n, ErrorCode::kInvalidArgument,
                "ivf build: nlist " + std::to_string(idx.params_.nlist) + " exceeds record count " + std::to_string(n));

        std::vector<float> flat;
        flat.reserve(n * idx.dim_);
        size_t id_chars = 0;
        for (const auto& r : records) {
            require(r.vec.dim() == idx.dim_, ErrorCode::kDimensionMismatch, "ivf build: records have differing dims");
            require(!r.id.empty(), ErrorCode::kInvalidArgument, "ivf build: empty id");
            const EmbeddingVector p = idx.prepare(r.vec);
            flat.insert(flat.end(), p.values().begin(), p.values().end());
            id_chars += r.id.size();
        }
        idx.train_centroids(flat, n);
        idx.populate(records, flat, id_chars);
        return idx;
    }

    /// Reassembles an index from stored centroids and list membership without
    /// reassigning anything. Vectors are given raw and prepared here.
    static IvfIndex
    restore(IvfParams params, size_t dim, std::vector<float> centroids, const std::vector<std::vector<IdVector>>& lists) {
        require(params.nlist >= 1 && lists.size() == params.nlist && centroids.size() == params.nlist * dim,
                ErrorCode::kCorrupt, "ivf restore: inconsistent list/centroid counts");
        IvfIndex idx;
        idx.params_ = params;
        idx.dim_ = dim;
        idx.centroids_ = std::move(centroids);
        idx.lists_.resize(params.nlist);
        size_t total = 0;
        size_t chars = 0;
        for (size_t l = 0; l < lists.size(); ++l) {
            idx.lists_[l].vectors.reserve(lists[l].size() * dim);
            idx.lists_[l].slots.reserve(lists[l].size());
            total += lists[l].size();
            for (const auto& e : lists[l]) {
                chars += e.id.size();
            }
        }
        idx.reserve_slots(total, chars);
        for (size_t l = 0; l < lists.size(); ++l) {
            for (const auto& e : lists[l]) {
                require(e.vec.dim() == dim, ErrorCode::kCorrupt, "ivf restore: vector dim mismatch");
                require(!idx.contains(e.id), ErrorCode::kDuplicateId, "ivf restore: duplicate id " + e.id);
                idx.append(static_cast<uint32_t>(l), e.id, idx.prepare(e.vec).data());
            }
        }
        return idx;
    }

    std::vector<SearchResult>
    search(const EmbeddingVector& query, size_t top_n, size_t nprobe) const {
        require(query.dim() == dim_, ErrorCode::kDimensionMismatch,
                "ivf search: query dim " + std::to_string(query.dim()) + " != index dim " + std::to_string(dim_));
        require(nprobe >= 1 && nprobe <= nlist(), ErrorCode::kInvalidArgument,
                "ivf search: nprobe " + std::to_string(nprobe) + " outside [1, " + std::to_string(nlist()) + "]");
        require(top_n >= 1, ErrorCode::kInvalidArgument, "ivf search: top_n must be >= 1");
        const EmbeddingVector q = prepare(query);

        std::vector<std::pair<double, uint32_t>> coarse(nlist());
        for (size_t l = 0; l < nlist(); ++l) {
            coarse[l] = {detail::score_key(params_.metric, q.data(), &centroids_[l * dim_], dim_),
                         static_cast<uint32_t>(l)};
        }
        std::partial_sort(coarse.begin(), coarse.begin() + static_cast<std::ptrdiff_t>(nprobe), coarse.end());

        auto id_of = [this](uint32_t slot) { return slot_id(slot); };
        detail::TopN<uint32_t, decltype(id_of)> top(top_n, id_of);
        for (size_t p = 0; p < nprobe; ++p) {
            const List& list = lists_[coarse[p].second];
            const float* v = list.vectors.data();
            for (size_t i = 0; i < list.slots.size(); ++i, v += dim_) {
                top.push(detail::score_key(params_.metric, q.data(), v, dim_), list.slots[i]);
            }
        }
        std::vector<SearchResult> out;
        size_t rank = 1;
        for (const auto& [key, slot] : top.take()) {
            out.push_back({std::string(slot_id(slot)), detail::key_to_score(params_.metric, key), rank++});
        }
        return out;
    }

    void
    insert(std::string_view id, const EmbeddingVector& vec) {
        require(!id.empty(), ErrorCode::kInvalidArgument, "ivf insert: empty id");
        require(vec.dim() == dim_, ErrorCode::kDimensionMismatch,
                "ivf insert: dim " + std::to_string(vec.dim()) + " != index dim " + std::to_string(dim_));
        require(!contains(id), ErrorCode::kDuplicateId, "ivf insert: duplicate id " + std::string(id));
        const EmbeddingVector p = prepare(vec);
        append(nearest_list(p.data()), id, p.data());
    }

    void
    remove(std::string_view id) {
        const std::optional<size_t> bucket = find_bucket(id);
        require(bucket.has_value(), ErrorCode::kUnknownId, "ivf remove: unknown id " + std::string(id));
        const uint32_t slot = buckets_[*bucket];
        erase_bucket(*bucket);

        Slot& s = slots_[slot];
        List& list = lists_[s.list];
        const size_t last = list.slots.size() - 1;
        if (s.pos != last) {
            const uint32_t moved = list.slots[last];
            list.slots[s.pos] = moved;
            std::copy_n(&list.vectors[last * dim_], dim_, &list.vectors[s.pos * dim_]);
            slots_[moved].pos = s.pos;
        }
        list.slots.pop_back();
        list.vectors.resize(last * dim_);
        s.list = kDead;
        --live_;
    }

    bool
    contains(std::string_view id) const {
        return find_bucket(id).has_value();
    }

    /// Retrains centroids over the live entries and compacts storage.
    void
    rebuild(std::optional<uint64_t> seed = std::nullopt) {
        require(live_ > 0, ErrorCode::kInvalidArgument, "ivf rebuild: index is empty");
        IvfParams p = params_;
        if (seed) {
            p.seed = *seed;
        }
        p.nlist = std::min(p.nlist, live_);
        std::vector<IdVector> entries;
        entries.reserve(live_);
        for_each([&](size_t, std::string_view id, std::span<const float> v) {
            entries.push_back({std::string(id), EmbeddingVector::from_span(v)});
        });
        // Stored vectors are already normalised for cosine; build() would do it
        // again, which is an exact no-op only up to rounding, so bypass it.
        IvfIndex fresh;
        fresh.params_ = p;
        fresh.dim_ = dim_;
        std::vector<float> flat;
        flat.reserve(entries.size() * dim_);
        size_t chars = 0;
        for (const auto& e : entries) {
            flat.insert(flat.end(), e.vec.values().begin(), e.vec.values().end());
            chars += e.id.size();
        }
        fresh.train_centroids(flat, entries.size());
        fresh.populate(entries, flat, chars);
        *this = std::move(fresh);
    }

    MemoryFootprint
    memory_footprint() const {
        MemoryFootprint fp;
        fp.count = live_;
        fp.centroid_payload = centroids_.capacity() * sizeof(float);
        size_t slack = 0;
        size_t list_slots = 0;
        for (const auto& l : lists_) {
            fp.vector_payload += l.vectors.size() * sizeof(float);
            slack += (l.vectors.capacity() - l.vectors.size()) * sizeof(float);
            list_slots += l.slots.capacity() * sizeof(uint32_t);
        }
        fp.id_bytes = id_chars_.capacity() + id_offsets_.capacity() * sizeof(uint32_t);
        fp.list_overhead = slack + list_slots + lists_.capacity() * sizeof(List) + slots_.capacity() * sizeof(Slot) +
                           buckets_.capacity() * sizeof(uint32_t) + sizeof(IvfIndex);
        fp.total = fp.vector_payload + fp.centroid_payload + fp.id_bytes + fp.list_overhead;
        return fp;
    }

    size_t
    size() const noexcept {
        return live_;
    }

    size_t
    nlist() const noexcept {
        return lists_.size();
    }

    size_t
    dim() const noexcept {
        return dim_;
    }

    Metric
    metric() const noexcept {
        return params_.metric;
    }

    const IvfParams&
    params() const noexcept {
        return params_;
    }

    std::span<const float>
    centroids() const noexcept {
        return centroids_;
    }

    std::span<const float>
    centroid(size_t l) const {
        return std::span<const float>(centroids_).subspan(l * dim_, dim_);
    }

    size_t
    list_size(size_t l) const {
        return lists_.at(l).slots.size();
    }

    std::vector<std::string>
    list_ids(size_t l) const {
        std::vector<std::string> out;
        for (uint32_t s : lists_.at(l).slots) {
            out.emplace_back(slot_id(s));
        }
        return out;
    }

    std::optional<size_t>
    list_of(std::string_view id) const {
        const auto b = find_bucket(id);
        if (!b) {
            return std::nullopt;
        }
        return slots_[buckets_[*b]].list;
    }

    /// Index of the list a (raw) vector would be assigned to.
    size_t
    assign(const EmbeddingVector& vec) const {
        require(vec.dim() == dim_, ErrorCode::kDimensionMismatch, "ivf assign: dim mismatch");
        return nearest_list(prepare(vec).data());
    }

    /// Visits entries list by list in storage order: fn(list, id, stored vector).
    template <typename Fn>
    void
    for_each(Fn&& fn) const {
        for (size_t l = 0; l < lists_.size(); ++l) {
            const List& list = lists_[l];
            for (size_t i = 0; i < list.slots.size(); ++i) {
                fn(l, slot_id(list.slots[i]), std::span<const float>(&list.vectors[i * dim_], dim_));
            }
        }
    }

    /// Vector in the form the index stores it (normalised for cosine).
    EmbeddingVector
    prepare(const EmbeddingVector& v) const {
        return params_.metric == Metric::kCosine ? normalize(v) : v;
    }

private:
    static constexpr uint32_t kDead = std::numeric_limits<uint32_t>::max();
    static constexpr uint32_t kEmpty = std::numeric_limits<uint32_t>::max();

    struct List {
        std::vector<float> vectors;   // size() x dim, contiguous
        std::vector<uint32_t> slots;  // parallel to vectors
    };

    struct Slot {
        uint32_t list;
        uint32_t pos;
    };

    IvfIndex() = default;

    void
    train_centroids(const std::vector<float>& flat, size_t n) {
        if (params_.nlist == 0) {
            params_.nlist = default_nlist(n);
        }
        const size_t nlist = params_.nlist;
        require(nlist <= n, ErrorCode::kInvalidArgument, "ivf: nlist exceeds number of training vectors");
        const size_t cap = params_.max_points_per_centroid == 0 ? n : nlist * params_.max_points_per_centroid;

        KMeansOptions opt;
        opt.k = nlist;
        opt.max_iters = params_.max_iters;
        opt.seed = params_.seed;
        opt.spherical = params_.metric == Metric::kCosine;
        if (n > cap) {
            Rng rng(params_.seed ^ 0x9e3779b97f4a7c15ULL);
            std::vector<uint32_t> perm(n);
            std::iota(perm.begin(), perm.end(), 0U);
            for (size_t i = 0; i < cap; ++i) {
                std::swap(perm[i], perm[i + rng.uniform_int(n - i)]);
            }
            perm.resize(cap);
            std::sort(perm.begin(), perm.end());
            std::vector<float> sample(cap * dim_);
            for (size_t i = 0; i < cap; ++i) {
                std::copy_n(&flat[perm[i] * dim_], dim_, &sample[i * dim_]);
            }
            centroids_ = kmeans_fit(sample, cap, dim_, opt).centroids;
        } else {
            centroids_ = kmeans_fit(flat, n, dim_, opt).centroids;
        }
    }

    void
    populate(std::span<const IdVector> records, const std::vector<float>& flat, size_t id_chars) {
        const size_t n = records.size();
        std::vector<uint32_t> assignment(n);
        std::vector<size_t> counts(params_.nlist, 0);
        for (size_t i = 0; i < n; ++i) {
            assignment[i] = nearest_list(&flat[i * dim_]);
            ++counts[assignment[i]];
        }
        lists_.assign(params_.nlist, List{});
        for (size_t l = 0; l < params_.nlist; ++l) {
            lists_[l].vectors.reserve(counts[l] * dim_);
            lists_[l].slots.reserve(counts[l]);
        }
        reserve_slots(n, id_chars);
        for (size_t i = 0; i < n; ++i) {
            require(!contains(records[i].id), ErrorCode::kDuplicateId, "ivf build: duplicate id " + records[i].id);
            append(assignment[i], records[i].id, &flat[i * dim_]);
        }
    }

    uint32_t
    nearest_list(const float* v) const {
        uint32_t best = 0;
        double best_key = std::numeric_limits<double>::infinity();
        const size_t k = centroids_.size() / dim_;
        for (size_t l = 0; l < k; ++l) {
            const double key = detail::score_key(params_.metric, v, &centroids_[l * dim_], dim_);
            if (key < best_key) {
                best_key = key;
                best = static_cast<uint32_t>(l);
            }
        }
        return best;
    }

    void
    reserve_slots(size_t n, size_t id_chars) {
        slots_.reserve(n);
        id_offsets_.reserve(n + 1);
        id_chars_.reserve(id_chars);
        if (id_offsets_.empty()) {
            id_offsets_.push_back(0);
        }
        size_t cap = 16;
        while (cap < 2 * n) {
            cap <<= 1;
        }
        rehash(cap);
    }

    void
    append(uint32_t list, std::string_view id, const float* v) {
        require(slots_.size() < kDead - 1, ErrorCode::kInvalidArgument, "ivf: slot space exhausted");
        const auto slot = static_cast<uint32_t>(slots_.size());
        List& l = lists_[list];
        slots_.push_back({list, static_cast<uint32_t>(l.slots.size())});
        id_chars_.append(id);
        id_offsets_.push_back(static_cast<uint32_t>(id_chars_.size()));
        l.vectors.insert(l.vectors.end(), v, v + dim_);
        l.slots.push_back(slot);
        insert_bucket(slot);
        ++live_;
    }

    std::string_view
    slot_id(uint32_t slot) const {
        return std::string_view(id_chars_).substr(id_offsets_[slot], id_offsets_[slot + 1] - id_offsets_[slot]);
    }

    // Open-addressing id -> slot table, linear probing, backward-shift deletion.

    size_t
    home(std::string_view id) const {
        return std::hash<std::string_view>{}(id) & (buckets_.size() - 1);
    }

    std::optional<size_t>
    find_bucket(std::string_view id) const {
        if (buckets_.empty()) {
            return std::nullopt;
        }
        const size_t mask = buckets_.size() - 1;
        for (size_t i = home(id);; i = (i + 1) & mask) {
            const uint32_t s = buckets_[i];
            if (s == kEmpty) {
                return std::nullopt;
            }
            if (slot_id(s) == id) {
                return i;
            }
        }
    }

    void
    insert_bucket(uint32_t slot) {
        if (buckets_.empty() || 2 * (used_ + 1) > buckets_.size()) {
            rehash(std::max<size_t>(16, buckets_.size() * 2));
        }
        const size_t mask = buckets_.size() - 1;
        size_t i = home(slot_id(slot));
        while (buckets_[i] != kEmpty) {
            i = (i + 1) & mask;
        }
        buckets_[i] = slot;
        ++used_;
    }

    void
    erase_bucket(size_t i) {
        const size_t mask = buckets_.size() - 1;
        size_t j = i;
        for (;;) {
            j = (j + 1) & mask;
            if (buckets_[j] == kEmpty) {
                break;
            }
            const size_t k = home(slot_id(buckets_[j]));
            // Move j back to the hole at i unless its home lies cyclically in (i, j].
            const bool in_range = (i <= j) ? (i < k && k <= j) : (i < k || k <= j);
            if (!in_range) {
                buckets_[i] = buckets_[j];
                i = j;
            }
        }
        buckets_[i] = kEmpty;
        --used_;
    }

    void
    rehash(size_t capacity) {
        if (capacity <= buckets_.size()) {
            return;
        }
        std::vector<uint32_t> old = std::move(buckets_);
        buckets_.assign(capacity, kEmpty);
        buckets_.shrink_to_fit();
        used_ = 0;
        const size_t mask = capacity - 1;
        for (uint32_t s : old) {
            if (s == kEmpty) {
                continue;
            }
            size_t i = home(slot_id(s));
            while (buckets_[i] != kEmpty) {
                i = (i + 1) & mask;
            }
            buckets_[i] = s;
            ++used_;
        }
    }

    IvfParams params_;
    size_t dim_ = 0;
    std::vector<float> centroids_;
    std::vector<List> lists_;
    std::vector<Slot> slots_;
    std::string id_chars_;
    std::vector<uint32_t> id_offsets_;
    std::vector<uint32_t> buckets_;
    size_t used_ = 0;
    size_t live_ = 0;
};

}  // namespace ddup
