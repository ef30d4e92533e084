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
#include <cstdint>
#include <exception>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "ddup/core/error.hpp"
#include "ddup/core/product.hpp"
#include "ddup/core/random.hpp"
#include "ddup/core/vector.hpp"
#include "ddup/decider/decider.hpp"
#include "ddup/index/ivf_index.hpp"
#include "ddup/pca/pca.hpp"
#include "ddup/service/record_json.hpp"
#include "ddup/synth/stub_embedder.hpp"

namespace ddup {

inline constexpr size_t kDefaultTopN = 50;
inline constexpr double kDefaultThreshold = 0.5;

struct StoreOptions {
    size_t text_dim = 128;
    size_t image_dim = 128;

    bool
    operator==(const StoreOptions&) const = default;
};

struct IngestReject {
    size_t line = 0;  // 1-based
    std::string id;   // empty when the line could not be parsed that far
    std::string reason;
};

struct IngestReport {
    size_t lines = 0;
    size_t accepted = 0;
    std::vector<IngestReject> rejects;
};

/// Scored candidate pair. id_a < id_b always. retrieval_rank is 0 for pairs
/// scored directly rather than found by retrieval.
struct PairDecision {
    std::string id_a;
    std::string id_b;
    double probability = 0.0;
    Label label = Label::kNotMatch;
    size_t retrieval_rank = 0;
    double retrieval_score = 0.0;

    bool
    operator==(const PairDecision&) const = default;
};

struct DuplicateGroup {
    std::string representative;  // lowest member id
    std::vector<std::string> members;  // sorted, size >= 2

    bool
    operator==(const DuplicateGroup&) const = default;
};

struct DedupeOptions {
    size_t top_n = kDefaultTopN;
    double threshold = kDefaultThreshold;
    size_t nprobe = 0;  // 0: default_nprobe(nlist)
    size_t threads = 1;
    size_t score_chunk = 4096;
};

struct DedupeResult {
    std::vector<PairDecision> decisions;  // sorted by (id_a, id_b)
    std::vector<DuplicateGroup> groups;   // sorted by representative

    bool
    operator==(const DedupeResult&) const = default;
};

struct StoreStats {
    size_t records = 0;
    size_t text_dim = 0;
    size_t image_dim = 0;
    bool index_built = false;
    size_t nlist = 0;
    Metric metric = Metric::kCosine;
    uint64_t index_seed = 0;
    size_t default_nprobe = 0;
    size_t memory_bytes = 0;
    std::optional<size_t> pca_text_source;
    std::optional<size_t> pca_image_source;
    bool decider_loaded = false;
    bool decider_trained = false;
};

/// Disjoint-set forest with path halving and union by size.
class UnionFind {
public:
    explicit UnionFind(size_t n) : parent_(n), size_(n, 1) {
        std::iota(parent_.begin(), parent_.end(), size_t{0});
    }

    size_t
    find(size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void
    unite(size_t a, size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) {
            return;
        }
        if (size_[a] < size_[b]) {
            std::swap(a, b);
        }
        parent_[b] = a;
        size_[a] += size_[b];
    }

private:
    std::vector<size_t> parent_;
    std::vector<size_t> size_;
};

/// Groups of >= 2 ids connected through Match decisions.
inline std::vector<DuplicateGroup>
group_matches(std::span<const PairDecision> decisions) {
    std::vector<std::string> ids;
    for (const auto& d : decisions) {
        if (d.label == Label::kMatch) {
            ids.push_back(d.id_a);
            ids.push_back(d.id_b);
        }
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    auto ordinal = [&](const std::string& id) {
        return static_cast<size_t>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
    };
    UnionFind uf(ids.size());
    for (const auto& d : decisions) {
        if (d.label == Label::kMatch) {
            uf.unite(ordinal(d.id_a), ordinal(d.id_b));
        }
    }
    std::map<size_t, DuplicateGroup> by_root;
    for (size_t i = 0; i < ids.size(); ++i) {
        by_root[uf.find(i)].members.push_back(ids[i]);  // ids ascending, so members come out sorted
    }
    std::vector<DuplicateGroup> groups;
    groups.reserve(by_root.size());
    for (auto& [root, g] : by_root) {
        g.representative = g.members.front();
        groups.push_back(std::move(g));
    }
    std::sort(groups.begin(), groups.end(),
              [](const DuplicateGroup& a, const DuplicateGroup& b) { return a.representative < b.representative; });
    return groups;
}

/// In-memory catalog: validated records, the text-vector IVF index, optional
/// PCA reducers for oversized inputs and the decider.
///
/// Invariants: every indexed id is a record; stored vectors have exactly
/// options().text_dim / image_dim components.
class CatalogStore {
public:
    explicit CatalogStore(StoreOptions options = {}) : options_(options) {
        require(options_.text_dim >= 1 && options_.image_dim >= 1, ErrorCode::kInvalidArgument,
                "store: dims must be >= 1");
    }

    // ---- ingest ----

    /// Validates, reduces and stores one record; throws on rejection.
    void
    add(ProductRecord r) {
        require(!r.id.empty(), ErrorCode::kInvalidArgument, "id must not be empty");
        require(!records_.contains(r.id), ErrorCode::kDuplicateId, "duplicate id " + r.id);
        r.text_vec = reduce(r.text_vec, pca_text_, options_.text_dim, "text_vec");
        require(squared_norm(r.text_vec) > 0.0, ErrorCode::kZeroVector, "text_vec is the zero vector");
        if (r.image_vec) {
            r.image_vec = reduce(*r.image_vec, pca_image_, options_.image_dim, "image_vec");
        }
        if (index_) {
            index_->insert(r.id, r.text_vec);
        }
        std::string id = r.id;
        records_.emplace(std::move(id), std::move(r));
    }

    /// One JSON product per line. Bad lines are rejected with a reason and
    /// processing continues; accepted + rejects == lines.
    IngestReport
    ingest(std::istream& in) {
        IngestReport report;
        std::string line;
        while (std::getline(in, line)) {
            ++report.lines;
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            ingest_line(line, report);
        }
        return report;
    }

    IngestReport
    ingest(std::span<const ProductRecord> batch) {
        IngestReport report;
        for (const auto& r : batch) {
            ++report.lines;
            try {
                add(r);
                ++report.accepted;
            } catch (const Error& e) {
                report.rejects.push_back({report.lines, r.id, e.what()});
            }
        }
        return report;
    }

    bool
    contains(std::string_view id) const {
        return records_.find(id) != records_.end();
    }

    const ProductRecord&
    record(std::string_view id) const {
        const auto it = records_.find(id);
        require(it != records_.end(), ErrorCode::kUnknownId, "unknown id " + std::string(id));
        return it->second;
    }

    /// Records in ascending id order.
    const std::map<std::string, ProductRecord, std::less<>>&
    records() const noexcept {
        return records_;
    }

    size_t
    size() const noexcept {
        return records_.size();
    }

    const StoreOptions&
    options() const noexcept {
        return options_;
    }

    // ---- reducers ----

    /// Fits text and image reducers from raw high-dimensional rows. Either
    /// span may be empty to leave that channel's reducer unset.
    void
    fit_pca(std::span<const EmbeddingVector> text_rows, std::span<const EmbeddingVector> image_rows) {
        if (!text_rows.empty()) {
            set_pca_text(PcaModel::fit(text_rows, options_.text_dim));
        }
        if (!image_rows.empty()) {
            set_pca_image(PcaModel::fit(image_rows, options_.image_dim));
        }
    }

    void
    set_pca_text(PcaModel m) {
        require(m.target_dim() == options_.text_dim, ErrorCode::kDimensionMismatch,
                "text reducer must target dim " + std::to_string(options_.text_dim));
        pca_text_ = std::move(m);
    }

    void
    set_pca_image(PcaModel m) {
        require(m.target_dim() == options_.image_dim, ErrorCode::kDimensionMismatch,
                "image reducer must target dim " + std::to_string(options_.image_dim));
        pca_image_ = std::move(m);
    }

    const std::optional<PcaModel>&
    pca_text() const noexcept {
        return pca_text_;
    }

    const std::optional<PcaModel>&
    pca_image() const noexcept {
        return pca_image_;
    }

    // ---- index ----

    void
    build_index(const IvfParams& params) {
        require(!records_.empty(), ErrorCode::kNotReady, "build_index: store is empty");
        std::vector<IdVector> entries;
        entries.reserve(records_.size());
        for (const auto& [id, r] : records_) {
            entries.push_back({id, r.text_vec});
        }
        IvfParams p = params;
        if (p.nlist > entries.size()) {
            p.nlist = entries.size();
        }
        index_ = IvfIndex::build(entries, p);
    }

    /// Installs a prebuilt index; it must cover exactly the stored records.
    void
    set_index(IvfIndex index) {
        require(index.dim() == options_.text_dim, ErrorCode::kDimensionMismatch, "set_index: dim mismatch");
        require(index.size() == records_.size(), ErrorCode::kCorrupt, "set_index: entry count != record count");
        index.for_each([&](size_t, std::string_view id, std::span<const float>) {
            require(contains(id), ErrorCode::kCorrupt, "set_index: indexed id " + std::string(id) + " is not a record");
        });
        index_ = std::move(index);
    }

    const std::optional<IvfIndex>&
    index() const noexcept {
        return index_;
    }

    size_t
    resolve_nprobe(size_t nprobe) const {
        require(index_.has_value(), ErrorCode::kNotReady, "index not built");
        return nprobe == 0 ? default_nprobe(index_->nlist()) : std::min(nprobe, index_->nlist());
    }

    /// Nearest stored products to `id` by text vector, `id` itself excluded.
    std::vector<SearchResult>
    find_candidates(std::string_view id, size_t top_n = kDefaultTopN, size_t nprobe = 0) const {
        const ProductRecord& r = record(id);
        require(index_.has_value(), ErrorCode::kNotReady, "find_candidates: index not built");
        require(top_n >= 1, ErrorCode::kInvalidArgument, "top_n must be >= 1");
        auto hits = index_->search(r.text_vec, top_n + 1, resolve_nprobe(nprobe));
        std::vector<SearchResult> out;
        out.reserve(top_n);
        for (auto& h : hits) {
            if (h.id != id && out.size() < top_n) {
                h.rank = out.size() + 1;
                out.push_back(std::move(h));
            }
        }
        return out;
    }

    /// Search by raw or reduced text vector.
    std::vector<SearchResult>
    search(const EmbeddingVector& text_vec, size_t top_n = kDefaultTopN, size_t nprobe = 0) const {
        require(index_.has_value(), ErrorCode::kNotReady, "search: index not built");
        return index_->search(reduce(text_vec, pca_text_, options_.text_dim, "query"), top_n, resolve_nprobe(nprobe));
    }

    // ---- decider ----

    void
    set_decider(DeciderModel<float> model) {
        require(model.config.text_dim == options_.text_dim && model.config.image_dim == options_.image_dim,
                ErrorCode::kDimensionMismatch, "decider dims do not match the store");
        require(model.consistent(), ErrorCode::kInvalidArgument, "decider parameters do not match its config");
        decider_ = std::move(model);
    }

    const std::optional<DeciderModel<float>>&
    decider() const noexcept {
        return decider_;
    }

    /// Decider input for a pair, in canonical (lower id first) order.
    PairSample
    pair_sample(std::string_view id_a, std::string_view id_b, Label label = Label::kNotMatch) const {
        if (id_b < id_a) {
            std::swap(id_a, id_b);
        }
        return make_pair_sample(record(id_a), record(id_b), options_.image_dim, label);
    }

    PairDecision
    score_pair(std::string_view id_a, std::string_view id_b, double threshold = kDefaultThreshold) const {
        require(id_a != id_b, ErrorCode::kInvalidArgument, "score_pair: ids must differ");
        const auto& model = ready_decider();
        const PairSample s = pair_sample(id_a, id_b);
        const MatchDecision d = decide(model, s, threshold);
        const auto [lo, hi] = ordered(id_a, id_b);
        return {std::string(lo), std::string(hi), d.probability, d.label, 0, 0.0};
    }

    /// One decision per candidate, retrieval rank and score carried through.
    std::vector<PairDecision>
    score_candidates(std::string_view query_id, std::span<const SearchResult> candidates,
                     double threshold = kDefaultThreshold, size_t threads = 1) const {
        check_threshold(threshold);
        const auto& model = ready_decider();
        record(query_id);
        std::vector<PairSample> samples;
        samples.reserve(candidates.size());
        for (const auto& c : candidates) {
            require(c.id != query_id, ErrorCode::kInvalidArgument, "score_candidates: candidate equals query");
            samples.push_back(pair_sample(query_id, c.id));
        }
        const auto probs = match_probabilities(model, std::span<const PairSample>(samples), threads);
        std::vector<PairDecision> out;
        out.reserve(candidates.size());
        for (size_t i = 0; i < candidates.size(); ++i) {
            const auto [lo, hi] = ordered(query_id, candidates[i].id);
            const MatchDecision d = decision_from_probability(probs[i], threshold);
            out.push_back({std::string(lo), std::string(hi), d.probability, d.label, candidates[i].rank,
                           candidates[i].score});
        }
        return out;
    }

    /// Retrieves top_n candidates for every record, scores each unordered pair
    /// once and groups Match edges by transitive closure. A pair keeps the
    /// rank/score of its first retrieval in ascending query-id order.
    DedupeResult
    dedupe(const DedupeOptions& opt = {}) const {
        check_threshold(opt.threshold);
        const auto& model = ready_decider();
        require(index_.has_value(), ErrorCode::kNotReady, "dedupe: index not built");
        const size_t nprobe = resolve_nprobe(opt.nprobe);

        std::vector<const std::string*> ids;
        ids.reserve(records_.size());
        for (const auto& kv : records_) {
            ids.push_back(&kv.first);
        }
        std::vector<std::vector<SearchResult>> found(ids.size());
        parallel_for(ids.size(), opt.threads, [&](size_t i) {
            found[i] = find_candidates(*ids[i], opt.top_n, nprobe);
        });

        DedupeResult result;
        std::set<std::pair<std::string_view, std::string_view>> seen;
        for (size_t i = 0; i < ids.size(); ++i) {
            const std::string_view q = *ids[i];
            for (const auto& c : found[i]) {
                const auto key = ordered(q, c.id);
                if (seen.insert(key).second) {
                    result.decisions.push_back(
                        {std::string(key.first), std::string(key.second), 0.0, Label::kNotMatch, c.rank, c.score});
                }
            }
        }
        found.clear();
        std::sort(result.decisions.begin(), result.decisions.end(), [](const PairDecision& a, const PairDecision& b) {
            return std::tie(a.id_a, a.id_b) < std::tie(b.id_a, b.id_b);
        });

        const size_t chunk = std::max<size_t>(opt.score_chunk, 1);
        for (size_t lo = 0; lo < result.decisions.size(); lo += chunk) {
            const size_t hi = std::min(result.decisions.size(), lo + chunk);
            std::vector<PairSample> samples;
            samples.reserve(hi - lo);
            for (size_t i = lo; i < hi; ++i) {
                samples.push_back(pair_sample(result.decisions[i].id_a, result.decisions[i].id_b));
            }
            const auto probs = match_probabilities(model, std::span<const PairSample>(samples), opt.threads);
            for (size_t i = lo; i < hi; ++i) {
                const MatchDecision d = decision_from_probability(probs[i - lo], opt.threshold);
                result.decisions[i].probability = d.probability;
                result.decisions[i].label = d.label;
            }
        }
        result.groups = group_matches(result.decisions);
        return result;
    }

    // ---- bookkeeping ----

    StoreStats
    stats() const {
        StoreStats s;
        s.records = records_.size();
        s.text_dim = options_.text_dim;
        s.image_dim = options_.image_dim;
        for (const auto& [id, r] : records_) {
            s.memory_bytes += id.size() + r.text_vec.dim() * sizeof(float);
            if (r.image_vec) {
                s.memory_bytes += r.image_vec->dim() * sizeof(float);
            }
        }
        if (index_) {
            s.index_built = true;
            s.nlist = index_->nlist();
            s.metric = index_->metric();
            s.index_seed = index_->params().seed;
            s.default_nprobe = default_nprobe(index_->nlist());
            s.memory_bytes += index_->memory_footprint().total;
        }
        if (pca_text_) {
            s.pca_text_source = pca_text_->source_dim();
        }
        if (pca_image_) {
            s.pca_image_source = pca_image_->source_dim();
        }
        s.decider_loaded = decider_.has_value();
        s.decider_trained = decider_ && decider_->trained;
        return s;
    }

private:
    static std::pair<std::string_view, std::string_view>
    ordered(std::string_view a, std::string_view b) {
        return b < a ? std::pair{b, a} : std::pair{a, b};
    }

    static double
    squared_norm(const EmbeddingVector& v) {
        return kernels::dot<double>(v.data(), v.data(), v.dim());
    }

    static EmbeddingVector
    reduce(const EmbeddingVector& v, const std::optional<PcaModel>& pca, size_t target, const char* what) {
        if (v.dim() == target) {
            return v;
        }
        if (pca && v.dim() == pca->source_dim()) {
            return pca->transform(v);
        }
        fail(ErrorCode::kDimensionMismatch, std::string(what) + " has dim " + std::to_string(v.dim()) + ", expected " +
                                                std::to_string(target) +
                                                (pca ? " or " + std::to_string(pca->source_dim()) : std::string()));
    }

    void
    ingest_line(std::string_view line, IngestReport& report) {
        if (line.find_first_not_of(" \t") == std::string_view::npos) {
            report.rejects.push_back({report.lines, {}, "empty line"});
            return;
        }
        std::string id;
        try {
            json j;
            try {
                j = json::parse(line);
            } catch (const json::parse_error& e) {
                fail(ErrorCode::kInvalidArgument, std::string("malformed JSON: ") + e.what());
            }
            if (j.is_object() && j.contains("id") && j["id"].is_string()) {
                id = j["id"].get<std::string>();
            }
            add(record_from_json(j));
            ++report.accepted;
        } catch (const Error& e) {
            report.rejects.push_back({report.lines, std::move(id), e.what()});
        }
    }

    const DeciderModel<float>&
    ready_decider() const {
        require(decider_.has_value(), ErrorCode::kNotReady, "no decider model loaded");
        require(decider_->trained, ErrorCode::kNotReady, "decider model has not been trained");
        return *decider_;
    }

    template <typename Fn>
    static void
    parallel_for(size_t n, size_t threads, Fn&& fn) {
        threads = std::clamp<size_t>(threads, 1, std::max<size_t>(n, 1));
        if (threads == 1) {
            for (size_t i = 0; i < n; ++i) {
                fn(i);
            }
            return;
        }
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(threads);
        for (size_t t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                try {
                    for (size_t i = n * t / threads; i < n * (t + 1) / threads; ++i) {
                        fn(i);
                    }
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
    }

    StoreOptions options_;
    std::map<std::string, ProductRecord, std::less<>> records_;
    std::optional<IvfIndex> index_;
    std::optional<PcaModel> pca_text_;
    std::optional<PcaModel> pca_image_;
    std::optional<DeciderModel<float>> decider_;
};

// ---- training data ----

struct LabeledPair {
    IdPair pair;
    Label label = Label::kMatch;
};

/// Pairs JSONL: {"id_a": str, "id_b": str, "label": "match" | "not_match"}.
/// A missing label means match.
inline std::vector<LabeledPair>
read_pairs_jsonl(std::istream& in) {
    std::vector<LabeledPair> out;
    std::string line;
    size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            fail(ErrorCode::kInvalidArgument, "pairs line " + std::to_string(n) + ": malformed JSON");
        }
        const std::string where = "pairs line " + std::to_string(n);
        require(j.is_object() && j.contains("id_a") && j["id_a"].is_string() && j.contains("id_b") &&
                    j["id_b"].is_string(),
                ErrorCode::kInvalidArgument, where + ": id_a and id_b must be strings");
        Label label = Label::kMatch;
        if (j.contains("label")) {
            require(j["label"].is_string(), ErrorCode::kInvalidArgument, where + ": label must be a string");
            const auto s = j["label"].get<std::string>();
            require(s == "match" || s == "not_match", ErrorCode::kInvalidArgument, where + ": unknown label " + s);
            label = s == "match" ? Label::kMatch : Label::kNotMatch;
        }
        out.push_back({IdPair::canonical(j["id_a"].get<std::string>(), j["id_b"].get<std::string>()), label});
    }
    return out;
}

struct TrainingPairOptions {
    size_t negatives_per_positive = 1;
    size_t hard_negative_pool = 10;  // top-n candidates searched for hard negatives
    double hard_fraction = 0.5;      // rest are uniform random pairs
    uint64_t seed = 0;
};

/// Builds decider training samples from known pairs. Known matches become
/// Match samples; each one also contributes negatives: nearest retrieved
/// neighbours of id_a that are not known matches (hard) and uniformly drawn
/// ids (easy). Labelled not_match pairs are used as given.
inline std::vector<PairSample>
training_pairs(const CatalogStore& store, std::span<const LabeledPair> known, const TrainingPairOptions& opt = {}) {
    require(opt.hard_fraction >= 0.0 && opt.hard_fraction <= 1.0, ErrorCode::kInvalidArgument,
            "hard_fraction must be in [0, 1]");
    require(store.size() >= 2, ErrorCode::kNotReady, "training_pairs: store needs at least two records");
    std::set<IdPair> positives;
    for (const auto& k : known) {
        if (k.label == Label::kMatch) {
            positives.insert(k.pair);
        }
    }
    std::vector<const std::string*> ids;
    for (const auto& kv : store.records()) {
        ids.push_back(&kv.first);
    }
    Rng rng(opt.seed);
    std::vector<PairSample> out;
    std::set<IdPair> used;
    for (const auto& k : known) {
        out.push_back(store.pair_sample(k.pair.id_a, k.pair.id_b, k.label));
        used.insert(k.pair);
        if (k.label != Label::kMatch) {
            continue;
        }
        std::vector<SearchResult> pool;
        if (store.index() && opt.hard_fraction > 0.0) {
            pool = store.find_candidates(k.pair.id_a, opt.hard_negative_pool);
        }
        size_t pool_pos = 0;
        for (size_t t = 0; t < opt.negatives_per_positive; ++t) {
            const bool hard = rng.uniform() < opt.hard_fraction;
            std::optional<IdPair> neg;
            if (hard) {
                while (pool_pos < pool.size() && !neg) {
                    IdPair cand = IdPair::canonical(k.pair.id_a, pool[pool_pos++].id);
                    if (!positives.contains(cand) && !used.contains(cand)) {
                        neg = std::move(cand);
                    }
                }
            }
            for (int attempt = 0; attempt < 16 && !neg; ++attempt) {
                const std::string& other = *ids[rng.uniform_int(ids.size())];
                if (other == k.pair.id_a) {
                    continue;
                }
                IdPair cand = IdPair::canonical(k.pair.id_a, other);
                if (!positives.contains(cand) && !used.contains(cand)) {
                    neg = std::move(cand);
                }
            }
            if (neg) {
                out.push_back(store.pair_sample(neg->id_a, neg->id_b, Label::kNotMatch));
                used.insert(*neg);
            }
        }
    }
    return out;
}

// ---- JSON forms ----

inline json
to_json(const SearchResult& r) {
    return {{"id", r.id}, {"score", r.score}, {"rank", r.rank}};
}

inline json
to_json(const PairDecision& d) {
    return {{"id_a", d.id_a},
            {"id_b", d.id_b},
            {"probability", d.probability},
            {"label", to_string(d.label)},
            {"retrieval_rank", d.retrieval_rank},
            {"retrieval_score", d.retrieval_score}};
}

inline json
to_json(const DuplicateGroup& g) {
    return {{"representative", g.representative}, {"members", g.members}};
}

inline json
to_json(const IngestReport& r) {
    json rejects = json::array();
    for (const auto& x : r.rejects) {
        rejects.push_back({{"line", x.line}, {"id", x.id}, {"reason", x.reason}});
    }
    return {{"lines", r.lines}, {"accepted", r.accepted}, {"rejected", rejects}};
}

inline json
to_json(const StoreStats& s) {
    json j{{"count", s.records},
           {"memory_bytes", s.memory_bytes},
           {"text_dim", s.text_dim},
           {"image_dim", s.image_dim},
           {"decider", {{"loaded", s.decider_loaded}, {"trained", s.decider_trained}}}};
    if (s.index_built) {
        j["index"] = {{"built", true},
                      {"nlist", s.nlist},
                      {"metric", std::string(to_string(s.metric))},
                      {"seed", s.index_seed},
                      {"default_nprobe", s.default_nprobe}};
    } else {
        j["index"] = {{"built", false}};
    }
    j["pca"] = {{"text_source_dim", s.pca_text_source ? json(*s.pca_text_source) : json(nullptr)},
                {"image_source_dim", s.pca_image_source ? json(*s.pca_image_source) : json(nullptr)}};
    return j;
}

/// Decision log as JSONL, one decision per line.
inline void
write_decisions_jsonl(std::ostream& os, std::span<const PairDecision> decisions) {
    for (const auto& d : decisions) {
        os << to_json(d).dump() << '\n';
    }
}

inline json
groups_to_json(std::span<const DuplicateGroup> groups) {
    json arr = json::array();
    for (const auto& g : groups) {
        arr.push_back(to_json(g));
    }
    return {{"group_count", groups.size()}, {"groups", arr}};
}

}  // namespace ddup
