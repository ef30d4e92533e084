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

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <set>

#include "ddup/core/random.hpp"
#include "ddup/index/flat_index.hpp"
#include "ddup/index/ivf_index.hpp"
#include "oracles.hpp"

using namespace ddup;
using Catch::Approx;

namespace {

std::string
make_id(size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "p%06zu", i);
    return buf;
}

std::vector<IdVector>
random_records(size_t n, size_t dim, uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::vector<IdVector> out;
    for (size_t i = 0; i < n; ++i) {
        out.push_back({make_id(i), EmbeddingVector(oracle::random_vector(gen, dim))});
    }
    return out;
}

// n points around `clusters` random unit centres with small spread.
std::vector<IdVector>
clustered_records(size_t n, size_t dim, size_t clusters, double spread, uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::vector<std::vector<float>> centres;
    for (size_t c = 0; c < clusters; ++c) {
        auto v = normalize(EmbeddingVector(oracle::random_vector(gen, dim)));
        centres.emplace_back(v.values().begin(), v.values().end());
    }
    std::normal_distribution<double> nd(0.0, spread);
    std::vector<IdVector> out;
    for (size_t i = 0; i < n; ++i) {
        auto v = centres[i % clusters];
        for (auto& x : v) {
            x += static_cast<float>(nd(gen));
        }
        out.push_back({make_id(i), EmbeddingVector(std::move(v))});
    }
    return out;
}

std::vector<std::string>
ids_of(const std::vector<SearchResult>& rs) {
    std::vector<std::string> out;
    for (const auto& r : rs) {
        out.push_back(r.id);
    }
    return out;
}

}  // namespace

TEST_CASE("single record index", "[ut][ivf]") {
    std::vector<IdVector> recs = {{"only", EmbeddingVector{1, 2, 3}}};
    IvfParams p;
    p.nlist = 1;
    const auto idx = IvfIndex::build(recs, p);
    REQUIRE(idx.nlist() == 1);
    REQUIRE(idx.size() == 1);
    REQUIRE(idx.list_size(0) == 1);
    const auto res = idx.search(EmbeddingVector{1, 2, 3}, 5, 1);
    REQUIRE(res.size() == 1);
    REQUIRE(res[0].id == "only");
    REQUIRE(res[0].rank == 1);
    REQUIRE(res[0].score == Approx(1.0).margin(1e-6));
}

TEST_CASE("build assigns every record to its nearest centroid", "[ut][ivf]") {
    const auto recs = random_records(1000, 32, 4);
    for (Metric m : {Metric::kL2, Metric::kInnerProduct, Metric::kCosine}) {
        IvfParams p;
        p.nlist = 16;
        p.metric = m;
        const auto idx = IvfIndex::build(recs, p);
        size_t total = 0;
        for (size_t l = 0; l < idx.nlist(); ++l) {
            total += idx.list_size(l);
        }
        REQUIRE(total == 1000);
        REQUIRE(idx.size() == 1000);

        // Independent assignment: nearest centroid by a scalar loop.
        for (const auto& r : recs) {
            std::vector<float> v(r.vec.values().begin(), r.vec.values().end());
            if (m == Metric::kCosine) {
                const double n = std::sqrt(oracle::dot(v, v));
                for (auto& x : v) {
                    x = static_cast<float>(x / n);
                }
            }
            size_t best = 0;
            double best_key = 1e300;
            for (size_t l = 0; l < idx.nlist(); ++l) {
                std::vector<float> c(idx.centroid(l).begin(), idx.centroid(l).end());
                const double key = m == Metric::kL2 ? oracle::l2(v, c) : -oracle::dot(v, c);
                if (key < best_key) {
                    best_key = key;
                    best = l;
                }
            }
            REQUIRE(idx.list_of(r.id) == best);
        }
    }
}

TEST_CASE("build is deterministic", "[ut][ivf]") {
    const auto recs = random_records(500, 16, 5);
    IvfParams p;
    p.nlist = 12;
    p.seed = 77;
    const auto a = IvfIndex::build(recs, p);
    const auto b = IvfIndex::build(recs, p);
    REQUIRE(std::vector<float>(a.centroids().begin(), a.centroids().end()) ==
            std::vector<float>(b.centroids().begin(), b.centroids().end()));
    for (size_t l = 0; l < a.nlist(); ++l) {
        REQUIRE(a.list_ids(l) == b.list_ids(l));
    }
}

TEST_CASE("build errors", "[ut][ivf]") {
    auto recs = random_records(10, 4, 6);
    IvfParams p;
    p.nlist = 11;
    REQUIRE_THROWS_AS(IvfIndex::build(recs, p), Error);
    p.nlist = 2;
    recs.push_back(recs.front());
    try {
        (void)IvfIndex::build(recs, p);
        FAIL("expected throw");
    } catch (const Error& e) {
        REQUIRE(e.code() == ErrorCode::kDuplicateId);
    }
    REQUIRE_THROWS_AS(IvfIndex::build({}, p), Error);
}

TEST_CASE("exhaustive probing equals brute force", "[ut][ivf][property]") {
    const auto recs = random_records(10000, 32, 7);
    std::mt19937_64 gen(8);
    for (Metric m : {Metric::kCosine, Metric::kL2, Metric::kInnerProduct}) {
        IvfParams p;
        p.metric = m;
        p.nlist = 40;
        const auto idx = IvfIndex::build(recs, p);
        const FlatIndex flat(recs, m);
        for (int q = 0; q < 30; ++q) {
            const EmbeddingVector query(oracle::random_vector(gen, 32));
            const auto got = idx.search(query, 10, idx.nlist());
            const auto expect = flat.search(query, 10);
            REQUIRE(got == expect);
        }
    }
}

TEST_CASE("brute force agrees with an independent scalar scan", "[ut][ivf]") {
    const auto recs = random_records(1000, 24, 9);
    std::vector<std::vector<float>> rows;
    std::vector<std::string> ids;
    for (const auto& r : recs) {
        rows.emplace_back(r.vec.values().begin(), r.vec.values().end());
        ids.push_back(r.id);
    }
    std::mt19937_64 gen(10);
    for (int q = 0; q < 20; ++q) {
        const auto query = oracle::random_vector(gen, 24);
        for (bool use_l2 : {true, false}) {
            const auto got = brute_force_search(recs, EmbeddingVector(query), 15,
                                                use_l2 ? Metric::kL2 : Metric::kInnerProduct);
            const auto expect = oracle::scan_top_n(rows, ids, query, 15, use_l2);
            REQUIRE(got.size() == expect.size());
            for (size_t i = 0; i < got.size(); ++i) {
                REQUIRE(got[i].id == expect[i].second);
                REQUIRE(got[i].rank == i + 1);
                REQUIRE(got[i].score == Approx(use_l2 ? expect[i].first : -expect[i].first).margin(1e-5));
            }
        }
    }
}

TEST_CASE("brute force tie-break and edge cases", "[ut][ivf]") {
    std::vector<IdVector> recs = {{"b", EmbeddingVector{1, 0}}, {"a", EmbeddingVector{-1, 0}}};
    const auto res = brute_force_search(recs, EmbeddingVector{0, 1}, 2, Metric::kL2);
    REQUIRE(res[0].id == "a");
    REQUIRE(res[1].id == "b");
    REQUIRE(res[0].score == res[1].score);

    std::vector<IdVector> one = {{"x", EmbeddingVector{0, 1}}};
    REQUIRE(brute_force_search(one, EmbeddingVector{5, 5}, 3, Metric::kL2).size() == 1);
    REQUIRE_THROWS_AS(brute_force_search({}, EmbeddingVector{1}, 1, Metric::kL2), Error);
}

TEST_CASE("search errors", "[ut][ivf]") {
    const auto recs = random_records(100, 8, 11);
    IvfParams p;
    p.nlist = 4;
    const auto idx = IvfIndex::build(recs, p);
    REQUIRE_THROWS_AS(idx.search(EmbeddingVector{1, 2}, 5, 1), Error);
    REQUIRE_THROWS_AS(idx.search(recs[0].vec, 5, 0), Error);
    REQUIRE_THROWS_AS(idx.search(recs[0].vec, 5, 5), Error);
    REQUIRE_THROWS_AS(idx.search(recs[0].vec, 0, 1), Error);
}

TEST_CASE("partial probing on clustered data has high recall", "[ut][ivf]") {
    const auto recs = clustered_records(20000, 64, 64, 0.05, 12);
    IvfParams p;
    p.nlist = 64;
    const auto idx = IvfIndex::build(recs, p);
    const FlatIndex flat(recs, Metric::kCosine);
    std::mt19937_64 gen(13);
    std::vector<size_t> probes = {1, 2, 4, 8, 16, 64};
    std::vector<double> recall(probes.size(), 0.0);
    const int queries = 100;
    for (int q = 0; q < queries; ++q) {
        const auto& base = recs[gen() % recs.size()].vec;
        std::vector<float> qv(base.values().begin(), base.values().end());
        for (auto& x : qv) {
            x += static_cast<float>(std::normal_distribution<double>(0, 0.05)(gen));
        }
        const EmbeddingVector query(qv);
        const auto truth = ids_of(flat.search(query, 10));
        const std::set<std::string> ts(truth.begin(), truth.end());
        for (size_t i = 0; i < probes.size(); ++i) {
            const auto got = ids_of(idx.search(query, 10, probes[i]));
            size_t hit = 0;
            for (const auto& id : got) {
                hit += ts.count(id);
            }
            recall[i] += static_cast<double>(hit) / 10.0;
        }
    }
    for (auto& r : recall) {
        r /= queries;
    }
    for (size_t i = 1; i < recall.size(); ++i) {
        REQUIRE(recall[i] >= recall[i - 1]);
    }
    REQUIRE(recall[3] >= 0.95);  // nprobe = nlist / 8
    REQUIRE(recall.back() == 1.0);
}

TEST_CASE("insert and remove", "[ut][ivf]") {
    auto recs = random_records(300, 16, 14);
    IvfParams p;
    p.nlist = 8;
    auto idx = IvfIndex::build(std::span(recs).first(200), p);
    REQUIRE(idx.size() == 200);

    for (size_t i = 200; i < 300; ++i) {
        idx.insert(recs[i].id, recs[i].vec);
        REQUIRE(idx.list_of(recs[i].id) == idx.assign(recs[i].vec));
    }
    REQUIRE(idx.size() == 300);
    const auto hit = idx.search(recs[250].vec, 1, idx.nlist());
    REQUIRE(hit[0].id == recs[250].id);

    REQUIRE_THROWS_AS(idx.insert(recs[0].id, recs[0].vec), Error);
    REQUIRE_THROWS_AS(idx.insert("new", EmbeddingVector{1, 2}), Error);

    idx.remove(recs[250].id);
    REQUIRE(idx.size() == 299);
    REQUIRE_FALSE(idx.contains(recs[250].id));
    for (const auto& r : idx.search(recs[250].vec, 50, idx.nlist())) {
        REQUIRE(r.id != recs[250].id);
    }
    try {
        idx.remove(recs[250].id);
        FAIL("expected throw");
    } catch (const Error& e) {
        REQUIRE(e.code() == ErrorCode::kUnknownId);
    }
    idx.insert(recs[250].id, recs[250].vec);
    REQUIRE(idx.search(recs[250].vec, 1, idx.nlist())[0].id == recs[250].id);
}

TEST_CASE("remove the sole record leaves an empty index", "[ut][ivf]") {
    std::vector<IdVector> recs = {{"solo", EmbeddingVector{0.5F, 0.5F}}};
    IvfParams p;
    p.nlist = 1;
    auto idx = IvfIndex::build(recs, p);
    idx.remove("solo");
    REQUIRE(idx.size() == 0);
    REQUIRE(idx.list_size(0) == 0);
    REQUIRE(idx.search(EmbeddingVector{0.5F, 0.5F}, 3, 1).empty());
}

TEST_CASE("partition integrity under random insert/remove", "[ut][ivf][property]") {
    const auto recs = random_records(2000, 8, 15);
    IvfParams p;
    p.nlist = 10;
    auto idx = IvfIndex::build(std::span(recs).first(500), p);
    std::set<std::string> live;
    for (size_t i = 0; i < 500; ++i) {
        live.insert(recs[i].id);
    }
    Rng rng(16);
    for (int step = 0; step < 5000; ++step) {
        const auto& r = recs[rng.uniform_int(recs.size())];
        if (live.count(r.id)) {
            idx.remove(r.id);
            live.erase(r.id);
        } else {
            idx.insert(r.id, r.vec);
            live.insert(r.id);
        }
    }
    REQUIRE(idx.size() == live.size());
    std::multiset<std::string> seen;
    idx.for_each([&](size_t, std::string_view id, std::span<const float>) { seen.emplace(id); });
    REQUIRE(seen.size() == live.size());
    REQUIRE(std::set<std::string>(seen.begin(), seen.end()) == live);
    for (const auto& id : live) {
        REQUIRE(idx.contains(id));
    }

    // Still exact against brute force after churn.
    std::vector<IdVector> current;
    for (const auto& r : recs) {
        if (live.count(r.id)) {
            current.push_back(r);
        }
    }
    const FlatIndex flat(current, Metric::kCosine);
    std::mt19937_64 gen(17);
    for (int q = 0; q < 10; ++q) {
        const EmbeddingVector query(oracle::random_vector(gen, 8));
        REQUIRE(idx.search(query, 7, idx.nlist()) == flat.search(query, 7));
    }

    idx.rebuild(3);
    REQUIRE(idx.size() == live.size());
    for (int q = 0; q < 10; ++q) {
        const EmbeddingVector query(oracle::random_vector(gen, 8));
        REQUIRE(idx.search(query, 7, idx.nlist()) == flat.search(query, 7));
    }
}

TEST_CASE("memory footprint accounting", "[ut][ivf]") {
    const auto train = random_records(50, 128, 18);
    std::vector<EmbeddingVector> tv;
    for (const auto& r : train) {
        tv.push_back(r.vec);
    }
    IvfParams p;
    p.nlist = 4;
    const auto empty = IvfIndex::train(tv, p);
    const auto fp0 = empty.memory_footprint();
    REQUIRE(fp0.count == 0);
    REQUIRE(fp0.vector_payload == 0);
    REQUIRE(fp0.centroid_payload == 4 * 128 * sizeof(float));

    const auto recs = random_records(20000, 128, 19);
    p.nlist = 0;
    const auto idx = IvfIndex::build(recs, p);
    const auto fp = idx.memory_footprint();
    REQUIRE(fp.vector_payload == 20000u * 128u * 4u);
    REQUIRE(fp.total <= 1.25 * fp.vector_payload);
    REQUIRE(fp.total == fp.vector_payload + fp.centroid_payload + fp.id_bytes + fp.list_overhead);
}

TEST_CASE("default parameters", "[ut][ivf]") {
    REQUIRE(default_nlist(0) == 1);
    REQUIRE(default_nlist(10000) == 100);
    REQUIRE(default_nlist(10001) == 101);
    REQUIRE(default_nprobe(100) == 6);
    REQUIRE(default_nprobe(8) == 1);
}
