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

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ddup/core/error.hpp"
#include "ddup/core/random.hpp"
#include "ddup/core/vector.hpp"
#include "ddup/index/flat_index.hpp"
#include "ddup/index/ivf_index.hpp"
#include "ddup/service/record_json.hpp"

namespace ddup {

/// Bytes currently allocated through malloc, or -1 where the allocator
/// cannot report it.
inline long long
heap_in_use() {
#if defined(__GLIBC__) && (__GLIBC__ > 2 || (__GLIBC__ == 2 && __GLIBC_MINOR__ >= 33))
    const struct mallinfo2 mi = ::mallinfo2();
    return static_cast<long long>(mi.uordblks + mi.hblkhd);
#else
    return -1;
#endif
}

namespace bench_detail {

inline std::vector<IdVector>
random_entries(size_t count, size_t dim, uint64_t seed) {
    Rng rng(seed);
    std::vector<IdVector> out;
    out.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        std::vector<float> v(dim);
        for (auto& x : v) {
            x = static_cast<float>(rng.uniform(-1.0, 1.0));
        }
        out.push_back({"v" + std::to_string(i), EmbeddingVector(std::move(v))});
    }
    return out;
}

// Points scattered around `clusters` random centres.
inline std::vector<IdVector>
clustered_entries(size_t count, size_t dim, size_t clusters, double sigma, uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<float>> centres(clusters, std::vector<float>(dim));
    for (auto& c : centres) {
        for (auto& x : c) {
            x = static_cast<float>(rng.uniform(-1.0, 1.0));
        }
    }
    std::vector<IdVector> out;
    out.reserve(count);
    for (size_t i = 0; i < count; ++i) {
        const auto& c = centres[rng.uniform_int(clusters)];
        std::vector<float> v(dim);
        for (size_t j = 0; j < dim; ++j) {
            v[j] = static_cast<float>(c[j] + sigma * rng.normal());
        }
        out.push_back({"v" + std::to_string(i), EmbeddingVector(std::move(v))});
    }
    return out;
}

inline double
quantile(std::vector<double> v, double q) {
    if (v.empty()) {
        return 0.0;
    }
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace bench_detail

struct MemoryBenchOptions {
    std::vector<size_t> dims = {128, 256, 512, 1024};
    std::vector<size_t> counts = {100000};
    size_t nlist = 0;  // 0: default_nlist(count), identical across dims
    Metric metric = Metric::kL2;
    uint64_t seed = 0;
    // Centroid quality does not affect the footprint, so k-means is kept short.
    size_t kmeans_iters = 2;
    size_t max_points_per_centroid = 16;
    size_t baseline_dim = 128;
};

struct MemoryBenchRow {
    size_t dim = 0;
    size_t count = 0;
    size_t nlist = 0;
    MemoryFootprint footprint;
    long long heap_bytes = -1;  // malloc delta across the build, -1 if unavailable
    double ratio = std::numeric_limits<double>::quiet_NaN();  // total vs baseline dim at the same count
    double build_seconds = 0.0;

    double
    payload_per_vector() const {
        return static_cast<double>(dim * sizeof(float));
    }

    double
    overhead_per_vector() const {
        return count == 0 ? 0.0 : footprint.bytes_per_vector() - payload_per_vector();
    }
};

struct MemoryBenchReport {
    std::vector<MemoryBenchRow> rows;
    size_t baseline_dim = 128;

    const MemoryBenchRow*
    find(size_t dim, size_t count) const {
        for (const auto& r : rows) {
            if (r.dim == dim && r.count == count) {
                return &r;
            }
        }
        return nullptr;
    }

    void
    write_table(std::ostream& os) const {
        os << "dim\tcount\tnlist\ttotal_bytes\tbytes_per_vector\toverhead_per_vector\theap_bytes\tratio_vs_"
           << baseline_dim << "\tbuild_s\n";
        for (const auto& r : rows) {
            os << r.dim << '\t' << r.count << '\t' << r.nlist << '\t' << r.footprint.total << '\t'
               << r.footprint.bytes_per_vector() << '\t' << r.overhead_per_vector() << '\t' << r.heap_bytes << '\t';
            if (std::isnan(r.ratio)) {
                os << '-';
            } else {
                os << r.ratio;
            }
            os << '\t' << r.build_seconds << '\n';
        }
    }

    json
    to_json() const {
        json arr = json::array();
        for (const auto& r : rows) {
            arr.push_back({{"dim", r.dim},
                           {"count", r.count},
                           {"nlist", r.nlist},
                           {"total_bytes", r.footprint.total},
                           {"vector_payload", r.footprint.vector_payload},
                           {"centroid_payload", r.footprint.centroid_payload},
                           {"id_bytes", r.footprint.id_bytes},
                           {"list_overhead", r.footprint.list_overhead},
                           {"bytes_per_vector", r.footprint.bytes_per_vector()},
                           {"heap_bytes", r.heap_bytes},
                           {"ratio", std::isnan(r.ratio) ? json(nullptr) : json(r.ratio)},
                           {"build_seconds", r.build_seconds}});
        }
        return {{"baseline_dim", baseline_dim}, {"rows", arr}};
    }
};

/// Builds an index over seeded uniform random vectors for every (dim, count)
/// and records its footprint. Count 0 yields a trained, empty index whose
/// footprint is the centroids plus fixed structure.
inline MemoryBenchReport
bench_memory(const MemoryBenchOptions& opt = {}) {
    require(!opt.dims.empty() && !opt.counts.empty(), ErrorCode::kInvalidArgument, "bench_memory: empty sweep");
    MemoryBenchReport report;
    report.baseline_dim = opt.baseline_dim;
    for (size_t count : opt.counts) {
        for (size_t dim : opt.dims) {
            require(dim >= 1, ErrorCode::kInvalidArgument, "bench_memory: dim must be >= 1");
            IvfParams p;
            p.nlist = opt.nlist != 0 ? opt.nlist : default_nlist(count);
            p.metric = opt.metric;
            p.seed = opt.seed;
            p.max_iters = opt.kmeans_iters;
            p.max_points_per_centroid = opt.max_points_per_centroid;
            MemoryBenchRow row;
            row.dim = dim;
            row.count = count;
            const auto t0 = std::chrono::steady_clock::now();
            if (count == 0) {
                std::vector<EmbeddingVector> sample;
                for (auto& e : bench_detail::random_entries(p.nlist, dim, opt.seed + dim)) {
                    sample.push_back(std::move(e.vec));
                }
                const long long before = heap_in_use();
                const IvfIndex idx = IvfIndex::train(sample, p);
                const long long after = heap_in_use();
                row.heap_bytes = before < 0 ? -1 : after - before;
                row.footprint = idx.memory_footprint();
                row.nlist = idx.nlist();
            } else {
                const auto entries = bench_detail::random_entries(count, dim, opt.seed + dim);
                const long long before = heap_in_use();
                const IvfIndex idx = IvfIndex::build(entries, p);
                const long long after = heap_in_use();
                row.heap_bytes = before < 0 ? -1 : after - before;
                row.footprint = idx.memory_footprint();
                row.nlist = idx.nlist();
            }
            row.build_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            report.rows.push_back(row);
        }
    }
    for (auto& r : report.rows) {
        if (const auto* base = report.find(opt.baseline_dim, r.count); base != nullptr && base->footprint.total > 0) {
            r.ratio = static_cast<double>(r.footprint.total) / static_cast<double>(base->footprint.total);
        }
    }
    return report;
}

/// Least-squares fit y = a + b x and its coefficient of determination.
struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r_squared = 0.0;
};

inline LinearFit
fit_line(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size() && x.size() >= 2, ErrorCode::kInvalidArgument, "fit_line: need >= 2 points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    require(sxx > 0.0, ErrorCode::kInvalidArgument, "fit_line: x values are all equal");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return f;
}

struct LatencyBenchOptions {
    size_t count = 100000;
    size_t dim = 128;
    size_t top_n = 10;
    size_t queries = 200;
    size_t nlist = 0;               // 0: default_nlist(count)
    std::vector<size_t> nprobes;    // empty: powers of two up to nlist, then nlist
    size_t clusters = 0;            // 0: uniform random data; otherwise Gaussian blobs
    double cluster_sigma = 0.1;
    Metric metric = Metric::kL2;
    uint64_t seed = 0;
    size_t kmeans_iters = 10;
};

struct LatencyRow {
    size_t nprobe = 0;
    double median_us = 0.0;
    double p99_us = 0.0;
    double recall = 0.0;  // mean |approx ∩ exact| / top_n
};

struct LatencyBenchReport {
    size_t count = 0;
    size_t dim = 0;
    size_t nlist = 0;
    size_t top_n = 0;
    double build_seconds = 0.0;
    double brute_force_median_us = 0.0;
    std::vector<LatencyRow> rows;

    void
    write_table(std::ostream& os) const {
        os << "# count=" << count << " dim=" << dim << " nlist=" << nlist << " top_n=" << top_n
           << " build_s=" << build_seconds << " brute_force_median_us=" << brute_force_median_us << '\n';
        os << "nprobe\tmedian_us\tp99_us\trecall\n";
        for (const auto& r : rows) {
            os << r.nprobe << '\t' << r.median_us << '\t' << r.p99_us << '\t' << r.recall << '\n';
        }
    }

    json
    to_json() const {
        json arr = json::array();
        for (const auto& r : rows) {
            arr.push_back({{"nprobe", r.nprobe}, {"median_us", r.median_us}, {"p99_us", r.p99_us}, {"recall", r.recall}});
        }
        return {{"count", count},
                {"dim", dim},
                {"nlist", nlist},
                {"top_n", top_n},
                {"build_seconds", build_seconds},
                {"brute_force_median_us", brute_force_median_us},
                {"rows", arr}};
    }
};

/// Per-query latency and recall@top_n against an exhaustive scan, swept over
/// nprobe. Queries are fresh draws from the data distribution.
inline LatencyBenchReport
bench_latency(const LatencyBenchOptions& opt = {}) {
    require(opt.count >= 1 && opt.dim >= 1 && opt.top_n >= 1 && opt.queries >= 1, ErrorCode::kInvalidArgument,
            "bench_latency: count, dim, top_n and queries must be >= 1");
    const size_t total = opt.count + opt.queries;
    auto all = opt.clusters == 0
                   ? bench_detail::random_entries(total, opt.dim, opt.seed)
                   : bench_detail::clustered_entries(total, opt.dim, opt.clusters, opt.cluster_sigma, opt.seed);
    std::vector<EmbeddingVector> queries;
    for (size_t i = opt.count; i < total; ++i) {
        queries.push_back(std::move(all[i].vec));
    }
    all.erase(all.begin() + static_cast<std::ptrdiff_t>(opt.count), all.end());

    IvfParams p;
    p.nlist = opt.nlist != 0 ? opt.nlist : default_nlist(opt.count);
    p.metric = opt.metric;
    p.seed = opt.seed;
    p.max_iters = opt.kmeans_iters;
    LatencyBenchReport report;
    report.count = opt.count;
    report.dim = opt.dim;
    report.top_n = opt.top_n;
    const auto t0 = std::chrono::steady_clock::now();
    const IvfIndex idx = IvfIndex::build(all, p);
    report.build_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.nlist = idx.nlist();

    using clock = std::chrono::steady_clock;
    const FlatIndex flat(all, opt.metric);
    std::vector<std::vector<std::string>> truth;
    std::vector<double> bf_us;
    for (const auto& q : queries) {
        const auto s = clock::now();
        const auto hits = flat.search(q, opt.top_n);
        bf_us.push_back(std::chrono::duration<double, std::micro>(clock::now() - s).count());
        std::vector<std::string> ids;
        for (const auto& h : hits) {
            ids.push_back(h.id);
        }
        std::sort(ids.begin(), ids.end());
        truth.push_back(std::move(ids));
    }
    report.brute_force_median_us = bench_detail::quantile(bf_us, 0.5);

    std::vector<size_t> nprobes = opt.nprobes;
    if (nprobes.empty()) {
        for (size_t np = 1; np < report.nlist; np *= 2) {
            nprobes.push_back(np);
        }
        nprobes.push_back(report.nlist);
    }
    for (size_t np : nprobes) {
        require(np >= 1 && np <= report.nlist, ErrorCode::kInvalidArgument,
                "bench_latency: nprobe " + std::to_string(np) + " outside [1, nlist]");
        LatencyRow row;
        row.nprobe = np;
        std::vector<double> us;
        us.reserve(queries.size());
        size_t found = 0;
        size_t expected = 0;
        for (size_t qi = 0; qi < queries.size(); ++qi) {
            const auto s = clock::now();
            const auto hits = idx.search(queries[qi], opt.top_n, np);
            us.push_back(std::chrono::duration<double, std::micro>(clock::now() - s).count());
            for (const auto& h : hits) {
                found += std::binary_search(truth[qi].begin(), truth[qi].end(), h.id) ? 1 : 0;
            }
            expected += truth[qi].size();
        }
        row.median_us = bench_detail::quantile(us, 0.5);
        row.p99_us = bench_detail::quantile(us, 0.99);
        row.recall = expected == 0 ? 1.0 : static_cast<double>(found) / static_cast<double>(expected);
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace ddup
