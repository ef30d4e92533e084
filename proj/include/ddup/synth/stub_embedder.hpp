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
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "ddup/core/product.hpp"
#include "ddup/core/random.hpp"
#include "ddup/decider/types.hpp"
#include "ddup/service/record_json.hpp"

namespace ddup {

/// Lowercases and collapses runs of whitespace to one space, trimming both ends.
inline std::string
normalize_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char ch : text) {
        if (std::isspace(ch)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(ch)));
    }
    return out;
}

/// 64-bit FNV-1a; stable across platforms and runs.
inline uint64_t
stable_hash(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline EmbeddingVector
random_unit_vector(Rng& rng, size_t dim) {
    std::vector<float> v(dim);
    double n2 = 0.0;
    do {
        n2 = 0.0;
        for (auto& x : v) {
            x = static_cast<float>(rng.normal());
            n2 += static_cast<double>(x) * x;
        }
    } while (n2 == 0.0);
    return normalize(EmbeddingVector(std::move(v)));
}

/// Unit vector keyed by the normalised text.
inline EmbeddingVector
hash_embed(std::string_view text, size_t dim) {
    require(dim >= 1, ErrorCode::kInvalidArgument, "hash_embed: dim must be positive");
    const std::string norm = normalize_text(text);
    require(!norm.empty(), ErrorCode::kInvalidArgument, "hash_embed: empty text");
    Rng rng(stable_hash(norm));
    return random_unit_vector(rng, dim);
}

struct SyntheticSpec {
    size_t num_clusters = 100;
    size_t dim = 128;
    double noise_sigma = 0.05;
    uint64_t seed = 0;
    // Centres live in a random subspace of this dimension; 0 means the full space.
    size_t intrinsic_dim = 0;
    bool with_images = true;

    void
    validate() const {
        require(num_clusters >= 1, ErrorCode::kInvalidArgument, "synthetic spec: num_clusters must be positive");
        require(dim >= 1, ErrorCode::kInvalidArgument, "synthetic spec: dim must be positive");
        require(noise_sigma >= 0.0 && std::isfinite(noise_sigma), ErrorCode::kInvalidArgument,
                "synthetic spec: noise_sigma must be finite and >= 0");
        require(intrinsic_dim <= dim, ErrorCode::kInvalidArgument, "synthetic spec: intrinsic_dim exceeds dim");
    }

    /// Typical centre distance (sqrt 2 for random unit vectors) over the
    /// expected noise norm sigma * sqrt(dim).
    double
    separation_ratio() const {
        return std::sqrt(2.0) / (noise_sigma * std::sqrt(static_cast<double>(dim)));
    }
};

/// Cluster centres on the unit sphere for text and image vectors, plus the
/// noise model used to draw products around them.
class SyntheticWorld {
   public:
    explicit SyntheticWorld(const SyntheticSpec& spec) : spec_(spec) {
        spec_.validate();
        Rng rng(spec_.seed);
        const size_t r = spec_.intrinsic_dim == 0 ? spec_.dim : spec_.intrinsic_dim;
        text_basis_ = r < spec_.dim ? orthonormal_basis(rng, r) : std::vector<float>{};
        image_basis_ = r < spec_.dim && spec_.with_images ? orthonormal_basis(rng, r) : std::vector<float>{};
        text_centers_.reserve(spec_.num_clusters);
        for (size_t c = 0; c < spec_.num_clusters; ++c) {
            text_centers_.push_back(embed(random_unit_vector(rng, r), text_basis_));
        }
        if (spec_.with_images) {
            image_centers_.reserve(spec_.num_clusters);
            for (size_t c = 0; c < spec_.num_clusters; ++c) {
                image_centers_.push_back(embed(random_unit_vector(rng, r), image_basis_));
            }
        }
    }

    const SyntheticSpec&
    spec() const noexcept {
        return spec_;
    }

    const EmbeddingVector&
    text_center(size_t c) const {
        return text_centers_.at(c);
    }

    const EmbeddingVector&
    image_center(size_t c) const {
        return image_centers_.at(c);
    }

    EmbeddingVector
    sample_text(size_t c, Rng& rng) const {
        return perturb(text_centers_.at(c), rng);
    }

    EmbeddingVector
    sample_image(size_t c, Rng& rng) const {
        return perturb(image_centers_.at(c), rng);
    }

    /// Pairs of independent draws; Match iff both draws share a cluster.
    std::vector<PairSample>
    pairs(size_t n_pairs, double match_fraction, uint64_t pair_seed) const {
        require(match_fraction >= 0.0 && match_fraction <= 1.0, ErrorCode::kInvalidArgument,
                "synth_pairs: match_fraction must be in [0, 1]");
        require(spec_.num_clusters >= 2 || match_fraction == 1.0, ErrorCode::kInvalidArgument,
                "synth_pairs: NotMatch pairs need at least two clusters");
        require(spec_.with_images, ErrorCode::kInvalidArgument, "synth_pairs: spec has no image vectors");
        Rng rng(pair_seed ^ (spec_.seed * 0x9e3779b97f4a7c15ULL));
        std::vector<PairSample> out;
        out.reserve(n_pairs);
        const size_t k = spec_.num_clusters;
        for (size_t i = 0; i < n_pairs; ++i) {
            const bool match = rng.uniform() < match_fraction;
            const size_t a = rng.uniform_int(k);
            size_t b = a;
            if (!match) {
                b = rng.uniform_int(k - 1);
                b += b >= a;
            }
            auto ta = sample_text(a, rng);
            auto ia = sample_image(a, rng);
            auto tb = sample_text(b, rng);
            auto ib = sample_image(b, rng);
            out.push_back(PairSample{std::move(ta), std::move(ia), std::move(tb), std::move(ib),
                                     match ? Label::kMatch : Label::kNotMatch});
        }
        return out;
    }

   private:
    // r x dim, rows orthonormal (Gram-Schmidt on Gaussian rows)
    std::vector<float>
    orthonormal_basis(Rng& rng, size_t r) const {
        const size_t d = spec_.dim;
        std::vector<double> b(r * d);
        for (size_t i = 0; i < r; ++i) {
            double* row = &b[i * d];
            for (;;) {
                for (size_t j = 0; j < d; ++j) {
                    row[j] = rng.normal();
                }
                for (int pass = 0; pass < 2; ++pass) {
                    for (size_t q = 0; q < i; ++q) {
                        const double* prev = &b[q * d];
                        double p = 0.0;
                        for (size_t j = 0; j < d; ++j) {
                            p += row[j] * prev[j];
                        }
                        for (size_t j = 0; j < d; ++j) {
                            row[j] -= p * prev[j];
                        }
                    }
                }
                double n = 0.0;
                for (size_t j = 0; j < d; ++j) {
                    n += row[j] * row[j];
                }
                n = std::sqrt(n);
                if (n > 1e-6) {
                    for (size_t j = 0; j < d; ++j) {
                        row[j] /= n;
                    }
                    break;
                }
            }
        }
        return std::vector<float>(b.begin(), b.end());
    }

    EmbeddingVector
    embed(const EmbeddingVector& low, const std::vector<float>& basis) const {
        if (basis.empty()) {
            return low;
        }
        const size_t d = spec_.dim;
        std::vector<double> out(d, 0.0);
        for (size_t i = 0; i < low.dim(); ++i) {
            for (size_t j = 0; j < d; ++j) {
                out[j] += static_cast<double>(low[i]) * basis[i * d + j];
            }
        }
        return EmbeddingVector(std::vector<float>(out.begin(), out.end()));
    }

    EmbeddingVector
    perturb(const EmbeddingVector& center, Rng& rng) const {
        std::vector<float> v(center.values().begin(), center.values().end());
        if (spec_.noise_sigma > 0.0) {
            for (auto& x : v) {
                x = static_cast<float>(x + spec_.noise_sigma * rng.normal());
            }
        }
        return EmbeddingVector(std::move(v));
    }

    SyntheticSpec spec_;
    std::vector<float> text_basis_;
    std::vector<float> image_basis_;
    std::vector<EmbeddingVector> text_centers_;
    std::vector<EmbeddingVector> image_centers_;
};

/// Canonically ordered (id_a < id_b) ground-truth duplicate pair.
struct IdPair {
    std::string id_a;
    std::string id_b;

    static IdPair
    canonical(std::string a, std::string b) {
        return a < b ? IdPair{std::move(a), std::move(b)} : IdPair{std::move(b), std::move(a)};
    }

    auto operator<=>(const IdPair&) const = default;
};

struct SyntheticCatalog {
    std::vector<ProductRecord> records;
    std::vector<IdPair> matches;       // sorted
    std::vector<size_t> cluster_of;    // per record
    std::vector<size_t> original_of;   // per record: index of the record it copies, or itself
};

inline std::string
synthetic_id(size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "p%07zu", i);
    return buf;
}

/// Product i is drawn around centre i % num_clusters. floor(dup_rate * n)
/// distinct products are copied under new ids with fresh noise.
inline SyntheticCatalog
synth_catalog(const SyntheticSpec& spec, size_t n_products, double dup_rate) {
    require(dup_rate >= 0.0 && dup_rate < 1.0, ErrorCode::kInvalidArgument, "synth_catalog: dup_rate must be in [0, 1)");
    const SyntheticWorld world(spec);
    Rng rng(spec.seed + 0x5851f42d4c957f2dULL);
    SyntheticCatalog cat;
    const size_t n_dups = static_cast<size_t>(std::floor(dup_rate * static_cast<double>(n_products)));
    cat.records.reserve(n_products + n_dups);
    auto add = [&](size_t cluster, size_t original) {
        const size_t i = cat.records.size();
        ProductRecord r{synthetic_id(i), world.sample_text(cluster, rng), std::nullopt, std::nullopt};
        if (spec.with_images) {
            r.image_vec = world.sample_image(cluster, rng);
        }
        cat.records.push_back(std::move(r));
        cat.cluster_of.push_back(cluster);
        cat.original_of.push_back(original);
    };
    for (size_t i = 0; i < n_products; ++i) {
        add(i % spec.num_clusters, i);
    }
    std::vector<size_t> order(n_products);
    std::iota(order.begin(), order.end(), size_t{0});
    rng.shuffle(order.begin(), order.end());
    order.resize(n_dups);
    std::sort(order.begin(), order.end());
    for (size_t src : order) {
        add(cat.cluster_of[src], src);
        cat.matches.push_back(IdPair::canonical(cat.records[src].id, cat.records.back().id));
    }
    std::sort(cat.matches.begin(), cat.matches.end());
    return cat;
}

inline std::vector<PairSample>
synth_pairs(const SyntheticSpec& spec, size_t n_pairs, double match_fraction = 0.5, uint64_t pair_seed = 1) {
    return SyntheticWorld(spec).pairs(n_pairs, match_fraction, pair_seed);
}

inline void
write_catalog_jsonl(std::ostream& os, const std::vector<ProductRecord>& records) {
    for (const auto& r : records) {
        write_record_json(os, r);
        os << '\n';
    }
}

inline void
write_pairs_jsonl(std::ostream& os, const std::vector<IdPair>& pairs) {
    for (const auto& p : pairs) {
        os << "{\"id_a\":" << json(p.id_a).dump() << ",\"id_b\":" << json(p.id_b).dump() << ",\"label\":\"match\"}\n";
    }
}

}  // namespace ddup
