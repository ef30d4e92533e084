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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>

namespace ddup {

/// Seeded generator with portable, bit-reproducible draws.
///
/// std::mt19937_64 is fully specified by the standard, but the distribution
/// adaptors are not, so the conversions to uniform/normal variates live here.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {
    }

    uint64_t
    next_u64() {
        return engine_();
    }

    /// Uniform in [0, 1) with 53 bits of mantissa.
    double
    uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double
    uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    /// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    uint64_t
    uniform_int(uint64_t n) {
        if (n <= 1) {
            return 0;
        }
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /// Standard normal via the Marsaglia polar method.
    double
    normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    template <typename It>
    void
    shuffle(It first, It last) {
        const auto n = static_cast<uint64_t>(last - first);
        for (uint64_t i = n; i > 1; --i) {
            const uint64_t j = uniform_int(i);
            using std::swap;
            swap(first[i - 1], first[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace ddup
