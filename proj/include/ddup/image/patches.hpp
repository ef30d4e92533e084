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

#include <array>
#include <cstddef>
#include <cstdint>

#include "ddup/core/random.hpp"
#include "ddup/image/image.hpp"

namespace ddup {

enum class PatchKind : uint8_t { kCenter, kRandom, kResizedFull };

struct PatchTag {
    PatchKind kind = PatchKind::kCenter;
    // kRandom: position among the eight non-centre cells, 0..7 in row-major order.
    size_t index = 0;

    /// Row-major cell of the 3x3 grid (0..8); the resized full image has none.
    size_t
    grid_cell() const noexcept {
        if (kind == PatchKind::kCenter) {
            return 4;
        }
        return index < 4 ? index : index + 1;
    }

    bool
    operator==(const PatchTag&) const = default;
};

/// Centre cell, two distinct random cells, and the whole image shrunk to cell size.
struct PatchSet {
    std::array<Image, 4> patches;
    std::array<PatchTag, 4> provenance;

    bool
    provenance_valid() const {
        size_t centers = 0, randoms = 0, full = 0;
        for (const auto& t : provenance) {
            centers += t.kind == PatchKind::kCenter;
            randoms += t.kind == PatchKind::kRandom && t.index < 8;
            full += t.kind == PatchKind::kResizedFull;
        }
        return centers == 1 && randoms == 2 && full == 1 &&
               !(provenance[1].kind == PatchKind::kRandom && provenance[2].kind == PatchKind::kRandom &&
                 provenance[1].index == provenance[2].index);
    }
};

/// Draws the two random cells for `seed` (indices among the 8 non-centre cells).
inline std::array<size_t, 2>
random_patch_cells(uint64_t seed) {
    Rng rng(seed);
    const size_t i = rng.uniform_int(8);
    size_t j = rng.uniform_int(7);
    j += j >= i;
    return {i, j};
}

inline PatchSet
structured_patches(const Image& img, uint64_t seed) {
    img.validate();
    require(img.width % 3 == 0 && img.height % 3 == 0, ErrorCode::kInvalidArgument,
            "structured_patches: dimensions " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                " are not divisible by 3; resize first");
    const size_t cw = img.width / 3;
    const size_t ch = img.height / 3;
    auto cell = [&](size_t g) {
        const size_t cx = (g % 3) * cw;
        const size_t cy = (g / 3) * ch;
        return crop(img, BoundingBox{cx, cy, cx + cw - 1, cy + ch - 1});
    };
    const auto picks = random_patch_cells(seed);
    PatchSet out;
    out.provenance = {PatchTag{PatchKind::kCenter, 0}, PatchTag{PatchKind::kRandom, picks[0]},
                      PatchTag{PatchKind::kRandom, picks[1]}, PatchTag{PatchKind::kResizedFull, 0}};
    out.patches[0] = cell(4);
    out.patches[1] = cell(out.provenance[1].grid_cell());
    out.patches[2] = cell(out.provenance[2].grid_cell());
    out.patches[3] = resize(img, cw, ch);
    return out;
}

}  // namespace ddup
