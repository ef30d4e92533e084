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

// Image preparation walk-through on a generated product shot: background
// detection, scale augmentation, structured patches and MS-SSIM.

#include <cstdio>
#include <string>

#include "ddup/image/augment.hpp"
#include "ddup/image/ms_ssim.hpp"
#include "ddup/image/patches.hpp"
#include "ddup/image/ppm.hpp"

using namespace ddup;

namespace {

// White canvas with a shaded rectangle standing in for the product.
Image
product_shot(size_t w, size_t h) {
    Image img = Image::filled(w, h, 3, 255);
    for (size_t y = h / 4; y < h * 3 / 5; ++y) {
        for (size_t x = w / 5; x < w * 2 / 3; ++x) {
            img.at(x, y, 0) = static_cast<uint8_t>(40 + x % 90);
            img.at(x, y, 1) = static_cast<uint8_t>(60 + y % 70);
            img.at(x, y, 2) = 150;
        }
    }
    return img;
}

}  // namespace

int
main(int argc, char** argv) {
    const std::string out_dir = argc > 1 ? argv[1] : ".";
    const Image shot = product_shot(240, 198);
    const BoundingBox box = content_bbox(shot);
    std::printf("content box x[%zu,%zu] y[%zu,%zu]\n", box.x_min, box.x_max, box.y_min, box.y_max);

    for (uint64_t seed = 0; seed < 6; ++seed) {
        AugmentTrace t;
        const Image aug = scale_augment(shot, seed, {}, &t);
        if (t.applied) {
            std::printf("seed %ju: rescaled to %.2f of max fit, MS-SSIM vs original %.4f\n",
                        static_cast<uintmax_t>(seed), t.factor, ms_ssim(shot, aug, 3));
            save_pnm(out_dir + "/augmented_" + std::to_string(seed) + ".ppm", aug);
        } else {
            std::printf("seed %ju: left unchanged\n", static_cast<uintmax_t>(seed));
        }
    }

    const PatchSet ps = structured_patches(shot, 42);
    for (size_t i = 0; i < ps.patches.size(); ++i) {
        const auto& tag = ps.provenance[i];
        const char* kind = tag.kind == PatchKind::kCenter ? "centre" : tag.kind == PatchKind::kRandom ? "random" : "full";
        std::printf("patch %zu: %s %zux%zu\n", i, kind, ps.patches[i].width, ps.patches[i].height);
        save_pnm(out_dir + "/patch_" + std::to_string(i) + ".ppm", ps.patches[i]);
    }
    return 0;
}
