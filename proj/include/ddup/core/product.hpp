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

#include <optional>
#include <string>

#include "ddup/core/vector.hpp"

namespace ddup {

/// One catalog item. Retrieval runs on text_vec only; image_vec feeds the
/// decider and may be absent.
struct ProductRecord {
    std::string id;
    EmbeddingVector text_vec;
    std::optional<EmbeddingVector> image_vec;
    std::optional<std::string> category;

    bool
    operator==(const ProductRecord&) const = default;
};

/// (id, vector) entry as handed to the index.
struct IdVector {
    std::string id;
    EmbeddingVector vec;
};

}  // namespace ddup
