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

#include <charconv>
#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ddup/core/error.hpp"
#include "ddup/core/product.hpp"

namespace ddup {

using json = nlohmann::json;

namespace detail {

inline void
write_float_array(std::ostream& os, std::span<const float> v) {
    char buf[32];
    os << '[';
    for (size_t i = 0; i < v.size(); ++i) {
        if (i > 0) {
            os << ',';
        }
        // shortest representation that parses back to the same float
        const auto res = std::to_chars(buf, buf + sizeof(buf), v[i]);
        os.write(buf, res.ptr - buf);
    }
    os << ']';
}

inline EmbeddingVector
vector_from_json(const json& j, const char* field) {
    require(j.is_array(), ErrorCode::kInvalidArgument, std::string(field) + " must be an array");
    require(!j.empty(), ErrorCode::kInvalidArgument, std::string(field) + " must not be empty");
    std::vector<float> v;
    v.reserve(j.size());
    for (const auto& x : j) {
        require(x.is_number(), ErrorCode::kInvalidArgument, std::string(field) + " must contain only numbers");
        const double d = x.get<double>();
        const float f = static_cast<float>(d);
        require(std::isfinite(f), ErrorCode::kNonFinite, std::string(field) + " contains a non-finite value");
        v.push_back(f);
    }
    return EmbeddingVector(std::move(v));
}

}  // namespace detail

/// One ingestion line: {"id", "text_vec", "image_vec" | null, "category" | null}.
inline void
write_record_json(std::ostream& os, const ProductRecord& r) {
    os << "{\"id\":" << json(r.id).dump() << ",\"text_vec\":";
    detail::write_float_array(os, r.text_vec.values());
    os << ",\"image_vec\":";
    if (r.image_vec) {
        detail::write_float_array(os, r.image_vec->values());
    } else {
        os << "null";
    }
    os << ",\"category\":" << (r.category ? json(*r.category).dump() : std::string("null")) << '}';
}

inline std::string
record_to_json_line(const ProductRecord& r) {
    std::ostringstream os;
    write_record_json(os, r);
    return os.str();
}

/// Throws Error(kInvalidArgument / kNonFinite) describing the first problem.
inline ProductRecord
record_from_json(const json& j) {
    require(j.is_object(), ErrorCode::kInvalidArgument, "product must be a JSON object");
    require(j.contains("id") && j["id"].is_string(), ErrorCode::kInvalidArgument, "id must be a string");
    std::string id = j["id"].get<std::string>();
    require(!id.empty(), ErrorCode::kInvalidArgument, "id must not be empty");
    require(j.contains("text_vec"), ErrorCode::kInvalidArgument, "text_vec is missing");
    ProductRecord r{std::move(id), detail::vector_from_json(j["text_vec"], "text_vec"), std::nullopt, std::nullopt};
    if (j.contains("image_vec") && !j["image_vec"].is_null()) {
        r.image_vec = detail::vector_from_json(j["image_vec"], "image_vec");
    }
    if (j.contains("category") && !j["category"].is_null()) {
        require(j["category"].is_string(), ErrorCode::kInvalidArgument, "category must be a string or null");
        r.category = j["category"].get<std::string>();
    }
    return r;
}

inline ProductRecord
record_from_json_line(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::kInvalidArgument, std::string("malformed JSON: ") + e.what());
    }
    return record_from_json(j);
}

}  // namespace ddup
