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

#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "ddup/image/image.hpp"

namespace ddup {

/// Binary PGM (P5) for gray images, PPM (P6) for RGB; maxval 255.
inline void
write_pnm(std::ostream& os, const Image& img) {
    img.validate();
    os << (img.channels == 1 ? "P5" : "P6") << '\n' << img.width << ' ' << img.height << "\n255\n";
    os.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    require(os.good(), ErrorCode::kIo, "pnm: write failed");
}

namespace detail {

inline size_t
read_pnm_number(std::istream& is) {
    int ch = is.get();
    for (;;) {
        while (ch != EOF && std::isspace(ch)) {
            ch = is.get();
        }
        if (ch != '#') {
            break;
        }
        while (ch != EOF && ch != '\n') {
            ch = is.get();
        }
    }
    require(ch != EOF && std::isdigit(ch), ErrorCode::kCorrupt, "pnm: malformed header");
    size_t v = 0;
    while (ch != EOF && std::isdigit(ch)) {
        v = v * 10 + static_cast<size_t>(ch - '0');
        require(v <= (size_t{1} << 31), ErrorCode::kCorrupt, "pnm: header value too large");
        ch = is.get();
    }
    require(ch != EOF && std::isspace(ch), ErrorCode::kCorrupt, "pnm: malformed header");
    return v;
}

}  // namespace detail

inline Image
read_pnm(std::istream& is) {
    char magic[2] = {};
    is.read(magic, 2);
    require(is.good() && magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6'), ErrorCode::kCorrupt,
            "pnm: only binary P5/P6 files are supported");
    Image img;
    img.channels = magic[1] == '5' ? 1 : 3;
    img.width = detail::read_pnm_number(is);
    img.height = detail::read_pnm_number(is);
    const size_t maxval = detail::read_pnm_number(is);
    require(img.width >= 1 && img.height >= 1, ErrorCode::kCorrupt, "pnm: empty image");
    require(maxval == 255, ErrorCode::kCorrupt, "pnm: only maxval 255 is supported");
    img.pixels.resize(img.width * img.height * img.channels);
    is.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    require(static_cast<size_t>(is.gcount()) == img.pixels.size(), ErrorCode::kTruncated, "pnm: truncated pixel data");
    return img;
}

inline void
save_pnm(const std::string& path, const Image& img) {
    std::ofstream os(path, std::ios::binary);
    require(os.is_open(), ErrorCode::kIo, "pnm: cannot open " + path + " for writing");
    write_pnm(os, img);
}

inline Image
load_pnm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(is.is_open(), ErrorCode::kIo, "pnm: cannot open " + path);
    return read_pnm(is);
}

}  // namespace ddup
