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

// Requires linking libpng (PNG::PNG).
#pragma once

#include <png.h>

#include <cstring>
#include <string>

#include "ddup/image/image.hpp"

namespace ddup {

/// Decodes to gray or RGB; alpha is composited onto white, 16-bit reduced to 8.
inline Image
load_png(const std::string& path) {
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    require(png_image_begin_read_from_file(&png, path.c_str()) != 0, ErrorCode::kIo,
            "png: cannot read " + path + ": " + png.message);
    const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
    png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    Image img;
    img.width = png.width;
    img.height = png.height;
    img.channels = color ? 3 : 1;
    img.pixels.resize(PNG_IMAGE_SIZE(png));
    png_color white{255, 255, 255};
    if (png_image_finish_read(&png, &white, img.pixels.data(), 0, nullptr) == 0) {
        const std::string msg = png.message;
        png_image_free(&png);
        fail(ErrorCode::kCorrupt, "png: cannot decode " + path + ": " + msg);
    }
    return img;
}

inline void
save_png(const std::string& path, const Image& img) {
    img.validate();
    png_image png;
    std::memset(&png, 0, sizeof(png));
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(img.width);
    png.height = static_cast<png_uint_32>(img.height);
    png.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    require(png_image_write_to_file(&png, path.c_str(), 0, img.pixels.data(), 0, nullptr) != 0, ErrorCode::kIo,
            "png: cannot write " + path + ": " + png.message);
}

}  // namespace ddup
