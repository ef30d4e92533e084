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

#include <zlib.h>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ddup/core/error.hpp"
#include "ddup/service/catalog.hpp"
#include "ddup/service/config.hpp"

namespace ddup {

// File layout, all integers and floats little-endian:
//   "DDUP" | u16 version | u16 reserved (0) | u32 section count
//   per section: u32 tag | u64 payload bytes | payload | u32 CRC-32 of tag, length and payload
// Sections: META, RECS, then optionally IDXC (centroids + lists as record
// ordinals), PCAT, PCAI, DECI.
inline constexpr std::array<char, 4> kSnapshotMagic = {'D', 'D', 'U', 'P'};
inline constexpr uint16_t kSnapshotVersion = 1;

namespace snapshot_detail {

constexpr uint32_t
tag(const char (&s)[5]) {
    return static_cast<uint32_t>(static_cast<uint8_t>(s[0])) | static_cast<uint32_t>(static_cast<uint8_t>(s[1])) << 8 |
           static_cast<uint32_t>(static_cast<uint8_t>(s[2])) << 16 |
           static_cast<uint32_t>(static_cast<uint8_t>(s[3])) << 24;
}

inline constexpr uint32_t kMeta = tag("META");
inline constexpr uint32_t kRecords = tag("RECS");
inline constexpr uint32_t kIndex = tag("IDXC");
inline constexpr uint32_t kPcaText = tag("PCAT");
inline constexpr uint32_t kPcaImage = tag("PCAI");
inline constexpr uint32_t kDecider = tag("DECI");

inline std::string
tag_name(uint32_t t) {
    std::string s(4, '?');
    for (int i = 0; i < 4; ++i) {
        s[static_cast<size_t>(i)] = static_cast<char>((t >> (8 * i)) & 0xFFU);
    }
    return s;
}

class Writer {
public:
    template <typename U>
    void
    put(U v) {
        static_assert(std::is_unsigned_v<U>);
        for (size_t i = 0; i < sizeof(U); ++i) {
            buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
        }
    }

    void
    u8(uint8_t v) {
        buf_.push_back(v);
    }

    void
    u32(uint32_t v) {
        put(v);
    }

    void
    u64(uint64_t v) {
        put(v);
    }

    void
    f32(float v) {
        put(std::bit_cast<uint32_t>(v));
    }

    void
    floats(std::span<const float> v) {
        buf_.reserve(buf_.size() + v.size() * 4);
        for (float x : v) {
            f32(x);
        }
    }

    void
    str(std::string_view s) {
        u32(static_cast<uint32_t>(s.size()));
        buf_.insert(buf_.end(), s.begin(), s.end());
    }

    std::vector<uint8_t>&
    bytes() noexcept {
        return buf_;
    }

private:
    std::vector<uint8_t> buf_;
};

class Reader {
public:
    Reader(const uint8_t* data, size_t size, std::string where) : p_(data), end_(data + size), where_(std::move(where)) {
    }

    template <typename U>
    U
    get() {
        need(sizeof(U));
        U v = 0;
        for (size_t i = 0; i < sizeof(U); ++i) {
            v |= static_cast<U>(static_cast<U>(p_[i]) << (8 * i));
        }
        p_ += sizeof(U);
        return v;
    }

    uint8_t
    u8() {
        return get<uint8_t>();
    }

    uint32_t
    u32() {
        return get<uint32_t>();
    }

    uint64_t
    u64() {
        return get<uint64_t>();
    }

    size_t
    count(size_t element_bytes) {
        const uint64_t n = u64();
        require(element_bytes == 0 || n <= remaining() / element_bytes, ErrorCode::kCorrupt,
                where_ + ": element count exceeds section size");
        return static_cast<size_t>(n);
    }

    std::vector<float>
    floats(size_t n) {
        require(n <= remaining() / 4, ErrorCode::kCorrupt, where_ + ": float array exceeds section size");
        std::vector<float> out(n);
        for (auto& x : out) {
            x = std::bit_cast<float>(get<uint32_t>());
        }
        return out;
    }

    std::string
    str() {
        const uint32_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(p_), n);
        p_ += n;
        return s;
    }

    size_t
    remaining() const noexcept {
        return static_cast<size_t>(end_ - p_);
    }

    void
    finish() const {
        require(p_ == end_, ErrorCode::kCorrupt, where_ + ": trailing bytes");
    }

private:
    void
    need(size_t n) const {
        require(n <= remaining(), ErrorCode::kCorrupt, where_ + ": payload shorter than its contents");
    }

    const uint8_t* p_;
    const uint8_t* end_;
    std::string where_;
};

inline uint32_t
crc32_of(const uint8_t* data, size_t n, uint32_t crc = 0) {
    uLong c = crc;
    while (n > 0) {
        const uInt chunk = static_cast<uInt>(std::min<size_t>(n, 1U << 30));
        c = ::crc32(c, data, chunk);
        data += chunk;
        n -= chunk;
    }
    return static_cast<uint32_t>(c);
}

inline void
write_pca(Writer& w, const PcaModel& m) {
    w.u64(m.source_dim());
    w.u64(m.target_dim());
    w.floats(m.mean().values());
    w.floats(m.components());
    w.floats(m.explained_variance());
}

inline PcaModel
read_pca(Reader& r) {
    const size_t d = r.count(4);
    const size_t k = r.count(0);
    require(k >= 1 && k <= d, ErrorCode::kCorrupt, "PCA section: bad dims");
    auto mean = r.floats(d);
    require(k <= r.remaining() / 4 / d, ErrorCode::kCorrupt, "PCA section: component matrix exceeds section");
    auto comps = r.floats(k * d);
    auto var = r.floats(k);
    return PcaModel(EmbeddingVector(std::move(mean)), std::move(comps), std::move(var));
}

}  // namespace snapshot_detail

/// Serialises the whole store to bytes.
inline std::vector<uint8_t>
snapshot_bytes(const CatalogStore& store) {
    using namespace snapshot_detail;
    std::vector<std::pair<uint32_t, std::vector<uint8_t>>> sections;
    const StoreOptions& opt = store.options();

    {
        Writer w;
        w.u64(opt.text_dim);
        w.u64(opt.image_dim);
        w.u64(store.size());
        sections.emplace_back(kMeta, std::move(w.bytes()));
    }

    std::map<std::string_view, uint32_t> ordinal;
    {
        Writer w;
        w.bytes().reserve(store.size() * (16 + (opt.text_dim + opt.image_dim) * 4));
        w.u64(store.size());
        uint32_t i = 0;
        for (const auto& [id, r] : store.records()) {
            ordinal.emplace(id, i++);
            w.str(id);
            w.u8(static_cast<uint8_t>((r.image_vec ? 1U : 0U) | (r.category ? 2U : 0U)));
            w.floats(r.text_vec.values());
            if (r.image_vec) {
                w.floats(r.image_vec->values());
            }
            if (r.category) {
                w.str(*r.category);
            }
        }
        sections.emplace_back(kRecords, std::move(w.bytes()));
    }

    if (const auto& idx = store.index()) {
        Writer w;
        const IvfParams& p = idx->params();
        w.u64(idx->dim());
        w.u64(idx->nlist());
        w.u8(static_cast<uint8_t>(p.metric));
        w.u64(p.seed);
        w.u64(p.max_iters);
        w.u64(p.max_points_per_centroid);
        w.floats(idx->centroids());
        for (size_t l = 0; l < idx->nlist(); ++l) {
            const auto ids = idx->list_ids(l);
            w.u64(ids.size());
            for (const auto& id : ids) {
                w.u32(ordinal.at(id));
            }
        }
        sections.emplace_back(kIndex, std::move(w.bytes()));
    }
    if (const auto& m = store.pca_text()) {
        Writer w;
        write_pca(w, *m);
        sections.emplace_back(kPcaText, std::move(w.bytes()));
    }
    if (const auto& m = store.pca_image()) {
        Writer w;
        write_pca(w, *m);
        sections.emplace_back(kPcaImage, std::move(w.bytes()));
    }
    if (const auto& m = store.decider()) {
        Writer w;
        w.str(to_json(m->config).dump());
        w.u8(m->trained ? 1 : 0);
        const auto tensors = m->params.tensors();
        w.u64(tensors.size());
        for (const auto* t : tensors) {
            w.u64(t->size());
            w.floats(*t);
        }
        sections.emplace_back(kDecider, std::move(w.bytes()));
    }

    Writer out;
    size_t total = 12;
    for (const auto& s : sections) {
        total += 16 + s.second.size();
    }
    out.bytes().reserve(total);
    for (char c : kSnapshotMagic) {
        out.u8(static_cast<uint8_t>(c));
    }
    out.put<uint16_t>(kSnapshotVersion);
    out.put<uint16_t>(0);
    out.u32(static_cast<uint32_t>(sections.size()));
    for (const auto& [t, payload] : sections) {
        const size_t head = out.bytes().size();
        out.u32(t);
        out.u64(payload.size());
        out.bytes().insert(out.bytes().end(), payload.begin(), payload.end());
        out.u32(crc32_of(out.bytes().data() + head, out.bytes().size() - head));
    }
    return std::move(out.bytes());
}

/// Rebuilds a store from snapshot bytes. Every section is checksummed and
/// parsed before anything is returned; any failure throws and yields nothing.
inline CatalogStore
store_from_snapshot(std::span<const uint8_t> bytes) {
    using namespace snapshot_detail;
    require(bytes.size() >= 12, ErrorCode::kTruncated, "snapshot: file shorter than its header");
    require(std::equal(kSnapshotMagic.begin(), kSnapshotMagic.end(), bytes.begin(),
                       [](char c, uint8_t b) { return static_cast<uint8_t>(c) == b; }),
            ErrorCode::kCorrupt, "snapshot: bad magic");
    Reader head(bytes.data() + 4, 8, "snapshot header");
    const auto version = head.get<uint16_t>();
    require(version == kSnapshotVersion, ErrorCode::kVersionMismatch,
            "snapshot: format version " + std::to_string(version) + ", this build reads version " +
                std::to_string(kSnapshotVersion));
    require(head.get<uint16_t>() == 0, ErrorCode::kCorrupt, "snapshot: reserved header field is not zero");
    const uint32_t n_sections = head.u32();

    std::map<uint32_t, std::span<const uint8_t>> sections;
    size_t pos = 12;
    for (uint32_t s = 0; s < n_sections; ++s) {
        require(bytes.size() - pos >= 12, ErrorCode::kTruncated, "snapshot: truncated section header");
        Reader sh(bytes.data() + pos, 12, "snapshot section header");
        const uint32_t t = sh.u32();
        const uint64_t len = sh.u64();
        require(len <= bytes.size() - pos - 12 && bytes.size() - pos - 12 - len >= 4, ErrorCode::kTruncated,
                "snapshot: section " + tag_name(t) + " is truncated");
        const size_t body = pos + 12;
        const size_t end = body + static_cast<size_t>(len);
        Reader cr(bytes.data() + end, 4, "snapshot checksum");
        require(cr.u32() == crc32_of(bytes.data() + pos, end - pos), ErrorCode::kCorrupt,
                "snapshot: checksum mismatch in section " + tag_name(t));
        require(sections.emplace(t, bytes.subspan(body, static_cast<size_t>(len))).second, ErrorCode::kCorrupt,
                "snapshot: repeated section " + tag_name(t));
        pos = end + 4;
    }
    require(pos == bytes.size(), ErrorCode::kCorrupt, "snapshot: trailing bytes after last section");
    for (const auto& [t, payload] : sections) {
        require(t == kMeta || t == kRecords || t == kIndex || t == kPcaText || t == kPcaImage || t == kDecider,
                ErrorCode::kCorrupt, "snapshot: unknown section " + tag_name(t));
    }
    require(sections.contains(kMeta) && sections.contains(kRecords), ErrorCode::kCorrupt,
            "snapshot: META or RECS section missing");
    auto reader = [&](uint32_t t) {
        const auto sp = sections.at(t);
        return Reader(sp.data(), sp.size(), "snapshot section " + tag_name(t));
    };

    Reader meta = reader(kMeta);
    StoreOptions opt;
    opt.text_dim = meta.count(0);
    opt.image_dim = meta.count(0);
    const size_t n_records = meta.count(0);
    meta.finish();
    require(opt.text_dim >= 1 && opt.image_dim >= 1, ErrorCode::kCorrupt, "snapshot: bad dims");
    CatalogStore store(opt);

    // Reducers go in after the records: stored vectors are already reduced.
    std::vector<std::string> ids;
    {
        Reader r = reader(kRecords);
        const size_t n = r.count(5);
        require(n == n_records, ErrorCode::kCorrupt, "snapshot: record count disagrees with META");
        ids.reserve(n);
        for (size_t i = 0; i < n; ++i) {
            std::string id = r.str();
            const uint8_t flags = r.u8();
            require(flags < 4, ErrorCode::kCorrupt, "snapshot: bad record flags");
            ProductRecord rec{std::move(id), EmbeddingVector(r.floats(opt.text_dim)), std::nullopt, std::nullopt};
            if (flags & 1U) {
                rec.image_vec = EmbeddingVector(r.floats(opt.image_dim));
            }
            if (flags & 2U) {
                rec.category = r.str();
            }
            require(ids.empty() || ids.back() < rec.id, ErrorCode::kCorrupt, "snapshot: records out of order");
            ids.push_back(rec.id);
            try {
                store.add(std::move(rec));
            } catch (const Error& e) {
                fail(ErrorCode::kCorrupt, std::string("snapshot: invalid record: ") + e.what());
            }
        }
        r.finish();
    }

    if (sections.contains(kIndex)) {
        Reader r = reader(kIndex);
        IvfParams p;
        const size_t dim = r.count(0);
        p.nlist = r.count(4);
        const uint8_t metric = r.u8();
        require(metric <= static_cast<uint8_t>(Metric::kCosine), ErrorCode::kCorrupt, "snapshot: bad metric");
        p.metric = static_cast<Metric>(metric);
        p.seed = r.u64();
        p.max_iters = r.count(0);
        p.max_points_per_centroid = r.count(0);
        require(dim == opt.text_dim && p.nlist >= 1, ErrorCode::kCorrupt, "snapshot: bad index header");
        require(p.nlist <= r.remaining() / 4 / dim, ErrorCode::kCorrupt, "snapshot: centroids exceed section");
        auto centroids = r.floats(p.nlist * dim);
        std::vector<std::vector<IdVector>> lists(p.nlist);
        for (auto& list : lists) {
            const size_t len = r.count(4);
            list.reserve(len);
            for (size_t i = 0; i < len; ++i) {
                const uint32_t ord = r.u32();
                require(ord < ids.size(), ErrorCode::kCorrupt, "snapshot: list entry out of range");
                list.push_back({ids[ord], store.record(ids[ord]).text_vec});
            }
        }
        r.finish();
        try {
            store.set_index(IvfIndex::restore(p, dim, std::move(centroids), lists));
        } catch (const Error& e) {
            fail(ErrorCode::kCorrupt, std::string("snapshot: invalid index: ") + e.what());
        }
    }

    auto load_pca = [&](uint32_t t, auto setter) {
        if (!sections.contains(t)) {
            return;
        }
        Reader r = reader(t);
        try {
            PcaModel m = read_pca(r);
            r.finish();
            (store.*setter)(std::move(m));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::kCorrupt) {
                throw;
            }
            fail(ErrorCode::kCorrupt, "snapshot: invalid " + tag_name(t) + " section: " + e.what());
        }
    };
    load_pca(kPcaText, &CatalogStore::set_pca_text);
    load_pca(kPcaImage, &CatalogStore::set_pca_image);

    if (sections.contains(kDecider)) {
        Reader r = reader(kDecider);
        try {
            json cfg_json;
            try {
                cfg_json = json::parse(r.str());
            } catch (const json::parse_error&) {
                fail(ErrorCode::kCorrupt, "snapshot: decider config is not JSON");
            }
            DeciderModel<float> m = DeciderModel<float>::init(decider_config_from_json(cfg_json));
            const uint8_t trained = r.u8();
            require(trained <= 1, ErrorCode::kCorrupt, "snapshot: bad trained flag");
            m.trained = trained == 1;
            auto tensors = m.params.tensors();
            require(r.count(0) == tensors.size(), ErrorCode::kCorrupt, "snapshot: decider tensor count mismatch");
            for (auto* t : tensors) {
                require(r.count(4) == t->size(), ErrorCode::kCorrupt, "snapshot: decider tensor size mismatch");
                *t = r.floats(t->size());
            }
            r.finish();
            store.set_decider(std::move(m));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::kCorrupt) {
                throw;
            }
            fail(ErrorCode::kCorrupt, std::string("snapshot: invalid decider section: ") + e.what());
        }
    }
    return store;
}

/// Writes to "<path>.tmp" and renames over `path`, so a crash never leaves
/// a half-written snapshot under the final name.
inline void
save_snapshot(const CatalogStore& store, const std::filesystem::path& path) {
    const auto bytes = snapshot_bytes(store);
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(out.good(), ErrorCode::kIo, "snapshot: cannot open " + tmp.string() + " for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        require(out.good(), ErrorCode::kIo, "snapshot: write to " + tmp.string() + " failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    require(!ec, ErrorCode::kIo, "snapshot: cannot rename " + tmp.string() + ": " + ec.message());
}

inline CatalogStore
load_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::kIo, "snapshot: cannot open " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    require(!in.bad(), ErrorCode::kIo, "snapshot: read of " + path.string() + " failed");
    return store_from_snapshot(bytes);
}

}  // namespace ddup
