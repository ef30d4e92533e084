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


#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <thread>

#include "ddup/service/http.hpp"
#include "service_fixtures.hpp"

using namespace ddup;

namespace {

DedupApi
make_api() {
    CatalogStore store(fixture::small_options());
    const auto spec = fixture::small_spec();
    const SyntheticWorld world(spec);
    Rng rng(1);
    std::vector<ProductRecord> recs;
    for (size_t c = 0; c < 40; ++c) {
        recs.push_back({synthetic_id(c), world.sample_text(c, rng), world.sample_image(c, rng), std::nullopt});
    }
    recs.push_back({"dup-7", world.sample_text(7, rng), world.sample_image(7, rng), std::nullopt});
    store.ingest(std::span<const ProductRecord>(recs));
    store.build_index({});
    store.set_decider(fixture::small_trained_decider());
    ServiceConfig cfg;
    cfg.text_dim = 16;
    cfg.image_dim = 16;
    cfg.dedupe.top_n = 5;
    cfg.server.threads = 2;
    return DedupApi(std::move(store), cfg);
}

DedupApi&
shared_api() {
    static DedupApi api = make_api();
    return api;
}

}  // namespace

TEST_CASE("API routes answer with JSON", "[ut][http]") {
    DedupApi& api = shared_api();
    auto health = api.handle("GET", "/healthz", "");
    REQUIRE(health.status == 200);
    REQUIRE(health.body["status"] == "ok");

    auto stats = api.handle("GET", "/stats", "");
    REQUIRE(stats.status == 200);
    REQUIRE(stats.body["count"] == 41);
    REQUIRE(stats.body["index"]["built"] == true);
    REQUIRE(stats.body["memory_bytes"].get<size_t>() > 0);

    auto search = api.handle("POST", "/search", R"({"id":"dup-7","top_n":3,"nprobe":6})");
    REQUIRE(search.status == 200);
    REQUIRE(search.body["results"].size() == 3);
    REQUIRE(search.body["results"][0]["id"] == synthetic_id(7));
    REQUIRE(search.body["results"][0]["rank"] == 1);

    const auto& v = api.generation()->record(synthetic_id(3)).text_vec;
    json vec_req{{"vector", std::vector<float>(v.values().begin(), v.values().end())}, {"top_n", 1}, {"nprobe", 6}};
    auto by_vec = api.handle("POST", "/search", vec_req.dump());
    REQUIRE(by_vec.body["results"][0]["id"] == synthetic_id(3));

    auto score = api.handle("POST", "/score-pair", json{{"id_a", synthetic_id(7)}, {"id_b", "dup-7"}}.dump());
    REQUIRE(score.status == 200);
    REQUIRE(score.body["id_a"] == "dup-7");
    REQUIRE(score.body["label"] == "match");

    auto dd = api.handle("POST", "/dedupe", R"({"nprobe":6})");
    REQUIRE(dd.status == 200);
    REQUIRE(dd.body["group_count"] == 1);
    REQUIRE(dd.body["groups"][0]["members"] == json::array({"dup-7", synthetic_id(7)}));
    REQUIRE(dd.body["decisions"].size() > 0);
}

TEST_CASE("API errors carry code and message", "[ut][http]") {
    DedupApi& api = shared_api();
    auto check = [&](std::string_view method, std::string_view path, std::string_view body, int status,
                     std::string_view code) {
        const auto r = api.handle(method, path, body);
        INFO(method << " " << path << " " << body << " -> " << r.body.dump());
        REQUIRE(r.status == status);
        REQUIRE(r.body["code"] == code);
        REQUIRE(r.body["message"].is_string());
        REQUIRE(r.body.size() == 2);
    };
    check("POST", "/search", "{", 400, "invalid_argument");
    check("POST", "/search", "[]", 400, "invalid_argument");
    check("POST", "/search", R"({"id":"nope"})", 404, "unknown_id");
    check("POST", "/search", R"({"id":"dup-7","vector":[1]})", 400, "invalid_argument");
    check("POST", "/search", R"({"vector":[1,2]})", 400, "dimension_mismatch");
    check("POST", "/search", R"({"id":"dup-7","top_n":"x"})", 400, "invalid_argument");
    check("POST", "/score-pair", R"({"id_a":"dup-7"})", 400, "invalid_argument");
    check("POST", "/score-pair", R"({"id_a":"dup-7","id_b":"dup-7"})", 400, "invalid_argument");
    check("POST", "/dedupe", R"({"threshold":2})", 400, "invalid_argument");
    check("GET", "/nope", "", 404, "not_found");

    DedupApi bare(CatalogStore({4, 4}), ServiceConfig{});
    {
        const auto r = bare.handle("POST", "/search", R"({"vector":[1,0,0,0]})");
        REQUIRE(r.status == 409);
        REQUIRE(r.body["code"] == "not_ready");
    }
}

TEST_CASE("ingest publishes a new generation atomically", "[ut][http]") {
    DedupApi api = make_api();
    const auto before = api.generation();
    const uint64_t gen0 = api.generation_number();
    const ProductRecord fresh{"new-1", EmbeddingVector::from_span(before->record("dup-7").text_vec.values()),
                              std::nullopt, std::nullopt};
    json batch = json::array({json::parse(record_to_json_line(fresh)), json{{"id", "bad"}}});
    auto r = api.handle("POST", "/products", batch.dump());
    REQUIRE(r.status == 200);
    REQUIRE(r.body["accepted"] == 1);
    REQUIRE(r.body["rejected"].size() == 1);
    REQUIRE(api.generation_number() == gen0 + 1);
    REQUIRE(api.generation()->contains("new-1"));
    REQUIRE(api.generation()->index()->contains("new-1"));
    // Readers holding the old generation keep a consistent view.
    REQUIRE_FALSE(before->contains("new-1"));
    REQUIRE(before->size() == 41);

    auto jsonl = api.handle("POST", "/products", record_to_json_line({"new-2", fresh.text_vec, std::nullopt, std::nullopt}) +
                                                     "\n" + record_to_json_line(fresh) + "\n");
    REQUIRE(jsonl.body["accepted"] == 1);
    REQUIRE(jsonl.body["rejected"][0]["id"] == "new-1");

    auto none = api.handle("POST", "/products", "[]");
    REQUIRE(none.body["accepted"] == 0);
    REQUIRE(api.generation_number() == gen0 + 2);

    auto rebuild = api.handle("POST", "/index/rebuild", R"({"nlist":4,"seed":9})");
    REQUIRE(rebuild.status == 200);
    REQUIRE(rebuild.body["index"]["nlist"] == 4);
    REQUIRE(api.generation()->index()->size() == 43);
}

TEST_CASE("concurrent readers during ingest never see a partial store", "[ut][http]") {
    DedupApi api = make_api();
    std::atomic<bool> stop{false};
    std::atomic<size_t> bad{0};
    std::thread reader([&] {
        while (!stop) {
            const auto g = api.generation();
            if (g->index()->size() != g->size()) {
                ++bad;
            }
            const auto r = api.handle("POST", "/search", R"({"id":"dup-7","top_n":2})");
            bad += r.status != 200;
        }
    });
    const EmbeddingVector base = api.generation()->record("dup-7").text_vec;
    for (int i = 0; i < 50; ++i) {
        std::vector<float> v(base.values().begin(), base.values().end());
        v[0] += 0.001F * static_cast<float>(i + 1);
        api.handle("POST", "/products",
                   record_to_json_line({"c" + std::to_string(i), EmbeddingVector(v), std::nullopt, std::nullopt}));
    }
    stop = true;
    reader.join();
    REQUIRE(bad == 0);
    REQUIRE(api.generation()->size() == 91);
}

TEST_CASE("HTTP server serves the API over a socket", "[ut][http]") {
    DedupApi& api = shared_api();
    HttpServer server(api);
    const int port = server.bind("127.0.0.1", 0);
    server.start();
    httplib::Client client("127.0.0.1", port);
    auto health = client.Get("/healthz");
    REQUIRE(health);
    REQUIRE(health->status == 200);
    REQUIRE(json::parse(health->body)["status"] == "ok");

    auto search = client.Post("/search", R"({"id":"dup-7","top_n":1,"nprobe":6})", "application/json");
    REQUIRE(search->status == 200);
    REQUIRE(json::parse(search->body)["results"][0]["id"] == synthetic_id(7));

    auto missing = client.Post("/score-pair", R"({"id_a":"x","id_b":"y"})", "application/json");
    REQUIRE(missing->status == 404);
    REQUIRE(json::parse(missing->body)["code"] == "unknown_id");

    auto nowhere = client.Get("/missing-route");
    REQUIRE(nowhere->status == 404);
    REQUIRE(json::parse(nowhere->body)["code"] == "not_found");
    server.stop();
}
