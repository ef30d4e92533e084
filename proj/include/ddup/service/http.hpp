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

#include <httplib.h>

#include <atomic>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>

#include "ddup/core/error.hpp"
#include "ddup/service/catalog.hpp"
#include "ddup/service/config.hpp"
#include "ddup/service/record_json.hpp"

namespace ddup {

struct ApiResponse {
    int status = 200;
    json body;
};

inline int
http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::kInvalidArgument:
        case ErrorCode::kDimensionMismatch:
        case ErrorCode::kZeroVector:
        case ErrorCode::kNonFinite:
            return 400;
        case ErrorCode::kUnknownId:
            return 404;
        case ErrorCode::kDuplicateId:
        case ErrorCode::kNotReady:
            return 409;
        default:
            return 500;
    }
}

inline ApiResponse
error_response(int status, std::string_view code, std::string_view message) {
    return {status, json{{"code", code}, {"message", message}}};
}

/// Request handling for the JSON API, independent of the transport.
///
/// Readers take the current store generation (a shared_ptr to an immutable
/// store) and work on it without locks. Writers are serialised, build the
/// next generation on a copy and publish it with a pointer swap, so no
/// request ever sees a half-applied ingest or rebuild.
class DedupApi {
public:
    DedupApi(CatalogStore store, ServiceConfig config)
        : current_(std::make_shared<const CatalogStore>(std::move(store))), config_(std::move(config)) {
    }

    std::shared_ptr<const CatalogStore>
    generation() const {
        std::lock_guard lock(swap_mu_);
        return current_;
    }

    uint64_t
    generation_number() const {
        return generation_number_.load();
    }

    ApiResponse
    handle(std::string_view method, std::string_view path, std::string_view body) {
        try {
            if (method == "GET" && path == "/healthz") {
                return {200, json{{"status", "ok"}, {"generation", generation_number()}}};
            }
            if (method == "GET" && path == "/stats") {
                json j = to_json(generation()->stats());
                j["generation"] = generation_number();
                return {200, j};
            }
            if (method == "POST" && path == "/products") {
                return post_products(body);
            }
            if (method == "POST" && path == "/search") {
                return post_search(parse_object(body));
            }
            if (method == "POST" && path == "/score-pair") {
                return post_score_pair(parse_object(body));
            }
            if (method == "POST" && path == "/dedupe") {
                return post_dedupe(body.empty() ? json::object() : parse_object(body));
            }
            if (method == "POST" && path == "/index/rebuild") {
                return post_rebuild(body.empty() ? json::object() : parse_object(body));
            }
            return error_response(404, "not_found", std::string(method) + " " + std::string(path) + " is not a route");
        } catch (const Error& e) {
            return error_response(http_status(e.code()), to_string(e.code()), e.what());
        } catch (const json::exception& e) {
            return error_response(400, "invalid_argument", e.what());
        } catch (const std::exception& e) {
            return error_response(500, "internal", e.what());
        }
    }

    const ServiceConfig&
    config() const noexcept {
        return config_;
    }

private:
    static json
    parse_object(std::string_view body) {
        json j;
        try {
            j = json::parse(body);
        } catch (const json::parse_error& e) {
            fail(ErrorCode::kInvalidArgument, std::string("request body is not valid JSON: ") + e.what());
        }
        require(j.is_object(), ErrorCode::kInvalidArgument, "request body must be a JSON object");
        return j;
    }

    template <typename T>
    static T
    field_or(const json& j, const char* key, T fallback) {
        if (!j.contains(key) || j[key].is_null()) {
            return fallback;
        }
        try {
            return j[key].get<T>();
        } catch (const json::exception&) {
            fail(ErrorCode::kInvalidArgument, std::string(key) + " has the wrong type");
        }
    }

    static std::string
    string_field(const json& j, const char* key) {
        require(j.contains(key) && j[key].is_string(), ErrorCode::kInvalidArgument,
                std::string(key) + " must be a string");
        return j[key].get<std::string>();
    }

    void
    publish(CatalogStore next) {
        auto ptr = std::make_shared<const CatalogStore>(std::move(next));
        std::lock_guard lock(swap_mu_);
        current_ = std::move(ptr);
        ++generation_number_;
    }

    // Body: a JSON array of products, {"products": [...]}, one product object,
    // or JSONL text.
    ApiResponse
    post_products(std::string_view body) {
        std::lock_guard writer(write_mu_);
        CatalogStore next = *generation();
        IngestReport report;
        json j;
        bool is_json = true;
        try {
            j = json::parse(body);
        } catch (const json::parse_error&) {
            is_json = false;
        }
        if (is_json && (j.is_array() || (j.is_object() && j.contains("products")))) {
            const json& items = j.is_array() ? j : j["products"];
            require(items.is_array(), ErrorCode::kInvalidArgument, "products must be an array");
            std::string jsonl;
            for (const auto& item : items) {
                jsonl += item.dump();
                jsonl += '\n';
            }
            std::istringstream in(jsonl);
            report = next.ingest(in);
        } else {
            std::istringstream in{std::string(body)};
            report = next.ingest(in);
        }
        if (report.accepted > 0) {
            publish(std::move(next));
        }
        return {200, to_json(report)};
    }

    ApiResponse
    post_search(const json& req) {
        const auto store = generation();
        const size_t top_n = field_or<size_t>(req, "top_n", config_.dedupe.top_n);
        const size_t nprobe = field_or<size_t>(req, "nprobe", config_.index.nprobe);
        std::vector<SearchResult> hits;
        const bool by_id = req.contains("id");
        const bool by_vector = req.contains("vector");
        require(by_id != by_vector, ErrorCode::kInvalidArgument, "give exactly one of id or vector");
        if (by_id) {
            hits = store->find_candidates(string_field(req, "id"), top_n, nprobe);
        } else {
            hits = store->search(detail::vector_from_json(req["vector"], "vector"), top_n, nprobe);
        }
        json arr = json::array();
        for (const auto& h : hits) {
            arr.push_back(to_json(h));
        }
        return {200, json{{"results", arr}}};
    }

    ApiResponse
    post_score_pair(const json& req) {
        const auto store = generation();
        const double threshold = field_or<double>(req, "threshold", config_.dedupe.threshold);
        const PairDecision d = store->score_pair(string_field(req, "id_a"), string_field(req, "id_b"), threshold);
        return {200, to_json(d)};
    }

    ApiResponse
    post_dedupe(const json& req) {
        const auto store = generation();
        DedupeOptions opt = config_.dedupe_options();
        opt.top_n = field_or<size_t>(req, "top_n", opt.top_n);
        opt.threshold = field_or<double>(req, "threshold", opt.threshold);
        opt.nprobe = field_or<size_t>(req, "nprobe", opt.nprobe);
        const DedupeResult r = store->dedupe(opt);
        json decisions = json::array();
        for (const auto& d : r.decisions) {
            decisions.push_back(to_json(d));
        }
        json out = groups_to_json(r.groups);
        out["decisions"] = std::move(decisions);
        return {200, out};
    }

    ApiResponse
    post_rebuild(const json& req) {
        std::lock_guard writer(write_mu_);
        CatalogStore next = *generation();
        IvfParams p = config_.ivf_params();
        p.nlist = field_or<size_t>(req, "nlist", p.nlist);
        p.seed = field_or<uint64_t>(req, "seed", p.seed);
        if (req.contains("metric")) {
            p.metric = parse_metric(string_field(req, "metric"));
        }
        next.build_index(p);
        const json stats = to_json(next.stats());
        publish(std::move(next));
        return {200, stats};
    }

    mutable std::mutex swap_mu_;
    std::mutex write_mu_;
    std::shared_ptr<const CatalogStore> current_;
    std::atomic<uint64_t> generation_number_{0};
    ServiceConfig config_;
};

/// HTTP front end for DedupApi.
class HttpServer {
public:
    explicit HttpServer(DedupApi& api) : api_(api) {
        const size_t threads = api_.config().server.threads;
        server_.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
        auto route = [this](const httplib::Request& req, httplib::Response& res) {
            const ApiResponse r = api_.handle(req.method, req.path, req.body);
            res.status = r.status;
            res.set_content(r.body.dump(), "application/json");
        };
        server_.Get("/healthz", route);
        server_.Get("/stats", route);
        server_.Post("/products", route);
        server_.Post("/search", route);
        server_.Post("/score-pair", route);
        server_.Post("/dedupe", route);
        server_.Post("/index/rebuild", route);
        server_.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
            if (res.body.empty()) {
                const ApiResponse r = error_response(res.status, res.status == 404 ? "not_found" : "http_error",
                                                     req.method + " " + req.path);
                res.set_content(r.body.dump(), "application/json");
            }
        });
    }

    ~HttpServer() {
        stop();
    }

    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds; port 0 picks a free port. Returns the bound port.
    int
    bind(const std::string& host, int port) {
        if (port == 0) {
            port_ = server_.bind_to_any_port(host);
        } else {
            port_ = server_.bind_to_port(host, port) ? port : -1;
        }
        require(port_ > 0, ErrorCode::kIo, "http: cannot bind " + host + ":" + std::to_string(port));
        return port_;
    }

    /// Serves on the calling thread until stop().
    void
    run() {
        server_.listen_after_bind();
    }

    /// Serves on a background thread.
    void
    start() {
        thread_ = std::thread([this] { run(); });
        server_.wait_until_ready();
    }

    void
    stop() {
        server_.stop();
        if (thread_.joinable()) {
            thread_.join();
        }
    }

    int
    port() const noexcept {
        return port_;
    }

private:
    DedupApi& api_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = -1;
};

}  // namespace ddup
