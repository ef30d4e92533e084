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
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "ddup/core/error.hpp"
#include "ddup/core/vector.hpp"
#include "ddup/decider/decider.hpp"
#include "ddup/index/ivf_index.hpp"
#include "ddup/service/catalog.hpp"
#include "ddup/service/record_json.hpp"

namespace ddup {

namespace detail {

// Rejects keys outside `allowed` so a typo does not silently fall back to a default.
inline void
check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
    require(j.is_object(), ErrorCode::kInvalidArgument, std::string(where) + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        require(std::find(allowed.begin(), allowed.end(), key) != allowed.end(), ErrorCode::kInvalidArgument,
                std::string(where) + ": unknown key \"" + key + "\"");
    }
}

template <typename T>
void
read_field(const json& j, const char* key, T& out, std::string_view where) {
    if (!j.contains(key)) {
        return;
    }
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(ErrorCode::kInvalidArgument, std::string(where) + "." + key + " has the wrong type");
    }
}

inline std::string_view
to_string(SchedulerKind k) {
    return k == SchedulerKind::kCosine ? "cosine" : "plateau";
}

inline SchedulerKind
scheduler_from_string(std::string_view s) {
    if (s == "plateau" || s == "reduce_on_plateau") {
        return SchedulerKind::kReduceOnPlateau;
    }
    require(s == "cosine", ErrorCode::kInvalidArgument, "unknown scheduler " + std::string(s));
    return SchedulerKind::kCosine;
}

}  // namespace detail

inline json
to_json(const DeciderConfig& c) {
    return {{"text_dim", c.text_dim},         {"image_dim", c.image_dim},       {"presence_flag", c.presence_flag},
            {"conv_filters", c.conv_filters}, {"kernel_size", c.kernel_size},   {"hidden_dims", c.hidden_dims},
            {"dropout_rate", c.dropout_rate}, {"seed", c.seed}};
}

inline DeciderConfig
decider_config_from_json(const json& j) {
    constexpr std::string_view where = "decider";
    detail::check_keys(j, {"text_dim", "image_dim", "presence_flag", "conv_filters", "kernel_size", "hidden_dims",
                           "dropout_rate", "seed"},
                       where);
    DeciderConfig c;
    detail::read_field(j, "text_dim", c.text_dim, where);
    detail::read_field(j, "image_dim", c.image_dim, where);
    detail::read_field(j, "presence_flag", c.presence_flag, where);
    detail::read_field(j, "conv_filters", c.conv_filters, where);
    detail::read_field(j, "kernel_size", c.kernel_size, where);
    detail::read_field(j, "hidden_dims", c.hidden_dims, where);
    detail::read_field(j, "dropout_rate", c.dropout_rate, where);
    detail::read_field(j, "seed", c.seed, where);
    c.validate();
    return c;
}

inline json
to_json(const TrainConfig& c) {
    return {{"learning_rate", c.learning_rate},
            {"weight_decay", c.weight_decay},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"eps", c.eps},
            {"batch_size", c.batch_size},
            {"max_epochs", c.max_epochs},
            {"scheduler", std::string(detail::to_string(c.scheduler))},
            {"plateau_factor", c.plateau_factor},
            {"plateau_patience", c.plateau_patience},
            {"min_learning_rate", c.min_learning_rate},
            {"seed", c.seed}};
}

inline TrainConfig
train_config_from_json(const json& j) {
    constexpr std::string_view where = "train";
    detail::check_keys(j, {"learning_rate", "weight_decay", "beta1", "beta2", "eps", "batch_size", "max_epochs",
                           "scheduler", "plateau_factor", "plateau_patience", "min_learning_rate", "seed"},
                       where);
    TrainConfig c;
    detail::read_field(j, "learning_rate", c.learning_rate, where);
    detail::read_field(j, "weight_decay", c.weight_decay, where);
    detail::read_field(j, "beta1", c.beta1, where);
    detail::read_field(j, "beta2", c.beta2, where);
    detail::read_field(j, "eps", c.eps, where);
    detail::read_field(j, "batch_size", c.batch_size, where);
    detail::read_field(j, "max_epochs", c.max_epochs, where);
    std::string sched(detail::to_string(c.scheduler));
    detail::read_field(j, "scheduler", sched, where);
    c.scheduler = detail::scheduler_from_string(sched);
    detail::read_field(j, "plateau_factor", c.plateau_factor, where);
    detail::read_field(j, "plateau_patience", c.plateau_patience, where);
    detail::read_field(j, "min_learning_rate", c.min_learning_rate, where);
    detail::read_field(j, "seed", c.seed, where);
    c.validate();
    return c;
}

/// Settings shared by the CLI and the HTTP service. Every field can be set in
/// a JSON config file and overridden by an environment variable named
/// DDUP_<SECTION>_<KEY> (DDUP_<KEY> for top-level keys), e.g. DDUP_INDEX_NLIST.
struct ServiceConfig {
    std::string store = "ddup.snapshot";
    size_t text_dim = 128;
    size_t image_dim = 128;

    struct Index {
        size_t nlist = 0;
        size_t nprobe = 0;
        Metric metric = Metric::kCosine;
        uint64_t seed = 0;
        size_t max_iters = 25;
    } index;

    struct Dedupe {
        size_t top_n = kDefaultTopN;
        double threshold = kDefaultThreshold;
        size_t threads = 1;
    } dedupe;

    struct Server {
        std::string host = "127.0.0.1";
        int port = 8080;
        size_t threads = 4;
    } server;

    StoreOptions
    store_options() const {
        return {text_dim, image_dim};
    }

    IvfParams
    ivf_params() const {
        IvfParams p;
        p.nlist = index.nlist;
        p.metric = index.metric;
        p.seed = index.seed;
        p.max_iters = index.max_iters;
        return p;
    }

    DedupeOptions
    dedupe_options() const {
        DedupeOptions o;
        o.top_n = dedupe.top_n;
        o.threshold = dedupe.threshold;
        o.nprobe = index.nprobe;
        o.threads = dedupe.threads;
        return o;
    }

    void
    validate() const {
        require(text_dim >= 1 && image_dim >= 1, ErrorCode::kInvalidArgument, "config: dims must be >= 1");
        require(dedupe.top_n >= 1, ErrorCode::kInvalidArgument, "config: dedupe.top_n must be >= 1");
        check_threshold(dedupe.threshold);
        require(server.port >= 0 && server.port <= 65535, ErrorCode::kInvalidArgument, "config: server.port out of range");
        require(server.threads >= 1, ErrorCode::kInvalidArgument, "config: server.threads must be >= 1");
    }
};

inline json
to_json(const ServiceConfig& c) {
    return {{"store", c.store},
            {"text_dim", c.text_dim},
            {"image_dim", c.image_dim},
            {"index",
             {{"nlist", c.index.nlist},
              {"nprobe", c.index.nprobe},
              {"metric", std::string(to_string(c.index.metric))},
              {"seed", c.index.seed},
              {"max_iters", c.index.max_iters}}},
            {"dedupe", {{"top_n", c.dedupe.top_n}, {"threshold", c.dedupe.threshold}, {"threads", c.dedupe.threads}}},
            {"server", {{"host", c.server.host}, {"port", c.server.port}, {"threads", c.server.threads}}}};
}

inline ServiceConfig
service_config_from_json(const json& j) {
    ServiceConfig c;
    detail::check_keys(j, {"store", "text_dim", "image_dim", "index", "dedupe", "server"}, "config");
    detail::read_field(j, "store", c.store, "config");
    detail::read_field(j, "text_dim", c.text_dim, "config");
    detail::read_field(j, "image_dim", c.image_dim, "config");
    if (j.contains("index")) {
        const json& s = j["index"];
        detail::check_keys(s, {"nlist", "nprobe", "metric", "seed", "max_iters"}, "index");
        detail::read_field(s, "nlist", c.index.nlist, "index");
        detail::read_field(s, "nprobe", c.index.nprobe, "index");
        std::string metric(to_string(c.index.metric));
        detail::read_field(s, "metric", metric, "index");
        c.index.metric = parse_metric(metric);
        detail::read_field(s, "seed", c.index.seed, "index");
        detail::read_field(s, "max_iters", c.index.max_iters, "index");
    }
    if (j.contains("dedupe")) {
        const json& s = j["dedupe"];
        detail::check_keys(s, {"top_n", "threshold", "threads"}, "dedupe");
        detail::read_field(s, "top_n", c.dedupe.top_n, "dedupe");
        detail::read_field(s, "threshold", c.dedupe.threshold, "dedupe");
        detail::read_field(s, "threads", c.dedupe.threads, "dedupe");
    }
    if (j.contains("server")) {
        const json& s = j["server"];
        detail::check_keys(s, {"host", "port", "threads"}, "server");
        detail::read_field(s, "host", c.server.host, "server");
        detail::read_field(s, "port", c.server.port, "server");
        detail::read_field(s, "threads", c.server.threads, "server");
    }
    c.validate();
    return c;
}

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

inline std::optional<std::string>
process_env(const std::string& name) {
    const char* v = std::getenv(name.c_str());
    return v == nullptr ? std::nullopt : std::optional<std::string>(v);
}

namespace detail {

inline std::string
env_name(std::string_view path) {
    std::string out = "DDUP_";
    for (char ch : path) {
        out += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    }
    return out;
}

// Replaces `leaf` with the environment value parsed to the leaf's JSON type.
inline void
override_leaf(json& leaf, const std::string& name, const std::string& raw) {
    try {
        if (leaf.is_string()) {
            leaf = raw;
        } else if (leaf.is_boolean()) {
            require(raw == "true" || raw == "false" || raw == "1" || raw == "0", ErrorCode::kInvalidArgument, "");
            leaf = raw == "true" || raw == "1";
        } else if (leaf.is_number_unsigned()) {
            require(!raw.empty() && raw.find_first_not_of("0123456789") == std::string::npos,
                    ErrorCode::kInvalidArgument, "");
            leaf = std::stoull(raw);
        } else if (leaf.is_number_integer()) {
            size_t used = 0;
            const long long v = std::stoll(raw, &used);
            require(used == raw.size(), ErrorCode::kInvalidArgument, "");
            leaf = v;
        } else {
            size_t used = 0;
            const double v = std::stod(raw, &used);
            require(used == raw.size(), ErrorCode::kInvalidArgument, "");
            leaf = v;
        }
    } catch (const std::exception&) {
        fail(ErrorCode::kInvalidArgument, "environment variable " + name + " has an invalid value \"" + raw + "\"");
    }
}

inline void
apply_env(json& node, const std::string& path, const EnvLookup& env) {
    if (node.is_object()) {
        for (auto& [key, value] : node.items()) {
            apply_env(value, path.empty() ? key : path + "." + key, env);
        }
        return;
    }
    const std::string name = env_name(path);
    if (const auto raw = env(name)) {
        override_leaf(node, name, *raw);
    }
}

}  // namespace detail

/// Defaults, then the config file (if any), then DDUP_* environment overrides.
/// Only JSON config files are read.
inline ServiceConfig
load_service_config(const std::optional<std::string>& path, const EnvLookup& env = process_env) {
    json j = to_json(ServiceConfig{});
    if (path) {
        const std::string& p = *path;
        require(!(p.size() >= 5 && p.compare(p.size() - 5, 5, ".toml") == 0), ErrorCode::kInvalidArgument,
                "config: TOML is not supported, use a JSON file");
        std::ifstream in(p);
        require(in.good(), ErrorCode::kIo, "config: cannot open " + p);
        json file;
        try {
            file = json::parse(in);
        } catch (const json::parse_error& e) {
            fail(ErrorCode::kInvalidArgument, "config: " + p + " is not valid JSON: " + e.what());
        }
        require(file.is_object(), ErrorCode::kInvalidArgument, "config: top level must be an object");
        service_config_from_json(file);  // reject unknown keys and bad types before merging
        j.merge_patch(file);
    }
    detail::apply_env(j, "", env);
    return service_config_from_json(j);
}

/// Decider training job: model and optimiser settings plus how training pairs
/// are assembled from a labelled pairs file.
struct TrainJob {
    DeciderConfig decider;
    TrainConfig train;
    TrainingPairOptions pairing;
    double validation_fraction = 0.1;
    std::optional<std::string> pairs;  // pairs JSONL; may also come from the command line
};

inline TrainJob
train_job_from_json(const json& j) {
    detail::check_keys(j, {"decider", "train", "pairing", "validation_fraction", "pairs"}, "train job");
    TrainJob job;
    if (j.contains("decider")) {
        job.decider = decider_config_from_json(j["decider"]);
    }
    if (j.contains("train")) {
        job.train = train_config_from_json(j["train"]);
    }
    if (j.contains("pairing")) {
        const json& s = j["pairing"];
        detail::check_keys(s, {"negatives_per_positive", "hard_negative_pool", "hard_fraction", "seed"}, "pairing");
        detail::read_field(s, "negatives_per_positive", job.pairing.negatives_per_positive, "pairing");
        detail::read_field(s, "hard_negative_pool", job.pairing.hard_negative_pool, "pairing");
        detail::read_field(s, "hard_fraction", job.pairing.hard_fraction, "pairing");
        detail::read_field(s, "seed", job.pairing.seed, "pairing");
    }
    detail::read_field(j, "validation_fraction", job.validation_fraction, "train job");
    require(job.validation_fraction > 0.0 && job.validation_fraction < 1.0, ErrorCode::kInvalidArgument,
            "train job: validation_fraction must be in (0, 1)");
    if (j.contains("pairs")) {
        std::string p;
        detail::read_field(j, "pairs", p, "train job");
        job.pairs = p;
    }
    return job;
}

inline TrainJob
load_train_job(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::kIo, "cannot open " + path);
    try {
        return train_job_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        fail(ErrorCode::kInvalidArgument, path + " is not valid JSON: " + std::string(e.what()));
    }
}

}  // namespace ddup
