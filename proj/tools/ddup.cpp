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

// ddup: command-line front end for the catalog store.
//
// Every command that changes state loads the working snapshot (--store),
// applies the change and writes the snapshot back.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ddup/decider/decider.hpp"
#include "ddup/service/bench.hpp"
#include "ddup/service/catalog.hpp"
#include "ddup/service/config.hpp"
#include "ddup/service/http.hpp"
#include "ddup/service/snapshot.hpp"
#include "ddup/synth/stub_embedder.hpp"

namespace {

using namespace ddup;

struct Globals {
    std::string config_path;
    std::string store_path;
    ServiceConfig config;

    std::filesystem::path
    store() const {
        return store_path.empty() ? std::filesystem::path(config.store) : std::filesystem::path(store_path);
    }
};

CatalogStore
open_store(const Globals& g) {
    if (std::filesystem::exists(g.store())) {
        return load_snapshot(g.store());
    }
    return CatalogStore(g.config.store_options());
}

std::ifstream
open_input(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::kIo, "cannot open " + path);
    return in;
}

std::ofstream
open_output(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), ErrorCode::kIo, "cannot open " + path + " for writing");
    return out;
}

void
cmd_ingest(const Globals& g, const std::string& file, const std::string& rejects_path) {
    CatalogStore store = open_store(g);
    auto in = open_input(file);
    const IngestReport r = store.ingest(in);
    save_snapshot(store, g.store());
    std::cout << "lines " << r.lines << ", accepted " << r.accepted << ", rejected " << r.rejects.size()
              << ", store size " << store.size() << '\n';
    if (!rejects_path.empty()) {
        auto out = open_output(rejects_path);
        out << to_json(r)["rejected"].dump(2) << '\n';
    } else {
        for (size_t i = 0; i < std::min<size_t>(r.rejects.size(), 10); ++i) {
            std::cerr << "  line " << r.rejects[i].line << ": " << r.rejects[i].reason << '\n';
        }
        if (r.rejects.size() > 10) {
            std::cerr << "  ... " << r.rejects.size() - 10 << " more (use --rejects FILE)\n";
        }
    }
}

void
cmd_fit_pca(const Globals& g, size_t dim, const std::string& file) {
    CatalogStore store = open_store(g);
    if (store.size() == 0 && (store.options().text_dim != dim || store.options().image_dim != dim)) {
        store = CatalogStore({dim, dim});
    }
    require(store.options().text_dim == dim && store.options().image_dim == dim, ErrorCode::kInvalidArgument,
            "store already holds vectors of dim " + std::to_string(store.options().text_dim) +
                "; PCA target must match");
    auto in = open_input(file);
    std::vector<EmbeddingVector> text_rows;
    std::vector<EmbeddingVector> image_rows;
    std::string line;
    size_t skipped = 0;
    while (std::getline(in, line)) {
        try {
            ProductRecord r = record_from_json_line(line);
            text_rows.push_back(std::move(r.text_vec));
            if (r.image_vec) {
                image_rows.push_back(std::move(*r.image_vec));
            }
        } catch (const Error&) {
            ++skipped;
        }
    }
    require(!text_rows.empty(), ErrorCode::kInvalidArgument, "no usable rows in " + file);
    auto fit = [&](std::vector<EmbeddingVector>& rows, bool text) {
        if (rows.empty() || rows.front().dim() == dim) {
            return;
        }
        PcaModel m = PcaModel::fit(rows, dim);
        double kept = 0.0;
        for (float v : m.explained_variance()) {
            kept += v;
        }
        std::cout << (text ? "text" : "image") << ": " << rows.front().dim() << " -> " << dim << " from "
                  << rows.size() << " rows, retained variance " << kept << '\n';
        if (text) {
            store.set_pca_text(std::move(m));
        } else {
            store.set_pca_image(std::move(m));
        }
    };
    fit(text_rows, true);
    fit(image_rows, false);
    if (skipped > 0) {
        std::cerr << "skipped " << skipped << " unusable lines\n";
    }
    save_snapshot(store, g.store());
}

void
cmd_build_index(const Globals& g, IvfParams p) {
    CatalogStore store = open_store(g);
    store.build_index(p);
    save_snapshot(store, g.store());
    const auto fp = store.index()->memory_footprint();
    std::cout << "indexed " << store.index()->size() << " vectors, nlist " << store.index()->nlist() << ", metric "
              << to_string(store.index()->metric()) << ", " << fp.total << " bytes\n";
}

void
cmd_train_decider(const Globals& g, const std::string& config_file, std::string pairs_file,
                  const std::string& history_file) {
    CatalogStore store = open_store(g);
    TrainJob job = load_train_job(config_file);
    if (pairs_file.empty()) {
        require(job.pairs.has_value(), ErrorCode::kInvalidArgument, "no pairs file given (--pairs or \"pairs\")");
        pairs_file = *job.pairs;
    }
    // Vector dims always follow the store.
    job.decider.text_dim = store.options().text_dim;
    job.decider.image_dim = store.options().image_dim;

    auto in = open_input(pairs_file);
    const auto known = read_pairs_jsonl(in);
    auto samples = training_pairs(store, known, job.pairing);
    Rng rng(job.pairing.seed ^ 0x9e3779b97f4a7c15ULL);
    rng.shuffle(samples.begin(), samples.end());
    const auto n_val = std::max<size_t>(
        1, static_cast<size_t>(job.validation_fraction * static_cast<double>(samples.size())));
    require(samples.size() > n_val, ErrorCode::kInvalidArgument, "too few training pairs");
    const std::span<const PairSample> all(samples);
    const auto val = all.first(n_val);
    const auto tr = all.subspan(n_val);
    std::cout << "training on " << tr.size() << " pairs, validating on " << val.size() << '\n';

    auto result = train(DeciderModel<float>::init(job.decider), tr, val, job.train, [](const EpochStats& e) {
        std::cout << "epoch " << e.epoch << "  train_loss " << e.train_loss << "  val_loss " << e.val_loss << "  lr "
                  << e.learning_rate << '\n';
    });
    const EvalReport rep = evaluate(result.model, val);
    std::cout << "validation macro-F1 " << rep.macro_f1 << " (match P " << rep.match.precision << " R "
              << rep.match.recall << ")\n";
    if (!history_file.empty()) {
        auto out = open_output(history_file);
        result.history.write_csv(out);
    }
    store.set_decider(std::move(result.model));
    save_snapshot(store, g.store());
}

void
cmd_dedupe(const Globals& g, DedupeOptions opt, const std::string& out_file, std::string groups_file) {
    const CatalogStore store = open_store(g);
    const DedupeResult r = store.dedupe(opt);
    {
        auto out = open_output(out_file);
        write_decisions_jsonl(out, r.decisions);
    }
    if (groups_file.empty()) {
        groups_file = out_file + ".groups.json";
    }
    {
        auto out = open_output(groups_file);
        out << groups_to_json(r.groups).dump(2) << '\n';
    }
    size_t matches = 0;
    for (const auto& d : r.decisions) {
        matches += d.label == Label::kMatch;
    }
    std::cout << r.decisions.size() << " pairs scored, " << matches << " matches, " << r.groups.size()
              << " duplicate groups\n"
              << "decisions: " << out_file << "\ngroups: " << groups_file << '\n';
}

void
cmd_serve(const Globals& g) {
    DedupApi api(open_store(g), g.config);
    HttpServer server(api);
    const int port = server.bind(g.config.server.host, g.config.server.port);
    std::cout << "serving " << api.generation()->size() << " products on http://" << g.config.server.host << ':'
              << port << std::endl;
    server.run();
}

}  // namespace

int
main(int argc, char** argv) {
    CLI::App app{"ddup: catalog deduplication over text and image vectors"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "JSON config file (DDUP_* environment variables override it)");
    app.add_option("--store", g.store_path, "working snapshot file (default from config: ddup.snapshot)");

    auto* ingest = app.add_subcommand("ingest", "add products from a JSONL file");
    std::string ingest_file;
    std::string rejects_file;
    ingest->add_option("file", ingest_file, "products JSONL")->required();
    ingest->add_option("--rejects", rejects_file, "write the reject report (JSON) here");

    auto* fit_pca = app.add_subcommand("fit-pca", "fit text/image PCA reducers from raw vectors");
    size_t pca_dim = 128;
    std::string pca_file;
    fit_pca->add_option("--dim", pca_dim, "target dimension")->check(CLI::PositiveNumber);
    fit_pca->add_option("file", pca_file, "JSONL with raw vectors")->required();

    auto* build = app.add_subcommand("build-index", "(re)build the IVF index over text vectors");
    std::optional<size_t> nlist;
    std::optional<std::string> metric;
    std::optional<uint64_t> seed;
    std::optional<size_t> max_iters;
    build->add_option("--nlist", nlist, "coarse clusters (default sqrt(count))");
    build->add_option("--metric", metric, "L2, IP or COSINE");
    build->add_option("--seed", seed, "k-means seed");
    build->add_option("--max-iters", max_iters, "k-means iterations");

    auto* train_cmd = app.add_subcommand("train-decider", "train the pair decider from labelled pairs");
    std::string train_config;
    std::string pairs_file;
    std::string history_file;
    train_cmd->add_option("--config", train_config, "training job JSON")->required();
    train_cmd->add_option("--pairs", pairs_file, "pairs JSONL (overrides the job file)");
    train_cmd->add_option("--history", history_file, "write per-epoch losses as CSV");

    auto* dedupe = app.add_subcommand("dedupe", "score candidate pairs and group duplicates");
    std::optional<size_t> top_n;
    std::optional<double> threshold;
    std::optional<size_t> nprobe;
    std::optional<size_t> threads;
    std::string out_file;
    std::string groups_file;
    dedupe->add_option("--top-n", top_n, "candidates per product");
    dedupe->add_option("--threshold", threshold, "match probability threshold");
    dedupe->add_option("--nprobe", nprobe, "lists probed per query");
    dedupe->add_option("--threads", threads, "worker threads");
    dedupe->add_option("--out", out_file, "decision log (JSONL)")->required();
    dedupe->add_option("--groups", groups_file, "groups document (default <out>.groups.json)");

    auto* bench = app.add_subcommand("bench", "memory and latency benchmarks");
    bench->require_subcommand(1);
    auto* mem = bench->add_subcommand("mem", "index footprint by dimension and count");
    MemoryBenchOptions mem_opt;
    bool mem_json = false;
    mem->add_option("--dims", mem_opt.dims, "dimensions")->delimiter(',');
    mem->add_option("--counts", mem_opt.counts, "vector counts")->delimiter(',');
    mem->add_option("--nlist", mem_opt.nlist, "coarse clusters (default sqrt(count))");
    mem->add_option("--seed", mem_opt.seed, "data seed");
    mem->add_flag("--json", mem_json, "print JSON instead of a table");
    auto* lat = bench->add_subcommand("lat", "query latency and recall by nprobe");
    LatencyBenchOptions lat_opt;
    bool lat_json = false;
    lat->add_option("--count", lat_opt.count, "indexed vectors");
    lat->add_option("--dim", lat_opt.dim, "dimension");
    lat->add_option("--top-n", lat_opt.top_n, "results per query");
    lat->add_option("--queries", lat_opt.queries, "query count");
    lat->add_option("--nlist", lat_opt.nlist, "coarse clusters (default sqrt(count))");
    lat->add_option("--nprobe", lat_opt.nprobes, "nprobe values (default powers of two)")->delimiter(',');
    lat->add_option("--clusters", lat_opt.clusters, "Gaussian blobs in the data (0: uniform)");
    lat->add_option("--seed", lat_opt.seed, "data seed");
    lat->add_flag("--json", lat_json, "print JSON instead of a table");

    auto* serve = app.add_subcommand("serve", "serve the JSON API over HTTP");
    std::optional<int> port;
    std::optional<std::string> host;
    serve->add_option("--port", port, "listen port");
    serve->add_option("--host", host, "listen address");

    auto* snapshot = app.add_subcommand("snapshot", "copy the working store to or from a file");
    snapshot->require_subcommand(1);
    std::string snap_path;
    auto* snap_save = snapshot->add_subcommand("save", "write the working store to <path>");
    snap_save->add_option("path", snap_path)->required();
    auto* snap_load = snapshot->add_subcommand("load", "replace the working store with <path>");
    snap_load->add_option("path", snap_path)->required();

    auto* import_decider = app.add_subcommand("import-decider", "copy the decider from another snapshot");
    std::string decider_source;
    import_decider->add_option("path", decider_source, "snapshot holding a trained decider")->required();

    auto* stats = app.add_subcommand("stats", "print store statistics");

    auto* synth = app.add_subcommand("synth", "write a synthetic catalog and its ground-truth pairs");
    SyntheticSpec spec;
    size_t n_products = 1000;
    double dup_rate = 0.05;
    std::string synth_out;
    std::string truth_out;
    synth->add_option("--products", n_products, "distinct products");
    synth->add_option("--dup-rate", dup_rate, "fraction of products duplicated");
    synth->add_option("--clusters", spec.num_clusters, "underlying centres");
    synth->add_option("--dim", spec.dim, "vector dimension");
    synth->add_option("--intrinsic-dim", spec.intrinsic_dim, "subspace dimension (0: full)");
    synth->add_option("--sigma", spec.noise_sigma, "per-component noise");
    synth->add_option("--seed", spec.seed, "seed");
    synth->add_option("--out", synth_out, "catalog JSONL")->required();
    synth->add_option("--truth", truth_out, "ground-truth pairs JSONL")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        g.config = load_service_config(g.config_path.empty() ? std::nullopt : std::optional(g.config_path));
        if (port) {
            g.config.server.port = *port;
        }
        if (host) {
            g.config.server.host = *host;
        }
        if (ingest->parsed()) {
            cmd_ingest(g, ingest_file, rejects_file);
        } else if (fit_pca->parsed()) {
            cmd_fit_pca(g, pca_dim, pca_file);
        } else if (build->parsed()) {
            IvfParams p = g.config.ivf_params();
            p.nlist = nlist.value_or(p.nlist);
            p.metric = metric ? parse_metric(*metric) : p.metric;
            p.seed = seed.value_or(p.seed);
            p.max_iters = max_iters.value_or(p.max_iters);
            cmd_build_index(g, p);
        } else if (train_cmd->parsed()) {
            cmd_train_decider(g, train_config, pairs_file, history_file);
        } else if (dedupe->parsed()) {
            DedupeOptions opt = g.config.dedupe_options();
            opt.top_n = top_n.value_or(opt.top_n);
            opt.threshold = threshold.value_or(opt.threshold);
            opt.nprobe = nprobe.value_or(opt.nprobe);
            opt.threads = threads.value_or(opt.threads);
            cmd_dedupe(g, opt, out_file, groups_file);
        } else if (mem->parsed()) {
            const auto rep = bench_memory(mem_opt);
            if (mem_json) {
                std::cout << rep.to_json().dump(2) << '\n';
            } else {
                rep.write_table(std::cout);
            }
        } else if (lat->parsed()) {
            const auto rep = bench_latency(lat_opt);
            if (lat_json) {
                std::cout << rep.to_json().dump(2) << '\n';
            } else {
                rep.write_table(std::cout);
            }
        } else if (serve->parsed()) {
            g.config.validate();
            cmd_serve(g);
        } else if (snap_save->parsed()) {
            save_snapshot(open_store(g), snap_path);
            std::cout << "saved " << snap_path << '\n';
        } else if (snap_load->parsed()) {
            const CatalogStore loaded = load_snapshot(snap_path);
            save_snapshot(loaded, g.store());
            std::cout << "loaded " << loaded.size() << " products from " << snap_path << '\n';
        } else if (import_decider->parsed()) {
            const CatalogStore source = load_snapshot(decider_source);
            require(source.decider().has_value(), ErrorCode::kNotReady, decider_source + " holds no decider");
            CatalogStore store = open_store(g);
            store.set_decider(*source.decider());
            save_snapshot(store, g.store());
            std::cout << "imported decider from " << decider_source << '\n';
        } else if (stats->parsed()) {
            std::cout << to_json(open_store(g).stats()).dump(2) << '\n';
        } else if (synth->parsed()) {
            const auto cat = synth_catalog(spec, n_products, dup_rate);
            auto out = open_output(synth_out);
            write_catalog_jsonl(out, cat.records);
            auto truth = open_output(truth_out);
            write_pairs_jsonl(truth, cat.matches);
            std::cout << cat.records.size() << " products, " << cat.matches.size() << " duplicate pairs\n";
        }
    } catch (const Error& e) {
        std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
