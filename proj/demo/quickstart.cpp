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

// Quickstart: train a decider on one synthetic catalog, deduplicate another,
// and score the result against the generator's ground truth.

#include <cstdio>
#include <filesystem>
#include <set>
#include <span>

#include "ddup/service/catalog.hpp"
#include "ddup/service/snapshot.hpp"
#include "ddup/synth/stub_embedder.hpp"

using namespace ddup;

int
main() {
    SyntheticSpec spec;
    spec.dim = 64;
    spec.noise_sigma = 0.01;

    // Training side: a catalog with many known duplicates.
    SyntheticSpec train_spec = spec;
    train_spec.num_clusters = 3000;
    train_spec.seed = 1;
    const auto train_cat = synth_catalog(train_spec, 3000, 0.3);
    CatalogStore train_store({spec.dim, spec.dim});
    train_store.ingest(std::span<const ProductRecord>(train_cat.records));
    train_store.build_index({});
    std::vector<LabeledPair> known;
    for (const auto& m : train_cat.matches) {
        known.push_back({m, Label::kMatch});
    }
    TrainingPairOptions pairing;
    pairing.negatives_per_positive = 3;
    pairing.hard_fraction = 0.7;
    const auto samples = training_pairs(train_store, known, pairing);
    const std::span<const PairSample> all(samples);
    const size_t n_val = samples.size() / 10;

    DeciderConfig dc;
    dc.text_dim = spec.dim;
    dc.image_dim = spec.dim;
    dc.conv_filters = 8;
    dc.hidden_dims = {64};
    TrainConfig tc;
    tc.learning_rate = 2e-3;
    tc.max_epochs = 6;
    tc.batch_size = 32;
    auto trained = train(DeciderModel<float>::init(dc), all.subspan(n_val), all.first(n_val), tc,
                         [](const EpochStats& e) {
                             std::printf("epoch %zu  train %.4f  val %.4f\n", e.epoch, e.train_loss, e.val_loss);
                         });

    // Catalog to clean: 5000 products, 5% duplicated.
    SyntheticSpec cat_spec = spec;
    cat_spec.num_clusters = 5000;
    cat_spec.seed = 2;
    const auto cat = synth_catalog(cat_spec, 5000, 0.05);
    CatalogStore store({spec.dim, spec.dim});
    const auto report = store.ingest(std::span<const ProductRecord>(cat.records));
    std::printf("ingested %zu of %zu products\n", report.accepted, report.lines);
    store.build_index({});
    store.set_decider(std::move(trained.model));

    DedupeOptions opt;
    opt.top_n = 10;
    const auto result = store.dedupe(opt);
    const std::set<IdPair> truth(cat.matches.begin(), cat.matches.end());
    size_t tp = 0;
    size_t predicted = 0;
    for (const auto& d : result.decisions) {
        if (d.label == Label::kMatch) {
            ++predicted;
            tp += truth.contains(IdPair{d.id_a, d.id_b});
        }
    }
    std::printf("%zu pairs scored, %zu groups, pair precision %.4f, recall %.4f\n", result.decisions.size(),
                result.groups.size(), predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0,
                static_cast<double>(tp) / static_cast<double>(truth.size()));

    const auto path = std::filesystem::temp_directory_path() / "ddup_quickstart.snap";
    save_snapshot(store, path);
    const bool same = load_snapshot(path).dedupe(opt) == result;
    std::printf("snapshot %s (%ju bytes), reloaded dedupe identical: %s\n", path.c_str(),
                static_cast<uintmax_t>(std::filesystem::file_size(path)), same ? "yes" : "no");
    std::filesystem::remove(path);
    return same ? 0 : 1;
}
