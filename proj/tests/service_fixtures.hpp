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

#include <sstream>
#include <string>
#include <vector>

#include "ddup/decider/decider.hpp"
#include "ddup/service/catalog.hpp"
#include "ddup/synth/stub_embedder.hpp"

namespace fixture {

// Small world shared by the service tests: 16-d text and image vectors.
inline ddup::SyntheticSpec
small_spec(size_t clusters = 400, double sigma = 0.01, uint64_t seed = 3) {
    ddup::SyntheticSpec s;
    s.num_clusters = clusters;
    s.dim = 16;
    s.noise_sigma = sigma;
    s.seed = seed;
    return s;
}

inline ddup::DeciderConfig
small_decider_config() {
    ddup::DeciderConfig c;
    c.text_dim = 16;
    c.image_dim = 16;
    c.conv_filters = 4;
    c.hidden_dims = {32};
    c.dropout_rate = 0.1;
    c.seed = 5;
    return c;
}

// Decider trained on random pairs from `spec` plus catalog duplicates with
// mined nearest-neighbour negatives.
inline ddup::DeciderModel<float>
small_trained_decider(const ddup::SyntheticSpec& spec = small_spec()) {
    auto train = ddup::synth_pairs(spec, 2000, 0.5, 11);
    ddup::SyntheticSpec mining = spec;
    mining.seed = spec.seed + 1000;
    const auto cat = ddup::synth_catalog(mining, 1500, 0.3);
    ddup::CatalogStore store({spec.dim, spec.dim});
    store.ingest(std::span<const ddup::ProductRecord>(cat.records));
    store.build_index({});
    std::vector<ddup::LabeledPair> known;
    for (const auto& m : cat.matches) {
        known.push_back({m, ddup::Label::kMatch});
    }
    ddup::TrainingPairOptions opt;
    opt.negatives_per_positive = 3;
    opt.hard_fraction = 0.7;
    const auto mined = ddup::training_pairs(store, known, opt);
    train.insert(train.end(), mined.begin(), mined.end());
    const auto val = ddup::synth_pairs(spec, 400, 0.5, 12);
    ddup::TrainConfig tc;
    tc.learning_rate = 3e-3;
    tc.max_epochs = 10;
    tc.batch_size = 32;
    auto model = ddup::DeciderModel<float>::init(small_decider_config());
    return ddup::train(std::move(model), std::span<const ddup::PairSample>(train),
                       std::span<const ddup::PairSample>(val), tc)
        .model;
}

inline std::string
jsonl(const std::vector<ddup::ProductRecord>& records) {
    std::ostringstream os;
    ddup::write_catalog_jsonl(os, records);
    return os.str();
}

inline ddup::StoreOptions
small_options() {
    return {16, 16};
}

}  // namespace fixture
