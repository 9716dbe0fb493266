// Small model/dataset builders shared by the model, inference, CLI and
// acceptance suites.
#pragma once

#include <map>
#include <set>
#include <string>

#include "gonet/annotations.hpp"
#include "gonet/model.hpp"
#include "gonet/rng.hpp"

namespace fixtures {

inline gonet::ModelConfig tiny_config(std::int64_t output_dim, std::int64_t max_len,
                                      double dropout = 0.0) {
    gonet::ModelConfig cfg;
    cfg.embed_dim = 6;
    cfg.kernel_sizes = {3, 7, 11};
    cfg.conv_filters = 4;
    cfg.gru_hidden = 5;
    cfg.dense_hidden = 8;
    cfg.output_dim = output_dim;
    cfg.dropout_rate = dropout;
    cfg.max_len = max_len;
    cfg.alphabet_hash = gonet::Alphabet().hash();
    return cfg;
}

// Random multi-label dataset with one or two labels per row and sequence
// lengths in [min_len, max_len].
inline gonet::Dataset random_dataset(std::int64_t rows, std::int64_t k, std::int64_t max_len,
                                     gonet::Rng& rng, std::int64_t min_len = 3) {
    gonet::Alphabet a;
    gonet::TermDictionary dict;
    dict.ns = gonet::GoNamespace::molecular_function;
    for (std::int64_t i = 0; i < k; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "GO:%07d", static_cast<int>(i + 1));
        dict.ids.push_back(buf);
        dict.names.push_back("term " + std::to_string(i + 1));
    }
    std::map<std::string, std::set<std::int32_t>> agg;
    std::map<std::string, std::string> seqs;
    for (std::int64_t i = 0; i < rows; ++i) {
        std::string pid = "P" + std::to_string(10000 + i);
        std::set<std::int32_t> labels;
        labels.insert(static_cast<std::int32_t>(rng.next_below(static_cast<std::uint64_t>(k))));
        if (rng.next_below(2))
            labels.insert(static_cast<std::int32_t>(rng.next_below(static_cast<std::uint64_t>(k))));
        agg[pid] = labels;
        std::int64_t len =
            min_len + static_cast<std::int64_t>(
                          rng.next_below(static_cast<std::uint64_t>(max_len - min_len + 1)));
        std::string s;
        for (std::int64_t j = 0; j < len; ++j)
            s.push_back(a.symbol_at(static_cast<std::int32_t>(rng.next_below(26))));
        seqs[pid] = s;
    }
    return gonet::build_dataset(agg, seqs, dict, max_len, a);
}

// One train-mode forward to populate batch-norm running stats.
inline void prime_bn(gonet::Model<float>& model, const gonet::Dataset& ds) {
    gonet::IntMatrix idx{ds.indices.rows, ds.indices.cols, ds.indices.data};
    gonet::ByteMatrix mask{ds.mask.rows, ds.mask.cols, ds.mask.data};
    gonet::NoGradGuard guard;
    model.forward(idx, mask, gonet::Mode::train);
}

}  // namespace fixtures
