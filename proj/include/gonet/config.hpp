#pragma once

#include <cstdint>
#include <set>
#include <string>

#include "gonet/annotations.hpp"
#include "gonet/model.hpp"

namespace gonet {

// Every knob of a pipeline run: model and training hyperparameters, the
// alphabet, the evidence whitelist, file paths, seed and threading. A
// resolved config serializes back to a JSON file that reproduces the run.
struct RunConfig {
    std::uint64_t seed = 0;
    bool deterministic = false;
    int threads = 1;
    bool quiet = false;

    std::string alphabet = "ACDEFGHIKLMNPQRSTVWYBJOUXZ";
    std::set<std::string> evidence_whitelist = default_evidence_whitelist();
    std::int64_t max_len = 1000;
    double threshold = 0.5;
    bool min_one = false;
    AnnotationColumns columns;

    // ModelConfig minus the fields that come from the dataset
    // (output_dim, max_len, alphabet hash).
    std::int64_t embed_dim = 50;
    std::vector<std::int64_t> kernel_sizes = {3, 7, 11};
    std::int64_t conv_filters = 64;
    std::int64_t gru_hidden = 300;
    std::int64_t dense_hidden = 256;
    double dropout_rate = 0.5;

    TrainConfig train;

    // Paths; subcommands use the ones they need.
    std::string obo_path;
    std::string annotations_path;
    std::string fasta_path;
    std::string dataset_path;
    std::string checkpoint_path;
    std::string out_path;
    std::string namespace_name;

    ModelConfig model_config(std::int64_t output_dim, std::int64_t dataset_max_len) const;

    std::string to_json() const;
    static RunConfig from_json(const std::string& text);
    static RunConfig load(const std::string& path);
    void save(const std::string& path) const;
};

}  // namespace gonet
