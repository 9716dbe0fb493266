#include "gonet/config.hpp"

#include <json.hpp>

namespace gonet {

namespace {

using json = nlohmann::json;

const char* schedule_name(LrSchedule s) {
    return s == LrSchedule::plateau ? "plateau" : "none";
}

LrSchedule schedule_from(const std::string& s) {
    if (s == "plateau") return LrSchedule::plateau;
    if (s == "none") return LrSchedule::none;
    throw ConfigError("unknown lr schedule: '" + s + "'");
}

const char* selection_name(Selection s) {
    return s == Selection::best_val ? "best_val" : "last";
}

Selection selection_from(const std::string& s) {
    if (s == "best_val") return Selection::best_val;
    if (s == "last") return Selection::last;
    throw ConfigError("unknown model selection: '" + s + "'");
}

template <class T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ModelConfig RunConfig::model_config(std::int64_t output_dim, std::int64_t dataset_max_len) const {
    ModelConfig cfg;
    cfg.embed_dim = embed_dim;
    cfg.kernel_sizes = kernel_sizes;
    cfg.conv_filters = conv_filters;
    cfg.gru_hidden = gru_hidden;
    cfg.dense_hidden = dense_hidden;
    cfg.output_dim = output_dim;
    cfg.dropout_rate = dropout_rate;
    cfg.max_len = dataset_max_len;
    cfg.alphabet_hash = Alphabet(alphabet).hash();
    return cfg;
}

std::string RunConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["deterministic"] = deterministic;
    j["threads"] = threads;
    j["quiet"] = quiet;
    j["alphabet"] = alphabet;
    j["evidence_whitelist"] = evidence_whitelist;
    j["max_len"] = max_len;
    j["threshold"] = threshold;
    j["min_one"] = min_one;
    j["columns"] = {{"protein", columns.protein},
                    {"term", columns.term},
                    {"evidence", columns.evidence},
                    {"qualifier", columns.qualifier}};
    j["model"] = {{"embed_dim", embed_dim},       {"kernel_sizes", kernel_sizes},
                  {"conv_filters", conv_filters}, {"gru_hidden", gru_hidden},
                  {"dense_hidden", dense_hidden}, {"dropout_rate", dropout_rate}};
    j["train"] = {{"learning_rate", train.learning_rate},
                  {"batch_size", train.batch_size},
                  {"epochs", train.epochs},
                  {"validation_fraction", train.validation_fraction},
                  {"lr_schedule", schedule_name(train.lr_schedule)},
                  {"plateau_patience", train.plateau_patience},
                  {"plateau_factor", train.plateau_factor},
                  {"lr_floor", train.lr_floor},
                  {"selection", selection_name(train.selection)}};
    json paths;
    if (!obo_path.empty()) paths["obo"] = obo_path;
    if (!annotations_path.empty()) paths["annotations"] = annotations_path;
    if (!fasta_path.empty()) paths["fasta"] = fasta_path;
    if (!dataset_path.empty()) paths["dataset"] = dataset_path;
    if (!checkpoint_path.empty()) paths["checkpoint"] = checkpoint_path;
    if (!out_path.empty()) paths["out"] = out_path;
    if (!namespace_name.empty()) paths["namespace"] = namespace_name;
    j["paths"] = std::move(paths);
    return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    RunConfig cfg;
    maybe(j, "seed", cfg.seed);
    maybe(j, "deterministic", cfg.deterministic);
    maybe(j, "threads", cfg.threads);
    maybe(j, "quiet", cfg.quiet);
    maybe(j, "alphabet", cfg.alphabet);
    if (j.contains("evidence_whitelist"))
        cfg.evidence_whitelist = j.at("evidence_whitelist").get<std::set<std::string>>();
    maybe(j, "max_len", cfg.max_len);
    maybe(j, "threshold", cfg.threshold);
    maybe(j, "min_one", cfg.min_one);
    if (j.contains("columns")) {
        const json& c = j.at("columns");
        maybe(c, "protein", cfg.columns.protein);
        maybe(c, "term", cfg.columns.term);
        maybe(c, "evidence", cfg.columns.evidence);
        maybe(c, "qualifier", cfg.columns.qualifier);
    }
    if (j.contains("model")) {
        const json& m = j.at("model");
        maybe(m, "embed_dim", cfg.embed_dim);
        maybe(m, "kernel_sizes", cfg.kernel_sizes);
        maybe(m, "conv_filters", cfg.conv_filters);
        maybe(m, "gru_hidden", cfg.gru_hidden);
        maybe(m, "dense_hidden", cfg.dense_hidden);
        maybe(m, "dropout_rate", cfg.dropout_rate);
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        maybe(t, "learning_rate", cfg.train.learning_rate);
        maybe(t, "batch_size", cfg.train.batch_size);
        maybe(t, "epochs", cfg.train.epochs);
        maybe(t, "validation_fraction", cfg.train.validation_fraction);
        if (t.contains("lr_schedule"))
            cfg.train.lr_schedule = schedule_from(t.at("lr_schedule").get<std::string>());
        maybe(t, "plateau_patience", cfg.train.plateau_patience);
        maybe(t, "plateau_factor", cfg.train.plateau_factor);
        maybe(t, "lr_floor", cfg.train.lr_floor);
        if (t.contains("selection"))
            cfg.train.selection = selection_from(t.at("selection").get<std::string>());
    }
    if (j.contains("paths")) {
        const json& p = j.at("paths");
        maybe(p, "obo", cfg.obo_path);
        maybe(p, "annotations", cfg.annotations_path);
        maybe(p, "fasta", cfg.fasta_path);
        maybe(p, "dataset", cfg.dataset_path);
        maybe(p, "checkpoint", cfg.checkpoint_path);
        maybe(p, "out", cfg.out_path);
        maybe(p, "namespace", cfg.namespace_name);
    }
    cfg.train.seed = cfg.seed;
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    return from_json(read_file(path));
}

void RunConfig::save(const std::string& path) const {
    write_file(path, to_json());
}

}  // namespace gonet
