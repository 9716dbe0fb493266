// Command-line front end: inspect-ontology, build-dataset, train, evaluate,
// predict. Exit codes: 0 success, 2 input/validation error, 3 numerical
// failure.
#include <cstdio>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gonet/config.hpp"
#include "gonet/evaluate.hpp"
#include "gonet/inference.hpp"
#include "gonet/model.hpp"

namespace {

using namespace gonet;

struct CliState {
    RunConfig cfg;
    std::string dump_config_path;
};

void note(const CliState& st, const std::string& msg) {
    if (!st.cfg.quiet) std::cerr << msg << '\n';
}

void merge_counters(Counters& into, const Counters& from, const std::string& prefix) {
    for (const auto& [key, value] : from) into[prefix + "." + key] = value;
}

std::string format_fixed(double v, int digits) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

int cmd_inspect(const CliState& st) {
    auto graph = parse_obo(read_file(st.cfg.obo_path));
    std::ostringstream out;
    out << "terms: " << graph.term_count() << '\n';
    out << "obsolete: " << graph.obsolete_count() << '\n';
    for (auto ns : {GoNamespace::biological_process, GoNamespace::cellular_component,
                    GoNamespace::molecular_function})
        out << to_string(ns) << ": " << graph.namespace_count(ns) << '\n';

    std::vector<GoNamespace> wanted;
    if (!st.cfg.namespace_name.empty()) {
        wanted.push_back(namespace_from_string(st.cfg.namespace_name));
    } else {
        for (auto ns : {GoNamespace::biological_process, GoNamespace::cellular_component,
                        GoNamespace::molecular_function})
            if (graph.roots().count(ns)) wanted.push_back(ns);
    }
    for (auto ns : wanted) {
        auto dict = graph.top_level_terms(ns);
        out << "top_level[" << to_string(ns) << "]: " << dict.size() << '\n';
        out << dict.export_tsv();
    }

    if (st.cfg.out_path.empty())
        std::cout << out.str();
    else
        write_file(st.cfg.out_path, out.str());
    return 0;
}

int cmd_build_dataset(const CliState& st, const std::string& manifest_path) {
    const RunConfig& cfg = st.cfg;
    if (cfg.namespace_name.empty()) throw ConfigError("build-dataset: --namespace is required");
    auto ns = namespace_from_string(cfg.namespace_name);
    Alphabet alphabet(cfg.alphabet);

    note(st, "parsing ontology: " + cfg.obo_path);
    auto graph = parse_obo(read_file(cfg.obo_path));
    auto dict = graph.top_level_terms(ns);

    note(st, "parsing annotations: " + cfg.annotations_path);
    auto table = parse_annotation_table(read_file(cfg.annotations_path), cfg.columns);
    auto kept = filter_experimental(table.records, cfg.evidence_whitelist);
    auto agg = aggregate_by_protein(kept, graph, dict);

    note(st, "parsing sequences: " + cfg.fasta_path);
    auto fasta = parse_fasta(read_file(cfg.fasta_path), alphabet);

    auto ds = build_dataset(agg.proteins, fasta.sequences, dict, cfg.max_len, alphabet);
    merge_counters(ds.counters, table.counters, "annotations");
    ds.counters["filter.non_experimental_dropped"] = table.records.size() - kept.size();
    merge_counters(ds.counters, agg.counters, "aggregate");
    merge_counters(ds.counters, fasta.counters, "fasta");

    save_dataset(ds, cfg.out_path);
    note(st, "wrote dataset: " + cfg.out_path + " (" + std::to_string(ds.rows()) + " rows)");
    if (!manifest_path.empty())
        write_file(manifest_path, ds.manifest());
    else if (!cfg.quiet)
        std::cout << ds.manifest();
    return 0;
}

int cmd_train(const CliState& st, const std::string& log_path) {
    const RunConfig& cfg = st.cfg;
    auto ds = load_dataset(cfg.dataset_path);
    if (ds.alphabet_symbols != cfg.alphabet)
        throw ValidationError("train: dataset alphabet differs from the configured alphabet");

    auto mcfg = cfg.model_config(ds.dict.size(), ds.max_len);
    Model<float> model(mcfg, cfg.seed);
    note(st, "training on " + std::to_string(ds.rows()) + " rows, " +
                 std::to_string(model.parameter_count()) + " parameters");

    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    auto ckpt = train(model, ds, tc);
    save_checkpoint(ckpt, cfg.out_path);
    note(st, "wrote checkpoint: " + cfg.out_path);

    std::ostringstream log;
    log << "epoch\ttrain_loss\tval_loss\tval_f1\tval_mcc\tlearning_rate\n";
    for (const auto& e : ckpt.log)
        log << e.epoch << '\t' << format_double(e.train_loss) << '\t'
            << format_double(e.val_loss) << '\t' << format_double(e.val_f1) << '\t'
            << format_double(e.val_mcc) << '\t' << format_double(e.learning_rate) << '\n';
    if (!log_path.empty())
        write_file(log_path, log.str());
    else if (!cfg.quiet)
        std::cout << log.str();
    return 0;
}

int cmd_evaluate(const CliState& st, const std::vector<double>& thresholds,
                 const std::string& tsv_path) {
    const RunConfig& cfg = st.cfg;
    auto ckpt = load_checkpoint(cfg.checkpoint_path);
    auto ds = load_dataset(cfg.dataset_path);
    if (ds.dict.ids != ckpt.dict.ids)
        throw ValidationError(
            "evaluate: the dataset dictionary does not match the checkpoint's (sizes " +
            std::to_string(ds.dict.size()) + " vs " + std::to_string(ckpt.dict.size()) + ")");
    auto model = model_from_checkpoint(ckpt);

    std::vector<double> sweep = thresholds.empty() ? std::vector<double>{cfg.threshold}
                                                   : thresholds;
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        auto report = evaluate(model, ds, sweep[i], cfg.threads);
        std::string text = report.render_text();
        if (cfg.out_path.empty()) {
            std::cout << text;
        } else {
            std::string path = cfg.out_path;
            if (sweep.size() > 1) path += "." + format_fixed(sweep[i], 2);
            write_file(path, text);
            note(st, "wrote report: " + path);
        }
        if (!tsv_path.empty()) {
            std::string path = tsv_path;
            if (sweep.size() > 1) path += "." + format_fixed(sweep[i], 2);
            write_file(path, report.render_tsv());
        }
    }
    return 0;
}

int cmd_predict(const CliState& st, bool json_output) {
    const RunConfig& cfg = st.cfg;
    auto ckpt = load_checkpoint(cfg.checkpoint_path);
    Alphabet alphabet(ckpt.alphabet_symbols);
    auto fasta = parse_fasta(read_file(cfg.fasta_path), alphabet);
    if (fasta.sequences.empty())
        throw ValidationError("predict: no usable sequences in " + cfg.fasta_path);

    PredictOptions opts;
    opts.threshold = cfg.threshold;
    opts.min_one = cfg.min_one;
    opts.threads = cfg.threads;
    auto preds = predict(ckpt, fasta.sequences, opts);
    std::string text = json_output ? render_predictions_json(preds) : render_predictions(preds);
    if (cfg.out_path.empty())
        std::cout << text;
    else
        write_file(cfg.out_path, text);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-label prediction of top-level Gene Ontology terms from protein sequence"};
    app.require_subcommand(1);

    std::string config_file;
    CliState st;

    // Global knobs; CLI values override the config file.
    std::uint64_t seed = 0;
    int threads = 1;
    bool deterministic = false, quiet = false;
    auto* opt_config = app.add_option("--config", config_file, "JSON run configuration");
    auto* opt_seed = app.add_option("--seed", seed, "RNG seed");
    auto* opt_threads = app.add_option("--threads", threads, "worker threads for scoring");
    auto* opt_det = app.add_flag("--deterministic", deterministic,
                                 "force single-threaded, reproducible execution");
    auto* opt_quiet = app.add_flag("--quiet", quiet, "suppress progress notes");
    app.add_option("--dump-config", st.dump_config_path,
                   "write the fully resolved configuration to this file");

    std::string obo, annotations, fasta, dataset, checkpoint, out, ns_name, manifest, log_path,
        tsv_path, whitelist_csv, alphabet;
    std::int64_t max_len = 0, epochs = -1, batch_size = 0;
    double lr = -1, threshold = -1, val_fraction = -1, dropout = -1;
    bool strict_evidence = false, min_one = false, json_output = false;
    std::string lr_schedule, selection;
    std::vector<double> thresholds;

    auto* inspect = app.add_subcommand("inspect-ontology",
                                       "Parse and validate an OBO file; print term counts and "
                                       "the top-level dictionary");
    auto* i_obo = inspect->add_option("--obo", obo, "OBO 1.2 ontology file");
    auto* i_ns = inspect->add_option("--namespace", ns_name, "bp, cc or mf (default: all)");
    auto* i_out = inspect->add_option("--out", out, "write the report here instead of stdout");

    auto* build = app.add_subcommand("build-dataset",
                                     "Ingest OBO + annotations + FASTA into an encoded dataset");
    auto* b_obo = build->add_option("--obo", obo, "OBO 1.2 ontology file");
    auto* b_ann = build->add_option("--annotations", annotations, "annotation TSV");
    auto* b_fasta = build->add_option("--fasta", fasta, "protein sequences");
    auto* b_ns = build->add_option("--namespace", ns_name, "bp, cc or mf");
    auto* b_out = build->add_option("--out", out, "dataset output path");
    auto* b_manifest = build->add_option("--manifest", manifest, "manifest output path");
    auto* b_maxlen = build->add_option("--max-len", max_len, "encoded sequence length");
    auto* b_whitelist =
        build->add_option("--whitelist", whitelist_csv, "comma-separated evidence codes");
    auto* b_strict = build->add_flag("--strict-evidence", strict_evidence,
                                     "use the strict experimental set (drops TAS, IC)");
    auto* b_alpha = build->add_option("--alphabet", alphabet, "26-symbol residue alphabet");

    auto* tr = app.add_subcommand("train", "Train a model on a built dataset");
    auto* t_ds = tr->add_option("--dataset", dataset, "dataset file");
    auto* t_out = tr->add_option("--out", out, "checkpoint output path");
    auto* t_log = tr->add_option("--log", log_path, "per-epoch TSV log path");
    auto* t_epochs = tr->add_option("--epochs", epochs, "epoch count (0 = per-domain default)");
    auto* t_lr = tr->add_option("--lr", lr, "initial learning rate");
    auto* t_batch = tr->add_option("--batch-size", batch_size, "minibatch size");
    auto* t_val = tr->add_option("--val-fraction", val_fraction, "validation fraction");
    auto* t_drop = tr->add_option("--dropout", dropout, "dropout rate");
    auto* t_sched = tr->add_option("--lr-schedule", lr_schedule, "plateau or none");
    auto* t_sel = tr->add_option("--selection", selection, "best_val or last");

    auto* ev = app.add_subcommand("evaluate", "Score a checkpoint against a dataset");
    auto* e_ckpt = ev->add_option("--checkpoint", checkpoint, "checkpoint file");
    auto* e_ds = ev->add_option("--dataset", dataset, "dataset file");
    auto* e_thr = ev->add_option("--threshold", thresholds,
                                 "decision threshold(s); repeat for a sweep");
    auto* e_out = ev->add_option("--out", out, "report output path");
    auto* e_tsv = ev->add_option("--tsv", tsv_path, "per-label TSV output path");

    auto* pr = app.add_subcommand("predict", "Predict top-level GO terms for FASTA sequences");
    auto* p_ckpt = pr->add_option("--checkpoint", checkpoint, "checkpoint file");
    auto* p_fasta = pr->add_option("--fasta", fasta, "input sequences");
    auto* p_thr = pr->add_option("--threshold", threshold, "decision threshold");
    auto* p_out = pr->add_option("--out", out, "predictions output path");
    auto* p_minone = pr->add_flag("--min-one", min_one,
                                  "emit the single best term when nothing clears the threshold");
    auto* p_json = pr->add_flag("--json", json_output, "structured JSON output");

    // Global flags may appear after the subcommand name.
    for (auto* sub : {inspect, build, tr, ev, pr}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        st.cfg = opt_config->count() ? RunConfig::load(config_file) : RunConfig();
        if (opt_seed->count()) st.cfg.seed = seed;
        if (opt_threads->count()) st.cfg.threads = threads;
        if (opt_det->count()) st.cfg.deterministic = deterministic;
        if (opt_quiet->count()) st.cfg.quiet = quiet;
        if (st.cfg.deterministic) st.cfg.threads = 1;
        st.cfg.train.seed = st.cfg.seed;

        auto take = [](CLI::Option* o, auto& value, auto& target) {
            if (o->count()) target = value;
        };
        take(i_obo, obo, st.cfg.obo_path);
        take(b_obo, obo, st.cfg.obo_path);
        take(b_ann, annotations, st.cfg.annotations_path);
        take(b_fasta, fasta, st.cfg.fasta_path);
        take(p_fasta, fasta, st.cfg.fasta_path);
        take(i_ns, ns_name, st.cfg.namespace_name);
        take(b_ns, ns_name, st.cfg.namespace_name);
        take(t_ds, dataset, st.cfg.dataset_path);
        take(e_ds, dataset, st.cfg.dataset_path);
        take(e_ckpt, checkpoint, st.cfg.checkpoint_path);
        take(p_ckpt, checkpoint, st.cfg.checkpoint_path);
        for (auto* o : {i_out, b_out, t_out, e_out, p_out}) take(o, out, st.cfg.out_path);
        take(b_maxlen, max_len, st.cfg.max_len);
        take(b_alpha, alphabet, st.cfg.alphabet);
        take(p_thr, threshold, st.cfg.threshold);
        take(t_epochs, epochs, st.cfg.train.epochs);
        take(t_lr, lr, st.cfg.train.learning_rate);
        take(t_batch, batch_size, st.cfg.train.batch_size);
        take(t_val, val_fraction, st.cfg.train.validation_fraction);
        take(t_drop, dropout, st.cfg.dropout_rate);
        if (p_minone->count()) st.cfg.min_one = min_one;
        if (t_sched->count())
            st.cfg.train.lr_schedule =
                lr_schedule == "none" ? LrSchedule::none : LrSchedule::plateau;
        if (t_sel->count())
            st.cfg.train.selection =
                selection == "last" ? Selection::last : Selection::best_val;
        if (b_strict->count() && strict_evidence)
            st.cfg.evidence_whitelist = strict_evidence_whitelist();
        if (b_whitelist->count()) {
            st.cfg.evidence_whitelist.clear();
            for (const auto& code : split(whitelist_csv, ','))
                if (!trim(code).empty()) st.cfg.evidence_whitelist.insert(trim(code));
        }

        if (!st.dump_config_path.empty()) st.cfg.save(st.dump_config_path);

        if (inspect->parsed()) {
            if (st.cfg.obo_path.empty()) throw ConfigError("inspect-ontology: --obo is required");
            return cmd_inspect(st);
        }
        if (build->parsed()) {
            if (st.cfg.obo_path.empty() || st.cfg.annotations_path.empty() ||
                st.cfg.fasta_path.empty() || st.cfg.out_path.empty())
                throw ConfigError(
                    "build-dataset: --obo, --annotations, --fasta and --out are required");
            std::string manifest_path;
            if (b_manifest->count()) manifest_path = manifest;
            return cmd_build_dataset(st, manifest_path);
        }
        if (tr->parsed()) {
            if (st.cfg.dataset_path.empty() || st.cfg.out_path.empty())
                throw ConfigError("train: --dataset and --out are required");
            std::string lp;
            if (t_log->count()) lp = log_path;
            return cmd_train(st, lp);
        }
        if (ev->parsed()) {
            if (st.cfg.checkpoint_path.empty() || st.cfg.dataset_path.empty())
                throw ConfigError("evaluate: --checkpoint and --dataset are required");
            std::string tp;
            if (e_tsv->count()) tp = tsv_path;
            std::vector<double> sweep;
            if (e_thr->count()) sweep = thresholds;
            return cmd_evaluate(st, sweep, tp);
        }
        if (pr->parsed()) {
            if (st.cfg.checkpoint_path.empty() || st.cfg.fasta_path.empty())
                throw ConfigError("predict: --checkpoint and --fasta are required");
            return cmd_predict(st, p_json->count() && json_output);
        }
        throw ConfigError("no subcommand given");
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
