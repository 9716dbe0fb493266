// End-to-end tests that drive the installed binary through /bin/sh.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "gonet/annotations.hpp"
#include "gonet/evaluate.hpp"
#include "gonet/model.hpp"

using namespace gonet;

namespace {

namespace fs = std::filesystem;

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

fs::path work_dir() {
    static fs::path dir = [] {
        auto d = fs::temp_directory_path() / "gonet_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string fixture(const std::string& name) {
    return std::string(GONET_TEST_DATA_DIR) + "/" + name;
}

RunResult run(const std::string& args) {
    static int counter = 0;
    auto out_path = work_dir() / ("stdout." + std::to_string(counter));
    auto err_path = work_dir() / ("stderr." + std::to_string(counter));
    ++counter;
    std::string cmd = std::string(GONET_CLI_PATH) + " " + args + " > " + out_path.string() +
                      " 2> " + err_path.string();
    int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file(out_path.string());
    r.err = read_file(err_path.string());
    return r;
}

std::string tiny_config_path() {
    static std::string path = [] {
        auto p = (work_dir() / "tiny.json").string();
        write_file(p, R"({
  "seed": 11,
  "max_len": 24,
  "model": {"embed_dim": 6, "conv_filters": 4, "gru_hidden": 5, "dense_hidden": 8,
            "dropout_rate": 0.0},
  "train": {"learning_rate": 0.002, "batch_size": 4, "epochs": 3, "lr_schedule": "none"}
})");
        return p;
    }();
    return path;
}

// One dataset shared by the train/evaluate/predict tests.
std::string shared_dataset() {
    static std::string path = [] {
        auto p = (work_dir() / "bp.dataset").string();
        auto r = run("build-dataset --obo " + fixture("mini.obo") + " --annotations " +
                     fixture("mini_annotations.tsv") + " --fasta " + fixture("mini.fasta") +
                     " --namespace bp --max-len 24 --out " + p + " --quiet");
        REQUIRE(r.exit_code == 0);
        return p;
    }();
    return path;
}

std::string shared_checkpoint() {
    static std::string path = [] {
        auto p = (work_dir() / "bp.ckpt").string();
        auto r = run("train --config " + tiny_config_path() + " --dataset " + shared_dataset() +
                     " --out " + p + " --quiet");
        REQUIRE(r.exit_code == 0);
        return p;
    }();
    return path;
}

}  // namespace

TEST_CASE("inspect-ontology: output matches the golden file") {
    auto r = run("inspect-ontology --obo " + fixture("mini.obo") + " --namespace bp");
    CHECK(r.exit_code == 0);
    CHECK(r.out == read_file(fixture("golden/inspect_bp.txt")));
}

TEST_CASE("inspect-ontology: cyclic input exits 2") {
    auto cyclic = (work_dir() / "cyclic.obo").string();
    write_file(cyclic,
               "[Term]\nid: GO:0000001\nname: r\nnamespace: biological_process\n\n"
               "[Term]\nid: GO:0000002\nname: a\nnamespace: biological_process\nis_a: "
               "GO:0000003\n\n"
               "[Term]\nid: GO:0000003\nname: b\nnamespace: biological_process\nis_a: "
               "GO:0000002\n");
    auto r = run("inspect-ontology --obo " + cyclic);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("cycle") != std::string::npos);
}

TEST_CASE("build-dataset: manifest matches the golden file") {
    auto manifest = (work_dir() / "manifest.txt").string();
    auto r = run("build-dataset --obo " + fixture("mini.obo") + " --annotations " +
                 fixture("mini_annotations.tsv") + " --fasta " + fixture("mini.fasta") +
                 " --namespace bp --max-len 32 --out " + (work_dir() / "golden.dataset").string() +
                 " --manifest " + manifest + " --quiet");
    CHECK(r.exit_code == 0);
    CHECK(read_file(manifest) == read_file(fixture("golden/manifest_bp.txt")));
}

TEST_CASE("build-dataset: rerun produces a byte-identical dataset file") {
    auto p1 = (work_dir() / "rerun1.dataset").string();
    auto p2 = (work_dir() / "rerun2.dataset").string();
    std::string base = "build-dataset --obo " + fixture("mini.obo") + " --annotations " +
                       fixture("mini_annotations.tsv") + " --fasta " + fixture("mini.fasta") +
                       " --namespace bp --max-len 24 --quiet --out ";
    REQUIRE(run(base + p1).exit_code == 0);
    REQUIRE(run(base + p2).exit_code == 0);
    CHECK(read_file(p1) == read_file(p2));
}

TEST_CASE("build-dataset: a missing required column exits 2 and names it") {
    auto bad = (work_dir() / "bad.tsv").string();
    write_file(bad, "GENE PRODUCT ID\tGO TERM\nP1\tGO:0000002\n");
    auto r = run("build-dataset --obo " + fixture("mini.obo") + " --annotations " + bad +
                 " --fasta " + fixture("mini.fasta") + " --namespace bp --out " +
                 (work_dir() / "never2.dataset").string());
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("GO EVIDENCE CODE") != std::string::npos);
}

TEST_CASE("build-dataset: an empty join exits 2") {
    auto empty_fasta = (work_dir() / "empty.fasta").string();
    write_file(empty_fasta, ">Q00001\nMKV\n");
    auto r = run("build-dataset --obo " + fixture("mini.obo") + " --annotations " +
                 fixture("mini_annotations.tsv") + " --fasta " + empty_fasta +
                 " --namespace bp --out " + (work_dir() / "never.dataset").string());
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("empty join") != std::string::npos);
}

TEST_CASE("train: the log has one finite row per epoch") {
    auto log = (work_dir() / "train.log").string();
    auto ckpt = (work_dir() / "train5.ckpt").string();
    auto r = run("train --config " + tiny_config_path() + " --dataset " + shared_dataset() +
                 " --out " + ckpt + " --log " + log + " --epochs 5 --quiet");
    REQUIRE(r.exit_code == 0);
    auto lines = split(trim(read_file(log)), '\n');
    REQUIRE(lines.size() == 6);  // header + 5 epochs
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto cells = split(lines[i], '\t');
        REQUIRE(cells.size() == 6);
        CHECK(cells[0] == std::to_string(i));
        double loss = std::stod(cells[1]);
        CHECK(std::isfinite(loss));
    }
}

TEST_CASE("train: identical config and seed give byte-identical logs and checkpoints") {
    auto ckpt1 = (work_dir() / "det1.ckpt").string();
    auto ckpt2 = (work_dir() / "det2.ckpt").string();
    auto log1 = (work_dir() / "det1.log").string();
    auto log2 = (work_dir() / "det2.log").string();
    std::string base = "train --config " + tiny_config_path() + " --dataset " + shared_dataset() +
                       " --quiet --seed 99 --out ";
    REQUIRE(run(base + ckpt1 + " --log " + log1).exit_code == 0);
    REQUIRE(run(base + ckpt2 + " --log " + log2).exit_code == 0);
    CHECK(read_file(log1) == read_file(log2));
    CHECK(read_file(ckpt1) == read_file(ckpt2));
}

TEST_CASE("train: lr 0 produces a flat loss column") {
    auto log = (work_dir() / "flat.log").string();
    auto r = run("train --config " + tiny_config_path() + " --dataset " + shared_dataset() +
                 " --out " + (work_dir() / "flat.ckpt").string() + " --log " + log +
                 " --lr 0 --batch-size 8 --epochs 3 --quiet");
    REQUIRE(r.exit_code == 0);
    auto lines = split(trim(read_file(log)), '\n');
    REQUIRE(lines.size() == 4);
    auto first = split(lines[1], '\t')[1];
    for (std::size_t i = 2; i < lines.size(); ++i) CHECK(split(lines[i], '\t')[1] == first);
}

TEST_CASE("evaluate: the CLI report equals the library scoring path") {
    auto report_path = (work_dir() / "report.txt").string();
    auto r = run("evaluate --checkpoint " + shared_checkpoint() + " --dataset " +
                 shared_dataset() + " --threshold 0.5 --out " + report_path + " --quiet");
    REQUIRE(r.exit_code == 0);

    auto ckpt = load_checkpoint(shared_checkpoint());
    auto ds = load_dataset(shared_dataset());
    auto model = model_from_checkpoint(ckpt);
    auto expect = evaluate(model, ds, 0.5).render_text();
    CHECK(read_file(report_path) == expect);
}

TEST_CASE("evaluate: a threshold sweep emits one report per value") {
    auto base = (work_dir() / "sweep.txt").string();
    auto r = run("evaluate --checkpoint " + shared_checkpoint() + " --dataset " +
                 shared_dataset() + " --threshold 0.1 --threshold 0.5 --threshold 0.9 --out " +
                 base + " --quiet");
    REQUIRE(r.exit_code == 0);
    for (const char* suffix : {".0.10", ".0.50", ".0.90"}) {
        auto text = read_file(base + suffix);
        CHECK(text.find("# evaluation report") == 0);
    }
}

TEST_CASE("evaluate: dictionary mismatch exits 2") {
    // CC dataset against the BP checkpoint.
    auto cc = (work_dir() / "cc.dataset").string();
    auto cc_ann = (work_dir() / "cc.tsv").string();
    write_file(cc_ann,
               "GENE PRODUCT ID\tGO TERM\tGO EVIDENCE CODE\n"
               "P11111\tGO:0000012\tIDA\n"
               "P22222\tGO:0000011\tIDA\n");
    REQUIRE(run("build-dataset --obo " + fixture("mini.obo") + " --annotations " + cc_ann +
                " --fasta " + fixture("mini.fasta") + " --namespace cc --max-len 24 --out " + cc +
                " --quiet")
                .exit_code == 0);
    auto r = run("evaluate --checkpoint " + shared_checkpoint() + " --dataset " + cc);
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("dictionary") != std::string::npos);
}

TEST_CASE("predict: writes term lines and summaries; empty calls still exit 0") {
    auto out = (work_dir() / "pred.tsv").string();
    auto r = run("predict --checkpoint " + shared_checkpoint() + " --fasta " +
                 fixture("mini.fasta") + " --threshold 0.99 --out " + out + " --quiet");
    CHECK(r.exit_code == 0);  // nothing clears 0.99, still a success
    auto text = read_file(out);
    CHECK(text.find("0 term(s)") != std::string::npos);

    auto r2 = run("predict --checkpoint " + shared_checkpoint() + " --fasta " +
                  fixture("mini.fasta") + " --threshold 0.3 --quiet");
    CHECK(r2.exit_code == 0);
    CHECK(r2.out.find("GO:000000") != std::string::npos);
}

TEST_CASE("predict: unreadable FASTA exits 2") {
    auto r = run("predict --checkpoint " + shared_checkpoint() + " --fasta /no/such/file.fasta");
    CHECK(r.exit_code == 2);
}

TEST_CASE("predict: --json emits structured output") {
    auto r = run("predict --checkpoint " + shared_checkpoint() + " --fasta " +
                 fixture("mini.fasta") + " --threshold 0.3 --json --quiet");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("\"protein_id\"") != std::string::npos);
}

TEST_CASE("dump-config: the resolved config reproduces the run byte for byte") {
    auto resolved = (work_dir() / "resolved.json").string();
    auto ckpt1 = (work_dir() / "cfg1.ckpt").string();
    auto ckpt2 = (work_dir() / "cfg2.ckpt").string();
    auto log1 = (work_dir() / "cfg1.log").string();
    auto log2 = (work_dir() / "cfg2.log").string();

    REQUIRE(run("train --config " + tiny_config_path() + " --dataset " + shared_dataset() +
                " --seed 5 --epochs 2 --out " + ckpt1 + " --log " + log1 + " --dump-config " +
                resolved + " --quiet")
                .exit_code == 0);
    REQUIRE(run("train --config " + resolved + " --dataset " + shared_dataset() + " --out " +
                ckpt2 + " --log " + log2 + " --quiet")
                .exit_code == 0);
    CHECK(read_file(ckpt1) == read_file(ckpt2));
    CHECK(read_file(log1) == read_file(log2));
}

TEST_CASE("exit codes: missing required arguments exit 2") {
    CHECK(run("train").exit_code == 2);
    CHECK(run("evaluate --checkpoint /nope").exit_code == 2);
    CHECK(run("no-such-command").exit_code == 2);
}
