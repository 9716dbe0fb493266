#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "gonet/annotations.hpp"
#include "gonet/rng.hpp"

using namespace gonet;

namespace {

std::string fixture(const std::string& name) {
    return std::string(GONET_TEST_DATA_DIR) + "/" + name;
}

std::string accession(int n) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "GO:%07d", n);
    return buf;
}

const char* kTinyTsv =
    "GENE PRODUCT ID\tQUALIFIER\tGO TERM\tGO EVIDENCE CODE\n"
    "P1\tinvolved_in\tGO:0000001\tIDA\n"
    "P2\tNOT|involved_in\tGO:0000002\tIDA\n"
    "P3\tinvolved_in\tGO:0000003\tIMP\n";

// Small ontology shared by the aggregation tests: one BP root with two
// branches and a few internal nodes.
OntologyGraph mini_graph() {
    return parse_obo(read_file(fixture("mini.obo")));
}

void dfs_ancestors(const std::map<std::string, GoTerm>& terms, const std::string& id,
                   std::set<std::string>& out) {
    for (const auto& p : terms.at(id).is_a_parents)
        if (out.insert(p).second) dfs_ancestors(terms, p, out);
}

}  // namespace

TEST_CASE("parse_annotation_table: NOT-qualified rows are dropped") {
    auto table = parse_annotation_table(kTinyTsv);
    REQUIRE(table.records.size() == 2);
    CHECK(table.records[0].protein_id == "P1");
    CHECK(table.records[1].protein_id == "P3");
    CHECK(table.counters.at("not_qualified_dropped") == 1);
}

TEST_CASE("parse_annotation_table: malformed accession is counted, not fatal") {
    const char* tsv =
        "GENE PRODUCT ID\tGO TERM\tGO EVIDENCE CODE\n"
        "P1\tGO:12\tIDA\n"
        "P2\tGO:0000002\tIDA\n";
    auto table = parse_annotation_table(tsv);
    REQUIRE(table.records.size() == 1);
    CHECK(table.records[0].protein_id == "P2");
    CHECK(table.counters.at("malformed_rows") == 1);
}

TEST_CASE("parse_annotation_table: missing required column names it") {
    const char* tsv = "GENE PRODUCT ID\tGO TERM\nP1\tGO:0000001\n";
    CHECK_THROWS_WITH_AS(parse_annotation_table(tsv), doctest::Contains("GO EVIDENCE CODE"),
                         ParseError);
}

TEST_CASE("parse_annotation_table: configurable column names") {
    AnnotationColumns cols;
    cols.protein = "ACC";
    cols.term = "TERM";
    cols.evidence = "EV";
    cols.qualifier = "Q";
    const char* tsv = "ACC\tTERM\tEV\nP9\tGO:0000005\tIC\n";
    auto table = parse_annotation_table(tsv, cols);
    REQUIRE(table.records.size() == 1);
    CHECK(table.records[0].go_term == "GO:0000005");
    CHECK(table.records[0].evidence_code == "IC");
}

TEST_CASE("parse_annotation_table: synthetic 10-row fixture matches the hand-listed expectation") {
    auto table = parse_annotation_table(read_file(fixture("mini_annotations.tsv")));
    // Hand-listed: 10 data rows, 1 malformed (GO:12), 1 NOT-qualified.
    CHECK(table.counters.at("rows") == 10);
    CHECK(table.counters.at("malformed_rows") == 1);
    CHECK(table.counters.at("not_qualified_dropped") == 1);
    REQUIRE(table.records.size() == 8);
    std::vector<std::pair<std::string, std::string>> expect = {
        {"P11111", "GO:0000004"}, {"P11111", "GO:0000002"}, {"P22222", "GO:0000005"},
        {"P22222", "GO:0000003"}, {"P44444", "GO:0000001"}, {"P55555", "GO:0000012"},
        {"P66666", "GO:0000044"}, {"P77777", "GO:0000002"}};
    for (std::size_t i = 0; i < expect.size(); ++i) {
        CHECK(table.records[i].protein_id == expect[i].first);
        CHECK(table.records[i].go_term == expect[i].second);
    }
}

TEST_CASE("filter_experimental: IEA is removed by the default whitelist") {
    std::vector<AnnotationRecord> records = {{"P1", "GO:0000001", "IDA", ""},
                                             {"P2", "GO:0000002", "IEA", ""},
                                             {"P3", "GO:0000003", "IMP", ""}};
    auto kept = filter_experimental(records, default_evidence_whitelist());
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].evidence_code == "IDA");
    CHECK(kept[1].evidence_code == "IMP");
}

TEST_CASE("filter_experimental: empty whitelist annihilates") {
    std::vector<AnnotationRecord> records = {{"P1", "GO:0000001", "IDA", ""}};
    CHECK(filter_experimental(records, {}).empty());
}

TEST_CASE("filter_experimental: matches a predicate-filter oracle on random input") {
    Rng rng(11);
    std::vector<std::string> codes = {"EXP", "IDA", "IEA", "ISS", "TAS", "IC", "IMP", "ND"};
    std::vector<AnnotationRecord> records;
    for (int i = 0; i < 100; ++i)
        records.push_back({"P" + std::to_string(rng.next_below(10)), accession(1),
                           codes[rng.next_below(codes.size())], ""});
    auto kept = filter_experimental(records, default_evidence_whitelist());

    std::vector<AnnotationRecord> oracle;
    std::copy_if(records.begin(), records.end(), std::back_inserter(oracle),
                 [](const AnnotationRecord& r) {
                     return default_evidence_whitelist().count(r.evidence_code) > 0;
                 });
    REQUIRE(kept.size() == oracle.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
        CHECK(kept[i].protein_id == oracle[i].protein_id);
        CHECK(kept[i].evidence_code == oracle[i].evidence_code);
    }
}

TEST_CASE("filter_experimental: idempotent under re-filtering") {
    Rng rng(12);
    std::vector<std::string> codes = {"EXP", "IDA", "IEA", "ISS"};
    std::vector<AnnotationRecord> records;
    for (int i = 0; i < 60; ++i)
        records.push_back({"P", accession(1), codes[rng.next_below(codes.size())], ""});
    auto once = filter_experimental(records, default_evidence_whitelist());
    auto twice = filter_experimental(once, default_evidence_whitelist());
    REQUIRE(once.size() == twice.size());
    for (std::size_t i = 0; i < once.size(); ++i)
        CHECK(once[i].evidence_code == twice[i].evidence_code);
}

TEST_CASE("aggregate_by_protein: records union their index sets") {
    auto graph = mini_graph();
    auto dict = graph.top_level_terms(GoNamespace::biological_process);
    // GO:0000002 -> {0}; GO:0000004 -> {0,1}
    std::vector<AnnotationRecord> records = {{"P1", "GO:0000002", "IDA", ""},
                                             {"P1", "GO:0000004", "IMP", ""}};
    auto agg = aggregate_by_protein(records, graph, dict);
    REQUIRE(agg.proteins.count("P1") == 1);
    CHECK(agg.proteins.at("P1") == std::set<std::int32_t>{0, 1});
}

TEST_CASE("aggregate_by_protein: root-only proteins are dropped") {
    auto graph = mini_graph();
    auto dict = graph.top_level_terms(GoNamespace::biological_process);
    std::vector<AnnotationRecord> records = {{"P1", "GO:0000001", "IDA", ""}};
    auto agg = aggregate_by_protein(records, graph, dict);
    CHECK(agg.proteins.empty());
    CHECK(agg.counters.at("empty_mapping_proteins") == 1);
}

TEST_CASE("aggregate_by_protein: unresolvable and obsolete terms are skipped with counters") {
    auto graph = mini_graph();
    auto dict = graph.top_level_terms(GoNamespace::biological_process);
    std::vector<AnnotationRecord> records = {{"P1", "GO:0000002", "IDA", ""},
                                             {"P1", "GO:0912345", "IDA", ""},
                                             {"P1", "GO:0000006", "IDA", ""},
                                             {"P1", "GO:0000012", "IDA", ""}};
    auto agg = aggregate_by_protein(records, graph, dict);
    CHECK(agg.proteins.at("P1") == std::set<std::int32_t>{0});
    CHECK(agg.counters.at("unresolvable_terms") == 1);
    CHECK(agg.counters.at("obsolete_terms") == 1);
    CHECK(agg.counters.at("other_namespace") == 1);
}

TEST_CASE("aggregate_by_protein: 50 synthetic records match the brute-force union oracle") {
    // 20-term BP ontology: root GO:0000001, terms 2..20 with parents below.
    std::ostringstream obo;
    obo << "[Term]\nid: " << accession(1) << "\nname: root\nnamespace: biological_process\n\n";
    Rng rng(13);
    for (int i = 2; i <= 20; ++i) {
        obo << "[Term]\nid: " << accession(i) << "\nname: t" << i
            << "\nnamespace: biological_process\n";
        int n_parents = 1 + static_cast<int>(rng.next_below(2));
        std::set<int> parents;
        for (int p = 0; p < n_parents; ++p)
            parents.insert(1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i - 1))));
        for (int p : parents) obo << "is_a: " << accession(p) << "\n";
        obo << "\n";
    }
    auto graph = parse_obo(obo.str());
    auto dict = graph.top_level_terms(GoNamespace::biological_process);

    std::vector<AnnotationRecord> records;
    for (int i = 0; i < 50; ++i)
        records.push_back({"P" + std::to_string(rng.next_below(8)),
                           accession(1 + static_cast<int>(rng.next_below(20))), "IDA", ""});
    auto agg = aggregate_by_protein(records, graph, dict);

    // Brute force: ancestor DFS per record, intersect with dictionary, union.
    std::map<std::string, std::set<std::int32_t>> oracle;
    for (const auto& rec : records) {
        std::set<std::string> closure;
        dfs_ancestors(graph.terms(), rec.go_term, closure);
        closure.insert(rec.go_term);
        for (const auto& id : closure) {
            auto idx = dict.index_of(id);
            if (idx >= 0) oracle[rec.protein_id].insert(idx);
        }
    }
    for (auto it = oracle.begin(); it != oracle.end();)
        it = it->second.empty() ? oracle.erase(it) : std::next(it);

    CHECK(agg.proteins == oracle);
}

TEST_CASE("parse_fasta: multi-line sequences are joined and uppercased") {
    Alphabet a;
    auto res = parse_fasta(">sp|P12345|X\nACDE\nFGH\n", a);
    CHECK(res.sequences.at("P12345") == "ACDEFGH");
    auto res2 = parse_fasta(">P1\nacd\n", a);
    CHECK(res2.sequences.at("P1") == "ACD");
}

TEST_CASE("parse_fasta: illegal symbol drops the record with a counter") {
    Alphabet a;
    auto res = parse_fasta(">P1\nAC1E\n", a);
    CHECK(res.sequences.empty());
    CHECK(res.counters.at("illegal_symbol_sequences") == 1);
}

TEST_CASE("parse_fasta: duplicate accession resolves last-wins with a counter") {
    Alphabet a;
    auto res = parse_fasta(">P1\nAAAA\n>P1\nCCCC\n", a);
    CHECK(res.sequences.at("P1") == "CCCC");
    CHECK(res.counters.at("duplicate_accessions") == 1);
}

TEST_CASE("parse_fasta: the mini fixture") {
    Alphabet a;
    auto res = parse_fasta(read_file(fixture("mini.fasta")), a);
    CHECK(res.sequences.size() == 5);
    CHECK(res.sequences.at("P11111") == "MKVLAAGGSTYQ");
    CHECK(res.sequences.at("P22222") == "MTDAGKLVWWYYPP");
    CHECK(res.sequences.at("P88888") == "CCCC");
    CHECK(res.counters.at("illegal_symbol_sequences") == 1);
    CHECK(res.counters.at("duplicate_accessions") == 1);
}

TEST_CASE("build_dataset: inner join keeps proteins with sequences") {
    Alphabet a;
    TermDictionary dict;
    dict.ns = GoNamespace::biological_process;
    dict.ids = {"GO:0000002", "GO:0000003"};
    dict.names = {"x", "y"};
    std::map<std::string, std::set<std::int32_t>> agg = {{"P1", {0}}, {"P2", {1}}};
    std::map<std::string, std::string> seqs = {{"P1", "ACDE"}};
    auto ds = build_dataset(agg, seqs, dict, 8, a);
    CHECK(ds.rows() == 1);
    CHECK(ds.ids == std::vector<std::string>{"P1"});
    CHECK(ds.counters.at("missing_sequence_proteins") == 1);
}

TEST_CASE("build_dataset: label vector is the one-hot union") {
    Alphabet a;
    TermDictionary dict;
    dict.ns = GoNamespace::biological_process;
    dict.ids = {"GO:0000001", "GO:0000002", "GO:0000003", "GO:0000004"};
    dict.names = {"a", "b", "c", "d"};
    std::map<std::string, std::set<std::int32_t>> agg = {{"P1", {0, 2}}};
    std::map<std::string, std::string> seqs = {{"P1", "MK"}};
    auto ds = build_dataset(agg, seqs, dict, 4, a);
    CHECK(ds.labels.data == std::vector<std::uint8_t>{1, 0, 1, 0});
}

TEST_CASE("build_dataset: empty join is an error") {
    Alphabet a;
    TermDictionary dict;
    dict.ns = GoNamespace::biological_process;
    dict.ids = {"GO:0000002"};
    dict.names = {"x"};
    std::map<std::string, std::set<std::int32_t>> agg = {{"P1", {0}}};
    std::map<std::string, std::string> seqs = {{"P2", "ACDE"}};
    CHECK_THROWS_AS(build_dataset(agg, seqs, dict, 4, a), ValidationError);
}

TEST_CASE("build_dataset: 30-protein synthetic corpus matches a scripted join oracle") {
    Alphabet a;
    Rng rng(17);
    TermDictionary dict;
    dict.ns = GoNamespace::biological_process;
    for (int i = 1; i <= 5; ++i) {
        dict.ids.push_back(accession(i));
        dict.names.push_back("t" + std::to_string(i));
    }
    std::map<std::string, std::set<std::int32_t>> agg;
    std::map<std::string, std::string> seqs;
    for (int i = 0; i < 30; ++i) {
        std::string pid = "P" + std::to_string(10000 + i);
        std::set<std::int32_t> indices;
        indices.insert(static_cast<std::int32_t>(rng.next_below(5)));
        if (rng.next_below(2)) indices.insert(static_cast<std::int32_t>(rng.next_below(5)));
        agg[pid] = indices;
        if (rng.next_below(4) != 0) {  // some proteins have no sequence
            std::int64_t len = 1 + static_cast<std::int64_t>(rng.next_below(12));
            std::string s;
            for (std::int64_t j = 0; j < len; ++j)
                s.push_back(a.symbol_at(static_cast<std::int32_t>(rng.next_below(26))));
            seqs[pid] = s;
        }
    }
    auto ds = build_dataset(agg, seqs, dict, 12, a);

    // Oracle: sorted ids of proteins present in both maps, plus label matrix
    // from set membership.
    std::vector<std::string> expect_ids;
    for (const auto& [pid, idx] : agg)
        if (seqs.count(pid)) expect_ids.push_back(pid);
    std::sort(expect_ids.begin(), expect_ids.end());
    REQUIRE(ds.ids == expect_ids);
    for (std::int64_t r = 0; r < ds.rows(); ++r) {
        const auto& indices = agg.at(ds.ids[static_cast<std::size_t>(r)]);
        std::int64_t card = 0;
        for (std::int64_t c = 0; c < 5; ++c) {
            CHECK(ds.labels.at(r, c) ==
                  (indices.count(static_cast<std::int32_t>(c)) ? 1 : 0));
            card += ds.labels.at(r, c);
        }
        CHECK(card >= 1);  // every row keeps at least one label
        // Mask length equals max_len and marks the true prefix.
        const std::string& s = seqs.at(ds.ids[static_cast<std::size_t>(r)]);
        for (std::int64_t c = 0; c < 12; ++c)
            CHECK(ds.mask.at(r, c) == (c < static_cast<std::int64_t>(s.size()) ? 1 : 0));
    }
    // Output proteins never exceed the distinct input proteins.
    CHECK(ds.rows() <= static_cast<std::int64_t>(agg.size()));
}

TEST_CASE("dataset: container file round-trips bit-exactly") {
    Alphabet a;
    TermDictionary dict;
    dict.ns = GoNamespace::cellular_component;
    dict.ids = {"GO:0000011"};
    dict.names = {"cc branch"};
    std::map<std::string, std::set<std::int32_t>> agg = {{"P1", {0}}, {"P2", {0}}};
    std::map<std::string, std::string> seqs = {{"P1", "ACDE"}, {"P2", "WWYY"}};
    auto ds = build_dataset(agg, seqs, dict, 6, a);

    auto dir = std::filesystem::temp_directory_path() / "gonet_ds_test";
    std::filesystem::create_directories(dir);
    auto path = (dir / "mini.dataset").string();
    save_dataset(ds, path);
    auto back = load_dataset(path);
    CHECK(back.ids == ds.ids);
    CHECK(back.indices.data == ds.indices.data);
    CHECK(back.mask.data == ds.mask.data);
    CHECK(back.labels.data == ds.labels.data);
    CHECK(back.dict.ids == ds.dict.ids);
    CHECK(back.max_len == ds.max_len);

    // Re-saving produces byte-identical files.
    auto path2 = (dir / "mini2.dataset").string();
    save_dataset(back, path2);
    CHECK(read_file(path) == read_file(path2));

    // Truncation is caught by the checksum.
    auto bytes = read_file(path);
    write_file(path2, bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(load_dataset(path2), IoError);
}

TEST_CASE("dataset: manifest lists histogram and counters") {
    Alphabet a;
    TermDictionary dict;
    dict.ns = GoNamespace::biological_process;
    dict.ids = {"GO:0000002", "GO:0000003"};
    dict.names = {"x", "y"};
    std::map<std::string, std::set<std::int32_t>> agg = {{"P1", {0, 1}}, {"P2", {1}}};
    std::map<std::string, std::string> seqs = {{"P1", "ACDE"}, {"P2", "MK"}};
    auto ds = build_dataset(agg, seqs, dict, 4, a);
    auto hist = ds.label_histogram();
    CHECK(hist.at(1) == 1);
    CHECK(hist.at(2) == 1);
    auto manifest = ds.manifest();
    CHECK(manifest.find("rows: 2") != std::string::npos);
    CHECK(manifest.find("labels: 2") != std::string::npos);
}
