#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "gonet/common.hpp"
#include "gonet/ontology.hpp"
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

// Naive recursive DFS over the raw parent lists; the independent oracle for
// the precomputed closure.
void dfs_ancestors(const std::map<std::string, GoTerm>& terms, const std::string& id,
                   std::set<std::string>& out) {
    for (const auto& p : terms.at(id).is_a_parents) {
        if (out.insert(p).second) dfs_ancestors(terms, p, out);
    }
}

// Random single-rooted DAG in OBO text form. Term i > 1 draws 1-3 parents
// among lower-numbered terms, so acyclicity and root reachability hold by
// construction.
std::string random_dag_obo(int n_terms, Rng& rng) {
    std::ostringstream out;
    out << "format-version: 1.2\n";
    for (int i = 1; i <= n_terms; ++i) {
        out << "\n[Term]\n";
        out << "id: " << accession(i) << "\n";
        out << "name: term " << i << "\n";
        out << "namespace: biological_process\n";
        if (i > 1) {
            int n_parents = 1 + static_cast<int>(rng.next_below(3));
            std::set<int> parents;
            for (int p = 0; p < n_parents; ++p)
                parents.insert(1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(i - 1))));
            for (int p : parents) out << "is_a: " << accession(p) << "\n";
        }
    }
    return out.str();
}

const char* kThreeTermObo =
    "[Term]\n"
    "id: GO:0000001\n"
    "name: root\n"
    "namespace: molecular_function\n"
    "\n"
    "[Term]\n"
    "id: GO:0000002\n"
    "name: a\n"
    "namespace: molecular_function\n"
    "is_a: GO:0000001\n"
    "\n"
    "[Term]\n"
    "id: GO:0000003\n"
    "name: b\n"
    "namespace: molecular_function\n"
    "is_a: GO:0000002\n";

}  // namespace

TEST_CASE("parse_obo: a three-term chain yields 3 terms, 2 edges, one root") {
    auto graph = parse_obo(kThreeTermObo);
    CHECK(graph.term_count() == 3);
    std::size_t edges = 0;
    for (const auto& [id, t] : graph.terms()) edges += t.is_a_parents.size();
    CHECK(edges == 2);
    CHECK(graph.roots().at(GoNamespace::molecular_function) == "GO:0000001");
}

TEST_CASE("parse_obo: two-term cycle is a validation error naming a member") {
    const char* obo =
        "[Term]\nid: GO:0000001\nname: r\nnamespace: biological_process\n\n"
        "[Term]\nid: GO:0000002\nname: a\nnamespace: biological_process\nis_a: GO:0000003\n\n"
        "[Term]\nid: GO:0000003\nname: b\nnamespace: biological_process\nis_a: GO:0000002\n";
    CHECK_THROWS_WITH_AS(parse_obo(obo), doctest::Contains("cycle"), ValidationError);
}

TEST_CASE("parse_obo: malformed accession reports the line number") {
    const char* obo = "[Term]\nid: GO:12\nname: bad\nnamespace: biological_process\n";
    CHECK_THROWS_WITH_AS(parse_obo(obo), doctest::Contains("line 2"), ParseError);
}

TEST_CASE("parse_obo: non-obsolete term without namespace is rejected") {
    const char* obo =
        "[Term]\nid: GO:0000001\nname: r\nnamespace: biological_process\n\n"
        "[Term]\nid: GO:0000002\nname: a\nis_a: GO:0000001\n";
    CHECK_THROWS_AS(parse_obo(obo), ValidationError);
}

TEST_CASE("parse_obo: two parentless terms in one namespace is rejected") {
    const char* obo =
        "[Term]\nid: GO:0000001\nname: r1\nnamespace: biological_process\n\n"
        "[Term]\nid: GO:0000002\nname: r2\nnamespace: biological_process\n";
    CHECK_THROWS_WITH_AS(parse_obo(obo), doctest::Contains("multiple roots"), ValidationError);
}

TEST_CASE("parse_obo: is_a to an unknown term is rejected") {
    const char* obo =
        "[Term]\nid: GO:0000001\nname: r\nnamespace: biological_process\n\n"
        "[Term]\nid: GO:0000002\nname: a\nnamespace: biological_process\nis_a: GO:0009999\n";
    CHECK_THROWS_WITH_AS(parse_obo(obo), doctest::Contains("unknown"), ValidationError);
}

TEST_CASE("parse_obo: CRLF input parses identically") {
    std::string crlf = kThreeTermObo;
    std::string with_crlf;
    for (char c : crlf) {
        if (c == '\n') with_crlf += "\r\n";
        else with_crlf += c;
    }
    auto a = parse_obo(kThreeTermObo);
    auto b = parse_obo(with_crlf);
    CHECK(a.term_count() == b.term_count());
    CHECK(a.top_level_terms(GoNamespace::molecular_function).export_tsv() ==
          b.top_level_terms(GoNamespace::molecular_function).export_tsv());
}

TEST_CASE("ancestors: chain closure and empty root set") {
    auto graph = parse_obo(kThreeTermObo);
    auto anc = graph.ancestors("GO:0000003");
    CHECK(anc == std::vector<std::string>{"GO:0000001", "GO:0000002"});
    CHECK(graph.ancestors("GO:0000001").empty());
}

TEST_CASE("ancestors: diamond matches the naive DFS oracle") {
    auto graph = parse_obo(read_file(fixture("mini.obo")));
    auto anc = graph.ancestors("GO:0000004");
    CHECK(anc == std::vector<std::string>{"GO:0000001", "GO:0000002", "GO:0000003"});
    std::set<std::string> oracle;
    dfs_ancestors(graph.terms(), "GO:0000004", oracle);
    CHECK(std::set<std::string>(anc.begin(), anc.end()) == oracle);
}

TEST_CASE("ancestors: unknown and obsolete terms raise lookup errors") {
    auto graph = parse_obo(read_file(fixture("mini.obo")));
    CHECK_THROWS_AS(graph.ancestors("GO:0099999"), LookupError);
    CHECK_THROWS_AS(graph.ancestors("GO:0000006"), LookupError);
}

TEST_CASE("ancestors: randomized DAGs up to 200 terms match the DFS oracle") {
    Rng rng(1234);
    for (int iter = 0; iter < 30; ++iter) {
        int n = 5 + static_cast<int>(rng.next_below(196));
        auto graph = parse_obo(random_dag_obo(n, rng));
        for (const auto& [id, t] : graph.terms()) {
            std::set<std::string> oracle;
            dfs_ancestors(graph.terms(), id, oracle);
            auto got = graph.ancestors(id);
            CHECK(std::set<std::string>(got.begin(), got.end()) == oracle);
        }
    }
}

TEST_CASE("ancestors: closure is transitively closed") {
    Rng rng(77);
    auto graph = parse_obo(random_dag_obo(120, rng));
    for (const auto& [id, t] : graph.terms()) {
        auto anc = graph.ancestors(id);
        std::set<std::string> mine(anc.begin(), anc.end());
        for (const auto& a : anc)
            for (const auto& deeper : graph.ancestors(a)) CHECK(mine.count(deeper) == 1);
    }
}

TEST_CASE("top_level_terms: sorted lexicographically and indexed from zero") {
    const char* obo =
        "[Term]\nid: GO:0000009\nname: r\nnamespace: biological_process\n\n"
        "[Term]\nid: GO:0000002\nname: second\nnamespace: biological_process\nis_a: GO:0000009\n\n"
        "[Term]\nid: GO:0000001\nname: first\nnamespace: biological_process\nis_a: GO:0000009\n";
    auto graph = parse_obo(obo);
    auto dict = graph.top_level_terms(GoNamespace::biological_process);
    REQUIRE(dict.size() == 2);
    CHECK(dict.ids[0] == "GO:0000001");
    CHECK(dict.ids[1] == "GO:0000002");
    CHECK(dict.index_of("GO:0000002") == 1);
    CHECK(dict.index_of("GO:0000009") == -1);
}

TEST_CASE("top_level_terms: obsolete root children are excluded") {
    auto graph = parse_obo(read_file(fixture("mini.obo")));
    auto dict = graph.top_level_terms(GoNamespace::biological_process);
    // Oracle: filter obsolete, then take direct children of the root.
    std::vector<std::string> oracle;
    const std::string root = graph.roots().at(GoNamespace::biological_process);
    for (const auto& [id, t] : graph.terms()) {
        if (t.is_obsolete) continue;
        if (std::find(t.is_a_parents.begin(), t.is_a_parents.end(), root) !=
            t.is_a_parents.end())
            oracle.push_back(id);
    }
    std::sort(oracle.begin(), oracle.end());
    CHECK(dict.ids == oracle);
    CHECK(dict.ids == std::vector<std::string>{"GO:0000002", "GO:0000003"});
}

TEST_CASE("top_level_terms: namespace with no terms has no root") {
    auto graph = parse_obo(kThreeTermObo);  // molecular_function only
    CHECK_THROWS_AS(graph.top_level_terms(GoNamespace::cellular_component), ValidationError);
}

TEST_CASE("top_level_terms: deterministic across reparses") {
    auto text = read_file(fixture("mini.obo"));
    auto a = parse_obo(text).top_level_terms(GoNamespace::biological_process);
    auto b = parse_obo(text).top_level_terms(GoNamespace::biological_process);
    CHECK(a.export_tsv() == b.export_tsv());
}

TEST_CASE("export_tsv: index, accession, name per line") {
    auto graph = parse_obo(read_file(fixture("mini.obo")));
    auto dict = graph.top_level_terms(GoNamespace::biological_process);
    CHECK(dict.export_tsv() == "0\tGO:0000002\tbp branch two\n1\tGO:0000003\tbp branch three\n");
}

TEST_CASE("map_to_top_level: a top-level term maps to its own index") {
    auto graph = parse_obo(read_file(fixture("mini.obo")));
    auto dict = graph.top_level_terms(GoNamespace::biological_process);
    CHECK(graph.map_to_top_level("GO:0000002", dict) == std::vector<std::int32_t>{0});
}

TEST_CASE("map_to_top_level: diamond leaf reaches both top-level terms") {
    auto graph = parse_obo(read_file(fixture("mini.obo")));
    auto dict = graph.top_level_terms(GoNamespace::biological_process);
    auto got = graph.map_to_top_level("GO:0000004", dict);
    // Oracle: ancestor closure intersected with the dictionary.
    std::set<std::string> closure;
    dfs_ancestors(graph.terms(), "GO:0000004", closure);
    closure.insert("GO:0000004");
    std::vector<std::int32_t> oracle;
    for (const auto& id : closure) {
        auto idx = dict.index_of(id);
        if (idx >= 0) oracle.push_back(idx);
    }
    std::sort(oracle.begin(), oracle.end());
    CHECK(got == oracle);
    CHECK(got == std::vector<std::int32_t>{0, 1});
}

TEST_CASE("map_to_top_level: the namespace root maps to the empty set") {
    auto graph = parse_obo(read_file(fixture("mini.obo")));
    auto dict = graph.top_level_terms(GoNamespace::biological_process);
    CHECK(graph.map_to_top_level("GO:0000001", dict).empty());
}

TEST_CASE("map_to_top_level: namespace mismatch is a lookup error") {
    auto graph = parse_obo(read_file(fixture("mini.obo")));
    auto dict = graph.top_level_terms(GoNamespace::biological_process);
    CHECK_THROWS_WITH_AS(graph.map_to_top_level("GO:0000012", dict),
                         doctest::Contains("cellular_component"), LookupError);
}

TEST_CASE("map_to_top_level: every non-root term maps to at least one index") {
    Rng rng(55);
    auto graph = parse_obo(random_dag_obo(150, rng));
    auto dict = graph.top_level_terms(GoNamespace::biological_process);
    const std::string root = graph.roots().at(GoNamespace::biological_process);
    for (const auto& [id, t] : graph.terms()) {
        if (id == root) continue;
        CHECK_FALSE(graph.map_to_top_level(id, dict).empty());
    }
}

TEST_CASE("alt_id: aliases resolve to the canonical accession") {
    auto graph = parse_obo(read_file(fixture("mini.obo")));
    CHECK(graph.resolve("GO:0000044") == "GO:0000004");
    CHECK(graph.term("GO:0000044").id == "GO:0000004");
    auto dict = graph.top_level_terms(GoNamespace::biological_process);
    CHECK(graph.map_to_top_level("GO:0000044", dict) == std::vector<std::int32_t>{0, 1});
}

TEST_CASE("mini fixture: term and namespace counts") {
    auto graph = parse_obo(read_file(fixture("mini.obo")));
    CHECK(graph.term_count() == 13);
    CHECK(graph.obsolete_count() == 2);
    CHECK(graph.namespace_count(GoNamespace::biological_process) == 5);
    CHECK(graph.namespace_count(GoNamespace::cellular_component) == 3);
    CHECK(graph.namespace_count(GoNamespace::molecular_function) == 3);
}
