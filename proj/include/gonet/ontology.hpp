#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "gonet/common.hpp"

namespace gonet {

enum class GoNamespace { biological_process, cellular_component, molecular_function };

const char* to_string(GoNamespace ns);
// Accepts the full OBO value or the short forms bp/cc/mf.
GoNamespace namespace_from_string(const std::string& s);

struct GoTerm {
    std::string id;
    std::string name;
    GoNamespace ns = GoNamespace::biological_process;
    bool is_obsolete = false;
    std::vector<std::string> is_a_parents;
    std::vector<std::string> alt_ids;
    // relationship tags (e.g. part_of) are kept for inspection but play no
    // role in the ancestor closure.
    std::vector<std::pair<std::string, std::string>> relationships;
};

bool is_go_accession(const std::string& s);

// Ordered bijection between top-level term accessions and output-vector
// indices, sorted lexicographically by accession.
struct TermDictionary {
    GoNamespace ns = GoNamespace::biological_process;
    std::vector<std::string> ids;
    std::vector<std::string> names;

    std::int64_t size() const { return static_cast<std::int64_t>(ids.size()); }
    // -1 when absent.
    std::int32_t index_of(const std::string& id) const;
    // Tab-separated "index<TAB>accession<TAB>name" lines sorted by index.
    std::string export_tsv() const;
};

// Validated DAG of GO terms. Immutable after construction; the ancestor
// closure is precomputed so concurrent reads are safe.
class OntologyGraph {
public:
    const std::map<std::string, GoTerm>& terms() const { return terms_; }
    const std::map<GoNamespace, std::string>& roots() const { return roots_; }

    bool has_term(const std::string& id) const;
    // Follows alt_id aliases to the canonical accession; empty when unknown.
    std::string resolve(const std::string& id) const;
    const GoTerm& term(const std::string& id) const;

    // Transitive closure over is_a edges, excluding the term itself,
    // including the namespace root. Sorted by accession.
    std::vector<std::string> ancestors(const std::string& id) const;

    std::uint64_t term_count() const { return terms_.size(); }
    std::uint64_t obsolete_count() const;
    std::uint64_t namespace_count(GoNamespace ns) const;  // non-obsolete terms

    // Non-obsolete direct is_a children of the namespace root, sorted.
    TermDictionary top_level_terms(GoNamespace ns) const;

    // Indices of top-level terms that are the term itself or one of its
    // ancestors. Empty only for the namespace root.
    std::vector<std::int32_t> map_to_top_level(const std::string& id,
                                               const TermDictionary& dict) const;

    friend OntologyGraph parse_obo(const std::string& text);

private:
    void validate();

    std::map<std::string, GoTerm> terms_;
    std::map<GoNamespace, std::string> roots_;
    std::unordered_map<std::string, std::string> aliases_;
    // Non-obsolete accessions in sorted order plus the precomputed is_a
    // closure over their indices.
    std::vector<std::string> order_;
    std::unordered_map<std::string, std::int32_t> index_;
    std::vector<std::vector<std::int32_t>> closure_;
};

// Parses OBO 1.2-style text ([Term] stanzas; id/name/namespace/is_a/
// is_obsolete/alt_id/relationship recognized, everything else skipped) and
// validates the graph invariants.
OntologyGraph parse_obo(const std::string& text);

}  // namespace gonet
