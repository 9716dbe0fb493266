#include "gonet/ontology.hpp"

#include <algorithm>
#include <deque>
#include <optional>
#include <sstream>

namespace gonet {

const char* to_string(GoNamespace ns) {
    switch (ns) {
        case GoNamespace::biological_process:
            return "biological_process";
        case GoNamespace::cellular_component:
            return "cellular_component";
        case GoNamespace::molecular_function:
            return "molecular_function";
    }
    return "?";
}

GoNamespace namespace_from_string(const std::string& s) {
    if (s == "biological_process" || s == "bp" || s == "BP")
        return GoNamespace::biological_process;
    if (s == "cellular_component" || s == "cc" || s == "CC")
        return GoNamespace::cellular_component;
    if (s == "molecular_function" || s == "mf" || s == "MF")
        return GoNamespace::molecular_function;
    throw ValidationError("unknown GO namespace: '" + s + "'");
}

bool is_go_accession(const std::string& s) {
    if (s.size() != 10 || s.compare(0, 3, "GO:") != 0) return false;
    for (std::size_t i = 3; i < 10; ++i)
        if (s[i] < '0' || s[i] > '9') return false;
    return true;
}

std::int32_t TermDictionary::index_of(const std::string& id) const {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) return -1;
    return static_cast<std::int32_t>(it - ids.begin());
}

std::string TermDictionary::export_tsv() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < ids.size(); ++i)
        out << i << '\t' << ids[i] << '\t' << names[i] << '\n';
    return out.str();
}

bool OntologyGraph::has_term(const std::string& id) const {
    return terms_.count(id) > 0;
}

std::string OntologyGraph::resolve(const std::string& id) const {
    if (terms_.count(id)) return id;
    auto it = aliases_.find(id);
    if (it != aliases_.end()) return it->second;
    return {};
}

const GoTerm& OntologyGraph::term(const std::string& id) const {
    std::string canon = resolve(id);
    if (canon.empty()) throw LookupError("unknown GO term: " + id);
    return terms_.at(canon);
}

std::uint64_t OntologyGraph::obsolete_count() const {
    std::uint64_t n = 0;
    for (const auto& [id, t] : terms_)
        if (t.is_obsolete) ++n;
    return n;
}

std::uint64_t OntologyGraph::namespace_count(GoNamespace ns) const {
    std::uint64_t n = 0;
    for (const auto& [id, t] : terms_)
        if (!t.is_obsolete && t.ns == ns) ++n;
    return n;
}

std::vector<std::string> OntologyGraph::ancestors(const std::string& id) const {
    std::string canon = resolve(id);
    if (canon.empty()) throw LookupError("unknown GO term: " + id);
    const GoTerm& t = terms_.at(canon);
    if (t.is_obsolete) throw LookupError("term is obsolete: " + canon);
    const auto& cl = closure_[static_cast<std::size_t>(index_.at(canon))];
    std::vector<std::string> out;
    out.reserve(cl.size());
    for (std::int32_t i : cl) out.push_back(order_[static_cast<std::size_t>(i)]);
    return out;
}

TermDictionary OntologyGraph::top_level_terms(GoNamespace ns) const {
    auto rit = roots_.find(ns);
    if (rit == roots_.end())
        throw ValidationError(std::string("namespace has no root: ") + to_string(ns));
    const std::string& root = rit->second;

    std::vector<std::string> children;
    for (const auto& [id, t] : terms_) {
        if (t.is_obsolete) continue;
        for (const auto& p : t.is_a_parents)
            if (p == root) {
                children.push_back(id);
                break;
            }
    }
    std::sort(children.begin(), children.end());

    TermDictionary dict;
    dict.ns = ns;
    dict.ids = std::move(children);
    dict.names.reserve(dict.ids.size());
    for (const auto& id : dict.ids) dict.names.push_back(terms_.at(id).name);
    return dict;
}

std::vector<std::int32_t> OntologyGraph::map_to_top_level(const std::string& id,
                                                          const TermDictionary& dict) const {
    std::string canon = resolve(id);
    if (canon.empty()) throw LookupError("unknown GO term: " + id);
    const GoTerm& t = terms_.at(canon);
    if (t.is_obsolete) throw LookupError("term is obsolete: " + canon);
    if (t.ns != dict.ns)
        throw LookupError("term " + canon + " belongs to " + to_string(t.ns) +
                          ", dictionary is for " + to_string(dict.ns));

    std::vector<std::int32_t> out;
    std::int32_t self = dict.index_of(canon);
    if (self >= 0) out.push_back(self);
    const auto& cl = closure_[static_cast<std::size_t>(index_.at(canon))];
    for (std::int32_t i : cl) {
        std::int32_t di = dict.index_of(order_[static_cast<std::size_t>(i)]);
        if (di >= 0) out.push_back(di);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

struct RawTerm {
    GoTerm term;
    bool has_id = false;
    bool has_namespace = false;
    std::int64_t line = 0;
};

}  // namespace

OntologyGraph parse_obo(const std::string& text) {
    OntologyGraph graph;

    std::istringstream in(text);
    std::string line;
    std::int64_t lineno = 0;
    bool in_term = false;
    std::optional<RawTerm> current;

    auto check_accession = [&](const std::string& acc) {
        if (!is_go_accession(acc))
            throw ParseError("line " + std::to_string(lineno) + ": malformed GO accession '" +
                             acc + "'");
    };
    auto finish = [&]() {
        if (!current) return;
        if (!current->has_id)
            throw ParseError("line " + std::to_string(current->line) +
                             ": [Term] stanza without id");
        if (!current->has_namespace && !current->term.is_obsolete)
            throw ValidationError("term " + current->term.id +
                                  ": non-obsolete term without namespace");
        if (graph.terms_.count(current->term.id))
            throw ValidationError("duplicate term id: " + current->term.id);
        graph.terms_.emplace(current->term.id, std::move(current->term));
        current.reset();
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string stripped = trim(line);
        if (stripped.empty()) continue;
        if (stripped.front() == '[') {
            finish();
            in_term = stripped == "[Term]";
            if (in_term) {
                current.emplace();
                current->line = lineno;
            }
            continue;
        }
        if (!in_term || !current) continue;

        auto colon = stripped.find(':');
        if (colon == std::string::npos) continue;
        std::string tag = stripped.substr(0, colon);
        std::string value = trim(stripped.substr(colon + 1));

        if (tag == "id") {
            check_accession(value);
            current->term.id = value;
            current->has_id = true;
        } else if (tag == "name") {
            current->term.name = value;
        } else if (tag == "namespace") {
            current->term.ns = namespace_from_string(value);
            current->has_namespace = true;
        } else if (tag == "is_a") {
            auto bang = value.find('!');
            std::string target = trim(bang == std::string::npos ? value : value.substr(0, bang));
            check_accession(target);
            current->term.is_a_parents.push_back(target);
        } else if (tag == "alt_id") {
            check_accession(value);
            current->term.alt_ids.push_back(value);
        } else if (tag == "is_obsolete") {
            current->term.is_obsolete = value == "true";
        } else if (tag == "relationship") {
            auto space = value.find(' ');
            if (space != std::string::npos) {
                std::string rel = value.substr(0, space);
                std::string rest = trim(value.substr(space + 1));
                auto bang = rest.find('!');
                std::string target = trim(bang == std::string::npos ? rest : rest.substr(0, bang));
                current->term.relationships.emplace_back(rel, target);
            }
        }
        // other tags skipped
    }
    finish();

    graph.validate();
    return graph;
}

void OntologyGraph::validate() {
    // Alias table; alt_ids must not collide with canonical accessions.
    for (const auto& [id, t] : terms_)
        for (const auto& alt : t.alt_ids) {
            if (terms_.count(alt)) continue;  // canonical id wins
            aliases_[alt] = id;
        }

    // Index over non-obsolete terms, sorted by accession.
    for (const auto& [id, t] : terms_)
        if (!t.is_obsolete) order_.push_back(id);
    for (std::size_t i = 0; i < order_.size(); ++i)
        index_[order_[i]] = static_cast<std::int32_t>(i);

    std::size_t n = order_.size();
    std::vector<std::vector<std::int32_t>> parents(n), children(n);
    for (std::size_t i = 0; i < n; ++i) {
        const GoTerm& t = terms_.at(order_[i]);
        for (const auto& pid : t.is_a_parents) {
            auto pit = index_.find(pid);
            if (pit == index_.end()) {
                auto tit = terms_.find(pid);
                if (tit != terms_.end() && tit->second.is_obsolete)
                    throw ValidationError("term " + t.id + " has is_a to obsolete term " + pid);
                throw ValidationError("term " + t.id + " has is_a to unknown term " + pid);
            }
            parents[i].push_back(pit->second);
            children[static_cast<std::size_t>(pit->second)].push_back(
                static_cast<std::int32_t>(i));
        }
    }

    // Exactly one root (non-obsolete, no is_a parents) per populated namespace.
    std::map<GoNamespace, std::vector<std::string>> parentless;
    for (std::size_t i = 0; i < n; ++i)
        if (parents[i].empty()) parentless[terms_.at(order_[i]).ns].push_back(order_[i]);
    std::map<GoNamespace, std::uint64_t> populated;
    for (std::size_t i = 0; i < n; ++i) populated[terms_.at(order_[i]).ns] += 1;
    for (const auto& [ns, count] : populated) {
        auto it = parentless.find(ns);
        if (it == parentless.end() || it->second.empty())
            throw ValidationError(std::string("namespace ") + to_string(ns) +
                                  " has no root term");
        if (it->second.size() > 1)
            throw ValidationError(std::string("namespace ") + to_string(ns) +
                                  " has multiple roots: " + it->second[0] + ", " +
                                  it->second[1]);
        roots_[ns] = it->second[0];
    }

    // Kahn topological order (parents before children); leftover nodes sit on
    // a cycle.
    std::vector<std::int32_t> remaining(n);
    std::deque<std::int32_t> queue;
    for (std::size_t i = 0; i < n; ++i) {
        remaining[i] = static_cast<std::int32_t>(parents[i].size());
        if (remaining[i] == 0) queue.push_back(static_cast<std::int32_t>(i));
    }
    std::vector<std::int32_t> topo;
    topo.reserve(n);
    while (!queue.empty()) {
        std::int32_t u = queue.front();
        queue.pop_front();
        topo.push_back(u);
        for (std::int32_t c : children[static_cast<std::size_t>(u)])
            if (--remaining[static_cast<std::size_t>(c)] == 0) queue.push_back(c);
    }
    if (topo.size() != n) {
        for (std::size_t i = 0; i < n; ++i)
            if (remaining[i] > 0)
                throw ValidationError("is_a cycle detected involving term " + order_[i]);
    }

    // Closure in topological order: ancestors(t) = union over parents p of
    // ({p} + ancestors(p)).
    closure_.resize(n);
    for (std::int32_t u : topo) {
        auto& cl = closure_[static_cast<std::size_t>(u)];
        for (std::int32_t p : parents[static_cast<std::size_t>(u)]) {
            cl.push_back(p);
            const auto& pcl = closure_[static_cast<std::size_t>(p)];
            cl.insert(cl.end(), pcl.begin(), pcl.end());
        }
        std::sort(cl.begin(), cl.end());
        cl.erase(std::unique(cl.begin(), cl.end()), cl.end());
    }

    // Every non-root term must reach its namespace root.
    for (std::size_t i = 0; i < n; ++i) {
        const GoTerm& t = terms_.at(order_[i]);
        const std::string& root = roots_.at(t.ns);
        if (order_[i] == root) continue;
        std::int32_t ri = index_.at(root);
        const auto& cl = closure_[i];
        if (!std::binary_search(cl.begin(), cl.end(), ri))
            throw ValidationError("term " + t.id + " has no is_a path to its namespace root " +
                                  root);
    }
}

}  // namespace gonet
