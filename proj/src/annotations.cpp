#include "gonet/annotations.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace gonet {

const std::set<std::string>& default_evidence_whitelist() {
    static const std::set<std::string> codes = {"EXP", "IDA", "IPI", "IMP",
                                                "IGI", "IEP", "TAS", "IC"};
    return codes;
}

const std::set<std::string>& strict_evidence_whitelist() {
    static const std::set<std::string> codes = {"EXP", "IDA", "IPI", "IMP", "IGI", "IEP"};
    return codes;
}

namespace {

bool is_upper_ascii(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < 'A' || c > 'Z') return false;
    return true;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

}  // namespace

AnnotationTable parse_annotation_table(const std::string& text,
                                       const AnnotationColumns& columns) {
    AnnotationTable out;
    auto lines = split_lines(text);
    if (lines.empty()) throw ParseError("annotation table: empty input");

    auto header = split(lines[0], '\t');
    auto find_col = [&](const std::string& name) -> std::int64_t {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<std::int64_t>(i);
        return -1;
    };
    std::int64_t col_protein = find_col(columns.protein);
    std::int64_t col_term = find_col(columns.term);
    std::int64_t col_evidence = find_col(columns.evidence);
    std::int64_t col_qualifier = find_col(columns.qualifier);  // optional
    if (col_protein < 0) throw ParseError("annotation table: missing column '" + columns.protein + "'");
    if (col_term < 0) throw ParseError("annotation table: missing column '" + columns.term + "'");
    if (col_evidence < 0)
        throw ParseError("annotation table: missing column '" + columns.evidence + "'");
    std::int64_t need = std::max({col_protein, col_term, col_evidence, col_qualifier});

    for (std::size_t li = 1; li < lines.size(); ++li) {
        if (lines[li].empty()) continue;
        out.counters["rows"] += 1;
        auto cells = split(lines[li], '\t');
        if (static_cast<std::int64_t>(cells.size()) <= need) {
            out.counters["malformed_rows"] += 1;
            continue;
        }
        AnnotationRecord rec;
        rec.protein_id = trim(cells[static_cast<std::size_t>(col_protein)]);
        rec.go_term = trim(cells[static_cast<std::size_t>(col_term)]);
        rec.evidence_code = trim(cells[static_cast<std::size_t>(col_evidence)]);
        if (col_qualifier >= 0)
            rec.qualifier = trim(cells[static_cast<std::size_t>(col_qualifier)]);
        if (rec.protein_id.empty() || !is_go_accession(rec.go_term) ||
            !is_upper_ascii(rec.evidence_code)) {
            out.counters["malformed_rows"] += 1;
            continue;
        }
        if (rec.qualifier.find("NOT") != std::string::npos) {
            out.counters["not_qualified_dropped"] += 1;
            continue;
        }
        out.records.push_back(std::move(rec));
    }
    out.counters["records"] = out.records.size();
    return out;
}

std::vector<AnnotationRecord> filter_experimental(const std::vector<AnnotationRecord>& records,
                                                  const std::set<std::string>& whitelist) {
    std::vector<AnnotationRecord> out;
    out.reserve(records.size());
    for (const auto& r : records)
        if (whitelist.count(r.evidence_code)) out.push_back(r);
    return out;
}

AggregationResult aggregate_by_protein(const std::vector<AnnotationRecord>& records,
                                       const OntologyGraph& graph, const TermDictionary& dict) {
    AggregationResult out;
    // Records repeat terms heavily, so the index sets are memoized per term.
    std::map<std::string, std::vector<std::int32_t>> memo;

    for (const auto& rec : records) {
        std::string canon = graph.resolve(rec.go_term);
        if (canon.empty()) {
            out.counters["unresolvable_terms"] += 1;
            continue;
        }
        const GoTerm& t = graph.term(canon);
        if (t.is_obsolete) {
            out.counters["obsolete_terms"] += 1;
            continue;
        }
        if (t.ns != dict.ns) {
            out.counters["other_namespace"] += 1;
            continue;
        }
        auto it = memo.find(canon);
        if (it == memo.end())
            it = memo.emplace(canon, graph.map_to_top_level(canon, dict)).first;
        auto& indices = out.proteins[rec.protein_id];
        indices.insert(it->second.begin(), it->second.end());
    }

    for (auto it = out.proteins.begin(); it != out.proteins.end();) {
        if (it->second.empty()) {
            out.counters["empty_mapping_proteins"] += 1;
            it = out.proteins.erase(it);
        } else {
            ++it;
        }
    }
    out.counters["proteins"] = out.proteins.size();
    return out;
}

FastaResult parse_fasta(const std::string& text, const Alphabet& alphabet) {
    FastaResult out;
    std::string id, seq;
    bool bad_symbol = false;

    auto flush = [&]() {
        if (id.empty()) return;
        if (seq.empty()) {
            out.counters["empty_sequences"] += 1;
        } else if (bad_symbol) {
            out.counters["illegal_symbol_sequences"] += 1;
        } else {
            if (out.sequences.count(id)) out.counters["duplicate_accessions"] += 1;
            out.sequences[id] = seq;  // last wins
        }
        id.clear();
        seq.clear();
        bad_symbol = false;
    };

    for (auto& line : split_lines(text)) {
        if (line.empty()) continue;
        if (line[0] == '>') {
            flush();
            std::string header = trim(line.substr(1));
            std::string token = header.substr(0, header.find_first_of(" \t"));
            if (token.find('|') != std::string::npos) {
                auto fields = split(token, '|');
                token = fields.size() > 1 ? fields[1] : std::string();
            }
            if (token.empty()) {
                out.counters["bad_headers"] += 1;
            } else {
                id = token;
            }
            continue;
        }
        if (id.empty()) continue;  // sequence data before any header
        for (char c : line) {
            if (std::isspace(static_cast<unsigned char>(c))) continue;
            char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            if (!alphabet.contains(u)) bad_symbol = true;
            seq.push_back(u);
        }
    }
    flush();
    out.counters["sequences"] = out.sequences.size();
    return out;
}

std::map<std::int64_t, std::int64_t> Dataset::label_histogram() const {
    std::map<std::int64_t, std::int64_t> hist;
    for (std::int64_t r = 0; r < labels.rows; ++r) {
        std::int64_t card = 0;
        for (std::int64_t c = 0; c < labels.cols; ++c) card += labels.at(r, c);
        hist[card] += 1;
    }
    return hist;
}

std::string Dataset::manifest() const {
    std::ostringstream out;
    out << "# dataset manifest\n";
    out << "namespace: " << to_string(dict.ns) << '\n';
    out << "rows: " << rows() << '\n';
    out << "labels: " << dict.size() << '\n';
    out << "max_len: " << max_len << '\n';
    out << "alphabet_hash: " << Alphabet(alphabet_symbols).hash() << '\n';
    out << "label_cardinality_histogram:\n";
    for (const auto& [card, count] : label_histogram())
        out << "  " << card << ": " << count << '\n';
    out << "counters:\n";
    for (const auto& [key, value] : counters) out << "  " << key << ": " << value << '\n';
    return out.str();
}

Dataset build_dataset(const std::map<std::string, std::set<std::int32_t>>& aggregated,
                      const std::map<std::string, std::string>& sequences,
                      const TermDictionary& dict, std::int64_t max_len,
                      const Alphabet& alphabet) {
    if (max_len < 1) throw ConfigError("build_dataset: max_len must be >= 1");

    Dataset ds;
    ds.alphabet_symbols = alphabet.symbols();
    ds.max_len = max_len;
    ds.dict = dict;

    // std::map iteration keeps the join sorted by protein id.
    for (const auto& [pid, indices] : aggregated) {
        if (!sequences.count(pid)) {
            ds.counters["missing_sequence_proteins"] += 1;
            continue;
        }
        ds.ids.push_back(pid);
    }
    if (ds.ids.empty()) throw ValidationError("build_dataset: empty join");

    std::int64_t n = ds.rows();
    std::int64_t k = dict.size();
    ds.indices = {n, max_len, std::vector<std::int32_t>(static_cast<std::size_t>(n * max_len))};
    ds.mask = {n, max_len, std::vector<std::uint8_t>(static_cast<std::size_t>(n * max_len))};
    ds.labels = {n, k, std::vector<std::uint8_t>(static_cast<std::size_t>(n * k))};

    for (std::int64_t r = 0; r < n; ++r) {
        const std::string& pid = ds.ids[static_cast<std::size_t>(r)];
        auto enc = encode_sequence(sequences.at(pid), alphabet, max_len);
        std::copy(enc.indices.begin(), enc.indices.end(), ds.indices.data.begin() + r * max_len);
        std::copy(enc.mask.begin(), enc.mask.end(), ds.mask.data.begin() + r * max_len);
        if (enc.true_length > max_len) ds.counters["truncated_sequences"] += 1;
        auto label = encode_labels(aggregated.at(pid), k);
        std::copy(label.begin(), label.end(), ds.labels.data.begin() + r * k);
    }
    ds.counters["rows"] = static_cast<std::uint64_t>(n);
    return ds;
}

}  // namespace gonet
