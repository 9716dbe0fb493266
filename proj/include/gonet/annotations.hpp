#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gonet/common.hpp"
#include "gonet/encoding.hpp"
#include "gonet/ontology.hpp"

namespace gonet {

struct AnnotationRecord {
    std::string protein_id;
    std::string go_term;
    std::string evidence_code;
    std::string qualifier;
};

// Column names for the tab-separated annotation export. Defaults match the
// QuickGO download format.
struct AnnotationColumns {
    std::string protein = "GENE PRODUCT ID";
    std::string term = "GO TERM";
    std::string evidence = "GO EVIDENCE CODE";
    std::string qualifier = "QUALIFIER";  // optional in the input
};

struct AnnotationTable {
    std::vector<AnnotationRecord> records;
    Counters counters;
};

// GO consortium experimental + author/curator evidence codes. The strict
// experimental-only set drops TAS and IC.
const std::set<std::string>& default_evidence_whitelist();
const std::set<std::string>& strict_evidence_whitelist();

// Parses the annotation table. Rows with a NOT qualifier are dropped; rows
// with malformed accessions or evidence codes are counted and skipped.
// A missing required column raises ParseError naming it.
AnnotationTable parse_annotation_table(const std::string& text,
                                       const AnnotationColumns& columns = {});

// Keeps exactly the records whose evidence code is in the whitelist.
std::vector<AnnotationRecord> filter_experimental(const std::vector<AnnotationRecord>& records,
                                                  const std::set<std::string>& whitelist);

struct AggregationResult {
    std::map<std::string, std::set<std::int32_t>> proteins;  // id -> top-level indices
    Counters counters;
};

// Unions map_to_top_level over each protein's records. Unresolvable,
// obsolete, or wrong-namespace terms are counted and skipped; proteins whose
// union ends up empty are dropped.
AggregationResult aggregate_by_protein(const std::vector<AnnotationRecord>& records,
                                       const OntologyGraph& graph, const TermDictionary& dict);

struct FastaResult {
    std::map<std::string, std::string> sequences;
    Counters counters;
};

// FASTA parser. UniProt-style "db|ACCESSION|name" headers yield the second
// pipe field, anything else the first whitespace-delimited token. Sequences
// are uppercased; records with symbols outside the alphabet are dropped and
// counted, duplicate accessions resolve last-wins.
FastaResult parse_fasta(const std::string& text, const Alphabet& alphabet);

// Aligned arrays of encoded sequences, padding masks and binary label
// vectors for one GO domain. Rows sorted lexicographically by protein id.
struct Dataset {
    std::string alphabet_symbols;
    std::int64_t max_len = 0;
    std::vector<std::string> ids;
    IntMatrix indices;   // N x max_len
    ByteMatrix mask;     // N x max_len
    ByteMatrix labels;   // N x dict.size()
    TermDictionary dict;
    Counters counters;

    std::int64_t rows() const { return static_cast<std::int64_t>(ids.size()); }
    // Row count per label cardinality.
    std::map<std::int64_t, std::int64_t> label_histogram() const;
    std::string manifest() const;
};

// Inner join of aggregated annotations with sequences; proteins missing a
// sequence are counted and dropped. Raises ValidationError on an empty join.
Dataset build_dataset(const std::map<std::string, std::set<std::int32_t>>& aggregated,
                      const std::map<std::string, std::string>& sequences,
                      const TermDictionary& dict, std::int64_t max_len,
                      const Alphabet& alphabet = Alphabet());

// Dataset container I/O (same binary container as model checkpoints).
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace gonet
