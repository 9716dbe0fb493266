#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gonet/common.hpp"

namespace gonet {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }
};

struct ConfusionResult {
    ConfusionCounts micro;
    std::vector<ConfusionCounts> per_label;
};

// Positionwise counting over all B*K decisions; per-label counts per column.
// Entries must be 0/1.
ConfusionResult confusion(const ByteMatrix& pred, const ByteMatrix& target);

// F1 = 2PR/(P+R); any zero denominator yields 0.
double f1(const ConfusionCounts& c);

// Matthews correlation coefficient; 0 when any denominator factor is 0.
// Products are computed in 128-bit integers.
double mcc(const ConfusionCounts& c);

struct LabelScore {
    std::string term_id;
    ConfusionCounts counts;
    double f1 = 0;
    double mcc = 0;
};

struct EvalReport {
    double threshold = 0.5;
    std::int64_t samples = 0;
    ConfusionCounts micro;
    double micro_f1 = 0;
    double micro_mcc = 0;
    std::vector<LabelScore> per_label;

    // Header block followed by one line per label:
    // index, term, tp, fp, tn, fn, F1, MCC.
    std::string render_text() const;
    std::string render_tsv() const;
};

}  // namespace gonet
