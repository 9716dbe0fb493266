#pragma once

#include <map>
#include <string>
#include <vector>

#include "gonet/model.hpp"

namespace gonet {

struct PredictedTerm {
    std::string term_id;
    std::string name;
    double probability = 0;
};

struct Prediction {
    std::string protein_id;
    std::vector<PredictedTerm> terms;  // descending probability
    double threshold = 0.5;
    std::string error;  // non-empty when the sequence could not be encoded

    bool ok() const { return error.empty(); }
};

struct PredictOptions {
    double threshold = 0.5;
    // Emit the single highest-probability term when nothing clears the
    // threshold.
    bool min_one = false;
    int threads = 1;
};

// Encode -> eval-mode forward -> binarize -> dictionary lookup, one
// Prediction per input sequence (sorted by id). A sequence with an illegal
// residue yields an error entry and leaves the others untouched.
std::vector<Prediction> predict(const Checkpoint& ckpt,
                                const std::map<std::string, std::string>& sequences,
                                const PredictOptions& opts = {});

// Same, against an already-restored model.
std::vector<Prediction> predict(Model<float>& model, const TermDictionary& dict,
                                const Alphabet& alphabet,
                                const std::map<std::string, std::string>& sequences,
                                const PredictOptions& opts = {});

// Tab-separated "protein_id<TAB>term<TAB>name<TAB>probability" lines plus a
// summary comment per protein.
std::string render_predictions(const std::vector<Prediction>& predictions);
std::string render_predictions_json(const std::vector<Prediction>& predictions);

}  // namespace gonet
