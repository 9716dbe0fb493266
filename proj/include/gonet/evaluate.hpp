#pragma once

#include "gonet/annotations.hpp"
#include "gonet/metrics.hpp"
#include "gonet/model.hpp"

namespace gonet {

// Eval-mode forward over every dataset row in order, binarized at the
// threshold (probability >= threshold is a positive call). Row shards may be
// scored on separate threads; the merge is integer-count addition, so the
// report does not depend on the thread count.
EvalReport evaluate(Model<float>& model, const Dataset& dataset, double threshold,
                    int threads = 1);

// Raw eval-mode probabilities for every row (N x dict.size()).
FloatMatrix predict_probabilities(Model<float>& model, const Dataset& dataset, int threads = 1);

}  // namespace gonet
