#pragma once

#include <map>
#include <string>
#include <vector>

#include "pnn/dataset.hpp"
#include "pnn/model.hpp"

namespace pnn::testsupport {

// Exhaustive reference evaluator, written directly from the metric
// definitions and independent of pnn::evaluate's code paths. Returns
// macro-averaged means keyed like the production report ("recall@10", ...,
// "opauc@0.5").
std::map<std::string, double> reference_evaluate(
    const ModelParams& p, const InteractionDataset& ds,
    const std::vector<int>& ks, int mrr_k, const std::vector<double>& deltas);

// Classical AUC by counting all (positive, negative) score pairs; ties 0.5.
// With strict_ties_zero, tied pairs count 0 (the OPAUC estimator's rule).
double pair_count_auc(const std::vector<double>& pos,
                      const std::vector<double>& neg, bool strict_ties_zero);

}  // namespace pnn::testsupport
