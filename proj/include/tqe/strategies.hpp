#pragma once

#include <optional>

#include "tqe/data.hpp"
#include "tqe/models.hpp"

namespace tqe {

struct EnsembleSpec {
    double weight_a = 0.8;
    double weight_b = 0.2;

    void validate() const;
};

struct AugmentPolicy {
    std::size_t n_pairs = 2000;
    // Empty: label with the max gold z-score observed in the training set.
    std::optional<double> fixed_label;
    std::uint64_t seed = 777;
};

std::vector<Prediction> ensemble_predict(const std::vector<Prediction>& preds_a,
                                         const std::vector<Prediction>& preds_b,
                                         const EnsembleSpec& spec);

// Picks the candidate whose blend has the highest Pearson r against the
// golds; ties go to the larger weight_a.
EnsembleSpec grid_select_weight(const std::vector<Prediction>& preds_a,
                                const std::vector<Prediction>& preds_b,
                                const std::vector<double>& golds,
                                const std::vector<EnsembleSpec>& candidates);

std::vector<EnsembleSpec> default_weight_grid();  // 0.8:0.2, 0.6:0.4, 0.5:0.5

// Appends n_pairs seeded samples (without replacement) from the corpus,
// labeled as maximum-quality rows; originals are untouched.
std::vector<QEPair> augment_dataset(const std::vector<QEPair>& train,
                                    const std::vector<ParallelPair>& corpus,
                                    const AugmentPolicy& policy);

}  // namespace tqe
