#include "tqe/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tqe/eval.hpp"

namespace tqe {

void EnsembleSpec::validate() const {
    if (weight_a < 0.0 || weight_b < 0.0)
        throw InvalidConfig("ensemble weights must be nonnegative");
    if (std::abs(weight_a + weight_b - 1.0) > 1e-12)
        throw InvalidConfig("ensemble weights must sum to 1");
}

std::vector<Prediction> ensemble_predict(const std::vector<Prediction>& preds_a,
                                         const std::vector<Prediction>& preds_b,
                                         const EnsembleSpec& spec) {
    spec.validate();
    if (preds_a.size() != preds_b.size()) throw LengthMismatch("ensemble: prediction counts differ");
    std::vector<Prediction> out;
    out.reserve(preds_a.size());
    for (std::size_t i = 0; i < preds_a.size(); ++i) {
        if (preds_a[i].index != preds_b[i].index)
            throw IndexMismatch("ensemble: segment index mismatch at position " +
                                std::to_string(i));
        out.push_back({preds_a[i].index,
                       spec.weight_a * preds_a[i].score + spec.weight_b * preds_b[i].score});
    }
    return out;
}

std::vector<EnsembleSpec> default_weight_grid() {
    return {{0.8, 0.2}, {0.6, 0.4}, {0.5, 0.5}};
}

EnsembleSpec grid_select_weight(const std::vector<Prediction>& preds_a,
                                const std::vector<Prediction>& preds_b,
                                const std::vector<double>& golds,
                                const std::vector<EnsembleSpec>& candidates) {
    if (candidates.empty()) throw InvalidConfig("grid_select_weight: no candidates");
    if (golds.size() != preds_a.size())
        throw LengthMismatch("grid_select_weight: gold count differs from predictions");
    const EnsembleSpec* best = nullptr;
    double best_r = 0.0;
    for (const auto& cand : candidates) {
        auto blended = ensemble_predict(preds_a, preds_b, cand);
        std::vector<double> scores(blended.size());
        for (std::size_t i = 0; i < blended.size(); ++i) scores[i] = blended[i].score;
        const double r = pearson(scores, golds);
        if (!best || r > best_r || (r == best_r && cand.weight_a > best->weight_a)) {
            best = &cand;
            best_r = r;
        }
    }
    return *best;
}

std::vector<QEPair> augment_dataset(const std::vector<QEPair>& train,
                                    const std::vector<ParallelPair>& corpus,
                                    const AugmentPolicy& policy) {
    if (corpus.size() < policy.n_pairs)
        throw CorpusTooSmall("augment_dataset: corpus smaller than n_pairs");
    double label;
    if (policy.fixed_label) {
        label = *policy.fixed_label;
        if (!std::isfinite(label)) throw InvalidConfig("augment_dataset: non-finite fixed label");
    } else {
        if (train.empty())
            throw EmptyTrain("augment_dataset: max-observed-z label needs a nonempty train set");
        label = train[0].z_score;
        for (const auto& p : train) label = std::max(label, p.z_score);
    }

    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(policy.seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<QEPair> out = train;
    std::int64_t next_index = 0;
    for (const auto& p : train) next_index = std::max(next_index, p.index + 1);
    for (std::size_t i = 0; i < policy.n_pairs; ++i) {
        const auto& src = corpus[order[i]];
        QEPair q;
        q.index = next_index++;
        q.original = src.source;
        q.translation = src.target;
        q.da_score = 100.0;
        q.z_score = label;
        out.push_back(std::move(q));
    }
    return out;
}

}  // namespace tqe
