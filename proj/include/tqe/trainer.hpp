#pragma once

#include <iosfwd>

#include "tqe/models.hpp"
#include "tqe/optim.hpp"

namespace tqe {

struct TrainingConfig {
    std::size_t batch_size = 8;
    double peak_lr = 2e-5;
    double lr_scale = 1.0;  // desk-scale multiplier, recorded alongside peak_lr
    double warmup_fraction = 0.1;
    std::size_t epochs = 3;
    double eval_fraction = 0.2;
    std::size_t patience_rounds = 10;
    std::size_t eval_every_steps = 100;
    std::uint64_t seed = 42;
    bool shuffle = true;

    void validate() const;
    double effective_lr() const { return peak_lr * lr_scale; }
};

struct EvalRound {
    std::size_t round = 0;  // 1-based, strictly increasing
    std::int64_t step = 0;
    double train_loss = 0.0;  // mean batch loss since the previous round
    double eval_loss = 0.0;
    double best = 0.0;  // best eval loss up to and including this round
};

struct TrainingHistory {
    std::vector<double> step_train_loss;
    std::vector<EvalRound> rounds;
    double best_eval_loss = 0.0;
    std::size_t best_round = 0;
    std::string stop_reason;  // "epochs_exhausted" | "early_stopped"
};

struct TrainResult {
    Checkpoint best;
    TrainingHistory history;
};

// True once the last `patience` rounds all failed to strictly improve on the
// best eval loss recorded before them.
bool should_stop(const TrainingHistory& history, std::size_t patience);

double evaluate_loss(const QEModel& model, const std::vector<QEPair>& eval_set,
                     const Vocab& vocab);

// The full recipe: hold-out split, per-epoch seeded shuffle, Adam with linear
// warmup, periodic evaluation, patience-based early stopping, best-model
// retention. Trains `model` in place; the returned checkpoint is the best
// snapshot. Deterministic given (model seed, data, cfg).
TrainResult train(QEModel& model, const std::vector<QEPair>& data, const Vocab& vocab,
                  const TrainingConfig& cfg, std::ostream* log = nullptr);

}  // namespace tqe
