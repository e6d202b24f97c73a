#include "tqe/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <tuple>

namespace tqe {

namespace {

struct Example {
    TokenSequence mono;
    TokenSequence left, right;  // siamese sides
    double gold = 0.0;
};

std::vector<Example> encode_all(const QEModel& model, const std::vector<QEPair>& pairs,
                                const Vocab& vocab) {
    std::vector<Example> out;
    out.reserve(pairs.size());
    const bool is_mono = std::holds_alternative<MonoModel>(model);
    const std::size_t max_len = is_mono ? std::get<MonoModel>(model).config.max_len
                                        : std::get<SiameseModel>(model).config.max_len;
    for (const auto& p : pairs) {
        Example e;
        e.gold = p.z_score;
        if (is_mono) {
            e.mono = encode_pair_mono(p, vocab, max_len);
        } else {
            std::tie(e.left, e.right) = encode_pair_siamese(p, vocab, max_len);
        }
        out.push_back(std::move(e));
    }
    return out;
}

Tensor example_forward(const QEModel& model, const Example& e, bool train_mode, Tape* tape,
                       std::mt19937& rng) {
    if (const auto* mono = std::get_if<MonoModel>(&model))
        return mono_forward(*mono, e.mono, train_mode, tape, rng);
    return siamese_forward(std::get<SiameseModel>(model), e.left, e.right, train_mode, tape, rng);
}

}  // namespace

void TrainingConfig::validate() const {
    if (batch_size < 1) throw InvalidConfig("training config: batch_size must be >= 1");
    if (warmup_fraction <= 0.0 || warmup_fraction >= 1.0)
        throw InvalidConfig("training config: warmup_fraction must be in (0, 1)");
    if (patience_rounds < 1) throw InvalidConfig("training config: patience_rounds must be >= 1");
    if (epochs < 1) throw InvalidConfig("training config: epochs must be >= 1");
    if (eval_fraction <= 0.0 || eval_fraction >= 1.0)
        throw InvalidConfig("training config: eval_fraction must be in (0, 1)");
    if (eval_every_steps < 1)
        throw InvalidConfig("training config: eval_every_steps must be >= 1");
    if (peak_lr <= 0.0 || lr_scale <= 0.0)
        throw InvalidConfig("training config: learning rate must be > 0");
}

bool should_stop(const TrainingHistory& history, std::size_t patience) {
    if (patience < 1) throw InvalidConfig("should_stop: patience must be >= 1");
    const auto& rounds = history.rounds;
    if (rounds.size() < patience + 1) return false;  // need a best recorded before the window
    const std::size_t start = rounds.size() - patience;
    double best_before = rounds[0].eval_loss;
    for (std::size_t i = 1; i < start; ++i)
        best_before = std::min(best_before, rounds[i].eval_loss);
    for (std::size_t i = start; i < rounds.size(); ++i) {
        if (rounds[i].eval_loss < best_before) return false;  // improvement resets the counter
        best_before = std::min(best_before, rounds[i].eval_loss);
    }
    return true;
}

double evaluate_loss(const QEModel& model, const std::vector<QEPair>& eval_set,
                     const Vocab& vocab) {
    if (eval_set.empty()) throw EmptyInput("evaluate_loss: empty evaluation set");
    std::vector<double> preds, golds;
    preds.reserve(eval_set.size());
    golds.reserve(eval_set.size());
    for (const auto& p : eval_set) {
        preds.push_back(predict(model, p, vocab));
        golds.push_back(p.z_score);
    }
    return mse_loss(preds, golds);
}

TrainResult train(QEModel& model, const std::vector<QEPair>& data, const Vocab& vocab,
                  const TrainingConfig& cfg, std::ostream* log) {
    cfg.validate();
    if (data.size() < 2 * cfg.batch_size)
        throw TooFewExamples("train: need at least two batches worth of data");

    auto [train_split, eval_split] = split_train_eval(data, cfg.eval_fraction, cfg.seed);
    const auto examples = encode_all(model, train_split, vocab);

    const std::size_t steps_per_epoch =
        (examples.size() + cfg.batch_size - 1) / cfg.batch_size;
    const auto total_steps = static_cast<std::int64_t>(cfg.epochs * steps_per_epoch);
    LrSchedule schedule;
    schedule.peak_lr = cfg.effective_lr();
    schedule.total_steps = total_steps;
    schedule.warmup_steps =
        std::llround(cfg.warmup_fraction * static_cast<double>(total_steps));

    auto params = model_parameters(model);
    AdamState adam = AdamState::init(params);
    std::mt19937_64 shuffle_rng(cfg.seed);
    std::mt19937 dropout_rng(static_cast<std::uint32_t>(cfg.seed + 1));

    TrainingHistory history;
    Checkpoint best_ckpt;
    std::int64_t step = 0;
    double window_loss_sum = 0.0;
    std::size_t window_loss_count = 0;
    bool stopped_early = false;

    auto run_eval_round = [&]() {
        EvalRound round;
        round.round = history.rounds.size() + 1;
        round.step = step;
        round.train_loss =
            window_loss_count > 0 ? window_loss_sum / static_cast<double>(window_loss_count) : 0.0;
        round.eval_loss = evaluate_loss(model, eval_split, vocab);
        window_loss_sum = 0.0;
        window_loss_count = 0;
        const bool is_best =
            history.rounds.empty() || round.eval_loss < history.best_eval_loss;
        if (is_best) {
            history.best_eval_loss = round.eval_loss;
            history.best_round = round.round;
            best_ckpt = to_checkpoint(model);
        }
        round.best = history.best_eval_loss;
        history.rounds.push_back(round);
        if (log)
            *log << round.round << '\t' << round.step << '\t' << round.train_loss << '\t'
                 << round.eval_loss << '\t' << round.best << '\n';
        return should_stop(history, cfg.patience_rounds);
    };

    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t epoch = 0; epoch < cfg.epochs && !stopped_early; ++epoch) {
        if (cfg.shuffle) std::shuffle(order.begin(), order.end(), shuffle_rng);
        for (std::size_t base = 0; base < order.size() && !stopped_early;
             base += cfg.batch_size) {
            const std::size_t batch_end = std::min(base + cfg.batch_size, order.size());
            Tape tape;
            Tensor loss_sum;
            for (std::size_t i = base; i < batch_end; ++i) {
                const Example& e = examples[order[i]];
                Tensor pred = example_forward(model, e, true, &tape, dropout_rng);
                Tensor diff = sub(&tape, pred, Tensor::scalar(e.gold));
                Tensor sq = mul(&tape, diff, diff);
                loss_sum = loss_sum.defined() ? add(&tape, loss_sum, sq) : sq;
            }
            Tensor loss = scale(&tape, loss_sum, 1.0 / static_cast<double>(batch_end - base));
            for (auto& p : params) p.zero_grad();
            tape.backward(loss);
            ++step;
            adam_step(params, adam, lr_at(schedule, step));
            history.step_train_loss.push_back(loss.item());
            window_loss_sum += loss.item();
            ++window_loss_count;
            if (step % static_cast<std::int64_t>(cfg.eval_every_steps) == 0)
                stopped_early = run_eval_round();
        }
        if (!stopped_early) stopped_early = run_eval_round();
    }
    history.stop_reason = stopped_early ? "early_stopped" : "epochs_exhausted";

    best_ckpt.metadata["seed"] = std::to_string(cfg.seed);
    best_ckpt.metadata["epochs_run"] = std::to_string(
        std::min<std::size_t>(cfg.epochs, (static_cast<std::size_t>(step) + steps_per_epoch - 1) /
                                              std::max<std::size_t>(steps_per_epoch, 1)));
    {
        std::ostringstream ss;
        ss.precision(17);
        ss << history.best_eval_loss;
        best_ckpt.metadata["best_eval_loss"] = ss.str();
    }
    best_ckpt.metadata["stop_reason"] = history.stop_reason;
    embed_vocab(best_ckpt, vocab);
    return TrainResult{std::move(best_ckpt), std::move(history)};
}

}  // namespace tqe
