#pragma once

#include <variant>

#include "tqe/checkpoint.hpp"
#include "tqe/encoder.hpp"

namespace tqe {

enum class Pooling { Cls, Mean, Max };

std::string pooling_name(Pooling p);
Pooling pooling_from_name(const std::string& name);

struct Prediction {
    std::int64_t index = 0;
    double score = 0.0;
};

// Joint-sequence architecture: one encoder over [CLS] src [SEP] tgt [SEP],
// pooled vector into a linear regression head.
struct MonoModel {
    EncoderConfig config;
    EncoderWeights weights;
    Pooling pooling = Pooling::Cls;
    Tensor head_w;  // [d_model × 1]
    Tensor head_b;  // [1 × 1]
};

// Twin-encoder architecture scored by cosine similarity of pooled outputs.
struct SiameseModel {
    EncoderConfig config;
    EncoderWeights encoder_a;
    EncoderWeights encoder_b;  // aliases encoder_a's tensors when share_weights
    Pooling pooling = Pooling::Mean;
    bool share_weights = false;
};

using QEModel = std::variant<MonoModel, SiameseModel>;

MonoModel make_mono(const EncoderConfig& config, Pooling pooling = Pooling::Cls);
SiameseModel make_siamese(const EncoderConfig& config, bool share_weights = false,
                          Pooling pooling = Pooling::Mean);

std::vector<Tensor> model_parameters(const QEModel& model);

Tensor pool(Tape* tape, const Tensor& hidden, const std::vector<double>& mask, Pooling strategy);

// Differentiable forward passes (scalar outputs).
Tensor mono_forward(const MonoModel& model, const TokenSequence& seq, bool train_mode, Tape* tape,
                    std::mt19937& rng);
Tensor siamese_forward(const SiameseModel& model, const TokenSequence& a, const TokenSequence& b,
                       bool train_mode, Tape* tape, std::mt19937& rng);

// Eval-mode predictions.
double mono_predict(const MonoModel& model, const TokenSequence& seq);
double siamese_predict(const SiameseModel& model, const TokenSequence& a, const TokenSequence& b);
double predict(const QEModel& model, const QEPair& pair, const Vocab& vocab);

double mse_loss(const std::vector<double>& preds, const std::vector<double>& golds);

Checkpoint to_checkpoint(const QEModel& model);
QEModel model_from_checkpoint(const Checkpoint& ckpt);

// The vocabulary travels with the model so prediction needs only the
// checkpoint. Tokens are whitespace-free, so a space-joined list is exact.
void embed_vocab(Checkpoint& ckpt, const Vocab& vocab);
Vocab vocab_from_checkpoint(const Checkpoint& ckpt);

}  // namespace tqe
