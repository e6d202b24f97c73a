#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tqe/data.hpp"
#include "tqe/ops.hpp"
#include "tqe/tensor.hpp"

namespace tqe {

struct EncoderConfig {
    std::size_t vocab_size = 0;
    std::size_t d_model = 32;
    std::size_t n_layers = 2;
    std::size_t n_heads = 2;
    std::size_t d_ff = 64;
    std::size_t max_len = 128;
    double dropout_rate = 0.1;
    std::uint64_t seed = 42;

    void validate() const;
};

struct LayerWeights {
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor ln1_gamma, ln1_beta, ln2_gamma, ln2_beta;
    Tensor ff_w1, ff_b1, ff_w2, ff_b2;
};

struct EncoderWeights {
    Tensor token_emb;     // [vocab_size × d_model]
    Tensor position_emb;  // [max_len × d_model]
    Tensor segment_emb;   // [2 × d_model]
    std::vector<LayerWeights> layers;
    Tensor final_ln_gamma, final_ln_beta;

    std::vector<Tensor> parameters() const;
    std::vector<std::pair<std::string, Tensor>> named_parameters() const;
    EncoderWeights deep_copy(bool requires_grad) const;
};

// Xavier-uniform linear weights, zero biases, N(0, 0.02) embeddings,
// unit layer-norm gains. Deterministic per config.seed.
EncoderWeights init_weights(const EncoderConfig& config);

// Pre-norm transformer encoder over one sequence; returns [len × d_model].
// Padded key positions get -1e9 added to attention logits. Dropout only in
// train mode, drawing from `rng`.
Tensor encoder_forward(const EncoderWeights& weights, const EncoderConfig& config,
                       const TokenSequence& seq, bool train_mode, Tape* tape, std::mt19937& rng);

// Eval-mode convenience: no tape, no dropout.
Tensor encoder_forward(const EncoderWeights& weights, const EncoderConfig& config,
                       const TokenSequence& seq);

}  // namespace tqe
