#include "tqe/encoder.hpp"

#include <cmath>

namespace tqe {

namespace {

constexpr double kMaskPenalty = -1e9;
constexpr double kLnEps = 1e-12;

Tensor xavier_uniform(std::mt19937& rng, std::size_t fan_in, std::size_t fan_out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> v(fan_in * fan_out);
    for (auto& x : v) x = dist(rng);
    return Tensor({fan_in, fan_out}, std::move(v), true);
}

Tensor normal_init(std::mt19937& rng, std::size_t rows, std::size_t cols, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    std::vector<double> v(rows * cols);
    for (auto& x : v) x = dist(rng);
    return Tensor({rows, cols}, std::move(v), true);
}

Tensor const_row(std::size_t n, double value) {
    return Tensor({1, n}, std::vector<double>(n, value), true);
}

}  // namespace

void EncoderConfig::validate() const {
    if (vocab_size < 1 || d_model < 1 || n_heads < 1 || d_ff < 1 || max_len < 1)
        throw InvalidConfig("encoder config: sizes must be >= 1");
    if (d_model % n_heads != 0)
        throw InvalidConfig("encoder config: d_model must be divisible by n_heads");
    if (max_len > kMaxSequenceLength)
        throw InvalidConfig("encoder config: max_len above the 512-token cap");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw InvalidConfig("encoder config: dropout_rate must be in [0, 1)");
}

std::vector<Tensor> EncoderWeights::parameters() const {
    std::vector<Tensor> out;
    for (auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
}

std::vector<std::pair<std::string, Tensor>> EncoderWeights::named_parameters() const {
    std::vector<std::pair<std::string, Tensor>> out;
    out.emplace_back("token_emb", token_emb);
    out.emplace_back("position_emb", position_emb);
    out.emplace_back("segment_emb", segment_emb);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& lw = layers[l];
        const std::string p = "layer" + std::to_string(l) + ".";
        out.emplace_back(p + "wq", lw.wq);
        out.emplace_back(p + "bq", lw.bq);
        out.emplace_back(p + "wk", lw.wk);
        out.emplace_back(p + "bk", lw.bk);
        out.emplace_back(p + "wv", lw.wv);
        out.emplace_back(p + "bv", lw.bv);
        out.emplace_back(p + "wo", lw.wo);
        out.emplace_back(p + "bo", lw.bo);
        out.emplace_back(p + "ln1_gamma", lw.ln1_gamma);
        out.emplace_back(p + "ln1_beta", lw.ln1_beta);
        out.emplace_back(p + "ln2_gamma", lw.ln2_gamma);
        out.emplace_back(p + "ln2_beta", lw.ln2_beta);
        out.emplace_back(p + "ff_w1", lw.ff_w1);
        out.emplace_back(p + "ff_b1", lw.ff_b1);
        out.emplace_back(p + "ff_w2", lw.ff_w2);
        out.emplace_back(p + "ff_b2", lw.ff_b2);
    }
    out.emplace_back("final_ln_gamma", final_ln_gamma);
    out.emplace_back("final_ln_beta", final_ln_beta);
    return out;
}

EncoderWeights EncoderWeights::deep_copy(bool requires_grad) const {
    EncoderWeights w;
    w.token_emb = token_emb.clone(requires_grad);
    w.position_emb = position_emb.clone(requires_grad);
    w.segment_emb = segment_emb.clone(requires_grad);
    for (const auto& lw : layers) {
        LayerWeights c;
        c.wq = lw.wq.clone(requires_grad);
        c.bq = lw.bq.clone(requires_grad);
        c.wk = lw.wk.clone(requires_grad);
        c.bk = lw.bk.clone(requires_grad);
        c.wv = lw.wv.clone(requires_grad);
        c.bv = lw.bv.clone(requires_grad);
        c.wo = lw.wo.clone(requires_grad);
        c.bo = lw.bo.clone(requires_grad);
        c.ln1_gamma = lw.ln1_gamma.clone(requires_grad);
        c.ln1_beta = lw.ln1_beta.clone(requires_grad);
        c.ln2_gamma = lw.ln2_gamma.clone(requires_grad);
        c.ln2_beta = lw.ln2_beta.clone(requires_grad);
        c.ff_w1 = lw.ff_w1.clone(requires_grad);
        c.ff_b1 = lw.ff_b1.clone(requires_grad);
        c.ff_w2 = lw.ff_w2.clone(requires_grad);
        c.ff_b2 = lw.ff_b2.clone(requires_grad);
        w.layers.push_back(std::move(c));
    }
    w.final_ln_gamma = final_ln_gamma.clone(requires_grad);
    w.final_ln_beta = final_ln_beta.clone(requires_grad);
    return w;
}

EncoderWeights init_weights(const EncoderConfig& config) {
    config.validate();
    std::mt19937 rng(static_cast<std::uint32_t>(config.seed));
    const std::size_t d = config.d_model;
    EncoderWeights w;
    w.token_emb = normal_init(rng, config.vocab_size, d, 0.02);
    w.position_emb = normal_init(rng, config.max_len, d, 0.02);
    w.segment_emb = normal_init(rng, 2, d, 0.02);
    for (std::size_t l = 0; l < config.n_layers; ++l) {
        LayerWeights lw;
        lw.wq = xavier_uniform(rng, d, d);
        lw.bq = Tensor::zeros({1, d}, true);
        lw.wk = xavier_uniform(rng, d, d);
        lw.bk = Tensor::zeros({1, d}, true);
        lw.wv = xavier_uniform(rng, d, d);
        lw.bv = Tensor::zeros({1, d}, true);
        lw.wo = xavier_uniform(rng, d, d);
        lw.bo = Tensor::zeros({1, d}, true);
        lw.ln1_gamma = const_row(d, 1.0);
        lw.ln1_beta = Tensor::zeros({1, d}, true);
        lw.ln2_gamma = const_row(d, 1.0);
        lw.ln2_beta = Tensor::zeros({1, d}, true);
        lw.ff_w1 = xavier_uniform(rng, d, config.d_ff);
        lw.ff_b1 = Tensor::zeros({1, config.d_ff}, true);
        lw.ff_w2 = xavier_uniform(rng, config.d_ff, d);
        lw.ff_b2 = Tensor::zeros({1, d}, true);
        w.layers.push_back(std::move(lw));
    }
    w.final_ln_gamma = const_row(d, 1.0);
    w.final_ln_beta = Tensor::zeros({1, d}, true);
    return w;
}

Tensor encoder_forward(const EncoderWeights& weights, const EncoderConfig& config,
                       const TokenSequence& seq, bool train_mode, Tape* tape, std::mt19937& rng) {
    const std::size_t T = seq.length();
    if (T == 0) throw ShapeMismatch("encoder_forward: empty sequence");
    if (T > config.max_len) throw SequenceTooLong("sequence length exceeds max_len");
    for (std::size_t id : seq.token_ids)
        if (id >= config.vocab_size) throw IdOutOfRange("token id outside vocabulary");

    std::vector<std::size_t> positions(T);
    for (std::size_t i = 0; i < T; ++i) positions[i] = i;

    Tensor x = add(tape, embedding_rows(tape, weights.token_emb, seq.token_ids),
                   embedding_rows(tape, weights.position_emb, positions));
    x = add(tape, x, embedding_rows(tape, weights.segment_emb, seq.segment_ids));

    // Additive bias over key positions: pads are pushed out of every softmax.
    Tensor key_bias = [&] {
        std::vector<double> b(T, 0.0);
        for (std::size_t i = 0; i < T; ++i)
            if (seq.attention_mask[i] == 0.0) b[i] = kMaskPenalty;
        return Tensor({1, T}, std::move(b));
    }();

    const std::size_t d = config.d_model;
    const std::size_t dh = d / config.n_heads;
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
    const bool use_dropout = train_mode && config.dropout_rate > 0.0;

    for (const auto& lw : weights.layers) {
        Tensor h = layer_norm(tape, x, lw.ln1_gamma, lw.ln1_beta, kLnEps);
        Tensor q = add_row(tape, matmul(tape, h, lw.wq), lw.bq);
        Tensor k = add_row(tape, matmul(tape, h, lw.wk), lw.bk);
        Tensor v = add_row(tape, matmul(tape, h, lw.wv), lw.bv);
        std::vector<Tensor> heads;
        for (std::size_t hd = 0; hd < config.n_heads; ++hd) {
            Tensor qh = slice_cols(tape, q, hd * dh, dh);
            Tensor kh = slice_cols(tape, k, hd * dh, dh);
            Tensor vh = slice_cols(tape, v, hd * dh, dh);
            Tensor logits = scale(tape, matmul(tape, qh, transpose(tape, kh)), inv_sqrt_dh);
            Tensor att = softmax_rows(tape, add_row(tape, logits, key_bias));
            heads.push_back(matmul(tape, att, vh));
        }
        Tensor ctx = config.n_heads == 1 ? heads[0] : concat_cols(tape, heads);
        Tensor att_out = add_row(tape, matmul(tape, ctx, lw.wo), lw.bo);
        if (use_dropout) att_out = dropout(tape, att_out, config.dropout_rate, rng);
        x = add(tape, x, att_out);

        Tensor h2 = layer_norm(tape, x, lw.ln2_gamma, lw.ln2_beta, kLnEps);
        Tensor ff = add_row(tape, matmul(tape, gelu(tape, add_row(tape, matmul(tape, h2, lw.ff_w1), lw.ff_b1)),
                                          lw.ff_w2),
                            lw.ff_b2);
        if (use_dropout) ff = dropout(tape, ff, config.dropout_rate, rng);
        x = add(tape, x, ff);
    }
    return layer_norm(tape, x, weights.final_ln_gamma, weights.final_ln_beta, kLnEps);
}

Tensor encoder_forward(const EncoderWeights& weights, const EncoderConfig& config,
                       const TokenSequence& seq) {
    std::mt19937 rng(0);
    return encoder_forward(weights, config, seq, false, nullptr, rng);
}

}  // namespace tqe
