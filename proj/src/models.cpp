#include "tqe/models.hpp"

#include <cmath>
#include <sstream>

namespace tqe {

namespace {

std::string fmt_real(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

void config_to_metadata(const EncoderConfig& c, std::map<std::string, std::string>& meta) {
    meta["config.vocab_size"] = std::to_string(c.vocab_size);
    meta["config.d_model"] = std::to_string(c.d_model);
    meta["config.n_layers"] = std::to_string(c.n_layers);
    meta["config.n_heads"] = std::to_string(c.n_heads);
    meta["config.d_ff"] = std::to_string(c.d_ff);
    meta["config.max_len"] = std::to_string(c.max_len);
    meta["config.dropout_rate"] = fmt_real(c.dropout_rate);
    meta["config.seed"] = std::to_string(c.seed);
}

EncoderConfig config_from_metadata(const Checkpoint& ckpt) {
    EncoderConfig c;
    c.vocab_size = std::stoul(ckpt.meta("config.vocab_size"));
    c.d_model = std::stoul(ckpt.meta("config.d_model"));
    c.n_layers = std::stoul(ckpt.meta("config.n_layers"));
    c.n_heads = std::stoul(ckpt.meta("config.n_heads"));
    c.d_ff = std::stoul(ckpt.meta("config.d_ff"));
    c.max_len = std::stoul(ckpt.meta("config.max_len"));
    c.dropout_rate = std::stod(ckpt.meta("config.dropout_rate"));
    c.seed = std::stoull(ckpt.meta("config.seed"));
    c.validate();
    return c;
}

void push_named(Checkpoint& ckpt, const std::string& prefix, const EncoderWeights& w) {
    for (const auto& [name, t] : w.named_parameters())
        ckpt.arrays.emplace_back(prefix + name, t.values());
}

void load_named(const Checkpoint& ckpt, const std::string& prefix, EncoderWeights& w) {
    for (auto& [name, t] : w.named_parameters()) {
        const auto& stored = ckpt.array(prefix + name);
        if (stored.size() != t.numel())
            throw CorruptCheckpoint("array '" + prefix + name + "' has wrong size");
        t.values() = stored;
    }
}

std::mt19937 head_rng(const EncoderConfig& c) {
    return std::mt19937(static_cast<std::uint32_t>(c.seed ^ 0x9e3779b97f4a7c15ull));
}

}  // namespace

std::string pooling_name(Pooling p) {
    switch (p) {
        case Pooling::Cls: return "cls";
        case Pooling::Mean: return "mean";
        case Pooling::Max: return "max";
    }
    throw InvalidConfig("unknown pooling strategy");
}

Pooling pooling_from_name(const std::string& name) {
    if (name == "cls") return Pooling::Cls;
    if (name == "mean") return Pooling::Mean;
    if (name == "max") return Pooling::Max;
    throw InvalidConfig("unknown pooling strategy '" + name + "'");
}

MonoModel make_mono(const EncoderConfig& config, Pooling pooling) {
    MonoModel m;
    m.config = config;
    m.weights = init_weights(config);
    m.pooling = pooling;
    auto rng = head_rng(config);
    const double bound = std::sqrt(6.0 / static_cast<double>(config.d_model + 1));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> hw(config.d_model);
    for (auto& v : hw) v = dist(rng);
    m.head_w = Tensor({config.d_model, 1}, std::move(hw), true);
    m.head_b = Tensor::zeros({1, 1}, true);
    return m;
}

SiameseModel make_siamese(const EncoderConfig& config, bool share_weights, Pooling pooling) {
    SiameseModel m;
    m.config = config;
    m.pooling = pooling;
    m.share_weights = share_weights;
    m.encoder_a = init_weights(config);
    if (share_weights) {
        m.encoder_b = m.encoder_a;  // shallow: same tensors
    } else {
        EncoderConfig cb = config;
        cb.seed = config.seed + 1;  // twin starts from its own initialization
        m.encoder_b = init_weights(cb);
    }
    return m;
}

std::vector<Tensor> model_parameters(const QEModel& model) {
    if (const auto* mono = std::get_if<MonoModel>(&model)) {
        auto params = mono->weights.parameters();
        params.push_back(mono->head_w);
        params.push_back(mono->head_b);
        return params;
    }
    const auto& siam = std::get<SiameseModel>(model);
    auto params = siam.encoder_a.parameters();
    if (!siam.share_weights) {
        auto pb = siam.encoder_b.parameters();
        params.insert(params.end(), pb.begin(), pb.end());
    }
    return params;
}

Tensor pool(Tape* tape, const Tensor& hidden, const std::vector<double>& mask, Pooling strategy) {
    if (hidden.rows() < 1) throw ShapeMismatch("pool: empty input");
    switch (strategy) {
        case Pooling::Cls: return take_row(tape, hidden, 0);
        case Pooling::Mean: return mean_rows_masked(tape, hidden, mask);
        case Pooling::Max: return max_rows_masked(tape, hidden, mask);
    }
    throw InvalidConfig("unknown pooling strategy");
}

Tensor mono_forward(const MonoModel& model, const TokenSequence& seq, bool train_mode, Tape* tape,
                    std::mt19937& rng) {
    Tensor hidden = encoder_forward(model.weights, model.config, seq, train_mode, tape, rng);
    Tensor pooled = pool(tape, hidden, seq.attention_mask, model.pooling);
    return add(tape, matmul(tape, pooled, model.head_w), model.head_b);
}

Tensor siamese_forward(const SiameseModel& model, const TokenSequence& a, const TokenSequence& b,
                       bool train_mode, Tape* tape, std::mt19937& rng) {
    const EncoderWeights& wb = model.share_weights ? model.encoder_a : model.encoder_b;
    Tensor ha = encoder_forward(model.encoder_a, model.config, a, train_mode, tape, rng);
    Tensor hb = encoder_forward(wb, model.config, b, train_mode, tape, rng);
    Tensor u = pool(tape, ha, a.attention_mask, model.pooling);
    Tensor v = pool(tape, hb, b.attention_mask, model.pooling);
    return cosine(tape, u, v);
}

double mono_predict(const MonoModel& model, const TokenSequence& seq) {
    std::mt19937 rng(0);
    return mono_forward(model, seq, false, nullptr, rng).item();
}

double siamese_predict(const SiameseModel& model, const TokenSequence& a, const TokenSequence& b) {
    std::mt19937 rng(0);
    return siamese_forward(model, a, b, false, nullptr, rng).item();
}

double predict(const QEModel& model, const QEPair& pair, const Vocab& vocab) {
    if (const auto* mono = std::get_if<MonoModel>(&model))
        return mono_predict(*mono, encode_pair_mono(pair, vocab, mono->config.max_len));
    const auto& siam = std::get<SiameseModel>(model);
    auto [a, b] = encode_pair_siamese(pair, vocab, siam.config.max_len);
    return siamese_predict(siam, a, b);
}

double mse_loss(const std::vector<double>& preds, const std::vector<double>& golds) {
    if (preds.size() != golds.size()) throw LengthMismatch("mse_loss: lengths differ");
    if (preds.empty()) throw EmptyInput("mse_loss: empty inputs");
    double s = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double d = preds[i] - golds[i];
        s += d * d;
    }
    return s / static_cast<double>(preds.size());
}

Checkpoint to_checkpoint(const QEModel& model) {
    Checkpoint ckpt;
    if (const auto* mono = std::get_if<MonoModel>(&model)) {
        ckpt.kind = "mono";
        config_to_metadata(mono->config, ckpt.metadata);
        ckpt.metadata["pooling"] = pooling_name(mono->pooling);
        push_named(ckpt, "", mono->weights);
        ckpt.arrays.emplace_back("head_w", mono->head_w.values());
        ckpt.arrays.emplace_back("head_b", mono->head_b.values());
    } else {
        const auto& siam = std::get<SiameseModel>(model);
        ckpt.kind = "siamese";
        config_to_metadata(siam.config, ckpt.metadata);
        ckpt.metadata["pooling"] = pooling_name(siam.pooling);
        ckpt.metadata["share_weights"] = siam.share_weights ? "1" : "0";
        push_named(ckpt, "a.", siam.encoder_a);
        if (!siam.share_weights) push_named(ckpt, "b.", siam.encoder_b);
    }
    return ckpt;
}

QEModel model_from_checkpoint(const Checkpoint& ckpt) {
    const EncoderConfig config = config_from_metadata(ckpt);
    if (ckpt.kind == "mono") {
        MonoModel m = make_mono(config, pooling_from_name(ckpt.meta("pooling")));
        load_named(ckpt, "", m.weights);
        m.head_w.values() = ckpt.array("head_w");
        m.head_b.values() = ckpt.array("head_b");
        if (m.head_w.values().size() != config.d_model || m.head_b.values().size() != 1)
            throw CorruptCheckpoint("regression head has wrong size");
        return m;
    }
    if (ckpt.kind == "siamese") {
        const bool share = ckpt.meta("share_weights") == "1";
        SiameseModel m = make_siamese(config, share, pooling_from_name(ckpt.meta("pooling")));
        load_named(ckpt, "a.", m.encoder_a);
        if (!share) load_named(ckpt, "b.", m.encoder_b);
        return m;
    }
    throw CorruptCheckpoint("unknown architecture kind '" + ckpt.kind + "'");
}

void embed_vocab(Checkpoint& ckpt, const Vocab& vocab) {
    std::string joined;
    for (std::size_t i = 4; i < vocab.id_to_token.size(); ++i) {
        if (i > 4) joined += ' ';
        joined += vocab.id_to_token[i];
    }
    ckpt.metadata["vocab"] = joined;
}

Vocab vocab_from_checkpoint(const Checkpoint& ckpt) {
    Vocab vocab;
    vocab.id_to_token = {"[CLS]", "[SEP]", "[PAD]", "[UNK]"};
    std::istringstream iss(ckpt.meta("vocab"));
    std::string tok;
    while (iss >> tok) {
        vocab.token_to_id[tok] = vocab.id_to_token.size();
        vocab.id_to_token.push_back(tok);
    }
    return vocab;
}

}  // namespace tqe
