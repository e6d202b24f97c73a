#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "tqe/models.hpp"

using namespace tqe;
namespace fs = std::filesystem;

namespace {

EncoderConfig toy_config(std::uint64_t seed = 5) {
    EncoderConfig cfg;
    cfg.vocab_size = 24;
    cfg.d_model = 16;
    cfg.n_layers = 2;
    cfg.n_heads = 2;
    cfg.d_ff = 32;
    cfg.max_len = 32;
    cfg.dropout_rate = 0.0;
    cfg.seed = seed;
    return cfg;
}

Vocab toy_vocab() {
    return build_vocab({"alpha beta gamma delta epsilon zeta eta theta"}, 24);
}

QEPair toy_pair() {
    QEPair p;
    p.index = 0;
    p.original = "alpha beta gamma";
    p.translation = "delta epsilon";
    p.z_score = 0.25;
    return p;
}

}  // namespace

TEST_CASE("pool strategies") {
    Tensor hidden({2, 2}, {1, 3, 3, 1});
    std::vector<double> full{1, 1};
    SUBCASE("hand-evaluated reductions") {
        CHECK(pool(nullptr, hidden, full, Pooling::Mean).values() == std::vector<double>{2, 2});
        CHECK(pool(nullptr, hidden, full, Pooling::Max).values() == std::vector<double>{3, 3});
        CHECK(pool(nullptr, hidden, full, Pooling::Cls).values() == std::vector<double>{1, 3});
    }
    SUBCASE("single row collapses all strategies") {
        Tensor one({1, 3}, {4, 5, 6});
        std::vector<double> m{1};
        for (auto s : {Pooling::Cls, Pooling::Mean, Pooling::Max})
            CHECK(pool(nullptr, one, m, s).values() == std::vector<double>{4, 5, 6});
    }
    SUBCASE("mask excludes rows") {
        Tensor h({2, 2}, {1, 1, 9, 9});
        std::vector<double> m{1, 0};
        CHECK(pool(nullptr, h, m, Pooling::Mean).values() == std::vector<double>{1, 1});
        CHECK(pool(nullptr, h, m, Pooling::Max).values() == std::vector<double>{1, 1});
    }
    SUBCASE("max dominates mean per dimension") {
        std::mt19937 rng(9);
        std::normal_distribution<double> dist;
        for (int t = 0; t < 20; ++t) {
            std::vector<double> v(12);
            for (auto& x : v) x = dist(rng);
            Tensor h({4, 3}, v);
            std::vector<double> m{1, 1, 1, 0};
            const auto mx = pool(nullptr, h, m, Pooling::Max).values();
            const auto mn = pool(nullptr, h, m, Pooling::Mean).values();
            for (std::size_t j = 0; j < 3; ++j) CHECK(mx[j] >= mn[j]);
        }
    }
    SUBCASE("all-masked rejected") {
        std::vector<double> none{0, 0};
        CHECK_THROWS_AS(pool(nullptr, hidden, none, Pooling::Mean), AllMasked);
        CHECK_THROWS_AS(pool(nullptr, hidden, none, Pooling::Max), AllMasked);
    }
}

TEST_CASE("mono_predict") {
    const Vocab vocab = toy_vocab();
    auto cfg = toy_config();
    cfg.vocab_size = vocab.size();
    MonoModel model = make_mono(cfg);
    const auto seq = encode_pair_mono(toy_pair(), vocab, cfg.max_len);

    SUBCASE("zero head returns the bias") {
        MonoModel m = model;
        m.head_w = Tensor::zeros({cfg.d_model, 1}, true);
        m.head_b = Tensor::scalar(-0.75, true);
        CHECK(mono_predict(m, seq) == doctest::Approx(-0.75));
    }
    SUBCASE("matches a step-by-step recomputation") {
        const double got = mono_predict(model, seq);
        const Tensor hidden = encoder_forward(model.weights, model.config, seq);
        double expected = model.head_b.item();
        for (std::size_t j = 0; j < cfg.d_model; ++j)
            expected += hidden(0, j) * model.head_w.values()[j];  // CLS row dot head
        CHECK(got == doctest::Approx(expected).epsilon(1e-10));
    }
    SUBCASE("repeat calls are bit-identical") {
        CHECK(mono_predict(model, seq) == mono_predict(model, seq));
    }
}

TEST_CASE("siamese_predict") {
    const Vocab vocab = toy_vocab();
    auto cfg = toy_config();
    cfg.vocab_size = vocab.size();

    SUBCASE("identical inputs with shared weights give 1") {
        SiameseModel m = make_siamese(cfg, true);
        QEPair p = toy_pair();
        p.translation = p.original;
        const auto [a, b] = encode_pair_siamese(p, vocab, cfg.max_len);
        CHECK(siamese_predict(m, a, b) == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("hand-evaluated cosine") {
        CHECK(cosine(nullptr, Tensor({1, 2}, {1, 0}), Tensor({1, 2}, {1, 1})).item() ==
              doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
        CHECK(cosine(nullptr, Tensor({1, 2}, {1, 0}), Tensor({1, 2}, {0, 1})).item() ==
              doctest::Approx(0.0));
        CHECK_THROWS_AS(cosine(nullptr, Tensor({1, 2}, {0, 0}), Tensor({1, 2}, {1, 1})),
                        ZeroVector);
    }
    SUBCASE("result stays within [-1, 1] and is swap-symmetric when shared") {
        SiameseModel m = make_siamese(cfg, true);
        std::mt19937 rng(4);
        std::uniform_int_distribution<std::size_t> tok(4, vocab.size() - 1);
        for (int t = 0; t < 10; ++t) {
            QEPair p;
            p.original.clear();
            p.translation.clear();
            for (int i = 0; i < 5; ++i) {
                p.original += vocab.id_to_token[tok(rng)] + " ";
                p.translation += vocab.id_to_token[tok(rng)] + " ";
            }
            const auto [a, b] = encode_pair_siamese(p, vocab, cfg.max_len);
            const double fwd = siamese_predict(m, a, b);
            CHECK(fwd >= -1.0);
            CHECK(fwd <= 1.0);
            CHECK(fwd == doctest::Approx(siamese_predict(m, b, a)).epsilon(1e-10));
        }
    }
    SUBCASE("cosine is invariant to common positive scaling") {
        std::mt19937 rng(12);
        std::normal_distribution<double> dist;
        for (int t = 0; t < 10; ++t) {
            std::vector<double> u(6), v(6);
            for (auto& x : u) x = dist(rng);
            for (auto& x : v) x = dist(rng);
            const double base = cosine(nullptr, Tensor({1, 6}, u), Tensor({1, 6}, v)).item();
            auto us = u;
            auto vs = v;
            for (auto& x : us) x *= 37.5;
            for (auto& x : vs) x *= 37.5;
            const double scaled =
                cosine(nullptr, Tensor({1, 6}, us), Tensor({1, 6}, vs)).item();
            CHECK(scaled == doctest::Approx(base).epsilon(1e-10));
        }
    }
}

TEST_CASE("mono gradient through head and encoder parameters") {
    const Vocab vocab = toy_vocab();
    EncoderConfig cfg;
    cfg.vocab_size = vocab.size();
    cfg.d_model = 8;
    cfg.n_layers = 2;
    cfg.n_heads = 2;
    cfg.d_ff = 16;
    cfg.max_len = 32;
    cfg.dropout_rate = 0.0;
    cfg.seed = 21;
    const MonoModel model = make_mono(cfg);
    const auto seq = encode_pair_mono(toy_pair(), vocab, cfg.max_len);

    auto loss_with_head = [&](Tape& tape, const Tensor& hw) {
        MonoModel m = model;
        m.weights = model.weights.deep_copy(false);
        m.head_w = hw;
        m.head_b = model.head_b.clone(false);
        std::mt19937 rng(0);
        Tensor pred = mono_forward(m, seq, false, &tape, rng);
        Tensor diff = sub(&tape, pred, Tensor::scalar(0.4));
        return mul(&tape, diff, diff);
    };
    CHECK(gradient_check(loss_with_head, model.head_w.clone()) < 1e-4);

    auto loss_with_emb = [&](Tape& tape, const Tensor& emb) {
        MonoModel m = model;
        m.weights = model.weights.deep_copy(false);
        m.weights.token_emb = emb;
        m.head_w = model.head_w.clone(false);
        m.head_b = model.head_b.clone(false);
        std::mt19937 rng(0);
        Tensor pred = mono_forward(m, seq, false, &tape, rng);
        Tensor diff = sub(&tape, pred, Tensor::scalar(0.4));
        return mul(&tape, diff, diff);
    };
    CHECK(gradient_check(loss_with_emb, model.weights.token_emb.clone()) < 1e-4);
}

TEST_CASE("mse_loss") {
    CHECK(mse_loss({1, 2, 3}, {1, 2, 3}) == 0.0);
    CHECK(mse_loss({0, 2}, {1, 1}) == doctest::Approx(1.0));
    CHECK(mse_loss({3}, {0}) == doctest::Approx(9.0));
    CHECK_THROWS_AS(mse_loss({1}, {1, 2}), LengthMismatch);
    CHECK_THROWS_AS(mse_loss({}, {}), EmptyInput);
    std::mt19937 rng(2);
    std::normal_distribution<double> dist;
    for (int t = 0; t < 10; ++t) {
        std::vector<double> a(5), b(5);
        for (auto& x : a) x = dist(rng);
        for (auto& x : b) x = dist(rng);
        CHECK(mse_loss(a, b) >= 0.0);
    }
}

TEST_CASE("model checkpoint round trip preserves predictions") {
    const Vocab vocab = toy_vocab();
    auto cfg = toy_config(17);
    cfg.vocab_size = vocab.size();
    const fs::path path = fs::temp_directory_path() / "tqe_model_roundtrip.qef";

    SUBCASE("mono") {
        QEModel model = make_mono(cfg);
        Checkpoint ckpt = to_checkpoint(model);
        embed_vocab(ckpt, vocab);
        save_checkpoint(ckpt, path.string());
        const Checkpoint back = load_checkpoint(path.string());
        QEModel restored = model_from_checkpoint(back);
        const Vocab rvocab = vocab_from_checkpoint(back);
        CHECK(rvocab.id_to_token == vocab.id_to_token);
        std::mt19937 rng(7);
        std::uniform_int_distribution<std::size_t> tok(4, vocab.size() - 1);
        for (int t = 0; t < 10; ++t) {
            QEPair p;
            for (int i = 0; i < 4; ++i) {
                p.original += vocab.id_to_token[tok(rng)] + " ";
                p.translation += vocab.id_to_token[tok(rng)] + " ";
            }
            CHECK(predict(model, p, vocab) == predict(restored, p, rvocab));
        }
    }
    SUBCASE("siamese with unshared twins") {
        QEModel model = make_siamese(cfg, false);
        Checkpoint ckpt = to_checkpoint(model);
        embed_vocab(ckpt, vocab);
        save_checkpoint(ckpt, path.string());
        QEModel restored = model_from_checkpoint(load_checkpoint(path.string()));
        const QEPair p = toy_pair();
        CHECK(predict(model, p, vocab) == predict(restored, p, vocab));
    }
    fs::remove(path);
}
