// Command-line front end: train / predict / evaluate / ensemble / augment /
// selftest. Configuration comes from an INI-style file; flags override it.
// Exit codes: 0 success, 2 config/usage, 3 data, 4 runtime.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "tqe/eval.hpp"
#include "tqe/strategies.hpp"
#include "tqe/trainer.hpp"

namespace fs = std::filesystem;
using namespace tqe;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;

using IniFile = std::map<std::string, std::map<std::string, std::string>>;

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

IniFile parse_ini(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("cannot open config file " + path);
    IniFile ini;
    std::string line, section;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw InvalidConfig("config line without '=': " + t);
        ini[section][trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return ini;
}

std::string ini_get(const IniFile& ini, const std::string& section, const std::string& key,
                    const std::string& fallback) {
    const auto s = ini.find(section);
    if (s == ini.end()) return fallback;
    const auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
}

struct RunConfig {
    std::string architecture = "mono";
    std::optional<Pooling> pooling_override;
    bool share_weights = false;
    std::size_t vocab_size = 2000;
    EncoderConfig encoder;
    TrainingConfig training;
    ColumnMap columns;
    std::string train_path, dev_path, test_path, parallel_path;
    std::string output_dir = ".";
    AugmentPolicy augment;
    EnsembleSpec ensemble;
};

RunConfig load_run_config(const std::string& path) {
    const IniFile ini = parse_ini(path);
    RunConfig cfg;
    cfg.architecture = ini_get(ini, "run", "architecture", cfg.architecture);
    if (cfg.architecture != "mono" && cfg.architecture != "siamese")
        throw InvalidConfig("architecture must be mono or siamese");
    const std::string pooling = ini_get(ini, "run", "pooling", "");
    if (!pooling.empty()) cfg.pooling_override = pooling_from_name(pooling);
    cfg.output_dir = ini_get(ini, "run", "output", cfg.output_dir);

    auto num = [&](const char* sec, const char* key, double dflt) {
        const std::string v = ini_get(ini, sec, key, "");
        return v.empty() ? dflt : std::stod(v);
    };
    cfg.vocab_size = static_cast<std::size_t>(num("encoder", "vocab_size", 2000));
    cfg.encoder.d_model = static_cast<std::size_t>(num("encoder", "d_model", 32));
    cfg.encoder.n_layers = static_cast<std::size_t>(num("encoder", "n_layers", 2));
    cfg.encoder.n_heads = static_cast<std::size_t>(num("encoder", "n_heads", 2));
    cfg.encoder.d_ff = static_cast<std::size_t>(num("encoder", "d_ff", 64));
    cfg.encoder.max_len = static_cast<std::size_t>(num("encoder", "max_len", 128));
    cfg.encoder.dropout_rate = num("encoder", "dropout", 0.1);
    cfg.encoder.seed = static_cast<std::uint64_t>(num("encoder", "seed", 42));
    cfg.share_weights = num("encoder", "share_weights", 0) != 0;

    cfg.training.batch_size = static_cast<std::size_t>(num("training", "batch_size", 8));
    cfg.training.peak_lr = num("training", "peak_lr", 2e-5);
    cfg.training.lr_scale = num("training", "lr_scale", 1.0);
    cfg.training.warmup_fraction = num("training", "warmup_fraction", 0.1);
    cfg.training.epochs = static_cast<std::size_t>(num("training", "epochs", 3));
    cfg.training.eval_fraction = num("training", "eval_fraction", 0.2);
    cfg.training.patience_rounds = static_cast<std::size_t>(num("training", "patience", 10));
    cfg.training.eval_every_steps = static_cast<std::size_t>(num("training", "eval_every", 100));
    cfg.training.seed = static_cast<std::uint64_t>(num("training", "seed", 42));
    cfg.training.shuffle = num("training", "shuffle", 1) != 0;

    cfg.columns.index = static_cast<int>(num("columns", "index", 0));
    cfg.columns.original = static_cast<int>(num("columns", "original", 1));
    cfg.columns.translation = static_cast<int>(num("columns", "translation", 2));
    cfg.columns.score = static_cast<int>(num("columns", "score", 3));
    cfg.columns.z_score = static_cast<int>(num("columns", "z_score", 4));

    cfg.train_path = ini_get(ini, "paths", "train", "");
    cfg.dev_path = ini_get(ini, "paths", "dev", "");
    cfg.test_path = ini_get(ini, "paths", "test", "");
    cfg.parallel_path = ini_get(ini, "paths", "parallel", "");

    cfg.augment.n_pairs = static_cast<std::size_t>(num("augment", "n_pairs", 2000));
    const std::string label = ini_get(ini, "augment", "label", "max");
    if (label != "max") cfg.augment.fixed_label = std::stod(label);
    cfg.augment.seed = static_cast<std::uint64_t>(num("augment", "seed", 777));

    cfg.ensemble.weight_a = num("ensemble", "weight_a", 0.8);
    cfg.ensemble.weight_b = 1.0 - cfg.ensemble.weight_a;
    return cfg;
}

// Columns past the header width are treated as absent; prediction inputs
// often carry no gold columns.
ColumnMap clamp_columns(ColumnMap map, const std::string& path) {
    std::ifstream in(path);
    std::string header;
    if (!in || !std::getline(in, header)) return map;
    const long width = 1 + static_cast<long>(std::count(header.begin(), header.end(), '\t'));
    if (map.score >= width) map.score = -1;
    if (map.z_score >= width) map.z_score = -1;
    return map;
}

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              std::optional<std::string> output) {
    RunConfig cfg;
    try {
        cfg = load_run_config(config_path);
        if (seed) {
            cfg.training.seed = *seed;
            cfg.encoder.seed = *seed;
        }
        if (output) cfg.output_dir = *output;
        if (cfg.train_path.empty()) throw InvalidConfig("no [paths] train entry in config");
        cfg.training.validate();
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    std::vector<QEPair> data;
    Vocab vocab;
    try {
        data = load_qe_dataset(cfg.train_path, clamp_columns(cfg.columns, cfg.train_path));
        if (data.empty()) throw EmptyFile("training file has no data rows");
        std::vector<std::string> texts;
        for (const auto& p : data) {
            texts.push_back(p.original);
            texts.push_back(p.translation);
        }
        vocab = build_vocab(texts, cfg.vocab_size);
        std::cerr << "loaded " << data.size() << " rows, vocabulary " << vocab.size() << "\n";
    } catch (const Error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    }

    try {
        cfg.encoder.vocab_size = vocab.size();
        QEModel model;
        if (cfg.architecture == "mono")
            model = make_mono(cfg.encoder, cfg.pooling_override.value_or(Pooling::Cls));
        else
            model = make_siamese(cfg.encoder, cfg.share_weights,
                                 cfg.pooling_override.value_or(Pooling::Mean));

        fs::create_directories(cfg.output_dir);
        std::ofstream log(fs::path(cfg.output_dir) / "training.log");
        TrainResult result = train(model, data, vocab, cfg.training, &log);
        const std::string ckpt_path = (fs::path(cfg.output_dir) / "model.qef").string();
        save_checkpoint(result.best, ckpt_path);
        std::cerr << "stopped: " << result.history.stop_reason
                  << ", best eval loss " << result.history.best_eval_loss << " at round "
                  << result.history.best_round << "\n";
        std::cout << "checkpoint=" << ckpt_path << "\n";
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "training failure: " << e.what() << "\n";
        return kExitRuntime;
    }
}

int cmd_predict(const std::string& ckpt_path, const std::string& input,
                const std::string& output) {
    QEModel model;
    Vocab vocab;
    try {
        const Checkpoint ckpt = load_checkpoint(ckpt_path);
        model = model_from_checkpoint(ckpt);
        vocab = vocab_from_checkpoint(ckpt);
    } catch (const Error& e) {
        std::cerr << "checkpoint error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        const auto pairs = load_qe_dataset(input, clamp_columns(ColumnMap{}, input));
        std::vector<Prediction> preds;
        preds.reserve(pairs.size());
        for (const auto& p : pairs) preds.push_back({p.index, predict(model, p, vocab)});
        write_predictions(preds, output);
        std::cerr << "wrote " << preds.size() << " predictions\n";
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    }
}

int cmd_evaluate(const std::string& pred_path, const std::string& gold_path) {
    try {
        const auto preds = read_predictions(pred_path);
        const auto gold = load_qe_dataset(gold_path, clamp_columns(ColumnMap{}, gold_path));
        if (preds.size() != gold.size())
            throw IndexMismatch("prediction and gold row counts differ");
        std::vector<double> p(preds.size()), g(preds.size());
        for (std::size_t i = 0; i < preds.size(); ++i) {
            if (preds[i].index != gold[i].index)
                throw IndexMismatch("index mismatch at row " + std::to_string(i));
            p[i] = preds[i].score;
            g[i] = gold[i].z_score;
        }
        const EvalReport report = evaluate(p, g);
        std::cout << "pearson_r=" << report.pearson_r << "\n"
                  << "rmse=" << report.rmse << "\n"
                  << "mae=" << report.mae << "\n"
                  << "n=" << report.n << "\n";
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    }
}

int cmd_ensemble(const std::string& a_path, const std::string& b_path, double weight_a,
                 const std::string& output) {
    try {
        EnsembleSpec spec{weight_a, 1.0 - weight_a};
        const auto blended =
            ensemble_predict(read_predictions(a_path), read_predictions(b_path), spec);
        write_predictions(blended, output);
        std::cerr << "blended " << blended.size() << " predictions at " << spec.weight_a << ":"
                  << spec.weight_b << "\n";
        return kExitOk;
    } catch (const InvalidConfig& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    }
}

int cmd_augment(const std::string& train_path, const std::string& parallel_path, std::size_t n,
                const std::string& label, std::uint64_t seed, const std::string& output) {
    try {
        AugmentPolicy policy;
        policy.n_pairs = n;
        policy.seed = seed;
        if (label != "max") policy.fixed_label = std::stod(label);
        const auto train = load_qe_dataset(train_path, clamp_columns(ColumnMap{}, train_path));
        const auto corpus = load_parallel_corpus(parallel_path);
        const auto augmented = augment_dataset(train, corpus.pairs, policy);
        save_qe_dataset(augmented, output);
        std::cerr << "augmented " << train.size() << " -> " << augmented.size() << " rows\n";
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    }
}

int cmd_selftest() {
    int failures = 0;
    auto report = [&](const char* name, bool ok) {
        std::cout << (ok ? "PASS" : "FAIL") << " " << name << "\n";
        if (!ok) ++failures;
    };
    try {
        std::mt19937 rng(99);
        std::normal_distribution<double> dist(0.0, 1.0);
        auto random_tensor = [&](std::size_t m, std::size_t n) {
            std::vector<double> v(m * n);
            for (auto& x : v) x = dist(rng);
            return Tensor({m, n}, std::move(v));
        };

        Tensor other = random_tensor(4, 3);
        auto matmul_map = [&](Tape& t, const Tensor& x) {
            return sum_all(&t, matmul(&t, x, other));
        };
        report("gradient: matmul", gradient_check(matmul_map, random_tensor(3, 4)) < 1e-4);

        Tensor gamma({1, 4}, {1.0, 1.1, 0.9, 1.0});
        Tensor beta({1, 4}, {0.0, 0.1, -0.1, 0.2});
        auto ln_map = [&](Tape& t, const Tensor& x) {
            return sum_all(&t, mul(&t, layer_norm(&t, x, gamma, beta, 1e-12), x));
        };
        report("gradient: layer_norm", gradient_check(ln_map, random_tensor(3, 4)) < 1e-4);

        auto sm_map = [&](Tape& t, const Tensor& x) {
            return sum_all(&t, mul(&t, softmax_rows(&t, x), x));
        };
        report("gradient: softmax", gradient_check(sm_map, random_tensor(3, 4)) < 1e-4);

        auto gelu_map = [&](Tape& t, const Tensor& x) { return sum_all(&t, gelu(&t, x)); };
        report("gradient: gelu", gradient_check(gelu_map, random_tensor(3, 4)) < 1e-4);

        // both architectures end to end at a toy configuration
        EncoderConfig cfg;
        cfg.vocab_size = 16;
        cfg.d_model = 8;
        cfg.n_layers = 2;
        cfg.n_heads = 2;
        cfg.d_ff = 16;
        cfg.max_len = 16;
        cfg.dropout_rate = 0.0;
        MonoModel mono = make_mono(cfg);
        TokenSequence seq;
        seq.token_ids = {0, 5, 6, 1, 7, 8, 1};
        seq.segment_ids = {0, 0, 0, 0, 1, 1, 1};
        seq.attention_mask.assign(7, 1.0);
        auto mono_map = [&](Tape& t, const Tensor& emb) {
            MonoModel m = mono;
            m.weights.token_emb = emb;
            std::mt19937 r(0);
            Tensor pred = mono_forward(m, seq, false, &t, r);
            return mul(&t, pred, pred);
        };
        report("gradient: mono architecture",
               gradient_check(mono_map, mono.weights.token_emb.clone()) < 1e-4);

        SiameseModel siam = make_siamese(cfg);
        TokenSequence sa, sb;
        sa.token_ids = {0, 5, 6, 1};
        sa.segment_ids = {0, 0, 0, 0};
        sa.attention_mask.assign(4, 1.0);
        sb.token_ids = {0, 7, 8, 1};
        sb.segment_ids = {0, 0, 0, 0};
        sb.attention_mask.assign(4, 1.0);
        auto siam_map = [&](Tape& t, const Tensor& emb) {
            SiameseModel m = siam;
            m.encoder_a.token_emb = emb;
            std::mt19937 r(0);
            Tensor pred = siamese_forward(m, sa, sb, false, &t, r);
            return mul(&t, pred, pred);
        };
        report("gradient: siamese architecture",
               gradient_check(siam_map, siam.encoder_a.token_emb.clone()) < 1e-4);

        // Pearson against a direct-formula oracle
        bool pearson_ok = true;
        for (int trial = 0; trial < 50 && pearson_ok; ++trial) {
            std::uniform_int_distribution<std::size_t> len_dist(2, 200);
            const std::size_t n = len_dist(rng);
            std::vector<double> x(n), y(n);
            for (std::size_t i = 0; i < n; ++i) {
                x[i] = dist(rng);
                y[i] = dist(rng);
            }
            double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
            for (std::size_t i = 0; i < n; ++i) {
                sx += x[i];
                sy += y[i];
                sxx += x[i] * x[i];
                syy += y[i] * y[i];
                sxy += x[i] * y[i];
            }
            const double nn = static_cast<double>(n);
            const double oracle = (nn * sxy - sx * sy) /
                                  std::sqrt((nn * sxx - sx * sx) * (nn * syy - sy * sy));
            try {
                pearson_ok = std::abs(pearson(x, y) - oracle) < 1e-10;
            } catch (const DegenerateVariance&) {
            }
        }
        report("pearson oracle", pearson_ok);
    } catch (const std::exception& e) {
        std::cerr << "selftest failure: " << e.what() << "\n";
        return kExitRuntime;
    }
    return failures == 0 ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sentence-level translation quality estimation toolkit"};
    app.require_subcommand(1);

    std::string config_path, ckpt_path, input_path, output_path, gold_path;
    std::string a_path, b_path, train_path, parallel_path, label = "max";
    double weight_a = 0.8;
    std::size_t n_pairs = 2000;
    std::uint64_t aug_seed = 777;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> output_override;
    std::uint64_t seed_flag = 0;
    std::string output_flag;

    auto* train_cmd = app.add_subcommand("train", "train a model from a config file");
    train_cmd->add_option("--config", config_path, "run configuration file")->required();
    auto* seed_opt = train_cmd->add_option("--seed", seed_flag, "override seeds");
    auto* out_opt = train_cmd->add_option("--output", output_flag, "override output directory");

    auto* predict_cmd = app.add_subcommand("predict", "predict scores for a QE TSV");
    predict_cmd->add_option("--checkpoint", ckpt_path)->required();
    predict_cmd->add_option("--input", input_path)->required();
    predict_cmd->add_option("--output", output_path)->required();

    auto* eval_cmd = app.add_subcommand("evaluate", "score predictions against gold z-scores");
    eval_cmd->add_option("--predictions", input_path)->required();
    eval_cmd->add_option("--gold", gold_path)->required();

    auto* ens_cmd = app.add_subcommand("ensemble", "weighted average of two prediction files");
    ens_cmd->add_option("--a", a_path)->required();
    ens_cmd->add_option("--b", b_path)->required();
    ens_cmd->add_option("--weight-a", weight_a, "weight of the first file (default 0.8)");
    ens_cmd->add_option("--output", output_path)->required();

    auto* aug_cmd = app.add_subcommand("augment", "append sampled parallel pairs to a train TSV");
    aug_cmd->add_option("--train", train_path)->required();
    aug_cmd->add_option("--parallel", parallel_path)->required();
    aug_cmd->add_option("--n", n_pairs, "pairs to add (default 2000)");
    aug_cmd->add_option("--label", label, "'max' or a fixed z-score");
    aug_cmd->add_option("--seed", aug_seed);
    aug_cmd->add_option("--output", output_path)->required();

    app.add_subcommand("selftest", "gradient and metric self-checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    if (*seed_opt) seed_override = seed_flag;
    if (*out_opt) output_override = output_flag;

    if (train_cmd->parsed()) return cmd_train(config_path, seed_override, output_override);
    if (predict_cmd->parsed()) return cmd_predict(ckpt_path, input_path, output_path);
    if (eval_cmd->parsed()) return cmd_evaluate(input_path, gold_path);
    if (ens_cmd->parsed()) return cmd_ensemble(a_path, b_path, weight_a, output_path);
    if (aug_cmd->parsed())
        return cmd_augment(train_path, parallel_path, n_pairs, label, aug_seed, output_path);
    return cmd_selftest();
}
