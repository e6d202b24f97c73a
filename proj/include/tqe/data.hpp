#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "tqe/errors.hpp"

namespace tqe {

constexpr std::size_t kMaxSequenceLength = 512;

struct QEPair {
    std::int64_t index = 0;
    std::string original;
    std::string translation;
    double da_score = 0.0;
    double z_score = 0.0;
};

struct ParallelPair {
    std::string source;
    std::string target;
};

// Shared vocabulary over both sides of a pair. Specials occupy ids 0..3.
struct Vocab {
    static constexpr std::size_t kCls = 0;
    static constexpr std::size_t kSep = 1;
    static constexpr std::size_t kPad = 2;
    static constexpr std::size_t kUnk = 3;

    std::unordered_map<std::string, std::size_t> token_to_id;
    std::vector<std::string> id_to_token;  // includes specials

    std::size_t size() const { return id_to_token.size(); }
};

struct TokenSequence {
    std::vector<std::size_t> token_ids;
    std::vector<std::size_t> segment_ids;     // 0 source side, 1 translation side
    std::vector<double> attention_mask;       // 1 real token, 0 pad
    std::size_t length() const { return token_ids.size(); }
};

// Column positions in a QE TSV. z_score < 0 means "not present"; the loader
// then leaves z_score to be filled by standardization.
struct ColumnMap {
    int index = 0;
    int original = 1;
    int translation = 2;
    int score = 3;
    int z_score = 4;
};

struct ParallelCorpus {
    std::vector<ParallelPair> pairs;
    std::size_t skipped_blank = 0;
};

std::vector<QEPair> load_qe_dataset(const std::string& path, const ColumnMap& map);
void save_qe_dataset(const std::vector<QEPair>& pairs, const std::string& path);

ParallelCorpus load_parallel_corpus(const std::string& path);

// Zero-mean, unit population-std transform; order preserved.
std::vector<double> zscore_standardize(const std::vector<double>& scores);

Vocab build_vocab(const std::vector<std::string>& corpus, std::size_t max_size);
std::vector<std::size_t> tokenize(const std::string& text, const Vocab& vocab);

// [CLS] src [SEP] tgt [SEP]; longest-first truncation to max_len.
TokenSequence encode_pair_mono(const QEPair& pair, const Vocab& vocab, std::size_t max_len);
// Two independent [CLS] side [SEP] sequences, each truncated to max_len.
std::pair<TokenSequence, TokenSequence> encode_pair_siamese(const QEPair& pair, const Vocab& vocab,
                                                            std::size_t max_len);

void pad_to(TokenSequence& seq, std::size_t target_len);

std::pair<std::vector<QEPair>, std::vector<QEPair>> split_train_eval(
    const std::vector<QEPair>& data, double eval_fraction, std::uint64_t seed);

}  // namespace tqe
