#include "tqe/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace tqe {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

double parse_real(const std::string& s, long line_no, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != trim(s).size() && pos != s.size())
            throw MalformedRow(std::string("bad ") + what, line_no);
        return v;
    } catch (const MalformedRow&) {
        throw;
    } catch (const std::exception&) {
        throw MalformedRow(std::string("bad ") + what + " at line " + std::to_string(line_no),
                           line_no);
    }
}

void check_column_map(const ColumnMap& map, std::size_t header_width) {
    const int cols[] = {map.index, map.original, map.translation, map.score, map.z_score};
    for (int a : cols)
        if (a >= 0 && static_cast<std::size_t>(a) >= header_width)
            throw MissingColumn("column index " + std::to_string(a) + " beyond header width " +
                                std::to_string(header_width));
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = i + 1; j < 5; ++j)
            if (cols[i] >= 0 && cols[i] == cols[j])
                throw MissingColumn("duplicate column index " + std::to_string(cols[i]));
}

}  // namespace

std::vector<QEPair> load_qe_dataset(const std::string& path, const ColumnMap& map) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) throw EmptyFile(path + " is empty");
    check_column_map(map, split_tabs(header).size());

    std::vector<QEPair> out;
    std::string line;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_tabs(line);
        auto field = [&](int idx) -> const std::string& {
            if (idx < 0 || static_cast<std::size_t>(idx) >= fields.size())
                throw MalformedRow("missing field at line " + std::to_string(line_no), line_no);
            return fields[static_cast<std::size_t>(idx)];
        };
        QEPair p;
        p.index = map.index >= 0 ? static_cast<std::int64_t>(parse_real(field(map.index), line_no, "index"))
                                 : static_cast<std::int64_t>(out.size());
        p.original = trim(field(map.original));
        p.translation = trim(field(map.translation));
        if (p.original.empty() || p.translation.empty())
            throw MalformedRow("empty sentence at line " + std::to_string(line_no), line_no);
        if (map.score >= 0) p.da_score = parse_real(field(map.score), line_no, "score");
        if (map.z_score >= 0) {
            p.z_score = parse_real(field(map.z_score), line_no, "z-score");
            if (!std::isfinite(p.z_score))
                throw MalformedRow("non-finite z-score at line " + std::to_string(line_no), line_no);
        }
        out.push_back(std::move(p));
    }
    return out;
}

void save_qe_dataset(const std::vector<QEPair>& pairs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot write " + path);
    out << "index\toriginal\ttranslation\tscore\tz_score\n";
    out.precision(17);
    for (const auto& p : pairs)
        out << p.index << '\t' << p.original << '\t' << p.translation << '\t' << p.da_score << '\t'
            << p.z_score << '\n';
    if (!out) throw IoFailure("write failed for " + path);
}

ParallelCorpus load_parallel_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open " + path);
    ParallelCorpus corpus;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            ++corpus.skipped_blank;
            continue;
        }
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw MalformedRow("no tab separator at line " + std::to_string(line_no), line_no);
        ParallelPair p{trim(line.substr(0, tab)), trim(line.substr(tab + 1))};
        if (p.source.empty() || p.target.empty())
            throw MalformedRow("empty side at line " + std::to_string(line_no), line_no);
        corpus.pairs.push_back(std::move(p));
    }
    return corpus;
}

std::vector<double> zscore_standardize(const std::vector<double>& scores) {
    if (scores.size() < 2) throw TooFew("zscore_standardize: need at least 2 scores");
    const double n = static_cast<double>(scores.size());
    const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
    double var = 0.0;
    for (double s : scores) var += (s - mean) * (s - mean);
    var /= n;
    if (var <= 0.0) throw DegenerateVariance("zscore_standardize: all scores equal");
    const double inv_std = 1.0 / std::sqrt(var);
    std::vector<double> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - mean) * inv_std;
    return out;
}

Vocab build_vocab(const std::vector<std::string>& corpus, std::size_t max_size) {
    if (max_size <= 4) throw InvalidConfig("build_vocab: max_size must exceed the 4 specials");
    std::map<std::string, std::size_t> counts;  // ordered: lexicographic tie-break for free
    for (const auto& text : corpus) {
        std::istringstream iss(text);
        std::string tok;
        while (iss >> tok) {
            std::transform(tok.begin(), tok.end(), tok.begin(),
                           [](unsigned char c) { return std::tolower(c); });
            ++counts[tok];
        }
    }
    if (counts.empty()) throw EmptyCorpus("build_vocab: no tokens in corpus");

    std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (ranked.size() > max_size - 4) ranked.resize(max_size - 4);

    Vocab vocab;
    vocab.id_to_token = {"[CLS]", "[SEP]", "[PAD]", "[UNK]"};
    for (const auto& [tok, cnt] : ranked) {
        vocab.token_to_id[tok] = vocab.id_to_token.size();
        vocab.id_to_token.push_back(tok);
    }
    return vocab;
}

std::vector<std::size_t> tokenize(const std::string& text, const Vocab& vocab) {
    std::vector<std::size_t> ids;
    std::istringstream iss(text);
    std::string tok;
    while (iss >> tok) {
        std::transform(tok.begin(), tok.end(), tok.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        const auto it = vocab.token_to_id.find(tok);
        ids.push_back(it != vocab.token_to_id.end() ? it->second : Vocab::kUnk);
    }
    return ids;
}

TokenSequence encode_pair_mono(const QEPair& pair, const Vocab& vocab, std::size_t max_len) {
    if (max_len < 5) throw InvalidConfig("encode_pair_mono: max_len must be >= 5");
    max_len = std::min(max_len, kMaxSequenceLength);
    auto src = tokenize(pair.original, vocab);
    auto tgt = tokenize(pair.translation, vocab);
    // Longest-first truncation: drop from the tail of the longer side until
    // [CLS] + src + [SEP] + tgt + [SEP] fits. Ties drop from the translation.
    const std::size_t budget = max_len - 3;
    while (src.size() + tgt.size() > budget) {
        if (src.size() > tgt.size())
            src.pop_back();
        else
            tgt.pop_back();
    }
    TokenSequence seq;
    seq.token_ids.push_back(Vocab::kCls);
    seq.segment_ids.push_back(0);
    for (std::size_t id : src) {
        seq.token_ids.push_back(id);
        seq.segment_ids.push_back(0);
    }
    seq.token_ids.push_back(Vocab::kSep);
    seq.segment_ids.push_back(0);
    for (std::size_t id : tgt) {
        seq.token_ids.push_back(id);
        seq.segment_ids.push_back(1);
    }
    seq.token_ids.push_back(Vocab::kSep);
    seq.segment_ids.push_back(1);
    seq.attention_mask.assign(seq.token_ids.size(), 1.0);
    return seq;
}

std::pair<TokenSequence, TokenSequence> encode_pair_siamese(const QEPair& pair, const Vocab& vocab,
                                                            std::size_t max_len) {
    if (max_len < 3) throw InvalidConfig("encode_pair_siamese: max_len must be >= 3");
    max_len = std::min(max_len, kMaxSequenceLength);
    auto encode_side = [&](const std::string& text) {
        auto toks = tokenize(text, vocab);
        if (toks.size() > max_len - 2) toks.resize(max_len - 2);
        TokenSequence seq;
        seq.token_ids.push_back(Vocab::kCls);
        for (std::size_t id : toks) seq.token_ids.push_back(id);
        seq.token_ids.push_back(Vocab::kSep);
        seq.segment_ids.assign(seq.token_ids.size(), 0);
        seq.attention_mask.assign(seq.token_ids.size(), 1.0);
        return seq;
    };
    return {encode_side(pair.original), encode_side(pair.translation)};
}

void pad_to(TokenSequence& seq, std::size_t target_len) {
    if (target_len > kMaxSequenceLength)
        throw SequenceTooLong("pad_to: target beyond the 512-token cap");
    while (seq.length() < target_len) {
        seq.token_ids.push_back(Vocab::kPad);
        seq.segment_ids.push_back(seq.segment_ids.empty() ? 0 : seq.segment_ids.back());
        seq.attention_mask.push_back(0.0);
    }
}

std::pair<std::vector<QEPair>, std::vector<QEPair>> split_train_eval(
    const std::vector<QEPair>& data, double eval_fraction, std::uint64_t seed) {
    if (eval_fraction <= 0.0 || eval_fraction >= 1.0)
        throw InvalidConfig("split_train_eval: eval_fraction must be in (0, 1)");
    const std::size_t n = data.size();
    const std::size_t n_eval =
        static_cast<std::size_t>(std::llround(eval_fraction * static_cast<double>(n)));
    if (n_eval == 0 || n_eval >= n)
        throw TooFew("split_train_eval: one side of the split would be empty");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::pair<std::vector<QEPair>, std::vector<QEPair>> result;
    for (std::size_t i = 0; i < n; ++i)
        (i < n_eval ? result.second : result.first).push_back(data[order[i]]);
    return result;
}

}  // namespace tqe
