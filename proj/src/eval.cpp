#include "tqe/eval.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace tqe {

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw LengthMismatch("pearson: lengths differ");
    if (x.size() < 2) throw TooFew("pearson: need at least 2 points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) throw DegenerateVariance("pearson: zero variance input");
    double r = sxy / std::sqrt(sxx * syy);
    r = std::clamp(r, -1.0, 1.0);
    assert(std::abs(r) <= 1.0);
    return r;
}

double rmse(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw LengthMismatch("rmse: lengths differ");
    if (x.empty()) throw EmptyInput("rmse: empty inputs");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
    return std::sqrt(s / static_cast<double>(x.size()));
}

double mae(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw LengthMismatch("mae: lengths differ");
    if (x.empty()) throw EmptyInput("mae: empty inputs");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
    return s / static_cast<double>(x.size());
}

EvalReport evaluate(const std::vector<double>& preds, const std::vector<double>& golds) {
    EvalReport report;
    report.pearson_r = pearson(preds, golds);
    report.rmse = rmse(preds, golds);
    report.mae = mae(preds, golds);
    report.n = preds.size();
    return report;
}

void write_predictions(const std::vector<Prediction>& preds, const std::string& path) {
    std::vector<Prediction> sorted = preds;
    std::sort(sorted.begin(), sorted.end(),
              [](const Prediction& a, const Prediction& b) { return a.index < b.index; });
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i].index == sorted[i - 1].index)
            throw DuplicateIndex("duplicate prediction index " + std::to_string(sorted[i].index));
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot write " + path);
    out.precision(17);
    for (const auto& p : sorted) out << p.index << '\t' << p.score << '\n';
    if (!out) throw IoFailure("write failed for " + path);
}

std::vector<Prediction> read_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open " + path);
    std::vector<Prediction> preds;
    std::set<std::int64_t> seen;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream iss(line);
        Prediction p;
        if (!(iss >> p.index >> p.score))
            throw MalformedRow("bad prediction at line " + std::to_string(line_no), line_no);
        if (!seen.insert(p.index).second)
            throw DuplicateIndex("duplicate prediction index " + std::to_string(p.index));
        preds.push_back(p);
    }
    return preds;
}

std::vector<ErrorCase> error_report(const std::vector<QEPair>& pairs,
                                    const std::vector<Prediction>& preds, std::size_t k) {
    if (k < 1) throw InvalidConfig("error_report: k must be >= 1");
    if (pairs.size() != preds.size()) throw IndexMismatch("error_report: counts differ");
    std::vector<ErrorCase> cases;
    cases.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (pairs[i].index != preds[i].index)
            throw IndexMismatch("error_report: index mismatch at position " + std::to_string(i));
        ErrorCase c;
        c.index = pairs[i].index;
        c.original = pairs[i].original;
        c.translation = pairs[i].translation;
        c.gold = pairs[i].z_score;
        c.predicted = preds[i].score;
        c.difference = std::abs(c.gold - c.predicted);
        cases.push_back(std::move(c));
    }
    std::stable_sort(cases.begin(), cases.end(), [](const ErrorCase& a, const ErrorCase& b) {
        if (a.difference != b.difference) return a.difference > b.difference;
        return a.index < b.index;
    });
    if (cases.size() > k) cases.resize(k);
    return cases;
}

}  // namespace tqe
