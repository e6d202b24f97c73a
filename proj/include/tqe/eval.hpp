#pragma once

#include <string>
#include <vector>

#include "tqe/data.hpp"
#include "tqe/models.hpp"

namespace tqe {

struct EvalReport {
    double pearson_r = 0.0;
    double rmse = 0.0;
    double mae = 0.0;
    std::size_t n = 0;
};

struct ErrorCase {
    std::int64_t index = 0;
    std::string original;
    std::string translation;
    double gold = 0.0;
    double predicted = 0.0;
    double difference = 0.0;  // |gold - predicted|
};

// Sample Pearson correlation via two-pass centered sums.
double pearson(const std::vector<double>& x, const std::vector<double>& y);
double rmse(const std::vector<double>& x, const std::vector<double>& y);
double mae(const std::vector<double>& x, const std::vector<double>& y);

EvalReport evaluate(const std::vector<double>& preds, const std::vector<double>& golds);

// Predictions file: one `index<TAB>score` line, index-ascending, 17
// significant digits.
void write_predictions(const std::vector<Prediction>& preds, const std::string& path);
std::vector<Prediction> read_predictions(const std::string& path);

// Top-k cases by absolute error, descending; ties by segment index.
std::vector<ErrorCase> error_report(const std::vector<QEPair>& pairs,
                                    const std::vector<Prediction>& preds, std::size_t k);

}  // namespace tqe
