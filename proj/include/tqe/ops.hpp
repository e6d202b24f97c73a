#pragma once

#include <functional>
#include <random>
#include <vector>

#include "tqe/tensor.hpp"

namespace tqe {

// Differentiable primitives. `tape` may be null for forward-only evaluation;
// a node is recorded only when the result depends on a grad-requiring input.

Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b);
Tensor add(Tape* tape, const Tensor& a, const Tensor& b);         // same shape
Tensor add_row(Tape* tape, const Tensor& x, const Tensor& bias);  // bias [1×n] broadcast over rows
Tensor sub(Tape* tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape* tape, const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(Tape* tape, const Tensor& a, double c);
Tensor transpose(Tape* tape, const Tensor& a);
Tensor softmax_rows(Tape* tape, const Tensor& x);
Tensor layer_norm(Tape* tape, const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);
Tensor gelu(Tape* tape, const Tensor& x);
Tensor sum_all(Tape* tape, const Tensor& x);

// Row gather from an embedding table; backward scatter-adds into the table.
Tensor embedding_rows(Tape* tape, const Tensor& table, const std::vector<std::size_t>& ids);

Tensor slice_cols(Tape* tape, const Tensor& x, std::size_t start, std::size_t n);
Tensor concat_cols(Tape* tape, const std::vector<Tensor>& parts);
Tensor take_row(Tape* tape, const Tensor& x, std::size_t r);

// Mask entries are 1 (keep) or 0 (ignore); at least one row must be kept.
Tensor mean_rows_masked(Tape* tape, const Tensor& x, const std::vector<double>& mask);
Tensor max_rows_masked(Tape* tape, const Tensor& x, const std::vector<double>& mask);

// Cosine similarity of two [1×d] vectors; scalar result in [-1, 1].
Tensor cosine(Tape* tape, const Tensor& u, const Tensor& v);

// Inverted dropout; identity when rate == 0.
Tensor dropout(Tape* tape, const Tensor& x, double rate, std::mt19937& rng);

// Central finite-difference check of a scalar-valued map against the
// tape-computed gradient. Returns max over coordinates of
// |analytic - numeric| / max(1, |analytic|, |numeric|).
double gradient_check(const std::function<Tensor(Tape&, const Tensor&)>& f, const Tensor& point,
                      double eps = 1e-5);

}  // namespace tqe
