#include "tqe/ops.hpp"

#include <algorithm>
#include <cmath>

namespace tqe {

namespace {

using detail::TensorData;
using detail::ensure_grad;
using BackwardFn = std::function<void(TensorData&, std::vector<Tensor>&)>;

bool any_requires_grad(const std::vector<Tensor>& parents) {
    for (const auto& p : parents)
        if (p.requires_grad()) return true;
    return false;
}

Tensor finish(Tape* tape, Shape shape, std::vector<double> values, std::vector<Tensor> parents,
              BackwardFn backward) {
    if (tape && any_requires_grad(parents))
        return tape->record(std::move(shape), std::move(values), std::move(parents),
                            std::move(backward));
    return Tensor(std::move(shape), std::move(values));
}

void require_2d(const Tensor& t, const char* what) {
    if (t.shape().size() != 2) throw ShapeMismatch(std::string(what) + ": expected a 2-D tensor");
}

constexpr double kGeluCoef = 0.044715;
const double kSqrt2OverPi = std::sqrt(2.0 / M_PI);

}  // namespace

Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul");
    require_2d(b, "matmul");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k) throw ShapeMismatch("matmul: inner dimensions differ");
    std::vector<double> out(m * n, 0.0);
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            if (aip == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * bv[p * n + j];
        }
    detail::check_finite(out);
    return finish(tape, {m, n}, std::move(out), {a, b},
                  [m, k, n](TensorData& o, std::vector<Tensor>& ps) {
                      const auto& go = o.grad;
                      const auto& av = ps[0].values();
                      const auto& bv = ps[1].values();
                      if (ps[0].requires_grad()) {
                          ensure_grad(*ps[0].data());
                          auto& ga = ps[0].data()->grad;
                          for (std::size_t i = 0; i < m; ++i)
                              for (std::size_t j = 0; j < n; ++j) {
                                  const double g = go[i * n + j];
                                  if (g == 0.0) continue;
                                  for (std::size_t p = 0; p < k; ++p)
                                      ga[i * k + p] += g * bv[p * n + j];
                              }
                      }
                      if (ps[1].requires_grad()) {
                          ensure_grad(*ps[1].data());
                          auto& gb = ps[1].data()->grad;
                          for (std::size_t i = 0; i < m; ++i)
                              for (std::size_t p = 0; p < k; ++p) {
                                  const double aip = av[i * k + p];
                                  if (aip == 0.0) continue;
                                  for (std::size_t j = 0; j < n; ++j)
                                      gb[p * n + j] += aip * go[i * n + j];
                              }
                      }
                  });
}

Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw ShapeMismatch("add: shapes differ");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
    detail::check_finite(out);
    return finish(tape, a.shape(), std::move(out), {a, b},
                  [](TensorData& o, std::vector<Tensor>& ps) {
                      for (auto& p : ps) {
                          if (!p.requires_grad()) continue;
                          ensure_grad(*p.data());
                          auto& g = p.data()->grad;
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
                      }
                  });
}

Tensor add_row(Tape* tape, const Tensor& x, const Tensor& bias) {
    require_2d(x, "add_row");
    if (bias.numel() != x.cols()) throw ShapeMismatch("add_row: bias length != column count");
    const std::size_t m = x.rows(), n = x.cols();
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x.values()[i * n + j] + bias.values()[j];
    detail::check_finite(out);
    return finish(tape, {m, n}, std::move(out), {x, bias},
                  [m, n](TensorData& o, std::vector<Tensor>& ps) {
                      if (ps[0].requires_grad()) {
                          ensure_grad(*ps[0].data());
                          auto& gx = ps[0].data()->grad;
                          for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += o.grad[i];
                      }
                      if (ps[1].requires_grad()) {
                          ensure_grad(*ps[1].data());
                          auto& gb = ps[1].data()->grad;
                          for (std::size_t i = 0; i < m; ++i)
                              for (std::size_t j = 0; j < n; ++j) gb[j] += o.grad[i * n + j];
                      }
                  });
}

Tensor sub(Tape* tape, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw ShapeMismatch("sub: shapes differ");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
    detail::check_finite(out);
    return finish(tape, a.shape(), std::move(out), {a, b},
                  [](TensorData& o, std::vector<Tensor>& ps) {
                      if (ps[0].requires_grad()) {
                          ensure_grad(*ps[0].data());
                          auto& g = ps[0].data()->grad;
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
                      }
                      if (ps[1].requires_grad()) {
                          ensure_grad(*ps[1].data());
                          auto& g = ps[1].data()->grad;
                          for (std::size_t i = 0; i < g.size(); ++i) g[i] -= o.grad[i];
                      }
                  });
}

Tensor mul(Tape* tape, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw ShapeMismatch("mul: shapes differ");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
    detail::check_finite(out);
    return finish(tape, a.shape(), std::move(out), {a, b},
                  [](TensorData& o, std::vector<Tensor>& ps) {
                      if (ps[0].requires_grad()) {
                          ensure_grad(*ps[0].data());
                          auto& g = ps[0].data()->grad;
                          for (std::size_t i = 0; i < g.size(); ++i)
                              g[i] += o.grad[i] * ps[1].values()[i];
                      }
                      if (ps[1].requires_grad()) {
                          ensure_grad(*ps[1].data());
                          auto& g = ps[1].data()->grad;
                          for (std::size_t i = 0; i < g.size(); ++i)
                              g[i] += o.grad[i] * ps[0].values()[i];
                      }
                  });
}

Tensor scale(Tape* tape, const Tensor& a, double c) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * c;
    detail::check_finite(out);
    return finish(tape, a.shape(), std::move(out), {a},
                  [c](TensorData& o, std::vector<Tensor>& ps) {
                      ensure_grad(*ps[0].data());
                      auto& g = ps[0].data()->grad;
                      for (std::size_t i = 0; i < g.size(); ++i) g[i] += c * o.grad[i];
                  });
}

Tensor transpose(Tape* tape, const Tensor& a) {
    require_2d(a, "transpose");
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.values()[i * n + j];
    return finish(tape, {n, m}, std::move(out), {a},
                  [m, n](TensorData& o, std::vector<Tensor>& ps) {
                      ensure_grad(*ps[0].data());
                      auto& g = ps[0].data()->grad;
                      for (std::size_t i = 0; i < m; ++i)
                          for (std::size_t j = 0; j < n; ++j) g[i * n + j] += o.grad[j * m + i];
                  });
}

Tensor softmax_rows(Tape* tape, const Tensor& x) {
    require_2d(x, "softmax_rows");
    const std::size_t m = x.rows(), n = x.cols();
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        double mx = x.values()[i * n];
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, x.values()[i * n + j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            out[i * n + j] = std::exp(x.values()[i * n + j] - mx);
            sum += out[i * n + j];
        }
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= sum;
    }
    detail::check_finite(out);
    return finish(tape, {m, n}, std::move(out), {x},
                  [m, n](TensorData& o, std::vector<Tensor>& ps) {
                      ensure_grad(*ps[0].data());
                      auto& gx = ps[0].data()->grad;
                      for (std::size_t i = 0; i < m; ++i) {
                          double dot = 0.0;
                          for (std::size_t j = 0; j < n; ++j)
                              dot += o.grad[i * n + j] * o.values[i * n + j];
                          for (std::size_t j = 0; j < n; ++j)
                              gx[i * n + j] += o.values[i * n + j] * (o.grad[i * n + j] - dot);
                      }
                  });
}

Tensor layer_norm(Tape* tape, const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps) {
    require_2d(x, "layer_norm");
    if (eps <= 0.0) throw InvalidConfig("layer_norm: eps must be > 0");
    const std::size_t m = x.rows(), n = x.cols();
    if (gamma.numel() != n || beta.numel() != n)
        throw ShapeMismatch("layer_norm: gamma/beta length != column count");
    std::vector<double> out(m * n);
    std::vector<double> inv_sigma(m), normed(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) mean += x.values()[i * n + j];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = x.values()[i * n + j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);
        inv_sigma[i] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < n; ++j) {
            normed[i * n + j] = (x.values()[i * n + j] - mean) * inv_sigma[i];
            out[i * n + j] = gamma.values()[j] * normed[i * n + j] + beta.values()[j];
        }
    }
    detail::check_finite(out);
    return finish(
        tape, {m, n}, std::move(out), {x, gamma, beta},
        [m, n, inv_sigma = std::move(inv_sigma),
         normed = std::move(normed)](TensorData& o, std::vector<Tensor>& ps) {
            const auto& gv = ps[1].values();
            if (ps[1].requires_grad()) {
                ensure_grad(*ps[1].data());
                auto& gg = ps[1].data()->grad;
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j)
                        gg[j] += o.grad[i * n + j] * normed[i * n + j];
            }
            if (ps[2].requires_grad()) {
                ensure_grad(*ps[2].data());
                auto& gb = ps[2].data()->grad;
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) gb[j] += o.grad[i * n + j];
            }
            if (ps[0].requires_grad()) {
                ensure_grad(*ps[0].data());
                auto& gx = ps[0].data()->grad;
                for (std::size_t i = 0; i < m; ++i) {
                    double mean_dy = 0.0, mean_dyy = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        const double dy = o.grad[i * n + j] * gv[j];
                        mean_dy += dy;
                        mean_dyy += dy * normed[i * n + j];
                    }
                    mean_dy /= static_cast<double>(n);
                    mean_dyy /= static_cast<double>(n);
                    for (std::size_t j = 0; j < n; ++j) {
                        const double dy = o.grad[i * n + j] * gv[j];
                        gx[i * n + j] +=
                            inv_sigma[i] * (dy - mean_dy - normed[i * n + j] * mean_dyy);
                    }
                }
            }
        });
}

Tensor gelu(Tape* tape, const Tensor& x) {
    std::vector<double> out(x.numel());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = x.values()[i];
        const double u = kSqrt2OverPi * (v + kGeluCoef * v * v * v);
        out[i] = 0.5 * v * (1.0 + std::tanh(u));
    }
    detail::check_finite(out);
    return finish(tape, x.shape(), std::move(out), {x},
                  [](TensorData& o, std::vector<Tensor>& ps) {
                      ensure_grad(*ps[0].data());
                      auto& g = ps[0].data()->grad;
                      for (std::size_t i = 0; i < g.size(); ++i) {
                          const double v = ps[0].values()[i];
                          const double u = kSqrt2OverPi * (v + kGeluCoef * v * v * v);
                          const double t = std::tanh(u);
                          const double du = kSqrt2OverPi * (1.0 + 3.0 * kGeluCoef * v * v);
                          g[i] += o.grad[i] * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du);
                      }
                  });
}

Tensor sum_all(Tape* tape, const Tensor& x) {
    double s = 0.0;
    for (double v : x.values()) s += v;
    if (!std::isfinite(s)) throw NonFiniteValue("sum_all overflowed");
    return finish(tape, {1, 1}, {s}, {x}, [](TensorData& o, std::vector<Tensor>& ps) {
        ensure_grad(*ps[0].data());
        auto& g = ps[0].data()->grad;
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[0];
    });
}

Tensor embedding_rows(Tape* tape, const Tensor& table, const std::vector<std::size_t>& ids) {
    require_2d(table, "embedding_rows");
    const std::size_t d = table.cols();
    for (std::size_t id : ids)
        if (id >= table.rows()) throw IdOutOfRange("embedding id out of range");
    std::vector<double> out(ids.size() * d);
    for (std::size_t i = 0; i < ids.size(); ++i)
        std::copy_n(table.values().begin() + static_cast<long>(ids[i] * d), d,
                    out.begin() + static_cast<long>(i * d));
    return finish(tape, {ids.size(), d}, std::move(out), {table},
                  [ids, d](TensorData& o, std::vector<Tensor>& ps) {
                      ensure_grad(*ps[0].data());
                      auto& g = ps[0].data()->grad;
                      for (std::size_t i = 0; i < ids.size(); ++i)
                          for (std::size_t j = 0; j < d; ++j)
                              g[ids[i] * d + j] += o.grad[i * d + j];
                  });
}

Tensor slice_cols(Tape* tape, const Tensor& x, std::size_t start, std::size_t n) {
    require_2d(x, "slice_cols");
    if (start + n > x.cols()) throw ShapeMismatch("slice_cols: range out of bounds");
    const std::size_t m = x.rows(), w = x.cols();
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x.values()[i * w + start + j];
    return finish(tape, {m, n}, std::move(out), {x},
                  [m, n, w, start](TensorData& o, std::vector<Tensor>& ps) {
                      ensure_grad(*ps[0].data());
                      auto& g = ps[0].data()->grad;
                      for (std::size_t i = 0; i < m; ++i)
                          for (std::size_t j = 0; j < n; ++j)
                              g[i * w + start + j] += o.grad[i * n + j];
                  });
}

Tensor concat_cols(Tape* tape, const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ShapeMismatch("concat_cols: no parts");
    const std::size_t m = parts[0].rows();
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.rows() != m) throw ShapeMismatch("concat_cols: row counts differ");
        total += p.cols();
    }
    std::vector<double> out(m * total);
    std::size_t off = 0;
    for (const auto& p : parts) {
        const std::size_t n = p.cols();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) out[i * total + off + j] = p.values()[i * n + j];
        off += n;
    }
    return finish(tape, {m, total}, std::move(out), parts,
                  [m, total](TensorData& o, std::vector<Tensor>& ps) {
                      std::size_t off = 0;
                      for (auto& p : ps) {
                          const std::size_t n = p.cols();
                          if (p.requires_grad()) {
                              ensure_grad(*p.data());
                              auto& g = p.data()->grad;
                              for (std::size_t i = 0; i < m; ++i)
                                  for (std::size_t j = 0; j < n; ++j)
                                      g[i * n + j] += o.grad[i * total + off + j];
                          }
                          off += n;
                      }
                  });
}

Tensor take_row(Tape* tape, const Tensor& x, std::size_t r) {
    require_2d(x, "take_row");
    if (r >= x.rows()) throw ShapeMismatch("take_row: row out of range");
    const std::size_t n = x.cols();
    std::vector<double> out(x.values().begin() + static_cast<long>(r * n),
                            x.values().begin() + static_cast<long>((r + 1) * n));
    return finish(tape, {1, n}, std::move(out), {x},
                  [r, n](TensorData& o, std::vector<Tensor>& ps) {
                      ensure_grad(*ps[0].data());
                      auto& g = ps[0].data()->grad;
                      for (std::size_t j = 0; j < n; ++j) g[r * n + j] += o.grad[j];
                  });
}

Tensor mean_rows_masked(Tape* tape, const Tensor& x, const std::vector<double>& mask) {
    require_2d(x, "mean_rows_masked");
    const std::size_t m = x.rows(), n = x.cols();
    if (mask.size() != m) throw ShapeMismatch("mean_rows_masked: mask length != row count");
    double total = 0.0;
    for (double v : mask) total += v;
    if (total <= 0.0) throw AllMasked("mean_rows_masked: all rows masked out");
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        if (mask[i] == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) out[j] += x.values()[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) out[j] /= total;
    return finish(tape, {1, n}, std::move(out), {x},
                  [mask, m, n, total](TensorData& o, std::vector<Tensor>& ps) {
                      ensure_grad(*ps[0].data());
                      auto& g = ps[0].data()->grad;
                      for (std::size_t i = 0; i < m; ++i) {
                          if (mask[i] == 0.0) continue;
                          for (std::size_t j = 0; j < n; ++j) g[i * n + j] += o.grad[j] / total;
                      }
                  });
}

Tensor max_rows_masked(Tape* tape, const Tensor& x, const std::vector<double>& mask) {
    require_2d(x, "max_rows_masked");
    const std::size_t m = x.rows(), n = x.cols();
    if (mask.size() != m) throw ShapeMismatch("max_rows_masked: mask length != row count");
    std::vector<std::size_t> argmax(n, m);
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) {
            if (mask[i] == 0.0) continue;
            const double v = x.values()[i * n + j];
            if (argmax[j] == m || v > out[j]) {
                out[j] = v;
                argmax[j] = i;
            }
        }
        if (argmax[j] == m) throw AllMasked("max_rows_masked: all rows masked out");
    }
    return finish(tape, {1, n}, std::move(out), {x},
                  [argmax = std::move(argmax), n](TensorData& o, std::vector<Tensor>& ps) {
                      ensure_grad(*ps[0].data());
                      auto& g = ps[0].data()->grad;
                      for (std::size_t j = 0; j < n; ++j) g[argmax[j] * n + j] += o.grad[j];
                  });
}

Tensor cosine(Tape* tape, const Tensor& u, const Tensor& v) {
    if (u.numel() != v.numel()) throw ShapeMismatch("cosine: lengths differ");
    const std::size_t n = u.numel();
    double uu = 0.0, vv = 0.0, uv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        uu += u.values()[i] * u.values()[i];
        vv += v.values()[i] * v.values()[i];
        uv += u.values()[i] * v.values()[i];
    }
    const double nu = std::sqrt(uu), nv = std::sqrt(vv);
    if (nu < 1e-12 || nv < 1e-12) throw ZeroVector("cosine: zero-norm vector");
    const double c = uv / (nu * nv);
    return finish(tape, {1, 1}, {c}, {u, v},
                  [n, nu, nv, c](TensorData& o, std::vector<Tensor>& ps) {
                      const double g = o.grad[0];
                      const auto& uvals = ps[0].values();
                      const auto& vvals = ps[1].values();
                      if (ps[0].requires_grad()) {
                          ensure_grad(*ps[0].data());
                          auto& gu = ps[0].data()->grad;
                          for (std::size_t i = 0; i < n; ++i)
                              gu[i] += g * (vvals[i] / (nu * nv) - c * uvals[i] / (nu * nu));
                      }
                      if (ps[1].requires_grad()) {
                          ensure_grad(*ps[1].data());
                          auto& gv = ps[1].data()->grad;
                          for (std::size_t i = 0; i < n; ++i)
                              gv[i] += g * (uvals[i] / (nu * nv) - c * vvals[i] / (nv * nv));
                      }
                  });
}

Tensor dropout(Tape* tape, const Tensor& x, double rate, std::mt19937& rng) {
    if (rate < 0.0 || rate >= 1.0) throw InvalidConfig("dropout: rate must be in [0, 1)");
    if (rate == 0.0) return x;
    std::bernoulli_distribution keep(1.0 - rate);
    std::vector<double> mask(x.numel());
    for (auto& m : mask) m = keep(rng) ? 1.0 / (1.0 - rate) : 0.0;
    std::vector<double> out(x.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.values()[i] * mask[i];
    return finish(tape, x.shape(), std::move(out), {x},
                  [mask = std::move(mask)](TensorData& o, std::vector<Tensor>& ps) {
                      ensure_grad(*ps[0].data());
                      auto& g = ps[0].data()->grad;
                      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * mask[i];
                  });
}

double gradient_check(const std::function<Tensor(Tape&, const Tensor&)>& f, const Tensor& point,
                      double eps) {
    if (eps <= 0.0) throw InvalidConfig("gradient_check: eps must be > 0");
    Tensor x = point.clone(true);
    Tape tape;
    Tensor root = f(tape, x);
    if (root.numel() != 1) throw NotScalarRoot("gradient_check: map must be scalar-valued");
    tape.backward(root);
    std::vector<double> analytic(x.numel(), 0.0);
    if (x.has_grad()) analytic = x.grad();

    double worst = 0.0;
    for (std::size_t i = 0; i < point.numel(); ++i) {
        Tensor lo = point.clone(false);
        Tensor hi = point.clone(false);
        lo.values()[i] -= eps;
        hi.values()[i] += eps;
        Tape t1, t2;
        const double flo = f(t1, lo).item();
        const double fhi = f(t2, hi).item();
        if (!std::isfinite(flo) || !std::isfinite(fhi))
            throw NonFiniteValue("gradient_check: non-finite value at probe point");
        const double numeric = (fhi - flo) / (2.0 * eps);
        const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
        worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    return worst;
}

}  // namespace tqe
