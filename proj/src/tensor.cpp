#include "tqe/tensor.hpp"

#include <cmath>
#include <numeric>

namespace tqe {

namespace detail {

void check_finite(const std::vector<double>& values) {
    for (double v : values) {
        if (!std::isfinite(v)) throw NonFiniteValue("tensor contains NaN or Inf");
    }
}

void ensure_grad(TensorData& d) {
    if (d.grad.size() != d.values.size()) d.grad.assign(d.values.size(), 0.0);
}

}  // namespace detail

static std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape_numel(shape) != values.size())
        throw ShapeMismatch("tensor value count does not match shape");
    detail::check_finite(values);
    d_ = std::make_shared<detail::TensorData>();
    d_->shape = std::move(shape);
    d_->values = std::move(values);
    d_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    std::vector<double> v(shape_numel(shape), 0.0);
    return Tensor(std::move(shape), std::move(v), requires_grad);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return Tensor({1, 1}, {v}, requires_grad);
}

std::size_t Tensor::rows() const {
    if (d_->shape.size() != 2) throw ShapeMismatch("tensor is not 2-D");
    return d_->shape[0];
}

std::size_t Tensor::cols() const {
    if (d_->shape.size() != 2) throw ShapeMismatch("tensor is not 2-D");
    return d_->shape[1];
}

double Tensor::item() const {
    if (numel() != 1) throw ShapeMismatch("item() on non-scalar tensor");
    return d_->values[0];
}

void Tensor::zero_grad() {
    d_->grad.clear();
}

Tensor Tensor::clone(bool requires_grad) const {
    return Tensor(d_->shape, d_->values, requires_grad);
}

Tensor Tape::record(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
                    std::function<void(detail::TensorData&, std::vector<Tensor>&)> backward) {
    Tensor out(std::move(shape), std::move(values), true);
    out.d_->tape_tag = this;
    nodes_.push_back(Node{out.d_, std::move(parents), std::move(backward)});
    return out;
}

void Tape::backward(const Tensor& root) {
    if (!root.defined() || root.numel() != 1) throw NotScalarRoot("backward root must be a scalar");
    if (root.data()->tape_tag != this) {
        // A constant root never touched the tape: nothing to differentiate.
        if (!root.requires_grad()) return;
        throw DetachedRoot("root was not produced by this tape");
    }
    for (auto& n : nodes_) {
        n.out->grad.clear();
        for (auto& p : n.parents) p.data()->grad.clear();
    }
    detail::ensure_grad(*root.data());
    root.data()->grad[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        if (it->out->grad.empty()) continue;  // node not on any path from root
        it->backward(*it->out, it->parents);
    }
}

}  // namespace tqe
