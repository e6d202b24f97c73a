#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "tqe/errors.hpp"

namespace tqe {

using Shape = std::vector<std::size_t>;

namespace detail {
struct TensorData {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty until backward populates it
    bool requires_grad = false;
    const void* tape_tag = nullptr;  // tape that produced this tensor, if any
};
}  // namespace detail

// Dense tensor of 64-bit reals in row-major order. Copies are shallow:
// a Tensor is a handle, so parameters can be shared between model views.
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return d_ != nullptr; }
    const Shape& shape() const { return d_->shape; }
    std::size_t numel() const { return d_->values.size(); }
    std::size_t rows() const;
    std::size_t cols() const;

    const std::vector<double>& values() const { return d_->values; }
    std::vector<double>& values() { return d_->values; }
    double operator()(std::size_t r, std::size_t c) const { return d_->values[r * cols() + c]; }
    double item() const;

    bool requires_grad() const { return d_->requires_grad; }
    bool has_grad() const { return !d_->grad.empty(); }
    const std::vector<double>& grad() const { return d_->grad; }
    void zero_grad();

    // Deep copy of values; the copy shares nothing with the source.
    Tensor clone(bool requires_grad = false) const;

    std::shared_ptr<detail::TensorData> data() const { return d_; }

private:
    std::shared_ptr<detail::TensorData> d_;
    friend class Tape;
};

// Record of primitive applications, in execution order. backward() replays
// the record in reverse, accumulating gradients by summation.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Registers a freshly computed node. `backward` reads out.grad and adds
    // contributions into the parents' grads.
    Tensor record(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
                  std::function<void(detail::TensorData& out, std::vector<Tensor>& parents)> backward);

    void backward(const Tensor& root);

    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

private:
    struct Node {
        std::shared_ptr<detail::TensorData> out;
        std::vector<Tensor> parents;
        std::function<void(detail::TensorData&, std::vector<Tensor>&)> backward;
    };
    std::vector<Node> nodes_;
};

namespace detail {
void check_finite(const std::vector<double>& values);
void ensure_grad(TensorData& d);
}  // namespace detail

}  // namespace tqe
