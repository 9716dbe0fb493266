#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gonet/common.hpp"

namespace gonet {

namespace detail {

template <class S>
struct Node {
    std::vector<std::int64_t> shape;
    std::vector<S> value;
    std::vector<S> grad;  // empty until first needed
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), S(0));
    }
};

bool grad_enabled();

}  // namespace detail

// Disables graph recording within a scope (used by eval-mode forward passes).
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

// N-dimensional array participating in a reverse-mode computation graph.
// Copies share storage; the graph is defined by construction order and
// freed when the last tensor referencing it goes away.
template <class S>
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<std::int64_t> shape, bool requires_grad = false);
    static Tensor full(std::vector<std::int64_t> shape, S fill, bool requires_grad = false);
    static Tensor from(std::vector<std::int64_t> shape, std::vector<S> values,
                       bool requires_grad = false);
    static Tensor scalar(S v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const std::vector<std::int64_t>& shape() const { return node_->shape; }
    std::int64_t dim(std::size_t i) const { return node_->shape[i]; }
    std::size_t rank() const { return node_->shape.size(); }
    std::int64_t size() const { return static_cast<std::int64_t>(node_->value.size()); }

    std::vector<S>& values() { return node_->value; }
    const std::vector<S>& values() const { return node_->value; }
    std::vector<S>& grad() { return node_->grad; }
    const std::vector<S>& grad() const { return node_->grad; }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool b) {
        node_->requires_grad = b;
        if (b) node_->ensure_grad();
    }
    bool has_grad() const { return node_->grad.size() == node_->value.size(); }
    void zero_grad() {
        node_->ensure_grad();
        std::fill(node_->grad.begin(), node_->grad.end(), S(0));
    }

    // Scalar accessor; throws unless size() == 1.
    S item() const;

    // Reverse-mode sweep from a scalar. Gradients accumulate additively into
    // every reachable node that requires grad.
    void backward();

    detail::Node<S>* node() const { return node_.get(); }
    std::shared_ptr<detail::Node<S>> node_ptr() const { return node_; }

    explicit Tensor(std::shared_ptr<detail::Node<S>> n) : node_(std::move(n)) {}

private:
    std::shared_ptr<detail::Node<S>> node_;
};

// Elementwise and linear-algebra primitives. All record backward closures
// when grad mode is on and at least one input requires grad.
template <class S> Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b);
template <class S> Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b);
template <class S> Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b);
template <class S> Tensor<S> scale(const Tensor<S>& a, S k);
// x: (..., C) plus bias (C), broadcast over leading dims.
template <class S> Tensor<S> add_bias(const Tensor<S>& x, const Tensor<S>& bias);
// a: (N, K), b: (K, M) -> (N, M)
template <class S> Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b);
template <class S> Tensor<S> sigmoid(const Tensor<S>& a);
template <class S> Tensor<S> tanh(const Tensor<S>& a);
template <class S> Tensor<S> relu(const Tensor<S>& a);
// Sum of all elements -> scalar.
template <class S> Tensor<S> sum(const Tensor<S>& a);
// Concatenation along the last axis; leading dims must agree.
template <class S> Tensor<S> concat_last(const std::vector<Tensor<S>>& parts);

}  // namespace gonet
