// Internal helpers shared by the op implementations. Not installed.
#pragma once

#include <cstdint>
#include <memory>
#include <numeric>
#include <utility>
#include <vector>

#include "gonet/tensor.hpp"

namespace gonet::detail {

template <class S>
std::int64_t shape_size(const std::vector<std::int64_t>& shape) {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

template <class S>
bool any_requires_grad(const std::vector<Tensor<S>>& parents) {
    for (const auto& p : parents)
        if (p.requires_grad()) return true;
    return false;
}

// Builds an op result node. `backward` receives the output node and must
// accumulate into the parents' grads (guarding on requires_grad).
template <class S, class F>
Tensor<S> make_op(std::vector<std::int64_t> shape, std::vector<S> value,
                  std::vector<Tensor<S>> parents, F&& backward) {
    auto node = std::make_shared<Node<S>>();
    node->shape = std::move(shape);
    node->value = std::move(value);
    if (grad_enabled() && any_requires_grad(parents)) {
        node->requires_grad = true;
        node->parents.reserve(parents.size());
        for (auto& p : parents) node->parents.push_back(p.node_ptr());
        node->backward_fn = std::forward<F>(backward);
    }
    return Tensor<S>(std::move(node));
}

// C(N x M) += A(N x K) * B(K x M)
template <class S>
void gemm_nn(const S* a, const S* b, S* c, std::int64_t n, std::int64_t k, std::int64_t m) {
    for (std::int64_t i = 0; i < n; ++i) {
        const S* arow = a + i * k;
        S* crow = c + i * m;
        for (std::int64_t p = 0; p < k; ++p) {
            S av = arow[p];
            if (av == S(0)) continue;
            const S* brow = b + p * m;
            for (std::int64_t j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
}

// C(N x K) += A(N x M) * B(K x M)^T
template <class S>
void gemm_nt(const S* a, const S* b, S* c, std::int64_t n, std::int64_t m, std::int64_t k) {
    for (std::int64_t i = 0; i < n; ++i) {
        const S* arow = a + i * m;
        S* crow = c + i * k;
        for (std::int64_t j = 0; j < k; ++j) {
            const S* brow = b + j * m;
            S acc = S(0);
            for (std::int64_t p = 0; p < m; ++p) acc += arow[p] * brow[p];
            crow[j] += acc;
        }
    }
}

// C(K x M) += A(N x K)^T * B(N x M)
template <class S>
void gemm_tn(const S* a, const S* b, S* c, std::int64_t n, std::int64_t k, std::int64_t m) {
    for (std::int64_t i = 0; i < n; ++i) {
        const S* arow = a + i * k;
        const S* brow = b + i * m;
        for (std::int64_t p = 0; p < k; ++p) {
            S av = arow[p];
            if (av == S(0)) continue;
            S* crow = c + p * m;
            for (std::int64_t j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace gonet::detail
