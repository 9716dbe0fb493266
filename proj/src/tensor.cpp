#include "gonet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "op_common.hpp"

namespace gonet {

namespace detail {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() {
    return g_grad_enabled;
}

void set_grad_enabled(bool b) {
    g_grad_enabled = b;
}

}  // namespace detail

NoGradGuard::NoGradGuard() : prev_(detail::grad_enabled()) {
    detail::set_grad_enabled(false);
}

NoGradGuard::~NoGradGuard() {
    detail::set_grad_enabled(prev_);
}

template <class S>
Tensor<S> Tensor<S>::zeros(std::vector<std::int64_t> shape, bool requires_grad) {
    return full(std::move(shape), S(0), requires_grad);
}

template <class S>
Tensor<S> Tensor<S>::full(std::vector<std::int64_t> shape, S fill, bool requires_grad) {
    auto node = std::make_shared<detail::Node<S>>();
    std::int64_t n = detail::shape_size<S>(shape);
    node->shape = std::move(shape);
    node->value.assign(static_cast<std::size_t>(n), fill);
    node->requires_grad = requires_grad;
    if (requires_grad) node->ensure_grad();
    return Tensor<S>(std::move(node));
}

template <class S>
Tensor<S> Tensor<S>::from(std::vector<std::int64_t> shape, std::vector<S> values,
                          bool requires_grad) {
    if (detail::shape_size<S>(shape) != static_cast<std::int64_t>(values.size()))
        throw ValidationError("tensor shape does not match value count");
    auto node = std::make_shared<detail::Node<S>>();
    node->shape = std::move(shape);
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    if (requires_grad) node->ensure_grad();
    return Tensor<S>(std::move(node));
}

template <class S>
Tensor<S> Tensor<S>::scalar(S v, bool requires_grad) {
    return from({1}, {v}, requires_grad);
}

template <class S>
S Tensor<S>::item() const {
    if (size() != 1) throw NumericError("item() requires a scalar tensor");
    return node_->value[0];
}

template <class S>
void Tensor<S>::backward() {
    if (size() != 1) throw NumericError("backward requires a scalar loss");
    using N = detail::Node<S>;

    // Iterative post-order DFS; long GRU chains would overflow a recursive one.
    std::vector<N*> order;
    std::unordered_set<N*> visited;
    std::vector<std::pair<N*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            N* p = n->parents[next++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    node_->ensure_grad();
    node_->grad[0] += S(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backward_fn) (*it)->backward_fn(**it);
    }
}

namespace {

template <class S>
void check_same_shape(const Tensor<S>& a, const Tensor<S>& b, const char* op) {
    if (a.shape() != b.shape()) throw ValidationError(std::string(op) + ": shape mismatch");
}

}  // namespace

template <class S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
    check_same_shape(a, b, "add");
    std::vector<S> out(a.values());
    const auto& bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    auto* an = a.node();
    auto* bn = b.node();
    return detail::make_op<S>(a.shape(), std::move(out), {a, b}, [an, bn](detail::Node<S>& o) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i) an->grad[i] += o.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i) bn->grad[i] += o.grad[i];
        }
    });
}

template <class S>
Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) {
    check_same_shape(a, b, "sub");
    std::vector<S> out(a.values());
    const auto& bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
    auto* an = a.node();
    auto* bn = b.node();
    return detail::make_op<S>(a.shape(), std::move(out), {a, b}, [an, bn](detail::Node<S>& o) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i) an->grad[i] += o.grad[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i) bn->grad[i] -= o.grad[i];
        }
    });
}

template <class S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
    check_same_shape(a, b, "mul");
    std::vector<S> out(a.values());
    const auto& bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    auto* an = a.node();
    auto* bn = b.node();
    return detail::make_op<S>(a.shape(), std::move(out), {a, b}, [an, bn](detail::Node<S>& o) {
        if (an->requires_grad) {
            an->ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i) an->grad[i] += o.grad[i] * bn->value[i];
        }
        if (bn->requires_grad) {
            bn->ensure_grad();
            for (std::size_t i = 0; i < o.grad.size(); ++i) bn->grad[i] += o.grad[i] * an->value[i];
        }
    });
}

template <class S>
Tensor<S> scale(const Tensor<S>& a, S k) {
    std::vector<S> out(a.values());
    for (auto& v : out) v *= k;
    auto* an = a.node();
    return detail::make_op<S>(a.shape(), std::move(out), {a}, [an, k](detail::Node<S>& o) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (std::size_t i = 0; i < o.grad.size(); ++i) an->grad[i] += o.grad[i] * k;
    });
}

template <class S>
Tensor<S> add_bias(const Tensor<S>& x, const Tensor<S>& bias) {
    if (bias.rank() != 1 || x.shape().back() != bias.dim(0))
        throw ValidationError("add_bias: bias length must equal the trailing dim");
    std::int64_t c = bias.dim(0);
    std::int64_t lead = x.size() / c;
    std::vector<S> out(x.values());
    const auto& bv = bias.values();
    for (std::int64_t i = 0; i < lead; ++i)
        for (std::int64_t j = 0; j < c; ++j) out[i * c + j] += bv[j];
    auto* xn = x.node();
    auto* bn = bias.node();
    return detail::make_op<S>(x.shape(), std::move(out), {x, bias},
                              [xn, bn, lead, c](detail::Node<S>& o) {
                                  if (xn->requires_grad) {
                                      xn->ensure_grad();
                                      for (std::size_t i = 0; i < o.grad.size(); ++i)
                                          xn->grad[i] += o.grad[i];
                                  }
                                  if (bn->requires_grad) {
                                      bn->ensure_grad();
                                      for (std::int64_t i = 0; i < lead; ++i)
                                          for (std::int64_t j = 0; j < c; ++j)
                                              bn->grad[j] += o.grad[i * c + j];
                                  }
                              });
}

template <class S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw ValidationError("matmul: incompatible shapes");
    std::int64_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
    std::vector<S> out(static_cast<std::size_t>(n * m), S(0));
    detail::gemm_nn(a.values().data(), b.values().data(), out.data(), n, k, m);
    auto* an = a.node();
    auto* bn = b.node();
    return detail::make_op<S>({n, m}, std::move(out), {a, b},
                              [an, bn, n, k, m](detail::Node<S>& o) {
                                  if (an->requires_grad) {
                                      an->ensure_grad();
                                      detail::gemm_nt(o.grad.data(), bn->value.data(),
                                                      an->grad.data(), n, m, k);
                                  }
                                  if (bn->requires_grad) {
                                      bn->ensure_grad();
                                      detail::gemm_tn(an->value.data(), o.grad.data(),
                                                      bn->grad.data(), n, k, m);
                                  }
                              });
}

template <class S>
Tensor<S> sigmoid(const Tensor<S>& a) {
    std::vector<S> out(a.values());
    for (auto& v : out) v = S(1) / (S(1) + std::exp(-v));
    auto* an = a.node();
    return detail::make_op<S>(a.shape(), std::move(out), {a}, [an](detail::Node<S>& o) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (std::size_t i = 0; i < o.grad.size(); ++i) {
            S y = o.value[i];
            an->grad[i] += o.grad[i] * y * (S(1) - y);
        }
    });
}

template <class S>
Tensor<S> tanh(const Tensor<S>& a) {
    std::vector<S> out(a.values());
    for (auto& v : out) v = std::tanh(v);
    auto* an = a.node();
    return detail::make_op<S>(a.shape(), std::move(out), {a}, [an](detail::Node<S>& o) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (std::size_t i = 0; i < o.grad.size(); ++i) {
            S y = o.value[i];
            an->grad[i] += o.grad[i] * (S(1) - y * y);
        }
    });
}

template <class S>
Tensor<S> relu(const Tensor<S>& a) {
    std::vector<S> out(a.values());
    for (auto& v : out)
        if (v < S(0)) v = S(0);
    auto* an = a.node();
    return detail::make_op<S>(a.shape(), std::move(out), {a}, [an](detail::Node<S>& o) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        for (std::size_t i = 0; i < o.grad.size(); ++i)
            if (an->value[i] > S(0)) an->grad[i] += o.grad[i];
    });
}

template <class S>
Tensor<S> sum(const Tensor<S>& a) {
    S acc = S(0);
    for (S v : a.values()) acc += v;
    auto* an = a.node();
    return detail::make_op<S>({1}, std::vector<S>{acc}, {a}, [an](detail::Node<S>& o) {
        if (!an->requires_grad) return;
        an->ensure_grad();
        S g = o.grad[0];
        for (auto& gv : an->grad) gv += g;
    });
}

template <class S>
Tensor<S> concat_last(const std::vector<Tensor<S>>& parts) {
    if (parts.empty()) throw ValidationError("concat_last: no inputs");
    auto lead_shape = parts[0].shape();
    lead_shape.pop_back();
    std::int64_t total_c = 0;
    for (const auto& p : parts) {
        auto s = p.shape();
        std::int64_t c = s.back();
        s.pop_back();
        if (s != lead_shape) throw ValidationError("concat_last: leading dims differ");
        total_c += c;
    }
    std::int64_t lead = 1;
    for (auto d : lead_shape) lead *= d;

    std::vector<S> out(static_cast<std::size_t>(lead * total_c));
    std::vector<std::int64_t> offsets;
    std::int64_t off = 0;
    for (const auto& p : parts) {
        std::int64_t c = p.shape().back();
        offsets.push_back(off);
        const auto& pv = p.values();
        for (std::int64_t i = 0; i < lead; ++i)
            std::copy(pv.begin() + i * c, pv.begin() + (i + 1) * c,
                      out.begin() + i * total_c + off);
        off += c;
    }

    auto out_shape = lead_shape;
    out_shape.push_back(total_c);
    std::vector<detail::Node<S>*> pnodes;
    std::vector<std::int64_t> widths;
    for (const auto& p : parts) {
        pnodes.push_back(p.node());
        widths.push_back(p.shape().back());
    }
    return detail::make_op<S>(std::move(out_shape), std::move(out), parts,
                              [pnodes, widths, offsets, lead, total_c](detail::Node<S>& o) {
                                  for (std::size_t pi = 0; pi < pnodes.size(); ++pi) {
                                      auto* pn = pnodes[pi];
                                      if (!pn->requires_grad) continue;
                                      pn->ensure_grad();
                                      std::int64_t c = widths[pi], off = offsets[pi];
                                      for (std::int64_t i = 0; i < lead; ++i)
                                          for (std::int64_t j = 0; j < c; ++j)
                                              pn->grad[i * c + j] +=
                                                  o.grad[i * total_c + off + j];
                                  }
                              });
}

template class Tensor<float>;
template class Tensor<double>;

#define GONET_INSTANTIATE(S)                                                      \
    template Tensor<S> add(const Tensor<S>&, const Tensor<S>&);                  \
    template Tensor<S> sub(const Tensor<S>&, const Tensor<S>&);                  \
    template Tensor<S> mul(const Tensor<S>&, const Tensor<S>&);                  \
    template Tensor<S> scale(const Tensor<S>&, S);                               \
    template Tensor<S> add_bias(const Tensor<S>&, const Tensor<S>&);             \
    template Tensor<S> matmul(const Tensor<S>&, const Tensor<S>&);               \
    template Tensor<S> sigmoid(const Tensor<S>&);                                \
    template Tensor<S> tanh(const Tensor<S>&);                                   \
    template Tensor<S> relu(const Tensor<S>&);                                   \
    template Tensor<S> sum(const Tensor<S>&);                                    \
    template Tensor<S> concat_last(const std::vector<Tensor<S>>&);

GONET_INSTANTIATE(float)
GONET_INSTANTIATE(double)
#undef GONET_INSTANTIATE

}  // namespace gonet
