#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gonet/tensor.hpp"

namespace gonet {

// A named trainable tensor. Parameters always retain grad storage.
template <class S>
struct Parameter {
    std::string name;
    Tensor<S> tensor;

    Parameter(std::string n, Tensor<S> t) : name(std::move(n)), tensor(std::move(t)) {
        tensor.set_requires_grad(true);
    }
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction:
//   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
//   mhat = m / (1-b1^t);   vhat = v / (1-b2^t)
//   theta <- theta - lr * mhat / (sqrt(vhat) + eps)
template <class S>
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    // Applies one update to every parameter. Each must carry a populated
    // gradient; the step counter increments exactly once per call.
    void step(std::vector<Parameter<S>>& params);

    double learning_rate() const { return cfg_.learning_rate; }
    void set_learning_rate(double lr) { cfg_.learning_rate = lr; }
    std::int64_t steps() const { return t_; }

private:
    AdamConfig cfg_;
    std::int64_t t_ = 0;
    std::vector<std::vector<S>> m_;
    std::vector<std::vector<S>> v_;
};

}  // namespace gonet
