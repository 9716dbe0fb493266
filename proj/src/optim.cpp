#include "gonet/optim.hpp"

#include <cmath>

namespace gonet {

template <class S>
void Adam<S>::step(std::vector<Parameter<S>>& params) {
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i].assign(params[i].tensor.values().size(), S(0));
            v_[i].assign(params[i].tensor.values().size(), S(0));
        }
    }
    if (m_.size() != params.size())
        throw ConfigError("adam: parameter count changed between steps");

    t_ += 1;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    S b1 = static_cast<S>(cfg_.beta1);
    S b2 = static_cast<S>(cfg_.beta2);
    S lr = static_cast<S>(cfg_.learning_rate);
    S eps = static_cast<S>(cfg_.eps);

    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        if (!p.tensor.has_grad())
            throw NumericError("adam: missing gradient for parameter " + p.name);
        auto& theta = p.tensor.values();
        const auto& g = p.tensor.grad();
        if (m_[i].size() != theta.size())
            throw ConfigError("adam: parameter " + p.name + " changed size");
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < theta.size(); ++j) {
            m[j] = b1 * m[j] + (S(1) - b1) * g[j];
            v[j] = b2 * v[j] + (S(1) - b2) * g[j] * g[j];
            S mhat = m[j] / static_cast<S>(bc1);
            S vhat = v[j] / static_cast<S>(bc2);
            theta[j] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace gonet
