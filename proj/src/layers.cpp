#include "gonet/layers.hpp"

#include <algorithm>
#include <cmath>

#include "op_common.hpp"

namespace gonet {

namespace {

template <class S>
void check_rank(const Tensor<S>& t, std::size_t rank, const char* what) {
    if (t.rank() != rank) throw ValidationError(std::string(what) + ": unexpected rank");
}

}  // namespace

template <class S>
Tensor<S> embedding_forward(const IntMatrix& indices, const Tensor<S>& table) {
    check_rank(table, 2, "embedding table");
    std::int64_t v = table.dim(0), e = table.dim(1);
    std::int64_t b = indices.rows, l = indices.cols;
    std::vector<S> out(static_cast<std::size_t>(b * l * e));
    const auto& tv = table.values();
    for (std::int64_t i = 0; i < b * l; ++i) {
        std::int32_t idx = indices.data[i];
        if (idx < 0 || idx >= v)
            throw LookupError("embedding index " + std::to_string(idx) + " out of range [0, " +
                              std::to_string(v) + ")");
        std::copy(tv.begin() + idx * e, tv.begin() + (idx + 1) * e, out.begin() + i * e);
    }
    auto* tn = table.node();
    auto idx_copy = indices.data;
    return detail::make_op<S>({b, l, e}, std::move(out), {table},
                              [tn, idx_copy, e](detail::Node<S>& o) {
                                  if (!tn->requires_grad) return;
                                  tn->ensure_grad();
                                  for (std::size_t i = 0; i < idx_copy.size(); ++i) {
                                      S* dst = tn->grad.data() + idx_copy[i] * e;
                                      const S* src = o.grad.data() + i * e;
                                      for (std::int64_t j = 0; j < e; ++j) dst[j] += src[j];
                                  }
                              });
}

template <class S>
Tensor<S> mask_positions(const Tensor<S>& input, const ByteMatrix& mask) {
    check_rank(input, 3, "mask_positions input");
    std::int64_t b = input.dim(0), l = input.dim(1), c = input.dim(2);
    if (mask.rows != b || mask.cols != l)
        throw ValidationError("mask_positions: mask shape mismatch");
    std::vector<S> out(input.values());
    for (std::int64_t i = 0; i < b * l; ++i)
        if (!mask.data[i]) std::fill(out.begin() + i * c, out.begin() + (i + 1) * c, S(0));
    auto* in = input.node();
    auto mask_copy = mask.data;
    return detail::make_op<S>(input.shape(), std::move(out), {input},
                              [in, mask_copy, c](detail::Node<S>& o) {
                                  if (!in->requires_grad) return;
                                  in->ensure_grad();
                                  for (std::size_t i = 0; i < mask_copy.size(); ++i) {
                                      if (!mask_copy[i]) continue;
                                      const S* src = o.grad.data() + i * c;
                                      S* dst = in->grad.data() + i * c;
                                      for (std::int64_t j = 0; j < c; ++j) dst[j] += src[j];
                                  }
                              });
}

template <class S>
Tensor<S> conv1d_same(const Tensor<S>& input, const Tensor<S>& weight, const Tensor<S>& bias) {
    check_rank(input, 3, "conv input");
    check_rank(weight, 3, "conv weight");
    check_rank(bias, 1, "conv bias");
    std::int64_t b = input.dim(0), l = input.dim(1), cin = input.dim(2);
    std::int64_t k = weight.dim(0), wcin = weight.dim(1), cout = weight.dim(2);
    if (k % 2 == 0) throw ConfigError("conv1d_same: kernel size must be odd");
    if (wcin != cin) throw ValidationError("conv1d_same: channel mismatch");
    if (bias.dim(0) != cout) throw ValidationError("conv1d_same: bias mismatch");
    std::int64_t pad = (k - 1) / 2;

    std::vector<S> out(static_cast<std::size_t>(b * l * cout));
    const S* x = input.values().data();
    const S* w = weight.values().data();
    const S* bs = bias.values().data();
    for (std::int64_t bi = 0; bi < b; ++bi) {
        for (std::int64_t li = 0; li < l; ++li) {
            S* orow = out.data() + (bi * l + li) * cout;
            std::copy(bs, bs + cout, orow);
            for (std::int64_t ki = 0; ki < k; ++ki) {
                std::int64_t t = li + ki - pad;
                if (t < 0 || t >= l) continue;
                const S* xrow = x + (bi * l + t) * cin;
                const S* wrow = w + ki * cin * cout;
                for (std::int64_t ci = 0; ci < cin; ++ci) {
                    S xv = xrow[ci];
                    if (xv == S(0)) continue;
                    const S* wc = wrow + ci * cout;
                    for (std::int64_t co = 0; co < cout; ++co) orow[co] += xv * wc[co];
                }
            }
        }
    }

    auto* in = input.node();
    auto* wn = weight.node();
    auto* bn = bias.node();
    return detail::make_op<S>(
        {b, l, cout}, std::move(out), {input, weight, bias},
        [in, wn, bn, b, l, cin, k, cout, pad](detail::Node<S>& o) {
            const S* dy = o.grad.data();
            if (in->requires_grad) {
                in->ensure_grad();
                const S* w = wn->value.data();
                for (std::int64_t bi = 0; bi < b; ++bi)
                    for (std::int64_t li = 0; li < l; ++li) {
                        const S* drow = dy + (bi * l + li) * cout;
                        for (std::int64_t ki = 0; ki < k; ++ki) {
                            std::int64_t t = li + ki - pad;
                            if (t < 0 || t >= l) continue;
                            S* xg = in->grad.data() + (bi * l + t) * cin;
                            const S* wrow = w + ki * cin * cout;
                            for (std::int64_t ci = 0; ci < cin; ++ci) {
                                const S* wc = wrow + ci * cout;
                                S acc = S(0);
                                for (std::int64_t co = 0; co < cout; ++co)
                                    acc += drow[co] * wc[co];
                                xg[ci] += acc;
                            }
                        }
                    }
            }
            if (wn->requires_grad) {
                wn->ensure_grad();
                const S* x = in->value.data();
                for (std::int64_t bi = 0; bi < b; ++bi)
                    for (std::int64_t li = 0; li < l; ++li) {
                        const S* drow = dy + (bi * l + li) * cout;
                        for (std::int64_t ki = 0; ki < k; ++ki) {
                            std::int64_t t = li + ki - pad;
                            if (t < 0 || t >= l) continue;
                            const S* xrow = x + (bi * l + t) * cin;
                            S* wrow = wn->grad.data() + ki * cin * cout;
                            for (std::int64_t ci = 0; ci < cin; ++ci) {
                                S xv = xrow[ci];
                                if (xv == S(0)) continue;
                                S* wc = wrow + ci * cout;
                                for (std::int64_t co = 0; co < cout; ++co)
                                    wc[co] += xv * drow[co];
                            }
                        }
                    }
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::int64_t i = 0; i < b * l; ++i) {
                    const S* drow = dy + i * cout;
                    for (std::int64_t co = 0; co < cout; ++co) bn->grad[co] += drow[co];
                }
            }
        });
}

template <class S>
Tensor<S> batchnorm_forward(const Tensor<S>& input, const Tensor<S>& gamma, const Tensor<S>& beta,
                            BatchNormState<S>& state, Mode mode) {
    check_rank(input, 3, "batchnorm input");
    std::int64_t b = input.dim(0), l = input.dim(1), c = input.dim(2);
    if (gamma.dim(0) != c || beta.dim(0) != c)
        throw ValidationError("batchnorm: gamma/beta length mismatch");
    if (static_cast<std::int64_t>(state.running_mean.size()) != c)
        throw ValidationError("batchnorm: state channel mismatch");
    std::int64_t n = b * l;
    const S* x = input.values().data();
    const S* g = gamma.values().data();
    const S* bt = beta.values().data();
    S eps = static_cast<S>(state.eps);

    std::vector<S> mean(c), inv_std(c);
    if (mode == Mode::train) {
        if (n < 2) throw ValidationError("batchnorm: need more than one element per channel");
        std::vector<S> var(c, S(0));
        std::fill(mean.begin(), mean.end(), S(0));
        for (std::int64_t i = 0; i < n; ++i)
            for (std::int64_t j = 0; j < c; ++j) mean[j] += x[i * c + j];
        for (std::int64_t j = 0; j < c; ++j) mean[j] /= static_cast<S>(n);
        for (std::int64_t i = 0; i < n; ++i)
            for (std::int64_t j = 0; j < c; ++j) {
                S d = x[i * c + j] - mean[j];
                var[j] += d * d;
            }
        for (std::int64_t j = 0; j < c; ++j) var[j] /= static_cast<S>(n);
        for (std::int64_t j = 0; j < c; ++j) inv_std[j] = S(1) / std::sqrt(var[j] + eps);

        S mom = static_cast<S>(state.momentum);
        S unbias = static_cast<S>(n) / static_cast<S>(n - 1);
        for (std::int64_t j = 0; j < c; ++j) {
            state.running_mean[j] = (S(1) - mom) * state.running_mean[j] + mom * mean[j];
            state.running_var[j] = (S(1) - mom) * state.running_var[j] + mom * var[j] * unbias;
        }
        state.steps += 1;
    } else {
        if (state.steps == 0)
            throw ValidationError("batchnorm: eval mode before any train-mode step");
        mean = state.running_mean;
        for (std::int64_t j = 0; j < c; ++j)
            inv_std[j] = S(1) / std::sqrt(state.running_var[j] + eps);
    }

    std::vector<S> xhat(static_cast<std::size_t>(n * c));
    std::vector<S> out(static_cast<std::size_t>(n * c));
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < c; ++j) {
            S xh = (x[i * c + j] - mean[j]) * inv_std[j];
            xhat[i * c + j] = xh;
            out[i * c + j] = g[j] * xh + bt[j];
        }

    auto* in = input.node();
    auto* gn = gamma.node();
    auto* bn = beta.node();
    bool train = mode == Mode::train;
    return detail::make_op<S>(
        input.shape(), std::move(out), {input, gamma, beta},
        [in, gn, bn, n, c, xhat = std::move(xhat), inv_std = std::move(inv_std),
         train](detail::Node<S>& o) {
            const S* dy = o.grad.data();
            if (gn->requires_grad) {
                gn->ensure_grad();
                for (std::int64_t i = 0; i < n; ++i)
                    for (std::int64_t j = 0; j < c; ++j)
                        gn->grad[j] += dy[i * c + j] * xhat[i * c + j];
            }
            if (bn->requires_grad) {
                bn->ensure_grad();
                for (std::int64_t i = 0; i < n; ++i)
                    for (std::int64_t j = 0; j < c; ++j) bn->grad[j] += dy[i * c + j];
            }
            if (!in->requires_grad) return;
            in->ensure_grad();
            const S* g = gn->value.data();
            if (!train) {
                for (std::int64_t i = 0; i < n; ++i)
                    for (std::int64_t j = 0; j < c; ++j)
                        in->grad[i * c + j] += dy[i * c + j] * g[j] * inv_std[j];
                return;
            }
            // d_x = inv_std/n * (n*dxhat - sum(dxhat) - xhat * sum(dxhat*xhat))
            std::vector<S> sum_d(c, S(0)), sum_dx(c, S(0));
            for (std::int64_t i = 0; i < n; ++i)
                for (std::int64_t j = 0; j < c; ++j) {
                    S dxh = dy[i * c + j] * g[j];
                    sum_d[j] += dxh;
                    sum_dx[j] += dxh * xhat[i * c + j];
                }
            for (std::int64_t i = 0; i < n; ++i)
                for (std::int64_t j = 0; j < c; ++j) {
                    S dxh = dy[i * c + j] * g[j];
                    in->grad[i * c + j] += inv_std[j] / static_cast<S>(n) *
                                           (static_cast<S>(n) * dxh - sum_d[j] -
                                            xhat[i * c + j] * sum_dx[j]);
                }
        });
}

template <class S>
Tensor<S> gru_cell(const Tensor<S>& x, const Tensor<S>& h_prev, const GruWeights<S>& w) {
    check_rank(x, 2, "gru_cell x");
    check_rank(h_prev, 2, "gru_cell h_prev");
    if (x.dim(0) != h_prev.dim(0)) throw ValidationError("gru_cell: batch mismatch");
    if (x.dim(1) != w.input_dim() || h_prev.dim(1) != w.hidden_dim())
        throw ValidationError("gru_cell: weight shape mismatch");
    auto z = sigmoid(add_bias(add(matmul(x, w.wz), matmul(h_prev, w.uz)), w.bz));
    auto r = sigmoid(add_bias(add(matmul(x, w.wr), matmul(h_prev, w.ur)), w.br));
    auto c = gonet::tanh(add_bias(add(matmul(x, w.wh), matmul(mul(r, h_prev), w.uh)), w.bh));
    return add(sub(h_prev, mul(z, h_prev)), mul(z, c));
}

namespace {

template <class S>
void check_gru_shapes(const Tensor<S>& input, const ByteMatrix& mask, const GruWeights<S>& w) {
    if (input.rank() != 3) throw ValidationError("gru_sequence: input must be B x L x I");
    if (mask.rows != input.dim(0) || mask.cols != input.dim(1))
        throw ValidationError("gru_sequence: mask shape mismatch");
    if (input.dim(2) != w.input_dim()) throw ValidationError("gru_sequence: input dim mismatch");
    std::int64_t h = w.hidden_dim();
    auto expect = [&](const Tensor<S>& t, std::int64_t r0, std::int64_t r1, const char* name) {
        if (t.rank() != 2 || t.dim(0) != r0 || t.dim(1) != r1)
            throw ValidationError(std::string("gru_sequence: bad shape for ") + name);
    };
    expect(w.wz, w.input_dim(), h, "wz");
    expect(w.wr, w.input_dim(), h, "wr");
    expect(w.wh, w.input_dim(), h, "wh");
    expect(w.uz, h, h, "uz");
    expect(w.ur, h, h, "ur");
    expect(w.uh, h, h, "uh");
    if (w.bz.size() != h || w.br.size() != h || w.bh.size() != h)
        throw ValidationError("gru_sequence: bad bias shape");
}

}  // namespace

template <class S>
Tensor<S> gru_sequence(const Tensor<S>& input, const ByteMatrix& mask, const GruWeights<S>& w,
                       bool reverse) {
    check_gru_shapes(input, mask, w);
    std::int64_t b = input.dim(0), l = input.dim(1), in_dim = input.dim(2);
    std::int64_t h = w.hidden_dim();

    const S* x = input.values().data();
    const S* wz = w.wz.values().data();
    const S* wr = w.wr.values().data();
    const S* wh = w.wh.values().data();
    const S* uz = w.uz.values().data();
    const S* ur = w.ur.values().data();
    const S* uh = w.uh.values().data();
    const S* bz = w.bz.values().data();
    const S* br = w.br.values().data();
    const S* bh = w.bh.values().data();

    std::vector<S> out(static_cast<std::size_t>(b * l * h));
    // Gate activations per scan step, kept for BPTT.
    std::vector<S> zs(static_cast<std::size_t>(l * b * h));
    std::vector<S> rs(static_cast<std::size_t>(l * b * h));
    std::vector<S> cs(static_cast<std::size_t>(l * b * h));

    std::vector<S> hcur(static_cast<std::size_t>(b * h), S(0));
    std::vector<S> xt(static_cast<std::size_t>(b * in_dim));
    std::vector<S> az(static_cast<std::size_t>(b * h)), ar(az.size()), ac(az.size()),
        rh(az.size());

    for (std::int64_t s = 0; s < l; ++s) {
        std::int64_t t = reverse ? l - 1 - s : s;
        for (std::int64_t bi = 0; bi < b; ++bi)
            std::copy(x + (bi * l + t) * in_dim, x + (bi * l + t + 1) * in_dim,
                      xt.begin() + bi * in_dim);

        auto gate = [&](std::vector<S>& acc, const S* wi, const S* ui, const S* bi_,
                        const S* hsrc) {
            std::fill(acc.begin(), acc.end(), S(0));
            detail::gemm_nn(xt.data(), wi, acc.data(), b, in_dim, h);
            detail::gemm_nn(hsrc, ui, acc.data(), b, h, h);
            for (std::int64_t i = 0; i < b; ++i)
                for (std::int64_t j = 0; j < h; ++j) acc[i * h + j] += bi_[j];
        };
        gate(az, wz, uz, bz, hcur.data());
        gate(ar, wr, ur, br, hcur.data());
        S* zrow = zs.data() + s * b * h;
        S* rrow = rs.data() + s * b * h;
        S* crow = cs.data() + s * b * h;
        for (std::size_t i = 0; i < az.size(); ++i) {
            zrow[i] = S(1) / (S(1) + std::exp(-az[i]));
            rrow[i] = S(1) / (S(1) + std::exp(-ar[i]));
            rh[i] = rrow[i] * hcur[i];
        }
        std::fill(ac.begin(), ac.end(), S(0));
        detail::gemm_nn(xt.data(), wh, ac.data(), b, in_dim, h);
        detail::gemm_nn(rh.data(), uh, ac.data(), b, h, h);
        for (std::int64_t i = 0; i < b; ++i)
            for (std::int64_t j = 0; j < h; ++j) ac[i * h + j] += bh[j];
        for (std::size_t i = 0; i < ac.size(); ++i) crow[i] = std::tanh(ac[i]);

        for (std::int64_t bi = 0; bi < b; ++bi) {
            S* hrow = hcur.data() + bi * h;
            if (mask.at(bi, t)) {
                const S* z = zrow + bi * h;
                const S* c = crow + bi * h;
                for (std::int64_t j = 0; j < h; ++j)
                    hrow[j] = (S(1) - z[j]) * hrow[j] + z[j] * c[j];
            }
            std::copy(hrow, hrow + h, out.begin() + (bi * l + t) * h);
        }
    }

    auto* in_node = input.node();
    detail::Node<S>* wnodes[9] = {w.wz.node(), w.wr.node(), w.wh.node(),
                                  w.uz.node(), w.ur.node(), w.uh.node(),
                                  w.bz.node(), w.br.node(), w.bh.node()};
    auto mask_copy = mask;
    std::vector<Tensor<S>> parents = {input, w.wz, w.wr, w.wh, w.uz, w.ur,
                                      w.uh, w.bz, w.br, w.bh};

    return detail::make_op<S>(
        {b, l, h}, std::move(out), parents,
        [in_node, wnodes, mask_copy, b, l, h, in_dim, reverse, zs = std::move(zs),
         rs = std::move(rs), cs = std::move(cs)](detail::Node<S>& o) {
            auto& wz_n = *wnodes[0];
            auto& wr_n = *wnodes[1];
            auto& wh_n = *wnodes[2];
            auto& uz_n = *wnodes[3];
            auto& ur_n = *wnodes[4];
            auto& uh_n = *wnodes[5];
            for (auto* wn : wnodes)
                if (wn->requires_grad) wn->ensure_grad();
            if (in_node->requires_grad) in_node->ensure_grad();

            const S* y = o.value.data();
            const S* dy = o.grad.data();
            const S* x = in_node->value.data();

            std::vector<S> dh(static_cast<std::size_t>(b * h), S(0));
            std::vector<S> g(dh.size()), dzp(dh.size()), drp(dh.size()), dcp(dh.size()),
                drh(dh.size()), hp(dh.size()), rh(dh.size());
            std::vector<S> xt(static_cast<std::size_t>(b * in_dim));
            std::vector<S> dxt(xt.size());

            for (std::int64_t s = l - 1; s >= 0; --s) {
                std::int64_t t = reverse ? l - 1 - s : s;
                std::int64_t t_prev = reverse ? t + 1 : t - 1;
                const S* zrow = zs.data() + s * b * h;
                const S* rrow = rs.data() + s * b * h;
                const S* crow = cs.data() + s * b * h;

                for (std::int64_t bi = 0; bi < b; ++bi) {
                    const S* hsrc =
                        (s == 0) ? nullptr : y + (bi * l + t_prev) * h;
                    for (std::int64_t j = 0; j < h; ++j)
                        hp[bi * h + j] = hsrc ? hsrc[j] : S(0);
                    std::copy(x + (bi * l + t) * in_dim, x + (bi * l + t + 1) * in_dim,
                              xt.begin() + bi * in_dim);
                    for (std::int64_t j = 0; j < h; ++j)
                        g[bi * h + j] = dh[bi * h + j] + dy[(bi * l + t) * h + j];
                }

                std::fill(dzp.begin(), dzp.end(), S(0));
                std::fill(dcp.begin(), dcp.end(), S(0));
                std::fill(rh.begin(), rh.end(), S(0));
                for (std::int64_t bi = 0; bi < b; ++bi) {
                    if (!mask_copy.at(bi, t)) continue;
                    for (std::int64_t j = 0; j < h; ++j) {
                        std::int64_t i = bi * h + j;
                        S z = zrow[i], c = crow[i];
                        dzp[i] = g[i] * (c - hp[i]) * z * (S(1) - z);
                        dcp[i] = g[i] * z * (S(1) - c * c);
                        rh[i] = rrow[i] * hp[i];
                    }
                }

                // d(r.h) = dc_pre * Uh^T
                std::fill(drh.begin(), drh.end(), S(0));
                detail::gemm_nt(dcp.data(), uh_n.value.data(), drh.data(), b, h, h);

                std::fill(drp.begin(), drp.end(), S(0));
                for (std::int64_t bi = 0; bi < b; ++bi) {
                    if (!mask_copy.at(bi, t)) {
                        for (std::int64_t j = 0; j < h; ++j) dh[bi * h + j] = g[bi * h + j];
                        continue;
                    }
                    for (std::int64_t j = 0; j < h; ++j) {
                        std::int64_t i = bi * h + j;
                        S r = rrow[i];
                        drp[i] = drh[i] * hp[i] * r * (S(1) - r);
                        dh[i] = g[i] * (S(1) - zrow[i]) + drh[i] * r;
                    }
                }
                detail::gemm_nt(dzp.data(), uz_n.value.data(), dh.data(), b, h, h);
                detail::gemm_nt(drp.data(), ur_n.value.data(), dh.data(), b, h, h);

                if (wz_n.requires_grad) detail::gemm_tn(xt.data(), dzp.data(), wz_n.grad.data(), b, in_dim, h);
                if (wr_n.requires_grad) detail::gemm_tn(xt.data(), drp.data(), wr_n.grad.data(), b, in_dim, h);
                if (wh_n.requires_grad) detail::gemm_tn(xt.data(), dcp.data(), wh_n.grad.data(), b, in_dim, h);
                if (uz_n.requires_grad) detail::gemm_tn(hp.data(), dzp.data(), uz_n.grad.data(), b, h, h);
                if (ur_n.requires_grad) detail::gemm_tn(hp.data(), drp.data(), ur_n.grad.data(), b, h, h);
                if (uh_n.requires_grad) detail::gemm_tn(rh.data(), dcp.data(), uh_n.grad.data(), b, h, h);
                for (std::int64_t bi = 0; bi < b; ++bi)
                    for (std::int64_t j = 0; j < h; ++j) {
                        std::int64_t i = bi * h + j;
                        if (wnodes[6]->requires_grad) wnodes[6]->grad[j] += dzp[i];
                        if (wnodes[7]->requires_grad) wnodes[7]->grad[j] += drp[i];
                        if (wnodes[8]->requires_grad) wnodes[8]->grad[j] += dcp[i];
                    }

                if (in_node->requires_grad) {
                    std::fill(dxt.begin(), dxt.end(), S(0));
                    detail::gemm_nt(dzp.data(), wz_n.value.data(), dxt.data(), b, h, in_dim);
                    detail::gemm_nt(drp.data(), wr_n.value.data(), dxt.data(), b, h, in_dim);
                    detail::gemm_nt(dcp.data(), wh_n.value.data(), dxt.data(), b, h, in_dim);
                    for (std::int64_t bi = 0; bi < b; ++bi) {
                        S* dst = in_node->grad.data() + (bi * l + t) * in_dim;
                        const S* src = dxt.data() + bi * in_dim;
                        for (std::int64_t j = 0; j < in_dim; ++j) dst[j] += src[j];
                    }
                }
            }
        });
}

template <class S>
Tensor<S> bigru_forward(const Tensor<S>& input, const ByteMatrix& mask, const GruWeights<S>& fwd,
                        const GruWeights<S>& bwd) {
    auto f = gru_sequence(input, mask, fwd, false);
    auto r = gru_sequence(input, mask, bwd, true);
    return concat_last<S>({f, r});
}

template <class S>
Tensor<S> masked_mean_pool(const Tensor<S>& input, const ByteMatrix& mask) {
    check_rank(input, 3, "masked_mean_pool input");
    std::int64_t b = input.dim(0), l = input.dim(1), c = input.dim(2);
    if (mask.rows != b || mask.cols != l)
        throw ValidationError("masked_mean_pool: mask shape mismatch");

    std::vector<S> out(static_cast<std::size_t>(b * c), S(0));
    std::vector<S> inv_count(static_cast<std::size_t>(b));
    const S* x = input.values().data();
    for (std::int64_t bi = 0; bi < b; ++bi) {
        std::int64_t count = 0;
        for (std::int64_t li = 0; li < l; ++li) {
            if (!mask.at(bi, li)) continue;
            ++count;
            const S* row = x + (bi * l + li) * c;
            for (std::int64_t j = 0; j < c; ++j) out[bi * c + j] += row[j];
        }
        if (count == 0)
            throw ValidationError("masked_mean_pool: all-zero mask row " + std::to_string(bi));
        inv_count[bi] = S(1) / static_cast<S>(count);
        for (std::int64_t j = 0; j < c; ++j) out[bi * c + j] *= inv_count[bi];
    }

    auto* in = input.node();
    auto mask_copy = mask;
    return detail::make_op<S>({b, c}, std::move(out), {input},
                              [in, mask_copy, b, l, c,
                               inv_count = std::move(inv_count)](detail::Node<S>& o) {
                                  if (!in->requires_grad) return;
                                  in->ensure_grad();
                                  for (std::int64_t bi = 0; bi < b; ++bi) {
                                      const S* drow = o.grad.data() + bi * c;
                                      for (std::int64_t li = 0; li < l; ++li) {
                                          if (!mask_copy.at(bi, li)) continue;
                                          S* dst = in->grad.data() + (bi * l + li) * c;
                                          for (std::int64_t j = 0; j < c; ++j)
                                              dst[j] += drow[j] * inv_count[bi];
                                      }
                                  }
                              });
}

template <class S>
Tensor<S> dense_forward(const Tensor<S>& input, const Tensor<S>& weight, const Tensor<S>& bias,
                        Activation act) {
    auto out = add_bias(matmul(input, weight), bias);
    switch (act) {
        case Activation::none:
            return out;
        case Activation::relu:
            return relu(out);
        case Activation::sigmoid:
            return sigmoid(out);
    }
    throw ConfigError("dense_forward: unknown activation");
}

template <class S>
Tensor<S> dropout(const Tensor<S>& input, double rate, Mode mode, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0)
        throw ConfigError("dropout: rate must be in [0, 1)");
    if (mode == Mode::eval || rate == 0.0) return input;

    S scale = static_cast<S>(1.0 / (1.0 - rate));
    std::vector<S> mult(input.values().size());
    for (auto& m : mult) m = rng.next_uniform() >= rate ? scale : S(0);
    std::vector<S> out(input.values());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mult[i];
    auto* in = input.node();
    return detail::make_op<S>(input.shape(), std::move(out), {input},
                              [in, mult = std::move(mult)](detail::Node<S>& o) {
                                  if (!in->requires_grad) return;
                                  in->ensure_grad();
                                  for (std::size_t i = 0; i < o.grad.size(); ++i)
                                      in->grad[i] += o.grad[i] * mult[i];
                              });
}

template <class S>
Tensor<S> bce_multilabel_loss(const Tensor<S>& pred, const ByteMatrix& target) {
    check_rank(pred, 2, "bce pred");
    std::int64_t m = pred.dim(0), k = pred.dim(1);
    if (target.rows != m || target.cols != k)
        throw ValidationError("bce_multilabel_loss: shape mismatch");

    const S lo = static_cast<S>(1e-7);
    const S hi = S(1) - lo;
    const S* p = pred.values().data();
    S acc = S(0);
    for (std::int64_t i = 0; i < m * k; ++i) {
        // The clamp must not launder non-finite predictions into a finite
        // loss; training relies on the loss going NaN to detect divergence.
        S pc = std::isfinite(p[i]) ? std::min(hi, std::max(lo, p[i])) : p[i];
        acc += target.data[i] ? std::log(pc) : std::log(S(1) - pc);
    }
    S loss = -acc / static_cast<S>(m);

    auto* pn = pred.node();
    auto target_copy = target.data;
    return detail::make_op<S>(
        {1}, std::vector<S>{loss}, {pred},
        [pn, target_copy, m, lo, hi](detail::Node<S>& o) {
            if (!pn->requires_grad) return;
            pn->ensure_grad();
            S g = o.grad[0] / static_cast<S>(m);
            for (std::size_t i = 0; i < target_copy.size(); ++i) {
                S p = pn->value[i];
                if (p <= lo || p >= hi) continue;  // clamped region, zero slope
                S d = target_copy[i] ? -S(1) / p : S(1) / (S(1) - p);
                pn->grad[i] += g * d;
            }
        });
}

#define GONET_INSTANTIATE(S)                                                                   \
    template Tensor<S> embedding_forward(const IntMatrix&, const Tensor<S>&);                 \
    template Tensor<S> mask_positions(const Tensor<S>&, const ByteMatrix&);                   \
    template Tensor<S> conv1d_same(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&);     \
    template Tensor<S> batchnorm_forward(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&,\
                                         BatchNormState<S>&, Mode);                           \
    template Tensor<S> gru_cell(const Tensor<S>&, const Tensor<S>&, const GruWeights<S>&);    \
    template Tensor<S> gru_sequence(const Tensor<S>&, const ByteMatrix&, const GruWeights<S>&,\
                                    bool);                                                    \
    template Tensor<S> bigru_forward(const Tensor<S>&, const ByteMatrix&, const GruWeights<S>&,\
                                     const GruWeights<S>&);                                   \
    template Tensor<S> masked_mean_pool(const Tensor<S>&, const ByteMatrix&);                 \
    template Tensor<S> dense_forward(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&,    \
                                     Activation);                                             \
    template Tensor<S> dropout(const Tensor<S>&, double, Mode, Rng&);                         \
    template Tensor<S> bce_multilabel_loss(const Tensor<S>&, const ByteMatrix&);

GONET_INSTANTIATE(float)
GONET_INSTANTIATE(double)
#undef GONET_INSTANTIATE

}  // namespace gonet
