#include "gonet/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gonet/metrics.hpp"

namespace gonet {

void ModelConfig::validate() const {
    if (embed_dim < 1 || conv_filters < 1 || gru_hidden < 1 || dense_hidden < 1)
        throw ConfigError("model config: layer widths must be positive");
    if (output_dim < 1) throw ConfigError("model config: output_dim must be positive");
    if (kernel_sizes.empty()) throw ConfigError("model config: no kernel sizes");
    for (auto k : kernel_sizes)
        if (k < 1 || k % 2 == 0)
            throw ConfigError("model config: kernel sizes must be odd, got " + std::to_string(k));
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw ConfigError("model config: dropout rate must be in [0, 1)");
    if (max_len < 1) throw ConfigError("model config: max_len must be >= 1");
}

void TrainConfig::validate() const {
    if (learning_rate < 0.0) throw ConfigError("train config: negative learning rate");
    if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
    if (validation_fraction <= 0.0 || validation_fraction >= 1.0)
        throw ConfigError("train config: validation_fraction must be in (0, 1)");
    if (plateau_patience < 1) throw ConfigError("train config: plateau_patience must be >= 1");
    if (plateau_factor <= 0.0 || plateau_factor > 1.0)
        throw ConfigError("train config: plateau_factor must be in (0, 1]");
    if (lr_floor < 0.0) throw ConfigError("train config: negative lr_floor");
}

std::int64_t default_epochs(GoNamespace ns) {
    switch (ns) {
        case GoNamespace::biological_process:
            return 48;
        case GoNamespace::cellular_component:
            return 128;
        case GoNamespace::molecular_function:
            return 155;
    }
    return 48;
}

namespace {

template <class S>
std::vector<S> glorot_uniform(std::int64_t fan_in, std::int64_t fan_out, std::int64_t count,
                              Rng& rng) {
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::vector<S> out(static_cast<std::size_t>(count));
    for (auto& v : out) v = static_cast<S>((rng.next_uniform() * 2.0 - 1.0) * limit);
    return out;
}

// Orthogonal n x n matrix from the QR factorization of a Gaussian draw,
// sign-fixed on diag(R) so the result is unique.
template <class S>
std::vector<S> orthogonal(std::int64_t n, Rng& rng) {
    std::vector<double> a(static_cast<std::size_t>(n * n));
    for (auto& v : a) v = rng.next_normal();

    std::vector<std::vector<double>> vs;  // Householder vectors
    for (std::int64_t k = 0; k < n; ++k) {
        std::vector<double> v(static_cast<std::size_t>(n - k));
        double norm2 = 0;
        for (std::int64_t i = k; i < n; ++i) {
            v[static_cast<std::size_t>(i - k)] = a[static_cast<std::size_t>(i * n + k)];
            norm2 += v[static_cast<std::size_t>(i - k)] * v[static_cast<std::size_t>(i - k)];
        }
        double norm = std::sqrt(norm2);
        if (norm == 0.0) {
            vs.push_back({});
            continue;
        }
        double alpha = v[0] >= 0 ? -norm : norm;
        v[0] -= alpha;
        double vnorm2 = std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
        if (vnorm2 == 0.0) {
            vs.push_back({});
            continue;
        }
        // Apply H = I - 2 v v^T / (v^T v) to the trailing block.
        for (std::int64_t j = k; j < n; ++j) {
            double dot = 0;
            for (std::int64_t i = k; i < n; ++i)
                dot += v[static_cast<std::size_t>(i - k)] * a[static_cast<std::size_t>(i * n + j)];
            double f = 2.0 * dot / vnorm2;
            for (std::int64_t i = k; i < n; ++i)
                a[static_cast<std::size_t>(i * n + j)] -= f * v[static_cast<std::size_t>(i - k)];
        }
        vs.push_back(std::move(v));
    }

    // Q = H_0 ... H_{n-1} I, built by applying reflectors in reverse.
    std::vector<double> q(static_cast<std::size_t>(n * n), 0.0);
    for (std::int64_t i = 0; i < n; ++i) q[static_cast<std::size_t>(i * n + i)] = 1.0;
    for (std::int64_t k = n - 1; k >= 0; --k) {
        const auto& v = vs[static_cast<std::size_t>(k)];
        if (v.empty()) continue;
        double vnorm2 = std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
        for (std::int64_t j = 0; j < n; ++j) {
            double dot = 0;
            for (std::int64_t i = k; i < n; ++i)
                dot += v[static_cast<std::size_t>(i - k)] * q[static_cast<std::size_t>(i * n + j)];
            double f = 2.0 * dot / vnorm2;
            for (std::int64_t i = k; i < n; ++i)
                q[static_cast<std::size_t>(i * n + j)] -= f * v[static_cast<std::size_t>(i - k)];
        }
    }
    // R's diagonal now sits in `a`; flip Q columns where it is negative.
    for (std::int64_t j = 0; j < n; ++j)
        if (a[static_cast<std::size_t>(j * n + j)] < 0.0)
            for (std::int64_t i = 0; i < n; ++i)
                q[static_cast<std::size_t>(i * n + j)] = -q[static_cast<std::size_t>(i * n + j)];

    std::vector<S> out(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) out[i] = static_cast<S>(q[i]);
    return out;
}

}  // namespace

template <class S>
Tensor<S> Model<S>::add_param(const std::string& name, std::vector<std::int64_t> shape,
                              std::vector<S> values) {
    auto t = Tensor<S>::from(std::move(shape), std::move(values));
    params_.emplace_back(name, t);
    return t;
}

template <class S>
Model<S>::Model(ModelConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)),
      bn_state_(cfg_.conv_concat_dim()),
      dropout_rng_(Rng(seed).stream("dropout")) {
    cfg_.validate();
    Rng init = Rng(seed).stream("init");

    std::int64_t vocab = static_cast<std::int64_t>(Alphabet::kSize) + 1;  // + pad row
    std::int64_t e = cfg_.embed_dim;
    std::int64_t f = cfg_.conv_filters;
    std::int64_t cc = cfg_.conv_concat_dim();
    std::int64_t h = cfg_.gru_hidden;

    embed_ = add_param("embedding.table", {vocab, e}, glorot_uniform<S>(vocab, e, vocab * e, init));

    for (auto k : cfg_.kernel_sizes) {
        std::string base = "conv" + std::to_string(k);
        conv_w_.push_back(add_param(base + ".weight", {k, e, f},
                                    glorot_uniform<S>(k * e, k * f, k * e * f, init)));
        conv_b_.push_back(add_param(base + ".bias", {f},
                                    std::vector<S>(static_cast<std::size_t>(f), S(0))));
    }

    gamma_ = add_param("bn.gamma", {cc}, std::vector<S>(static_cast<std::size_t>(cc), S(1)));
    beta_ = add_param("bn.beta", {cc}, std::vector<S>(static_cast<std::size_t>(cc), S(0)));

    auto make_gru = [&](const std::string& dir) {
        GruWeights<S> w;
        auto input_mat = [&](const std::string& n) {
            return add_param("gru." + dir + "." + n, {cc, h},
                             glorot_uniform<S>(cc, h, cc * h, init));
        };
        auto recur_mat = [&](const std::string& n) {
            return add_param("gru." + dir + "." + n, {h, h}, orthogonal<S>(h, init));
        };
        auto bias_vec = [&](const std::string& n) {
            return add_param("gru." + dir + "." + n, {h},
                             std::vector<S>(static_cast<std::size_t>(h), S(0)));
        };
        w.wz = input_mat("wz");
        w.wr = input_mat("wr");
        w.wh = input_mat("wh");
        w.uz = recur_mat("uz");
        w.ur = recur_mat("ur");
        w.uh = recur_mat("uh");
        w.bz = bias_vec("bz");
        w.br = bias_vec("br");
        w.bh = bias_vec("bh");
        return w;
    };
    gru_fwd_ = make_gru("fwd");
    gru_bwd_ = make_gru("bwd");

    std::int64_t pd = cfg_.pooled_dim();
    std::int64_t dh = cfg_.dense_hidden;
    std::int64_t od = cfg_.output_dim;
    fc1_w_ = add_param("fc1.weight", {pd, dh}, glorot_uniform<S>(pd, dh, pd * dh, init));
    fc1_b_ = add_param("fc1.bias", {dh}, std::vector<S>(static_cast<std::size_t>(dh), S(0)));
    out_w_ = add_param("out.weight", {dh, od}, glorot_uniform<S>(dh, od, dh * od, init));
    out_b_ = add_param("out.bias", {od}, std::vector<S>(static_cast<std::size_t>(od), S(0)));
}

template <class S>
std::int64_t Model<S>::parameter_count() const {
    std::int64_t n = 0;
    for (const auto& p : params_) n += p.tensor.size();
    return n;
}

template <class S>
void Model<S>::zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
}

template <class S>
Tensor<S> Model<S>::forward(const IntMatrix& indices, const ByteMatrix& mask, Mode mode) {
    if (indices.rows != mask.rows || indices.cols != mask.cols)
        throw ValidationError("forward: indices/mask shape mismatch");
    if (indices.rows < 1 || indices.cols < 1) throw ValidationError("forward: empty batch");

    std::unique_ptr<NoGradGuard> guard;
    if (mode == Mode::eval) guard = std::make_unique<NoGradGuard>();

    auto embedded = mask_positions(embedding_forward(indices, embed_), mask);
    std::vector<Tensor<S>> branches;
    branches.reserve(conv_w_.size());
    for (std::size_t i = 0; i < conv_w_.size(); ++i)
        branches.push_back(conv1d_same(embedded, conv_w_[i], conv_b_[i]));
    auto local = batchnorm_forward(concat_last(branches), gamma_, beta_, bn_state_, mode);
    auto global = bigru_forward(local, mask, gru_fwd_, gru_bwd_);
    auto pooled = masked_mean_pool(concat_last<S>({local, global}), mask);
    auto hidden = dropout(dense_forward(pooled, fc1_w_, fc1_b_, Activation::relu),
                          cfg_.dropout_rate, mode, dropout_rng_);
    return dense_forward(hidden, out_w_, out_b_, Activation::sigmoid);
}

namespace {

template <class S>
struct Batch {
    IntMatrix indices;
    ByteMatrix mask;
    ByteMatrix labels;
};

template <class S>
Batch<S> gather_rows(const Dataset& ds, const std::vector<std::int64_t>& rows) {
    Batch<S> b;
    std::int64_t m = static_cast<std::int64_t>(rows.size());
    b.indices = {m, ds.max_len, std::vector<std::int32_t>(static_cast<std::size_t>(m * ds.max_len))};
    b.mask = {m, ds.max_len, std::vector<std::uint8_t>(static_cast<std::size_t>(m * ds.max_len))};
    b.labels = {m, ds.dict.size(),
                std::vector<std::uint8_t>(static_cast<std::size_t>(m * ds.dict.size()))};
    for (std::int64_t i = 0; i < m; ++i) {
        std::int64_t r = rows[static_cast<std::size_t>(i)];
        std::copy_n(ds.indices.data.begin() + r * ds.max_len, ds.max_len,
                    b.indices.data.begin() + i * ds.max_len);
        std::copy_n(ds.mask.data.begin() + r * ds.max_len, ds.max_len,
                    b.mask.data.begin() + i * ds.max_len);
        std::copy_n(ds.labels.data.begin() + r * ds.dict.size(), ds.dict.size(),
                    b.labels.data.begin() + i * ds.dict.size());
    }
    return b;
}

template <class S>
struct Snapshot {
    std::vector<std::vector<S>> params;
    std::vector<S> bn_mean, bn_var;
    std::int64_t bn_steps = 0;

    static Snapshot take(const Model<S>& model) {
        Snapshot s;
        for (const auto& p : model.parameters()) s.params.push_back(p.tensor.values());
        s.bn_mean = model.bn_state().running_mean;
        s.bn_var = model.bn_state().running_var;
        s.bn_steps = model.bn_state().steps;
        return s;
    }
};

// Validation loss + micro metrics at threshold 0.5, eval mode.
template <class S>
void validate_pass(Model<S>& model, const Dataset& ds, const std::vector<std::int64_t>& rows,
                   std::int64_t batch_size, double* loss_out, double* f1_out, double* mcc_out) {
    double loss_acc = 0;
    std::int64_t total = 0;
    ConfusionCounts micro;
    for (std::size_t start = 0; start < rows.size(); start += static_cast<std::size_t>(batch_size)) {
        std::vector<std::int64_t> chunk(rows.begin() + start,
                                        rows.begin() + std::min(rows.size(),
                                                                start + static_cast<std::size_t>(batch_size)));
        auto batch = gather_rows<S>(ds, chunk);
        auto probs = model.forward(batch.indices, batch.mask, Mode::eval);
        auto loss = bce_multilabel_loss(probs, batch.labels);
        std::int64_t m = static_cast<std::int64_t>(chunk.size());
        loss_acc += static_cast<double>(loss.item()) * static_cast<double>(m);
        total += m;

        ByteMatrix pred{batch.labels.rows, batch.labels.cols,
                        std::vector<std::uint8_t>(batch.labels.data.size())};
        const auto& pv = probs.values();
        for (std::size_t i = 0; i < pred.data.size(); ++i)
            pred.data[i] = pv[i] >= S(0.5) ? 1 : 0;
        auto conf = confusion(pred, batch.labels);
        micro.tp += conf.micro.tp;
        micro.fp += conf.micro.fp;
        micro.tn += conf.micro.tn;
        micro.fn += conf.micro.fn;
    }
    *loss_out = loss_acc / static_cast<double>(total);
    *f1_out = f1(micro);
    *mcc_out = mcc(micro);
}

}  // namespace

template <class S>
Checkpoint train(Model<S>& model, const Dataset& dataset, const TrainConfig& tcfg) {
    tcfg.validate();
    if (dataset.rows() < 2)
        throw ConfigError("train: need at least two rows to split off validation data");
    if (dataset.dict.size() != model.config().output_dim)
        throw ValidationError("train: dataset has " + std::to_string(dataset.dict.size()) +
                              " labels, model expects " +
                              std::to_string(model.config().output_dim));
    if (!model.config().alphabet_hash.empty() &&
        Alphabet(dataset.alphabet_symbols).hash() != model.config().alphabet_hash)
        throw ValidationError("train: dataset alphabet does not match the model's");

    std::int64_t n = dataset.rows();
    std::int64_t epochs = tcfg.epochs > 0 ? tcfg.epochs : default_epochs(dataset.dict.ns);

    Rng base(tcfg.seed);
    std::vector<std::int64_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng split_rng = base.stream("split");
    split_rng.shuffle(order);
    std::int64_t n_val = std::clamp<std::int64_t>(
        static_cast<std::int64_t>(std::llround(tcfg.validation_fraction * static_cast<double>(n))),
        1, n - 1);
    std::vector<std::int64_t> val_rows(order.begin(), order.begin() + n_val);
    std::vector<std::int64_t> train_rows(order.begin() + n_val, order.end());

    Adam<S> adam(AdamConfig{tcfg.learning_rate, 0.9, 0.999, 1e-8});
    double best_val = std::numeric_limits<double>::infinity();
    Snapshot<S> best = Snapshot<S>::take(model);
    std::int64_t stale = 0;
    std::vector<EpochStats> log;

    for (std::int64_t epoch = 1; epoch <= epochs; ++epoch) {
        Rng shuffle_rng = base.stream("shuffle").fork(static_cast<std::uint64_t>(epoch));
        shuffle_rng.shuffle(train_rows);

        double loss_acc = 0;
        std::int64_t total = 0;
        std::int64_t batch_index = 0;
        for (std::size_t start = 0; start < train_rows.size();
             start += static_cast<std::size_t>(tcfg.batch_size), ++batch_index) {
            std::vector<std::int64_t> chunk(
                train_rows.begin() + start,
                train_rows.begin() +
                    std::min(train_rows.size(), start + static_cast<std::size_t>(tcfg.batch_size)));
            auto batch = gather_rows<S>(dataset, chunk);
            auto probs = model.forward(batch.indices, batch.mask, Mode::train);
            auto loss = bce_multilabel_loss(probs, batch.labels);
            double lv = static_cast<double>(loss.item());
            if (!std::isfinite(lv))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batch_index));
            loss_acc += lv * static_cast<double>(chunk.size());
            total += static_cast<std::int64_t>(chunk.size());
            model.zero_grad();
            loss.backward();
            adam.step(model.parameters());
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_loss = loss_acc / static_cast<double>(total);
        stats.learning_rate = adam.learning_rate();
        validate_pass(model, dataset, val_rows, tcfg.batch_size, &stats.val_loss, &stats.val_f1,
                      &stats.val_mcc);
        log.push_back(stats);

        if (stats.val_loss < best_val) {
            best_val = stats.val_loss;
            stale = 0;
            if (tcfg.selection == Selection::best_val) best = Snapshot<S>::take(model);
        } else {
            stale += 1;
            if (tcfg.lr_schedule == LrSchedule::plateau && stale >= tcfg.plateau_patience) {
                adam.set_learning_rate(
                    std::max(adam.learning_rate() * tcfg.plateau_factor, tcfg.lr_floor));
                stale = 0;
            }
        }
    }

    if (tcfg.selection == Selection::last) best = Snapshot<S>::take(model);

    Checkpoint ckpt;
    ckpt.config = model.config();
    ckpt.alphabet_symbols = dataset.alphabet_symbols;
    ckpt.dict = dataset.dict;
    ckpt.bn_steps = best.bn_steps;
    ckpt.bn_momentum = model.bn_state().momentum;
    ckpt.log = std::move(log);
    const auto& params = model.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
        NamedArray arr;
        arr.name = params[i].name;
        arr.shape = params[i].tensor.shape();
        arr.values.assign(best.params[i].begin(), best.params[i].end());
        ckpt.tensors.push_back(std::move(arr));
    }
    ckpt.tensors.push_back(
        {"bn.running_mean", {static_cast<std::int64_t>(best.bn_mean.size())},
         std::vector<float>(best.bn_mean.begin(), best.bn_mean.end())});
    ckpt.tensors.push_back(
        {"bn.running_var", {static_cast<std::int64_t>(best.bn_var.size())},
         std::vector<float>(best.bn_var.begin(), best.bn_var.end())});
    return ckpt;
}

template <class S>
Checkpoint make_checkpoint(const Model<S>& model, const TermDictionary& dict,
                           const std::string& alphabet_symbols, std::vector<EpochStats> log) {
    Checkpoint ckpt;
    ckpt.config = model.config();
    ckpt.alphabet_symbols = alphabet_symbols;
    ckpt.dict = dict;
    ckpt.bn_steps = model.bn_state().steps;
    ckpt.bn_momentum = model.bn_state().momentum;
    ckpt.log = std::move(log);
    for (const auto& p : model.parameters()) {
        NamedArray arr;
        arr.name = p.name;
        arr.shape = p.tensor.shape();
        arr.values.assign(p.tensor.values().begin(), p.tensor.values().end());
        ckpt.tensors.push_back(std::move(arr));
    }
    const auto& bn = model.bn_state();
    ckpt.tensors.push_back({"bn.running_mean",
                            {static_cast<std::int64_t>(bn.running_mean.size())},
                            std::vector<float>(bn.running_mean.begin(), bn.running_mean.end())});
    ckpt.tensors.push_back({"bn.running_var",
                            {static_cast<std::int64_t>(bn.running_var.size())},
                            std::vector<float>(bn.running_var.begin(), bn.running_var.end())});
    return ckpt;
}

Model<float> model_from_checkpoint(const Checkpoint& ckpt) {
    Model<float> model(ckpt.config, 0);
    std::map<std::string, const NamedArray*> by_name;
    for (const auto& t : ckpt.tensors) by_name[t.name] = &t;

    for (auto& p : model.parameters()) {
        auto it = by_name.find(p.name);
        if (it == by_name.end())
            throw ValidationError("checkpoint is missing tensor '" + p.name + "'");
        const NamedArray& arr = *it->second;
        if (arr.shape != p.tensor.shape())
            throw ValidationError("checkpoint tensor '" + p.name + "' has the wrong shape");
        p.tensor.values().assign(arr.values.begin(), arr.values.end());
    }
    auto copy_stat = [&](const std::string& name, std::vector<float>& dst) {
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw ValidationError("checkpoint is missing tensor '" + name + "'");
        dst.assign(it->second->values.begin(), it->second->values.end());
    };
    copy_stat("bn.running_mean", model.bn_state().running_mean);
    copy_stat("bn.running_var", model.bn_state().running_var);
    if (static_cast<std::int64_t>(model.bn_state().running_mean.size()) !=
        model.config().conv_concat_dim())
        throw ValidationError("checkpoint batch-norm stats have the wrong shape");
    model.bn_state().steps = ckpt.bn_steps;
    model.bn_state().momentum = ckpt.bn_momentum;
    return model;
}

template class Model<float>;
template class Model<double>;
template Checkpoint train(Model<float>&, const Dataset&, const TrainConfig&);
template Checkpoint train(Model<double>&, const Dataset&, const TrainConfig&);
template Checkpoint make_checkpoint(const Model<float>&, const TermDictionary&,
                                    const std::string&, std::vector<EpochStats>);
template Checkpoint make_checkpoint(const Model<double>&, const TermDictionary&,
                                    const std::string&, std::vector<EpochStats>);

}  // namespace gonet
