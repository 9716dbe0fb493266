#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gonet/annotations.hpp"
#include "gonet/common.hpp"
#include "gonet/layers.hpp"
#include "gonet/optim.hpp"
#include "gonet/rng.hpp"
#include "gonet/tensor.hpp"

namespace gonet {

struct ModelConfig {
    std::int64_t embed_dim = 50;
    std::vector<std::int64_t> kernel_sizes = {3, 7, 11};
    std::int64_t conv_filters = 64;  // per branch
    std::int64_t gru_hidden = 300;   // per direction
    std::int64_t dense_hidden = 256;
    std::int64_t output_dim = 0;  // 33 / 22 / 16 for BP / CC / MF
    double dropout_rate = 0.5;
    std::int64_t max_len = 1000;
    std::string alphabet_hash;

    std::int64_t conv_concat_dim() const {
        return conv_filters * static_cast<std::int64_t>(kernel_sizes.size());
    }
    std::int64_t pooled_dim() const { return conv_concat_dim() + 2 * gru_hidden; }
    void validate() const;
};

enum class LrSchedule { none, plateau };
enum class Selection { best_val, last };

struct TrainConfig {
    double learning_rate = 1e-5;
    std::int64_t batch_size = 100;
    std::int64_t epochs = 0;  // 0 = per-domain default (BP 48, CC 128, MF 155)
    double validation_fraction = 0.10;
    LrSchedule lr_schedule = LrSchedule::plateau;
    std::int64_t plateau_patience = 5;
    double plateau_factor = 0.5;
    double lr_floor = 1e-7;
    Selection selection = Selection::best_val;
    std::uint64_t seed = 0;

    void validate() const;
};

std::int64_t default_epochs(GoNamespace ns);

struct EpochStats {
    std::int64_t epoch = 0;
    double train_loss = 0;
    double val_loss = 0;
    double val_f1 = 0;
    double val_mcc = 0;
    double learning_rate = 0;
};

constexpr std::uint32_t kCheckpointVersion = 1;

// Everything needed to restore a trained model: config, dictionary, named
// parameter payloads, batch-norm running stats and the training log.
struct Checkpoint {
    std::uint32_t version = kCheckpointVersion;
    ModelConfig config;
    std::string alphabet_symbols;
    TermDictionary dict;
    std::vector<NamedArray> tensors;  // parameters then bn running stats
    std::int64_t bn_steps = 0;
    double bn_momentum = 0.1;
    std::vector<EpochStats> log;
};

// The cascaded convolutional-recurrent network: embedding -> three parallel
// same-padded convolutions -> concat -> batch norm -> BiGRU -> concat of
// local and global features -> masked mean pool -> dense+ReLU -> dropout ->
// dense+sigmoid. The three GO domains share this wiring and differ only in
// output width.
template <class S>
class Model {
public:
    Model(ModelConfig cfg, std::uint64_t seed);

    // Probabilities (B x output_dim). Train mode uses batch statistics and
    // dropout; eval mode uses running stats and is deterministic.
    Tensor<S> forward(const IntMatrix& indices, const ByteMatrix& mask, Mode mode);

    const ModelConfig& config() const { return cfg_; }
    std::vector<Parameter<S>>& parameters() { return params_; }
    const std::vector<Parameter<S>>& parameters() const { return params_; }
    BatchNormState<S>& bn_state() { return bn_state_; }
    const BatchNormState<S>& bn_state() const { return bn_state_; }
    std::int64_t parameter_count() const;
    void zero_grad();

private:
    Tensor<S> add_param(const std::string& name, std::vector<std::int64_t> shape,
                        std::vector<S> values);

    ModelConfig cfg_;
    std::vector<Parameter<S>> params_;
    Tensor<S> embed_;
    std::vector<Tensor<S>> conv_w_, conv_b_;
    Tensor<S> gamma_, beta_;
    GruWeights<S> gru_fwd_, gru_bwd_;
    Tensor<S> fc1_w_, fc1_b_, out_w_, out_b_;
    BatchNormState<S> bn_state_;
    Rng dropout_rng_;
};

// Trains with Adam on the Eq-style multi-label BCE loss: seeded 90/10 split,
// per-epoch shuffle, halve-on-plateau learning rate decay, checkpoint from
// the best-validation-loss epoch (configurable). The model is left at its
// final-epoch parameters.
template <class S>
Checkpoint train(Model<S>& model, const Dataset& dataset, const TrainConfig& tcfg);

// Snapshot of the model's current parameters and stats.
template <class S>
Checkpoint make_checkpoint(const Model<S>& model, const TermDictionary& dict,
                           const std::string& alphabet_symbols, std::vector<EpochStats> log);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Rebuilds a float model from checkpoint payloads; refuses on missing or
// misshaped tensors.
Model<float> model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace gonet
