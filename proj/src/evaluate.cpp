#include "gonet/evaluate.hpp"

#include <algorithm>
#include <functional>
#include <thread>

namespace gonet {

namespace {

// Runs fn(begin, end) over `total` items split across `threads` workers.
// Each worker writes to disjoint slots, so results are order-independent.
void parallel_chunks(std::int64_t total, int threads,
                     const std::function<void(std::int64_t, std::int64_t)>& fn) {
    threads = std::max(1, threads);
    if (threads == 1 || total < 2) {
        fn(0, total);
        return;
    }
    std::int64_t n_workers = std::min<std::int64_t>(threads, total);
    std::vector<std::thread> pool;
    std::int64_t chunk = (total + n_workers - 1) / n_workers;
    for (std::int64_t w = 0; w < n_workers; ++w) {
        std::int64_t begin = w * chunk;
        std::int64_t end = std::min(total, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& t : pool) t.join();
}

constexpr std::int64_t kEvalBatch = 64;

}  // namespace

FloatMatrix predict_probabilities(Model<float>& model, const Dataset& dataset, int threads) {
    if (dataset.rows() == 0) throw ValidationError("predict_probabilities: empty dataset");
    std::int64_t n = dataset.rows();
    std::int64_t k = dataset.dict.size();
    FloatMatrix probs{n, k, std::vector<float>(static_cast<std::size_t>(n * k))};

    parallel_chunks(n, threads, [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t start = begin; start < end; start += kEvalBatch) {
            std::int64_t stop = std::min(end, start + kEvalBatch);
            std::int64_t m = stop - start;
            IntMatrix idx{m, dataset.max_len,
                          {dataset.indices.data.begin() + start * dataset.max_len,
                           dataset.indices.data.begin() + stop * dataset.max_len}};
            ByteMatrix mask{m, dataset.max_len,
                            {dataset.mask.data.begin() + start * dataset.max_len,
                             dataset.mask.data.begin() + stop * dataset.max_len}};
            auto out = model.forward(idx, mask, Mode::eval);
            std::copy(out.values().begin(), out.values().end(),
                      probs.data.begin() + start * k);
        }
    });
    return probs;
}

EvalReport evaluate(Model<float>& model, const Dataset& dataset, double threshold, int threads) {
    if (dataset.rows() == 0) throw ValidationError("evaluate: empty dataset");
    if (dataset.dict.size() != model.config().output_dim)
        throw ValidationError("evaluate: dataset has " + std::to_string(dataset.dict.size()) +
                              " labels, model expects " +
                              std::to_string(model.config().output_dim));

    auto probs = predict_probabilities(model, dataset, threads);
    ByteMatrix pred{probs.rows, probs.cols, std::vector<std::uint8_t>(probs.data.size())};
    for (std::size_t i = 0; i < probs.data.size(); ++i)
        pred.data[i] = probs.data[i] >= static_cast<float>(threshold) ? 1 : 0;

    auto conf = confusion(pred, dataset.labels);
    EvalReport report;
    report.threshold = threshold;
    report.samples = dataset.rows();
    report.micro = conf.micro;
    report.micro_f1 = f1(conf.micro);
    report.micro_mcc = mcc(conf.micro);
    report.per_label.resize(conf.per_label.size());
    for (std::size_t i = 0; i < conf.per_label.size(); ++i) {
        report.per_label[i].term_id = dataset.dict.ids[i];
        report.per_label[i].counts = conf.per_label[i];
        report.per_label[i].f1 = f1(conf.per_label[i]);
        report.per_label[i].mcc = mcc(conf.per_label[i]);
    }
    return report;
}

}  // namespace gonet
