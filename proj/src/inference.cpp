#include "gonet/inference.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace gonet {

std::vector<Prediction> predict(Model<float>& model, const TermDictionary& dict,
                                const Alphabet& alphabet,
                                const std::map<std::string, std::string>& sequences,
                                const PredictOptions& opts) {
    if (dict.size() != model.config().output_dim)
        throw ValidationError("predict: dictionary size does not match the model output width");

    std::vector<std::pair<std::string, std::string>> items(sequences.begin(), sequences.end());
    std::vector<Prediction> out(items.size());
    std::int64_t max_len = model.config().max_len;

    auto run = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            Prediction& p = out[i];
            p.protein_id = items[i].first;
            p.threshold = opts.threshold;
            EncodedSequence enc;
            try {
                enc = encode_sequence(items[i].second, alphabet, max_len);
            } catch (const Error& e) {
                p.error = e.what();
                continue;
            }
            IntMatrix idx{1, max_len, enc.indices};
            ByteMatrix mask{1, max_len, enc.mask};
            auto probs = model.forward(idx, mask, Mode::eval);
            const auto& pv = probs.values();

            for (std::size_t j = 0; j < pv.size(); ++j)
                if (pv[j] >= static_cast<float>(opts.threshold))
                    p.terms.push_back({dict.ids[j], dict.names[j], static_cast<double>(pv[j])});
            if (p.terms.empty() && opts.min_one) {
                std::size_t arg = 0;
                for (std::size_t j = 1; j < pv.size(); ++j)
                    if (pv[j] > pv[arg]) arg = j;
                p.terms.push_back({dict.ids[arg], dict.names[arg], static_cast<double>(pv[arg])});
            }
            // Descending probability; accession breaks ties deterministically.
            std::stable_sort(p.terms.begin(), p.terms.end(),
                             [](const PredictedTerm& a, const PredictedTerm& b) {
                                 if (a.probability != b.probability)
                                     return a.probability > b.probability;
                                 return a.term_id < b.term_id;
                             });
        }
    };

    int threads = std::max(1, opts.threads);
    if (threads == 1 || items.size() < 2) {
        run(0, items.size());
    } else {
        std::size_t n_workers = std::min<std::size_t>(threads, items.size());
        std::size_t chunk = (items.size() + n_workers - 1) / n_workers;
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) {
            std::size_t begin = w * chunk;
            std::size_t end = std::min(items.size(), begin + chunk);
            if (begin >= end) break;
            pool.emplace_back(run, begin, end);
        }
        for (auto& t : pool) t.join();
    }
    return out;
}

std::vector<Prediction> predict(const Checkpoint& ckpt,
                                const std::map<std::string, std::string>& sequences,
                                const PredictOptions& opts) {
    auto model = model_from_checkpoint(ckpt);
    Alphabet alphabet(ckpt.alphabet_symbols);
    return predict(model, ckpt.dict, alphabet, sequences, opts);
}

std::string render_predictions(const std::vector<Prediction>& predictions) {
    std::ostringstream out;
    char buf[32];
    for (const auto& p : predictions) {
        if (!p.ok()) {
            out << "# " << p.protein_id << ": error: " << p.error << '\n';
            continue;
        }
        for (const auto& t : p.terms) {
            std::snprintf(buf, sizeof(buf), "%.6f", t.probability);
            out << p.protein_id << '\t' << t.term_id << '\t' << t.name << '\t' << buf << '\n';
        }
        std::snprintf(buf, sizeof(buf), "%.2f", p.threshold);
        out << "# " << p.protein_id << ": " << p.terms.size() << " term(s) at threshold " << buf
            << '\n';
    }
    return out.str();
}

std::string render_predictions_json(const std::vector<Prediction>& predictions) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : predictions) {
        nlohmann::json item;
        item["protein_id"] = p.protein_id;
        item["threshold"] = p.threshold;
        if (!p.ok()) {
            item["error"] = p.error;
        } else {
            nlohmann::json terms = nlohmann::json::array();
            for (const auto& t : p.terms)
                terms.push_back({{"term", t.term_id},
                                 {"name", t.name},
                                 {"probability", t.probability}});
            item["terms"] = std::move(terms);
        }
        arr.push_back(std::move(item));
    }
    return arr.dump(2) + "\n";
}

}  // namespace gonet
