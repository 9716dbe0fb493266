#include "gonet/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace gonet {

ConfusionResult confusion(const ByteMatrix& pred, const ByteMatrix& target) {
    if (pred.rows != target.rows || pred.cols != target.cols)
        throw ValidationError("confusion: shape mismatch");
    ConfusionResult out;
    out.per_label.resize(static_cast<std::size_t>(pred.cols));
    for (std::int64_t r = 0; r < pred.rows; ++r) {
        for (std::int64_t c = 0; c < pred.cols; ++c) {
            bool p = pred.at(r, c) != 0;
            bool t = target.at(r, c) != 0;
            auto& lc = out.per_label[static_cast<std::size_t>(c)];
            if (p && t)
                ++lc.tp;
            else if (p && !t)
                ++lc.fp;
            else if (!p && t)
                ++lc.fn;
            else
                ++lc.tn;
        }
    }
    for (const auto& lc : out.per_label) {
        out.micro.tp += lc.tp;
        out.micro.fp += lc.fp;
        out.micro.tn += lc.tn;
        out.micro.fn += lc.fn;
    }
    return out;
}

double f1(const ConfusionCounts& c) {
    if (c.tp + c.fp == 0 || c.tp + c.fn == 0) return 0.0;
    double precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    double recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

double mcc(const ConfusionCounts& c) {
    using I = unsigned __int128;
    I d1 = static_cast<I>(c.tp + c.fp);
    I d2 = static_cast<I>(c.tp + c.fn);
    I d3 = static_cast<I>(c.tn + c.fp);
    I d4 = static_cast<I>(c.tn + c.fn);
    if (d1 == 0 || d2 == 0 || d3 == 0 || d4 == 0) return 0.0;
    __int128 num = static_cast<__int128>(static_cast<I>(c.tp) * static_cast<I>(c.tn)) -
                   static_cast<__int128>(static_cast<I>(c.fp) * static_cast<I>(c.fn));
    long double den = std::sqrt(static_cast<long double>(d1) * static_cast<long double>(d2) *
                                static_cast<long double>(d3) * static_cast<long double>(d4));
    return static_cast<double>(static_cast<long double>(num) / den);
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

std::string EvalReport::render_text() const {
    std::ostringstream out;
    out << "# evaluation report\n";
    out << "# samples: " << samples << '\n';
    out << "# labels: " << per_label.size() << '\n';
    out << "# threshold: " << fmt(threshold) << '\n';
    out << "# micro: tp=" << micro.tp << " fp=" << micro.fp << " tn=" << micro.tn
        << " fn=" << micro.fn << " f1=" << fmt(micro_f1) << " mcc=" << fmt(micro_mcc) << '\n';
    out << "index\tterm\ttp\tfp\ttn\tfn\tf1\tmcc\n";
    for (std::size_t i = 0; i < per_label.size(); ++i) {
        const auto& l = per_label[i];
        out << i << '\t' << l.term_id << '\t' << l.counts.tp << '\t' << l.counts.fp << '\t'
            << l.counts.tn << '\t' << l.counts.fn << '\t' << fmt(l.f1) << '\t' << fmt(l.mcc)
            << '\n';
    }
    return out.str();
}

std::string EvalReport::render_tsv() const {
    std::ostringstream out;
    out << "index\tterm\ttp\tfp\ttn\tfn\tf1\tmcc\n";
    for (std::size_t i = 0; i < per_label.size(); ++i) {
        const auto& l = per_label[i];
        out << i << '\t' << l.term_id << '\t' << l.counts.tp << '\t' << l.counts.fp << '\t'
            << l.counts.tn << '\t' << l.counts.fn << '\t' << fmt(l.f1) << '\t' << fmt(l.mcc)
            << '\n';
    }
    return out.str();
}

}  // namespace gonet
