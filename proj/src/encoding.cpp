#include "gonet/encoding.hpp"

#include <algorithm>

namespace gonet {

namespace {
constexpr const char* kDefaultSymbols = "ACDEFGHIKLMNPQRSTVWYBJOUXZ";
}

Alphabet::Alphabet() : Alphabet(kDefaultSymbols) {}

Alphabet::Alphabet(const std::string& symbols) : symbols_(symbols) {
    if (symbols_.size() != kSize)
        throw ConfigError("alphabet must have exactly 26 symbols, got " +
                          std::to_string(symbols_.size()));
    index_table_.fill(-1);
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(symbols_[i]);
        if (index_table_[c] >= 0)
            throw ConfigError(std::string("alphabet has duplicate symbol '") + symbols_[i] + "'");
        index_table_[c] = static_cast<std::int32_t>(i);
    }
}

std::string Alphabet::hash() const {
    return to_hex(fnv1a64(symbols_));
}

EncodedSequence encode_sequence(const std::string& seq, const Alphabet& alphabet,
                                std::int64_t max_len) {
    if (max_len < 1) throw ConfigError("encode_sequence: max_len must be >= 1");
    if (seq.empty()) throw ParseError("encode_sequence: empty sequence");
    EncodedSequence enc;
    enc.true_length = static_cast<std::int64_t>(seq.size());
    enc.indices.assign(static_cast<std::size_t>(max_len), Alphabet::kPadIndex);
    enc.mask.assign(static_cast<std::size_t>(max_len), 0);
    std::int64_t n = std::min<std::int64_t>(enc.true_length, max_len);
    for (std::int64_t i = 0; i < n; ++i) {
        std::int32_t idx = alphabet.index_of(seq[static_cast<std::size_t>(i)]);
        if (idx < 0)
            throw ParseError(std::string("illegal residue '") + seq[static_cast<std::size_t>(i)] +
                             "' at position " + std::to_string(i));
        enc.indices[static_cast<std::size_t>(i)] = idx;
        enc.mask[static_cast<std::size_t>(i)] = 1;
    }
    return enc;
}

std::string decode_sequence(const EncodedSequence& enc, const Alphabet& alphabet) {
    std::string out;
    for (std::size_t i = 0; i < enc.indices.size(); ++i) {
        if (!enc.mask[i]) break;
        out.push_back(alphabet.symbol_at(enc.indices[i]));
    }
    return out;
}

FloatMatrix one_hot(const EncodedSequence& enc, const Alphabet&) {
    FloatMatrix m;
    m.rows = static_cast<std::int64_t>(enc.indices.size());
    m.cols = static_cast<std::int64_t>(Alphabet::kSize);
    m.data.assign(static_cast<std::size_t>(m.rows * m.cols), 0.0f);
    for (std::int64_t i = 0; i < m.rows; ++i)
        if (enc.mask[static_cast<std::size_t>(i)])
            m.at(i, enc.indices[static_cast<std::size_t>(i)]) = 1.0f;
    return m;
}

std::vector<std::uint8_t> encode_labels(const std::set<std::int32_t>& indices, std::int64_t size) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(size), 0);
    for (std::int32_t i : indices) {
        if (i < 0 || i >= size)
            throw LookupError("label index " + std::to_string(i) + " out of range [0, " +
                              std::to_string(size) + ")");
        out[static_cast<std::size_t>(i)] = 1;
    }
    return out;
}

}  // namespace gonet
