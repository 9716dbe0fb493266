#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "gonet/common.hpp"

namespace gonet {

// The 26-symbol amino-acid alphabet: the 20 standard residues plus the
// IUPAC extended letters B J O U X Z. Index 26 is reserved for padding.
class Alphabet {
public:
    static constexpr std::int32_t kPadIndex = 26;
    static constexpr std::size_t kSize = 26;

    // Default residue order: A C D E F G H I K L M N P Q R S T V W Y B J O U X Z.
    Alphabet();
    // Custom order: must contain exactly 26 distinct characters.
    explicit Alphabet(const std::string& symbols);

    const std::string& symbols() const { return symbols_; }
    // FNV-1a of the symbol string, hex; embedded in checkpoints so a model
    // cannot silently be applied under a different residue order.
    std::string hash() const;

    bool contains(char c) const { return index_table_[static_cast<unsigned char>(c)] >= 0; }
    // -1 when the character is not in the alphabet.
    std::int32_t index_of(char c) const { return index_table_[static_cast<unsigned char>(c)]; }
    char symbol_at(std::int32_t index) const { return symbols_[static_cast<std::size_t>(index)]; }

private:
    std::string symbols_;
    std::array<std::int32_t, 256> index_table_;
};

struct EncodedSequence {
    std::vector<std::int32_t> indices;  // length max_len, pad_index where masked
    std::vector<std::uint8_t> mask;     // 1 for real positions
    std::int64_t true_length = 0;       // original length, may exceed max_len
};

// Maps the first max_len residues to alphabet indices; shorter sequences are
// right-padded with the pad index. Illegal characters raise ParseError naming
// the position.
EncodedSequence encode_sequence(const std::string& seq, const Alphabet& alphabet,
                                std::int64_t max_len);

// Inverse of encode_sequence over the unmasked prefix.
std::string decode_sequence(const EncodedSequence& enc, const Alphabet& alphabet);

// max_len x 26 matrix: unit row at each real position, zero row at padding.
FloatMatrix one_hot(const EncodedSequence& enc, const Alphabet& alphabet);

// Binary target vector with 1 exactly at the given indices.
std::vector<std::uint8_t> encode_labels(const std::set<std::int32_t>& indices, std::int64_t size);

}  // namespace gonet
