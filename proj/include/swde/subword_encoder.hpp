#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swde/corpus.hpp"
#include "swde/errors.hpp"
#include "swde/numerics/tape.hpp"

namespace swde {

/// Character CNN that turns one token into a sub-word feature vector:
/// embed → (conv → ReLU) ×3 → global max pool.
struct SubwordEncoderVars {
    Var char_embeddings;
    std::array<Var, 3> filters;
    std::array<Var, 3> biases;
};

/// Shortest token grid row the conv stack accepts: every valid convolution
/// must leave at least one position.
inline std::size_t min_token_chars(std::span<const std::size_t> widths) {
    std::size_t n = 1;
    for (std::size_t w : widths) n += w - 1;
    return n;
}

inline void check_token_width(std::size_t max_chars, std::span<const std::size_t> widths) {
    const std::size_t need = min_token_chars(widths);
    if (max_chars < need) {
        throw ConfigError("l_char", "must be at least " + std::to_string(need) +
                                        " for the configured filter widths, got " +
                                        std::to_string(max_chars));
    }
}

inline Var encode_token(std::span<const int> chars, const SubwordEncoderVars& p) {
    Var x = embedding_columns(p.char_embeddings, chars, CharVocab::pad);
    for (std::size_t layer = 0; layer < 3; ++layer) {
        x = relu(conv1d_valid(x, p.filters[layer], p.biases[layer]));
    }
    return global_max_pool(x);
}

/// r_1..r_K, one per grid row. All PAD rows share a single evaluation.
inline std::vector<Var> encode_title(const EncodedTitle& grid, const SubwordEncoderVars& p) {
    std::vector<Var> out;
    out.reserve(grid.max_tokens);
    std::optional<Var> pad_output;
    for (std::size_t t = 0; t < grid.max_tokens; ++t) {
        if (grid.row_is_pad(t)) {
            if (!pad_output) pad_output = encode_token(grid.row(t), p);
            out.push_back(*pad_output);
        } else {
            out.push_back(encode_token(grid.row(t), p));
        }
    }
    return out;
}

}  // namespace swde
