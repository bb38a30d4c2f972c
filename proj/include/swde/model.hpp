#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "swde/classifier.hpp"
#include "swde/corpus.hpp"
#include "swde/doc2vec.hpp"
#include "swde/errors.hpp"
#include "swde/params.hpp"
#include "swde/recurrent_attention.hpp"
#include "swde/subword_encoder.hpp"

namespace swde {

/// Architecture sizes. Defaults are the desk-scale configuration.
struct ModelDims {
    std::size_t max_tokens = 30;  // K, title positions fed to the BiLSTM
    std::size_t max_chars = 16;   // L_char, characters kept per token
    std::size_t char_vocab = 2;
    std::size_t d_char = 32;
    std::array<std::size_t, 3> conv_widths{3, 3, 3};
    std::array<std::size_t, 3> conv_channels{64, 64, 128};
    std::size_t d_h = 64;
    std::size_t d_a = 64;
    std::size_t d_t = 64;
    std::size_t d1 = 128;
    std::size_t d2 = 64;

    void validate() const {
        auto positive = [](const char* field, std::size_t v) {
            if (v == 0) throw ConfigError(field, "must be at least 1");
        };
        positive("k", max_tokens);
        positive("l_char", max_chars);
        positive("d_char", d_char);
        positive("d_h", d_h);
        positive("d_a", d_a);
        positive("d_t", d_t);
        positive("d1", d1);
        positive("d2", d2);
        for (std::size_t i = 0; i < 3; ++i) {
            positive("conv_widths", conv_widths[i]);
            positive("conv_channels", conv_channels[i]);
        }
        if (char_vocab < 2) throw ConfigError("char_vocab", "must include PAD and UNK");
        check_token_width(max_chars, conv_widths);
    }

    bool operator==(const ModelDims&) const = default;
};

enum class InitKind { weight, bias, embedding };

struct ParamSpec {
    std::string name;
    Shape shape;
    InitKind kind;
    std::size_t fan_in = 0;
    std::size_t fan_out = 0;
};

/// Names, shapes and fan sizes of every learnable tensor, in registry order.
inline std::vector<ParamSpec> param_layout(const ModelDims& d) {
    std::vector<ParamSpec> out;
    auto weight = [&](std::string name, Shape shape, std::size_t fan_in, std::size_t fan_out) {
        out.push_back({std::move(name), std::move(shape), InitKind::weight, fan_in, fan_out});
    };
    auto bias = [&](std::string name, std::size_t n) {
        out.push_back({std::move(name), Shape{n}, InitKind::bias, 0, 0});
    };
    out.push_back({"char_embeddings", {d.char_vocab, d.d_char}, InitKind::embedding, d.d_char, d.char_vocab});
    std::size_t c_in = d.d_char;
    for (std::size_t i = 0; i < 3; ++i) {
        const std::string prefix = "conv" + std::to_string(i + 1);
        const std::size_t c_out = d.conv_channels[i], w = d.conv_widths[i];
        weight(prefix + ".filters", {c_out, c_in, w}, c_in * w, c_out * w);
        bias(prefix + ".bias", c_out);
        c_in = c_out;
    }
    const std::size_t d_in = d.conv_channels[2];
    for (const char* dir : {"lstm_fwd", "lstm_bwd"}) {
        const std::string prefix = dir;
        weight(prefix + ".W", {3 * d.d_h, d.d_h + d_in}, d.d_h + d_in, 3 * d.d_h);
        bias(prefix + ".b", 3 * d.d_h);
        weight(prefix + ".V", {d.d_h, d.d_h + d_in}, d.d_h + d_in, d.d_h);
        bias(prefix + ".d", d.d_h);
    }
    weight("attention.W", {d.d_a, 2 * d.d_h}, 2 * d.d_h, d.d_a);
    bias("attention.b", d.d_a);
    weight("attention.u", {d.d_a}, d.d_a, 1);
    weight("title_head.weight", {d.d_t, 2 * d.d_h}, 2 * d.d_h, d.d_t);
    bias("title_head.bias", d.d_t);
    weight("dense1.weight", {d.d1, d.d_t + kDocDim}, d.d_t + kDocDim, d.d1);
    bias("dense1.bias", d.d1);
    weight("dense2.weight", {d.d2, d.d1}, d.d1, d.d2);
    bias("dense2.bias", d.d2);
    weight("output.weight", {1, d.d2}, d.d2, 1);
    bias("output.bias", 1);
    return out;
}

struct ModelVars {
    SubwordEncoderVars subword;
    LstmDirectionVars fwd;
    LstmDirectionVars bwd;
    AttentionVars attention;
    Dense head;
    ClassifierVars classifier;
};

/// `p` maps parameter names to tape variables (BoundParams or any lookup with
/// the same operator[]).
template <class Lookup>
ModelVars bind_model(const Lookup& p) {
    ModelVars m;
    m.subword.char_embeddings = p["char_embeddings"];
    for (std::size_t i = 0; i < 3; ++i) {
        const std::string prefix = "conv" + std::to_string(i + 1);
        m.subword.filters[i] = p[prefix + ".filters"];
        m.subword.biases[i] = p[prefix + ".bias"];
    }
    m.fwd = {p["lstm_fwd.W"], p["lstm_fwd.b"], p["lstm_fwd.V"], p["lstm_fwd.d"]};
    m.bwd = {p["lstm_bwd.W"], p["lstm_bwd.b"], p["lstm_bwd.V"], p["lstm_bwd.d"]};
    m.attention = {p["attention.W"], p["attention.b"], p["attention.u"]};
    m.head = {p["title_head.weight"], p["title_head.bias"]};
    m.classifier = {{p["dense1.weight"], p["dense1.bias"]},
                    {p["dense2.weight"], p["dense2.bias"]},
                    {p["output.weight"], p["output.bias"]}};
    return m;
}

/// A post ready for the network: encoded title grid plus its two document
/// vectors.
struct Example {
    std::string id;
    EncodedTitle title;
    Tensor title_vec;
    Tensor body_vec;
    int label = 0;
    std::optional<double> truth_mean;
};

/// Full forward pass; returns the clickbait probability as a 1-vector.
inline Var forward(Tape& tape, const ModelVars& m, const Example& ex) {
    if (ex.title.valid_token_count == 0) throw DegenerateInputError("post " + ex.id + ": empty title");
    std::vector<Var> r = encode_title(ex.title, m.subword);
    std::vector<Var> h = bilstm(r, m.fwd, m.bwd);
    AttentionOutput att = attention(h, ex.title.valid_token_count, m.attention);
    Var title_features = title_head(att.context, m.head);
    Var interaction = enrich(tape.constant(ex.title_vec), tape.constant(ex.body_vec));
    return classify(title_features, interaction, m.classifier);
}

/// Probability for one example under `params`, on a private tape.
inline double predict_probability(const ParamSet& params, const Example& ex) {
    Tape tape;
    BoundParams bound(tape, params);
    return forward(tape, bind_model(bound), ex).value()[0];
}

}  // namespace swde
