#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "support.hpp"
#include "swde/classifier.hpp"
#include "swde/model.hpp"
#include "swde/numerics/grad_check.hpp"
#include "swde/recurrent_attention.hpp"
#include "swde/subword_encoder.hpp"

using namespace swde;
using namespace swde::testing;

namespace {

struct EncoderFixture {
    Tape tape;
    SubwordEncoderVars vars;

    EncoderFixture(std::uint64_t seed, bool zero_bias, std::size_t vocab = 10, std::size_t d_char = 4,
                   std::array<std::size_t, 3> ch = {5, 6, 7}) {
        Rng rng(seed);
        Tensor emb = random_tensor({vocab, d_char}, rng);
        for (std::size_t j = 0; j < d_char; ++j) emb.at(CharVocab::pad, j) = 0.0;
        vars.char_embeddings = tape.constant(emb);
        std::size_t in = d_char;
        for (std::size_t i = 0; i < 3; ++i) {
            vars.filters[i] = tape.constant(random_tensor({ch[i], in, 3}, rng));
            vars.biases[i] = tape.constant(zero_bias ? Tensor({ch[i]}, 0.0) : random_tensor({ch[i]}, rng, -0.2, 0.2));
            in = ch[i];
        }
    }
};

EncodedTitle grid(std::vector<std::vector<int>> rows, std::size_t max_chars, std::size_t valid) {
    EncodedTitle e;
    e.max_tokens = rows.size();
    e.max_chars = max_chars;
    e.valid_token_count = valid;
    for (auto& r : rows) {
        r.resize(max_chars, CharVocab::pad);
        e.cells.insert(e.cells.end(), r.begin(), r.end());
    }
    return e;
}

LstmDirectionVars lstm_vars(Tape& tape, std::size_t dh, std::size_t din, Rng& rng, double scale = 1.0) {
    return {tape.constant(random_tensor({3 * dh, dh + din}, rng, -scale, scale)),
            tape.constant(random_tensor({3 * dh}, rng, -scale, scale)),
            tape.constant(random_tensor({dh, dh + din}, rng, -scale, scale)),
            tape.constant(random_tensor({dh}, rng, -scale, scale))};
}

std::vector<Var> constants(Tape& tape, std::size_t n, std::size_t d, Rng& rng) {
    std::vector<Var> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(tape.constant(random_tensor({d}, rng)));
    return out;
}

}  // namespace

// --- subword encoder -------------------------------------------------------

TEST(SubwordEncoder, AllPadWithZeroBiasIsZero) {
    EncoderFixture f(1, true);
    const std::vector<int> pad(9, CharVocab::pad);
    EXPECT_EQ(encode_token(pad, f.vars).value(), Tensor({7}, 0.0));
}

TEST(SubwordEncoder, DeterministicAndShape) {
    EncoderFixture f(2, false);
    const std::vector<int> a{2, 3, 4, 5, 6, 0, 0, 0, 0}, b{9, 9, 8, 0, 0, 0, 0, 0, 0};
    EXPECT_EQ(encode_token(a, f.vars).value(), encode_token(a, f.vars).value());
    EXPECT_EQ(encode_token(a, f.vars).value().shape(), Shape{7});
    EXPECT_EQ(encode_token(b, f.vars).value().shape(), Shape{7});
}

TEST(SubwordEncoder, PadRowsShareThePadOutput) {
    EncoderFixture f(3, false);
    const auto g = grid({{2, 3, 4}, {}}, 9, 1);
    const auto r = encode_title(g, f.vars);
    ASSERT_EQ(r.size(), 2u);
    EXPECT_EQ(r[1].value(), encode_token(g.row(1), f.vars).value());
}

TEST(SubwordEncoder, PermutingTokensPermutesOutputs) {
    EncoderFixture f(4, false);
    const auto r = encode_title(grid({{2, 3, 4}, {5, 6}, {7, 8, 9, 2}}, 9, 3), f.vars);
    const auto s = encode_title(grid({{7, 8, 9, 2}, {5, 6}, {2, 3, 4}}, 9, 3), f.vars);
    EXPECT_EQ(r[0].value(), s[2].value());
    EXPECT_EQ(r[1].value(), s[1].value());
    EXPECT_EQ(r[2].value(), s[0].value());
}

TEST(SubwordEncoder, PerTokenLocality) {
    EncoderFixture f(5, false);
    const auto r = encode_title(grid({{2, 3, 4}, {5, 6}, {7}}, 9, 3), f.vars);
    const auto s = encode_title(grid({{2, 3, 4}, {9, 9, 9, 9}, {3, 3}}, 9, 3), f.vars);
    EXPECT_EQ(r[0].value(), s[0].value());
}

TEST(SubwordEncoder, TrailingPadInvarianceOnConstructedCase) {
    // Positive embeddings and filters with zero biases: windows over the full
    // text dominate those that run into PAD, so extra padding changes nothing.
    EncoderFixture f(6, true);
    Rng rng(6);
    Tensor emb({10, 4}, 0.0);
    for (std::size_t i = 1; i < 10; ++i)
        for (std::size_t j = 0; j < 4; ++j) emb.at(i, j) = uniform(rng, 0.5, 1.0);
    f.vars.char_embeddings = f.tape.constant(emb);
    std::size_t in = 4;
    for (std::size_t i = 0; i < 3; ++i) {
        const std::size_t out = f.vars.biases[i].value().size();
        f.vars.filters[i] = f.tape.constant(random_tensor({out, in, 3}, rng, 0.1, 1.0));
        in = out;
    }
    const std::vector<int> snug(7, 3);
    std::vector<int> padded(snug);
    padded.resize(12, CharVocab::pad);
    EXPECT_EQ(encode_token(snug, f.vars).value(), encode_token(padded, f.vars).value());
}

TEST(SubwordEncoder, TokenWidthPrecondition) {
    const std::vector<std::size_t> widths{3, 3, 3};
    EXPECT_EQ(min_token_chars(widths), 7u);
    EXPECT_NO_THROW(check_token_width(7, widths));
    try {
        check_token_width(6, widths);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "l_char");
    }
}

TEST(SubwordEncoder, FilterGradientsMatchFiniteDifferences) {
    Rng rng(7);
    const auto g = grid({{2, 3, 4, 5}, {6, 7, 8, 9, 2, 3}, {}}, 9, 2);
    // PAD row (index 0) is frozen, so only rows 1.. are checked.
    std::vector<Tensor> params{random_tensor({9, 4}, rng), random_tensor({5, 4, 3}, rng), random_tensor({5}, rng, -.1, .1),
                               random_tensor({6, 5, 3}, rng), random_tensor({6}, rng, -.1, .1),
                               random_tensor({7, 6, 3}, rng), random_tensor({7}, rng, -.1, .1)};
    const Tensor w = random_tensor({7}, rng);
    auto f = [&](Tape& t, std::span<const Var> v) {
        SubwordEncoderVars vars{concat_rows({t.constant(Tensor({1, 4}, 0.0)), v[0]}), {v[1], v[3], v[5]}, {v[2], v[4], v[6]}};
        const auto r = encode_title(g, vars);
        Var total = sum(multiply(r[0], t.constant(w)));
        for (std::size_t i = 1; i < r.size(); ++i) total = add(total, sum(multiply(r[i], t.constant(w))));
        return total;
    };
    const auto res = grad_check(f, params, 1e-6);
    EXPECT_LT(res.max_relative_error, 1e-4) << "tensor " << res.worst_tensor << " entry " << res.worst_entry << " analytic " << res.worst_analytic << " numeric " << res.worst_numeric;
    EXPECT_GT(res.checked, 200u);
}

// --- recurrent + attention -------------------------------------------------

TEST(Lstm, ZeroParametersGiveHalfGatesAndZeroState) {
    Tape t;
    auto z = [&](Shape s) { return t.constant(Tensor(std::move(s), 0.0)); };
    LstmDirectionVars p{z({6, 5}), z({6}), z({2, 5}), z({2})};
    LstmGates g;
    const auto s = lstm_cell(lstm_initial_state(t, 2), t.constant(Tensor::vector({3, -1, 4})), p, &g);
    EXPECT_EQ(g.forget.value(), Tensor({2}, 0.5));
    EXPECT_EQ(g.input.value(), Tensor({2}, 0.5));
    EXPECT_EQ(g.output.value(), Tensor({2}, 0.5));
    EXPECT_EQ(g.candidate.value(), Tensor({2}, 0.0));
    EXPECT_EQ(s.c.value(), Tensor({2}, 0.0));
    EXPECT_EQ(s.h.value(), Tensor({2}, 0.0));
}

TEST(Lstm, SaturatedGatesCarryMemory) {
    Tape t;
    Rng rng(8);
    Tensor b({6}, 0.0);
    b[0] = b[1] = 20.0;   // forget ≈ 1
    b[2] = b[3] = -20.0;  // input ≈ 0
    LstmDirectionVars p{t.constant(random_tensor({6, 4}, rng, -0.1, 0.1)), t.constant(b),
                        t.constant(random_tensor({2, 4}, rng)), t.constant(Tensor({2}, 0.0))};
    LstmState prev{t.constant(Tensor::vector({0.9, -0.4})), t.constant(Tensor::vector({0.2, 0.1}))};
    const auto next = lstm_cell(prev, t.constant(random_tensor({2}, rng)), p);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(next.c.value()[i], prev.c.value()[i], 1e-3);
}

TEST(Lstm, CellGrowthBoundedAndGatesOpen) {
    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        Tape t;
        const auto p = lstm_vars(t, 4, 3, rng, 3.0);
        LstmState s{t.constant(random_tensor({4}, rng, -5, 5)), t.constant(random_tensor({4}, rng))};
        LstmGates g;
        const auto next = lstm_cell(s, t.constant(random_tensor({3}, rng)), p, &g);
        for (std::size_t i = 0; i < 4; ++i) {
            EXPECT_LE(std::abs(next.c.value()[i]), std::abs(s.c.value()[i]) + 1.0);
            for (const Var* gate : {&g.forget, &g.input, &g.output}) {
                EXPECT_GT(gate->value()[i], 0.0);
                EXPECT_LT(gate->value()[i], 1.0);
            }
        }
    }
}

TEST(Lstm, DimensionMismatch) {
    Tape t;
    Rng rng(10);
    const auto p = lstm_vars(t, 4, 3, rng);
    EXPECT_THROW(lstm_cell(lstm_initial_state(t, 4), t.constant(Tensor({5})), p), DimensionError);
}

TEST(BiLstm, SingleStepSeesInputBothWays) {
    Tape t;
    Rng rng(11);
    const auto fwd = lstm_vars(t, 3, 2, rng), bwd = lstm_vars(t, 3, 2, rng);
    const auto r = constants(t, 1, 2, rng);
    const auto h = bilstm(r, fwd, bwd);
    ASSERT_EQ(h.size(), 1u);
    const auto f = lstm_cell(lstm_initial_state(t, 3), r[0], fwd).h.value();
    const auto b = lstm_cell(lstm_initial_state(t, 3), r[0], bwd).h.value();
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(h[0].value()[i], f[i]);
        EXPECT_EQ(h[0].value()[3 + i], b[i]);
    }
}

TEST(BiLstm, ReversalSwapsDirections) {
    Tape t;
    Rng rng(12);
    const auto fwd = lstm_vars(t, 3, 2, rng), bwd = lstm_vars(t, 3, 2, rng);
    auto r = constants(t, 5, 2, rng);
    const auto h = bilstm(r, fwd, bwd);
    std::reverse(r.begin(), r.end());
    const auto g = bilstm(r, bwd, fwd);
    for (std::size_t j = 0; j < 5; ++j) {
        EXPECT_EQ(h[j].value().shape(), Shape{6});
        for (std::size_t i = 0; i < 3; ++i) {
            EXPECT_EQ(g[4 - j].value()[i], h[j].value()[3 + i]);
            EXPECT_EQ(g[4 - j].value()[3 + i], h[j].value()[i]);
        }
    }
    EXPECT_THROW(bilstm(std::vector<Var>{}, fwd, bwd), DegenerateInputError);
}

TEST(Attention, ZeroQueryAveragesValidAnnotations) {
    Tape t;
    Rng rng(13);
    const auto h = constants(t, 5, 4, rng);
    AttentionVars p{t.constant(random_tensor({3, 4}, rng)), t.constant(random_tensor({3}, rng)),
                    t.constant(Tensor({3}, 0.0))};
    const auto out = attention(h, 3, p);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(out.alphas.value()[j], 1.0 / 3.0, 1e-15);
    for (std::size_t i = 0; i < 4; ++i) {
        const double mean = (h[0].value()[i] + h[1].value()[i] + h[2].value()[i]) / 3.0;
        EXPECT_NEAR(out.context.value()[i], mean, 1e-12);
    }
}

TEST(Attention, SingleValidPosition) {
    Tape t;
    Rng rng(14);
    const auto h = constants(t, 4, 6, rng);
    AttentionVars p{t.constant(random_tensor({2, 6}, rng)), t.constant(random_tensor({2}, rng)),
                    t.constant(random_tensor({2}, rng))};
    const auto out = attention(h, 1, p);
    EXPECT_EQ(out.alphas.value(), Tensor::vector({1, 0, 0, 0}));
    EXPECT_EQ(out.context.value(), h[0].value());
    EXPECT_THROW(attention(h, 0, p), DegenerateInputError);
}

TEST(Attention, MaskedAnnotationsDoNotLeak) {
    Tape t;
    Rng rng(15);
    auto h = constants(t, 5, 4, rng);
    AttentionVars p{t.constant(random_tensor({3, 4}, rng)), t.constant(random_tensor({3}, rng)),
                    t.constant(random_tensor({3}, rng))};
    const Tensor before = attention(h, 2, p).context.value();
    h[3] = t.constant(random_tensor({4}, rng, -100, 100));
    h[4] = t.constant(random_tensor({4}, rng, -100, 100));
    EXPECT_EQ(attention(h, 2, p).context.value(), before);
}

TEST(TitleHead, ZeroWeightsAndShape) {
    Tape t;
    Rng rng(16);
    Var ctx = t.constant(random_tensor({6}, rng));
    EXPECT_EQ(title_head(ctx, {t.constant(Tensor({5, 6}, 0.0)), t.constant(Tensor({5}, 0.0))}).value(), Tensor({5}, 0.0));
    EXPECT_EQ(title_head(ctx, {t.constant(random_tensor({5, 6}, rng)), t.constant(Tensor({5}, 0.0))}).value().shape(),
              Shape{5});
    EXPECT_THROW(title_head(ctx, {t.constant(Tensor({5, 4})), t.constant(Tensor({5}))}), DimensionError);
}

TEST(TitleHead, GradientThroughAttentionAndBiLstm) {
    Rng rng(17);
    const std::size_t dh = 3, din = 4, da = 3, dt = 4, k = 4;
    std::vector<Tensor> params;
    for (int dir = 0; dir < 2; ++dir) {
        params.push_back(random_tensor({3 * dh, dh + din}, rng));
        params.push_back(random_tensor({3 * dh}, rng));
        params.push_back(random_tensor({dh, dh + din}, rng));
        params.push_back(random_tensor({dh}, rng));
    }
    params.push_back(random_tensor({da, 2 * dh}, rng));
    params.push_back(random_tensor({da}, rng));
    params.push_back(random_tensor({da}, rng));
    params.push_back(random_tensor({dt, 2 * dh}, rng));
    params.push_back(random_tensor({dt}, rng, 0.2, 0.5));
    for (std::size_t i = 0; i < k; ++i) params.push_back(random_tensor({din}, rng));
    auto f = [&](Tape&, std::span<const Var> v) {
        const std::vector<Var> seq(v.begin() + 13, v.end());
        const auto h = bilstm(seq, {v[0], v[1], v[2], v[3]}, {v[4], v[5], v[6], v[7]});
        const auto att = attention(h, 3, {v[8], v[9], v[10]});
        return sum(title_head(att.context, {v[11], v[12]}));
    };
    const auto r = grad_check(f, params, 1e-6);
    EXPECT_LT(r.max_relative_error, 1e-4);
    EXPECT_GT(r.checked, 150u);
}

TEST(RecurrentAttention, Deterministic) {
    auto run = [] {
        Tape t;
        Rng rng(18);
        const auto fwd = lstm_vars(t, 3, 2, rng), bwd = lstm_vars(t, 3, 2, rng);
        const auto h = bilstm(constants(t, 4, 2, rng), fwd, bwd);
        AttentionVars p{t.constant(random_tensor({2, 6}, rng)), t.constant(random_tensor({2}, rng)),
                        t.constant(random_tensor({2}, rng))};
        return attention(h, 3, p).context.value();
    };
    EXPECT_EQ(run(), run());
}

// --- classifier ------------------------------------------------------------

namespace {

struct ClassifierFixture {
    Tape tape;
    ClassifierVars vars;
    ClassifierFixture(std::uint64_t seed, bool zero, std::size_t dt = 5) {
        Rng rng(seed);
        auto make = [&](Shape s) { return tape.constant(zero ? Tensor(s, 0.0) : random_tensor(s, rng, -0.2, 0.2)); };
        vars = {{make({8, dt + kDocDim}), make({8})}, {make({4, 8}), make({4})}, {make({1, 4}), make({1})}};
    }
};

}  // namespace

TEST(Enrich, AlgebraicIdentities) {
    Tape t;
    Rng rng(19);
    const Tensor a = random_tensor({300}, rng), b = random_tensor({300}, rng);
    EXPECT_EQ(enrich(t.constant(a), t.constant(Tensor({300}, 1.0))).value(), a);
    EXPECT_EQ(enrich(t.constant(a), t.constant(Tensor({300}, 0.0))).value(), Tensor({300}, 0.0));
    EXPECT_EQ(enrich(t.constant(a), t.constant(b)).value(), enrich(t.constant(b), t.constant(a)).value());
    EXPECT_THROW(enrich(t.constant(Tensor({299})), t.constant(a)), DimensionError);
}

TEST(Classify, ZeroParametersGiveHalf) {
    ClassifierFixture f(1, true);
    Rng rng(20);
    const Var p = classify(f.tape.constant(random_tensor({5}, rng)), f.tape.constant(random_tensor({300}, rng)), f.vars);
    EXPECT_EQ(p.value()[0], 0.5);
}

TEST(Classify, OutputStrictlyInsideUnitInterval) {
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        ClassifierFixture f(100 + trial, false);
        const double p = classify(f.tape.constant(random_tensor({5}, rng, -10, 10)),
                                  f.tape.constant(random_tensor({300}, rng, -10, 10)), f.vars)
                             .value()[0];
        EXPECT_GT(p, 0.0);
        EXPECT_LT(p, 1.0);
    }
}

TEST(Classify, DimensionMismatch) {
    ClassifierFixture f(2, false);
    EXPECT_THROW(classify(f.tape.constant(Tensor({6})), f.tape.constant(Tensor({300})), f.vars), DimensionError);
}

TEST(Classify, ContinuousAndSymmetricInEnrichment) {
    ClassifierFixture f(3, false);
    Rng rng(22);
    const Tensor head = random_tensor({5}, rng), a = random_tensor({300}, rng), b = random_tensor({300}, rng);
    auto score = [&](const Tensor& h, const Tensor& x, const Tensor& y) {
        return classify(f.tape.constant(h), enrich(f.tape.constant(x), f.tape.constant(y)), f.vars).value()[0];
    };
    EXPECT_EQ(score(head, a, b), score(head, b, a));
    Tensor nudged = a;
    for (double& v : nudged.data()) v += 1e-6;
    EXPECT_LT(std::abs(score(head, nudged, b) - score(head, a, b)), 1e-3);
}

TEST(Classify, GradientMatchesFiniteDifferences) {
    Rng rng(23);
    std::vector<Tensor> params{random_tensor({8, 305}, rng, -.2, .2), random_tensor({8}, rng, -.1, .1),
                               random_tensor({4, 8}, rng),            random_tensor({4}, rng, -.1, .1),
                               random_tensor({1, 4}, rng),            random_tensor({1}, rng),
                               random_tensor({5}, rng),               random_tensor({300}, rng)};
    auto f = [](Tape&, std::span<const Var> v) {
        return bce(classify(v[6], v[7], {{v[0], v[1]}, {v[2], v[3]}, {v[4], v[5]}}), 1);
    };
    const auto r = grad_check(f, params, 1e-6);
    EXPECT_LT(r.max_relative_error, 1e-4);
}

// --- full model ------------------------------------------------------------

TEST(Model, LayoutNamesUniqueAndStable) {
    const auto a = param_layout(ModelDims{}), b = param_layout(ModelDims{});
    std::set<std::string> names;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].name, b[i].name);
        EXPECT_TRUE(names.insert(a[i].name).second) << a[i].name;
    }
    EXPECT_EQ(names.size(), 26u);
}

TEST(Model, ForwardAtDefaultDims) {
    ModelDims d;
    d.max_tokens = 6;
    d.char_vocab = 30;
    const ParamSet params = initialize_params(d, 3);
    Rng rng(24);
    const Example ex = synthetic_example(d, 4, rng);
    const double p = predict_probability(params, ex);
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
    EXPECT_EQ(p, predict_probability(params, ex));
}

TEST(Model, EmptyTitleRejected) {
    const ModelDims d = reduced_dims();
    Rng rng(25);
    Example ex = synthetic_example(d, 1, rng);
    ex.title.cells.assign(ex.title.cells.size(), CharVocab::pad);
    ex.title.valid_token_count = 0;
    EXPECT_THROW(predict_probability(initialize_params(d, 1), ex), DegenerateInputError);
}

TEST(Model, PadEmbeddingRowStartsZero) {
    const ModelDims d = reduced_dims();
    const ParamSet p = initialize_params(d, 9);
    for (std::size_t j = 0; j < d.d_char; ++j) EXPECT_EQ(p["char_embeddings"].at(CharVocab::pad, j), 0.0);
}

TEST(Model, FullLossGradientReducedDims) {
    // Same setup as the acceptance criterion, on a different post and seed.
    const ModelDims d = reduced_dims();
    Rng rng(26);
    const Example ex = synthetic_example(d, 4, rng, 0);
    const ParamSet params = generic_params(d, 5);
    std::vector<Tensor> leaves = checkable_params(params, d);
    const auto loss = [&](Tape& tape, std::span<const Var> vars) {
        LeafLookup lookup(tape, d, vars);
        return bce(forward(tape, bind_model(lookup), ex), ex.label);
    };
    const auto r = grad_check(loss, leaves, 1e-3);
    EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(Model, ConfigRejectsTooShortTokens) {
    ModelDims d;
    d.max_chars = 6;
    try {
        d.validate();
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "l_char");
    }
}
