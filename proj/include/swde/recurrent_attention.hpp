#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "swde/errors.hpp"
#include "swde/numerics/tape.hpp"
#include "swde/params.hpp"

namespace swde {

/// One LSTM direction. Gate rows of `W` and `b` are stacked forget, input,
/// output; every matrix acts on [h_{t-1}; r_t].
struct LstmDirectionVars {
    Var W;  // 3·d_h × (d_h + d_in)
    Var b;  // 3·d_h
    Var V;  // d_h × (d_h + d_in), candidate
    Var d;  // d_h
};

struct LstmState {
    Var c;
    Var h;
};

/// Intermediate values of one cell step, for inspection.
struct LstmGates {
    Var forget;
    Var input;
    Var output;
    Var candidate;
};

inline std::size_t lstm_hidden_size(const LstmDirectionVars& p) { return p.d.value().dim(0); }

inline LstmState lstm_initial_state(Tape& tape, std::size_t hidden) {
    return LstmState{tape.constant(Tensor({hidden}, 0.0)), tape.constant(Tensor({hidden}, 0.0))};
}

inline LstmState lstm_cell(const LstmState& prev, Var r, const LstmDirectionVars& p,
                           LstmGates* gates = nullptr) {
    const std::size_t dh = lstm_hidden_size(p);
    const Shape& ws = p.W.shape();
    const Shape& vs = p.V.shape();
    const std::size_t din = r.value().size();
    if (ws.size() != 2 || ws[0] != 3 * dh || ws[1] != dh + din || vs.size() != 2 || vs[0] != dh ||
        vs[1] != dh + din || p.b.value().size() != 3 * dh || prev.h.value().size() != dh ||
        prev.c.value().size() != dh || r.value().rank() != 1) {
        throw DimensionError("lstm_cell: W " + shape_str(ws) + ", V " + shape_str(vs) + ", input " +
                             shape_str(r.shape()) + ", hidden " + std::to_string(dh));
    }
    Var hr = concat_rows({prev.h, r});
    Var fio = sigmoid(add(matmul(p.W, hr), p.b));
    Var f = slice_rows(fio, 0, dh);
    Var i = slice_rows(fio, dh, dh);
    Var o = slice_rows(fio, 2 * dh, dh);
    Var l = tanh(add(matmul(p.V, hr), p.d));
    Var c = add(multiply(f, prev.c), multiply(i, l));
    Var h = multiply(o, tanh(c));
    if (gates) *gates = LstmGates{f, i, o, l};
    return LstmState{c, h};
}

/// Runs both directions over `inputs` and returns h_i = [→h_i; ←h_i].
inline std::vector<Var> bilstm(std::span<const Var> inputs, const LstmDirectionVars& fwd,
                               const LstmDirectionVars& bwd) {
    if (inputs.empty()) throw DegenerateInputError("bilstm: empty input sequence");
    Tape& tape = *inputs.front().tape;
    const std::size_t n = inputs.size();
    std::vector<Var> forward(n), backward(n);
    LstmState s = lstm_initial_state(tape, lstm_hidden_size(fwd));
    for (std::size_t t = 0; t < n; ++t) {
        s = lstm_cell(s, inputs[t], fwd);
        forward[t] = s.h;
    }
    s = lstm_initial_state(tape, lstm_hidden_size(bwd));
    for (std::size_t t = n; t-- > 0;) {
        s = lstm_cell(s, inputs[t], bwd);
        backward[t] = s.h;
    }
    std::vector<Var> annotations;
    annotations.reserve(n);
    for (std::size_t t = 0; t < n; ++t) annotations.push_back(concat_rows({forward[t], backward[t]}));
    return annotations;
}

struct AttentionVars {
    Var W;  // d_a × 2·d_h
    Var b;  // d_a
    Var u;  // d_a
};

struct AttentionOutput {
    Var context;  // 2·d_h
    Var alphas;   // K
};

/// Additive attention with one learned query:
/// e_j = u · tanh(W h_j + b), α = softmax over the first `valid` positions,
/// context = Σ α_j h_j. Positions past `valid` get α_j = 0 exactly.
inline AttentionOutput attention(std::span<const Var> annotations, std::size_t valid,
                                 const AttentionVars& p) {
    if (annotations.empty()) throw DegenerateInputError("attention: no annotations");
    if (valid == 0 || valid > annotations.size()) {
        throw DegenerateInputError("attention: valid count " + std::to_string(valid) +
                                   " outside [1, " + std::to_string(annotations.size()) + "]");
    }
    std::vector<Var> projected;
    projected.reserve(annotations.size());
    for (std::size_t j = 0; j < annotations.size(); ++j) {
        if (j < valid) {
            projected.push_back(tanh(add(matmul(p.W, annotations[j]), p.b)));
        } else {
            // Masked: the score is never read, and keeping it a constant keeps
            // the annotation out of the gradient path.
            projected.push_back(annotations.front().tape->constant(Tensor({p.b.value().size()}, 0.0)));
        }
    }
    Var scores = matmul(stack_rows(projected), p.u);
    Var alphas = softmax(scores, valid);
    Var context = matmul(transpose(stack_rows(std::span<const Var>(annotations.data(), valid))),
                         slice_rows(alphas, 0, valid));
    return AttentionOutput{context, alphas};
}

/// ReLU(weight · context + bias)
inline Var title_head(Var context, const Dense& dense) { return relu(affine(context, dense)); }

}  // namespace swde
