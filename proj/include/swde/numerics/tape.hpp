#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <deque>
#include <vector>

#include "swde/errors.hpp"
#include "swde/numerics/tensor.hpp"

namespace swde {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
/// is alive and not cleared.
struct Var {
    Tape* tape = nullptr;
    std::uint32_t id = 0;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
};

/// Reverse-mode gradient tape. Operations are appended in execution order and
/// replayed backwards by backward(). One tape is owned by one thread.
///
/// Besides values, the tape keeps a running hash of every piecewise branch
/// taken during the forward pass (ReLU signs, max-pool winners, loss clamps).
/// Two forward passes with the same hash evaluated the same smooth piece of
/// the function, which is what the finite-difference checker needs to know.
class Tape {
public:
    using Backward = std::function<void(Tape&, std::uint32_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Value with no gradient tracking.
    Var constant(Tensor value) { return push(std::move(value), nullptr, false, {}, "constant"); }

    /// Tracked leaf that refers to an externally owned tensor; the tensor must
    /// outlive the tape (or the next clear()).
    Var parameter(const Tensor& value) {
        check_finite(value, "parameter");
        nodes_.push_back(Node{Tensor{}, &value, Tensor{}, {}, true, "parameter"});
        return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
    }

    /// Tracked leaf owning its value.
    Var variable(Tensor value) { return push(std::move(value), nullptr, true, {}, "variable"); }

    /// Records an operation result. `needs_grad` should be true when any input
    /// is tracked; `backward` then propagates the output gradient to inputs.
    Var push(Tensor value, const Tensor* external, bool needs_grad, Backward backward,
             const char* op) {
        check_finite(value, op);
        nodes_.push_back(
            Node{std::move(value), external, Tensor{}, needs_grad ? std::move(backward) : Backward{},
                 needs_grad, op});
        return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
    }

    const Tensor& value(std::uint32_t id) const {
        const Node& n = nodes_[id];
        return n.external ? *n.external : n.value;
    }

    bool needs_grad(std::uint32_t id) const { return nodes_[id].needs_grad; }

    /// Gradient accumulator for node `id`, zero-allocated on first access.
    Tensor& grad_ref(std::uint32_t id) {
        Node& n = nodes_[id];
        if (n.grad.empty()) n.grad = Tensor(value(id).shape(), 0.0);
        return n.grad;
    }

    /// Gradient of the last backward() target with respect to `v`. Exactly zero
    /// for values not on any path to the target.
    Tensor grad(Var v) const {
        const Node& n = nodes_[v.id];
        if (n.grad.empty()) return Tensor(value(v.id).shape(), 0.0);
        return n.grad;
    }

    void backward(Var loss) {
        if (value(loss.id).size() != 1) {
            throw DimensionError("backward() target must be a scalar, got shape " +
                                 shape_str(value(loss.id).shape()));
        }
        backward(loss, Tensor(value(loss.id).shape(), 1.0));
    }

    void backward(Var out, const Tensor& seed) {
        if (seed.shape() != value(out.id).shape()) {
            throw DimensionError("backward seed shape " + shape_str(seed.shape()) +
                                 " does not match output " + shape_str(value(out.id).shape()));
        }
        for (auto& n : nodes_) n.grad = Tensor{};
        grad_ref(out.id) = seed;
        for (std::uint32_t id = out.id + 1; id-- > 0;) {
            Node& n = nodes_[id];
            if (n.grad.empty() || !n.backward) continue;
            n.backward(*this, id);
            if (!n.grad.all_finite()) {
                throw NumericError(std::string("non-finite gradient in op '") + n.op + "'");
            }
        }
    }

    void note_branch(std::uint64_t bits) {
        branch_hash_ ^= bits + 0x9e3779b97f4a7c15ULL + (branch_hash_ << 6) + (branch_hash_ >> 2);
    }
    std::uint64_t branch_hash() const noexcept { return branch_hash_; }

    std::size_t size() const noexcept { return nodes_.size(); }

    void clear() {
        nodes_.clear();
        branch_hash_ = 0;
    }

private:
    struct Node {
        Tensor value;
        const Tensor* external;
        Tensor grad;
        Backward backward;
        bool needs_grad;
        const char* op;
    };

    static void check_finite(const Tensor& t, const char* op) {
        if (!t.all_finite()) {
            throw NumericError(std::string("non-finite value produced by op '") + op + "'");
        }
    }

    std::deque<Node> nodes_;  // stable addresses: value() references survive later pushes
    std::uint64_t branch_hash_ = 0;
};

inline const Tensor& Var::value() const { return tape->value(id); }

namespace detail {

inline Tape& same_tape(std::initializer_list<Var> vars) {
    Tape* t = vars.begin()->tape;
    for (const Var& v : vars) {
        if (v.tape != t || t == nullptr) throw Error("operands recorded on different tapes");
    }
    return *t;
}

inline void require_same_shape(const Var& a, const Var& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    }
}

inline void accumulate(Tensor& dst, std::span<const double> src) {
    auto d = dst.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += src[i];
}

template <class Fwd, class Deriv>
Var unary(Var x, const char* op, Fwd fwd, Deriv deriv) {
    Tape& tape = *x.tape;
    Tensor out(x.shape());
    const auto in = x.value().data();
    auto o = out.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = fwd(in[i]);
    const std::uint32_t xi = x.id;
    return tape.push(std::move(out), nullptr, tape.needs_grad(xi),
                     [xi, deriv](Tape& t, std::uint32_t self) {
                         const auto y = t.value(self).data();
                         const auto xin = t.value(xi).data();
                         const auto g = t.grad_ref(self).data();
                         auto dx = t.grad_ref(xi).data();
                         for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * deriv(xin[i], y[i]);
                     },
                     op);
}

}  // namespace detail

/// Matrix product. `a` is m×k; `b` is k×n (result m×n) or a length-k vector
/// (result length m).
inline Var matmul(Var a, Var b) {
    Tape& tape = detail::same_tape({a, b});
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if (A.rank() != 2 || (B.rank() != 1 && B.rank() != 2) || A.dim(1) != B.dim(0)) {
        throw DimensionError("matmul: incompatible shapes " + shape_str(A.shape()) + " and " +
                             shape_str(B.shape()));
    }
    const std::size_t m = A.dim(0), k = A.dim(1), n = B.rank() == 2 ? B.dim(1) : 1;
    Tensor C(B.rank() == 2 ? Shape{m, n} : Shape{m});
    const double* pa = A.data().data();
    const double* pb = B.data().data();
    double* pc = C.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double av = pa[i * k + p];
            const double* brow = pb + p * n;
            double* crow = pc + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    const std::uint32_t ai = a.id, bi = b.id;
    return tape.push(
        std::move(C), nullptr, tape.needs_grad(ai) || tape.needs_grad(bi),
        [ai, bi, m, k, n](Tape& t, std::uint32_t self) {
            const double* g = t.grad_ref(self).data().data();
            const double* pa = t.value(ai).data().data();
            const double* pb = t.value(bi).data().data();
            if (t.needs_grad(ai)) {
                double* da = t.grad_ref(ai).data().data();  // dA = dC * B^T
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t p = 0; p < k; ++p) {
                        double s = 0.0;
                        for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * pb[p * n + j];
                        da[i * k + p] += s;
                    }
                }
            }
            if (t.needs_grad(bi)) {
                double* db = t.grad_ref(bi).data().data();  // dB = A^T * dC
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t p = 0; p < k; ++p) {
                        const double av = pa[i * k + p];
                        for (std::size_t j = 0; j < n; ++j) db[p * n + j] += av * g[i * n + j];
                    }
                }
            }
        },
        "matmul");
}

/// Valid (unpadded) 1-D cross-correlation. signal: c_in×L, filters:
/// c_out×c_in×W, bias: c_out. Result: c_out×(L−W+1).
inline Var conv1d_valid(Var signal, Var filters, Var bias) {
    Tape& tape = detail::same_tape({signal, filters, bias});
    const Tensor& X = signal.value();
    const Tensor& F = filters.value();
    const Tensor& B = bias.value();
    if (X.rank() != 2 || F.rank() != 3 || B.rank() != 1 || F.dim(1) != X.dim(0) ||
        B.dim(0) != F.dim(0)) {
        throw DimensionError("conv1d_valid: incompatible shapes signal " + shape_str(X.shape()) +
                             ", filters " + shape_str(F.shape()) + ", bias " + shape_str(B.shape()));
    }
    const std::size_t cin = X.dim(0), len = X.dim(1), cout = F.dim(0), width = F.dim(2);
    if (len < width) {
        throw DegenerateInputError("conv1d_valid: signal length " + std::to_string(len) +
                                   " shorter than filter width " + std::to_string(width));
    }
    const std::size_t out_len = len - width + 1;
    Tensor Y({cout, out_len});
    const double* px = X.data().data();
    const double* pf = F.data().data();
    double* py = Y.data().data();
    for (std::size_t o = 0; o < cout; ++o) {
        double* yrow = py + o * out_len;
        std::fill(yrow, yrow + out_len, B[o]);
        for (std::size_t c = 0; c < cin; ++c) {
            for (std::size_t k = 0; k < width; ++k) {
                const double w = pf[(o * cin + c) * width + k];
                const double* xrow = px + c * len + k;
                for (std::size_t t = 0; t < out_len; ++t) yrow[t] += w * xrow[t];
            }
        }
    }
    const std::uint32_t xi = signal.id, fi = filters.id, bi = bias.id;
    const bool track = tape.needs_grad(xi) || tape.needs_grad(fi) || tape.needs_grad(bi);
    return tape.push(
        std::move(Y), nullptr, track,
        [=](Tape& t, std::uint32_t self) {
            const double* g = t.grad_ref(self).data().data();
            const double* px = t.value(xi).data().data();
            const double* pf = t.value(fi).data().data();
            double* dx = t.needs_grad(xi) ? t.grad_ref(xi).data().data() : nullptr;
            double* df = t.needs_grad(fi) ? t.grad_ref(fi).data().data() : nullptr;
            double* db = t.needs_grad(bi) ? t.grad_ref(bi).data().data() : nullptr;
            for (std::size_t o = 0; o < cout; ++o) {
                const double* grow = g + o * out_len;
                if (db) {
                    double s = 0.0;
                    for (std::size_t tt = 0; tt < out_len; ++tt) s += grow[tt];
                    db[o] += s;
                }
                for (std::size_t c = 0; c < cin; ++c) {
                    for (std::size_t k = 0; k < width; ++k) {
                        const std::size_t fidx = (o * cin + c) * width + k;
                        const double* xrow = px + c * len + k;
                        if (df) {
                            double s = 0.0;
                            for (std::size_t tt = 0; tt < out_len; ++tt) s += grow[tt] * xrow[tt];
                            df[fidx] += s;
                        }
                        if (dx) {
                            const double w = pf[fidx];
                            double* dxrow = dx + c * len + k;
                            for (std::size_t tt = 0; tt < out_len; ++tt) dxrow[tt] += w * grow[tt];
                        }
                    }
                }
            }
        },
        "conv1d_valid");
}

inline double sigmoid_scalar(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline Var sigmoid(Var x) {
    return detail::unary(x, "sigmoid", sigmoid_scalar, [](double, double y) { return y * (1.0 - y); });
}

inline Var tanh(Var x) {
    return detail::unary(x, "tanh", [](double v) { return std::tanh(v); },
                         [](double, double y) { return 1.0 - y * y; });
}

/// max(0, x). The derivative at exactly 0 is taken as 0.
inline Var relu(Var x) {
    std::uint64_t bits = 0;
    for (double v : x.value().data()) bits = bits * 31 + (v > 0.0 ? 1 : 0);
    x.tape->note_branch(bits);
    return detail::unary(x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
                         [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

inline Var add(Var a, Var b) {
    Tape& tape = detail::same_tape({a, b});
    detail::require_same_shape(a, b, "add");
    Tensor out = a.value();
    detail::accumulate(out, b.value().data());
    const std::uint32_t ai = a.id, bi = b.id;
    return tape.push(std::move(out), nullptr, tape.needs_grad(ai) || tape.needs_grad(bi),
                     [ai, bi](Tape& t, std::uint32_t self) {
                         const auto g = t.grad_ref(self).data();
                         if (t.needs_grad(ai)) detail::accumulate(t.grad_ref(ai), g);
                         if (t.needs_grad(bi)) detail::accumulate(t.grad_ref(bi), g);
                     },
                     "add");
}

/// Elementwise (Hadamard) product.
inline Var multiply(Var a, Var b) {
    Tape& tape = detail::same_tape({a, b});
    detail::require_same_shape(a, b, "multiply");
    Tensor out(a.shape());
    const auto pa = a.value().data();
    const auto pb = b.value().data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[i] * pb[i];
    const std::uint32_t ai = a.id, bi = b.id;
    return tape.push(std::move(out), nullptr, tape.needs_grad(ai) || tape.needs_grad(bi),
                     [ai, bi](Tape& t, std::uint32_t self) {
                         const auto g = t.grad_ref(self).data();
                         const auto va = t.value(ai).data();
                         const auto vb = t.value(bi).data();
                         if (t.needs_grad(ai)) {
                             auto d = t.grad_ref(ai).data();
                             for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * vb[i];
                         }
                         if (t.needs_grad(bi)) {
                             auto d = t.grad_ref(bi).data();
                             for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * va[i];
                         }
                     },
                     "multiply");
}

/// Concatenation along axis 0. All parts share rank and trailing extents.
inline Var concat_rows(std::span<const Var> parts) {
    if (parts.empty()) throw DegenerateInputError("concat_rows: no operands");
    Tape& tape = *parts.front().tape;
    const Shape& first = parts.front().shape();
    Shape out_shape = first;
    out_shape[0] = 0;
    bool track = false;
    for (const Var& p : parts) {
        const Shape& s = p.shape();
        if (p.tape != &tape) throw Error("operands recorded on different tapes");
        if (s.size() != first.size() || !std::equal(s.begin() + 1, s.end(), first.begin() + 1)) {
            throw DimensionError("concat_rows: trailing dimensions differ, " + shape_str(first) +
                                 " vs " + shape_str(s));
        }
        out_shape[0] += s[0];
        track = track || tape.needs_grad(p.id);
    }
    std::vector<double> data;
    data.reserve(shape_numel(out_shape));
    std::vector<std::uint32_t> ids;
    for (const Var& p : parts) {
        const auto d = p.value().data();
        data.insert(data.end(), d.begin(), d.end());
        ids.push_back(p.id);
    }
    return tape.push(Tensor(out_shape, std::move(data)), nullptr, track,
                     [ids = std::move(ids)](Tape& t, std::uint32_t self) {
                         const auto g = t.grad_ref(self).data();
                         std::size_t off = 0;
                         for (std::uint32_t id : ids) {
                             const std::size_t n = t.value(id).size();
                             if (t.needs_grad(id)) detail::accumulate(t.grad_ref(id), g.subspan(off, n));
                             off += n;
                         }
                     },
                     "concat_rows");
}

inline Var concat_rows(std::initializer_list<Var> parts) {
    return concat_rows(std::span<const Var>(parts.begin(), parts.size()));
}

/// Rows [begin, begin+count) along axis 0.
inline Var slice_rows(Var x, std::size_t begin, std::size_t count) {
    const Shape& s = x.shape();
    if (s.empty() || count == 0 || begin + count > s[0]) {
        throw DimensionError("slice_rows: range [" + std::to_string(begin) + ", " +
                             std::to_string(begin + count) + ") outside " + shape_str(s));
    }
    Shape out_shape = s;
    out_shape[0] = count;
    const std::size_t row = shape_numel(s) / s[0];
    const auto d = x.value().data().subspan(begin * row, count * row);
    const std::uint32_t xi = x.id;
    return x.tape->push(Tensor(out_shape, std::vector<double>(d.begin(), d.end())), nullptr,
                        x.tape->needs_grad(xi),
                        [xi, begin, row](Tape& t, std::uint32_t self) {
                            const auto g = t.grad_ref(self).data();
                            auto dx = t.grad_ref(xi).data().subspan(begin * row, g.size());
                            for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
                        },
                        "slice_rows");
}

/// Stacks equal-length vectors into an n×d matrix.
inline Var stack_rows(std::span<const Var> rows) {
    if (rows.empty()) throw DegenerateInputError("stack_rows: no operands");
    for (const Var& r : rows) {
        if (r.value().rank() != 1) {
            throw DimensionError("stack_rows: expected vectors, got " + shape_str(r.shape()));
        }
    }
    Var flat = concat_rows(rows);
    const std::size_t d = rows.front().value().dim(0);
    const std::uint32_t fi = flat.id;
    Tensor out({rows.size(), d}, flat.value().storage());
    return flat.tape->push(std::move(out), nullptr, flat.tape->needs_grad(fi),
                           [fi](Tape& t, std::uint32_t self) {
                               detail::accumulate(t.grad_ref(fi), t.grad_ref(self).data());
                           },
                           "stack_rows");
}

inline Var transpose(Var x) {
    const Tensor& X = x.value();
    if (X.rank() != 2) throw DimensionError("transpose: expected matrix, got " + shape_str(X.shape()));
    const std::size_t r = X.dim(0), c = X.dim(1);
    Tensor out({c, r});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out.at(j, i) = X.at(i, j);
    const std::uint32_t xi = x.id;
    return x.tape->push(std::move(out), nullptr, x.tape->needs_grad(xi),
                        [xi, r, c](Tape& t, std::uint32_t self) {
                            const Tensor& g = t.grad_ref(self);
                            Tensor& dx = t.grad_ref(xi);
                            for (std::size_t i = 0; i < r; ++i)
                                for (std::size_t j = 0; j < c; ++j) dx.at(i, j) += g.at(j, i);
                        },
                        "transpose");
}

/// Max over the length axis of a channels×length matrix, giving a
/// length-`channels` vector. Gradient flows only to the (first) argmax.
inline Var global_max_pool(Var x) {
    const Tensor& X = x.value();
    if (X.rank() != 2) {
        throw DimensionError("global_max_pool: expected channels x length, got " + shape_str(X.shape()));
    }
    const std::size_t ch = X.dim(0), len = X.dim(1);
    Tensor out({ch});
    std::vector<std::size_t> argmax(ch);
    std::uint64_t bits = 0;
    for (std::size_t c = 0; c < ch; ++c) {
        std::size_t best = 0;
        for (std::size_t t = 1; t < len; ++t) {
            if (X.at(c, t) > X.at(c, best)) best = t;
        }
        argmax[c] = best;
        out[c] = X.at(c, best);
        bits = bits * 1000003 + best;
    }
    x.tape->note_branch(bits);
    const std::uint32_t xi = x.id;
    return x.tape->push(std::move(out), nullptr, x.tape->needs_grad(xi),
                        [xi, argmax = std::move(argmax)](Tape& t, std::uint32_t self) {
                            const auto g = t.grad_ref(self).data();
                            Tensor& dx = t.grad_ref(xi);
                            for (std::size_t c = 0; c < g.size(); ++c) dx.at(c, argmax[c]) += g[c];
                        },
                        "global_max_pool");
}

/// Softmax over the first `valid` entries of a vector; entries at or beyond
/// `valid` are treated as −∞ and come out exactly 0.
inline Var softmax(Var scores, std::size_t valid) {
    const Tensor& S = scores.value();
    if (S.rank() != 1 || S.size() == 0) {
        throw DegenerateInputError("softmax: expected non-empty vector, got " + shape_str(S.shape()));
    }
    if (valid == 0 || valid > S.size()) {
        throw DegenerateInputError("softmax: valid count " + std::to_string(valid) + " outside [1, " +
                                   std::to_string(S.size()) + "]");
    }
    Tensor out(S.shape(), 0.0);
    double mx = S[0];
    for (std::size_t i = 1; i < valid; ++i) mx = std::max(mx, S[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < valid; ++i) {
        out[i] = std::exp(S[i] - mx);
        z += out[i];
    }
    for (std::size_t i = 0; i < valid; ++i) out[i] /= z;
    const std::uint32_t si = scores.id;
    return scores.tape->push(std::move(out), nullptr, scores.tape->needs_grad(si),
                             [si](Tape& t, std::uint32_t self) {
                                 const auto y = t.value(self).data();
                                 const auto g = t.grad_ref(self).data();
                                 const double gy = dot(g, y);
                                 auto ds = t.grad_ref(si).data();
                                 for (std::size_t i = 0; i < y.size(); ++i) ds[i] += y[i] * (g[i] - gy);
                             },
                             "softmax");
}

inline Var softmax(Var scores) { return softmax(scores, scores.value().size()); }

/// Gathers rows of `table` (V×d) at `indices` and lays them out as columns of
/// a d×L matrix. Row `frozen_row` receives no gradient.
inline Var embedding_columns(Var table, std::span<const int> indices, int frozen_row = 0) {
    const Tensor& T = table.value();
    if (T.rank() != 2) throw DimensionError("embedding_columns: table must be a matrix");
    if (indices.empty()) throw DegenerateInputError("embedding_columns: no indices");
    const std::size_t vocab = T.dim(0), d = T.dim(1), len = indices.size();
    Tensor out({d, len});
    for (std::size_t t = 0; t < len; ++t) {
        const int idx = indices[t];
        if (idx < 0 || static_cast<std::size_t>(idx) >= vocab) {
            throw DimensionError("embedding_columns: index " + std::to_string(idx) +
                                 " outside table of " + std::to_string(vocab) + " rows");
        }
        for (std::size_t j = 0; j < d; ++j) out.at(j, t) = T.at(idx, j);
    }
    const std::uint32_t ti = table.id;
    return table.tape->push(std::move(out), nullptr, table.tape->needs_grad(ti),
                            [ti, idx = std::vector<int>(indices.begin(), indices.end()), frozen_row](
                                Tape& t, std::uint32_t self) {
                                const Tensor& g = t.grad_ref(self);
                                Tensor& dt = t.grad_ref(ti);
                                const std::size_t d = g.dim(0);
                                for (std::size_t col = 0; col < idx.size(); ++col) {
                                    if (idx[col] == frozen_row) continue;
                                    for (std::size_t j = 0; j < d; ++j) dt.at(idx[col], j) += g.at(j, col);
                                }
                            },
                            "embedding_columns");
}

/// Sum of all entries, as a length-1 vector.
inline Var sum(Var x) {
    double s = 0.0;
    for (double v : x.value().data()) s += v;
    const std::uint32_t xi = x.id;
    return x.tape->push(Tensor({1}, std::vector<double>{s}), nullptr, x.tape->needs_grad(xi),
                        [xi](Tape& t, std::uint32_t self) {
                            const double g = t.grad_ref(self)[0];
                            for (double& d : t.grad_ref(xi).data()) d += g;
                        },
                        "sum");
}

inline Var scale(Var x, double factor) {
    Tensor out = x.value();
    for (double& v : out.data()) v *= factor;
    const std::uint32_t xi = x.id;
    return x.tape->push(std::move(out), nullptr, x.tape->needs_grad(xi),
                        [xi, factor](Tape& t, std::uint32_t self) {
                            const auto g = t.grad_ref(self).data();
                            auto d = t.grad_ref(xi).data();
                            for (std::size_t i = 0; i < g.size(); ++i) d[i] += factor * g[i];
                        },
                        "scale");
}

}  // namespace swde
