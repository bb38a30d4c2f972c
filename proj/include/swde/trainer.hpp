#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "swde/errors.hpp"
#include "swde/model.hpp"
#include "swde/numerics/random.hpp"
#include "swde/numerics/tape.hpp"
#include "swde/params.hpp"

namespace swde {

struct TrainConfig {
    std::size_t batch_size = 256;
    std::size_t epochs = 20;
    std::uint64_t seed = 1;
    double adadelta_rho = 0.95;
    double adadelta_eps = 1e-6;
    /// Max global gradient norm per step; 0 disables clipping.
    double clip_norm = 0.0;

    ModelDims dims;
    /// Upper bound on K when it is derived from the training titles.
    std::size_t k_ceiling = 30;
    std::size_t char_min_count = 5;
    std::size_t token_min_count = 2;

    Doc2VecConfig doc2vec;
    std::size_t infer_steps = 100;

    void validate() const {
        if (batch_size < 1) throw ConfigError("batch_size", "must be at least 1");
        if (epochs < 1) throw ConfigError("epochs", "must be at least 1");
        if (!(adadelta_rho > 0.0 && adadelta_rho < 1.0)) {
            throw ConfigError("adadelta_rho", "must lie strictly between 0 and 1");
        }
        if (!(adadelta_eps > 0.0) || !std::isfinite(adadelta_eps)) {
            throw ConfigError("adadelta_eps", "must be positive");
        }
        if (!(clip_norm >= 0.0) || !std::isfinite(clip_norm)) {
            throw ConfigError("clip_norm", "must be non-negative");
        }
        if (k_ceiling < 1) throw ConfigError("k_ceiling", "must be at least 1");
        if (doc2vec.epochs < 1) throw ConfigError("doc2vec_epochs", "must be at least 1");
        if (!(doc2vec.alpha > 0.0)) throw ConfigError("doc2vec_alpha", "must be positive");
        if (!(doc2vec.min_alpha > 0.0) || doc2vec.min_alpha > doc2vec.alpha) {
            throw ConfigError("doc2vec_min_alpha", "must be positive and not above doc2vec_alpha");
        }
        if (infer_steps < 1) throw ConfigError("infer_steps", "must be at least 1");
        dims.validate();
    }
};

inline double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

/// Tensor of `shape` filled i.i.d. uniform in ±√(6/(fan_in+fan_out)).
inline Tensor glorot_uniform(const Shape& shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    if (fan_in == 0 || fan_out == 0) {
        throw DegenerateInputError("glorot: fan_in and fan_out must be positive, got " +
                                   std::to_string(fan_in) + " and " + std::to_string(fan_out));
    }
    const double bound = glorot_bound(fan_in, fan_out);
    Tensor t(shape);
    for (double& v : t.data()) v = uniform(rng, -bound, bound);
    return t;
}

/// fan_out × fan_in weight matrix.
inline Tensor glorot_init(std::size_t fan_out, std::size_t fan_in, Rng& rng) {
    if (fan_in == 0 || fan_out == 0) {
        throw DegenerateInputError("glorot: fan_in and fan_out must be positive, got " +
                                   std::to_string(fan_in) + " and " + std::to_string(fan_out));
    }
    return glorot_uniform({fan_out, fan_in}, fan_in, fan_out, rng);
}

/// Glorot for every weight (embeddings included, PAD row zeroed), zeros for
/// biases.
inline ParamSet initialize_params(const ModelDims& dims, std::uint64_t seed) {
    dims.validate();
    Rng rng(seed);
    ParamSet params;
    for (const auto& spec : param_layout(dims)) {
        if (spec.kind == InitKind::bias) {
            params.add(spec.name, Tensor(spec.shape, 0.0));
            continue;
        }
        Tensor t = glorot_uniform(spec.shape, spec.fan_in, spec.fan_out, rng);
        if (spec.kind == InitKind::embedding) {
            for (std::size_t j = 0; j < t.dim(1); ++j) t.at(CharVocab::pad, j) = 0.0;
        }
        params.add(spec.name, std::move(t));
    }
    return params;
}

inline constexpr double kProbabilityClamp = 1e-7;

/// −[y ln p + (1−y) ln(1−p)] with p clamped to [1e-7, 1−1e-7].
inline double bce_loss(double p, int y) {
    const double pc = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
    return y ? -std::log(pc) : -std::log(1.0 - pc);
}

/// Tape version of bce_loss. The gradient is zero where the clamp is active.
inline Var bce(Var p, int y) {
    const double pv = p.value()[0];
    const double pc = std::clamp(pv, kProbabilityClamp, 1.0 - kProbabilityClamp);
    const bool clamped = pc != pv;
    p.tape->note_branch(clamped ? 2 : 1);
    const std::uint32_t pi = p.id;
    return p.tape->push(Tensor({1}, std::vector<double>{bce_loss(pv, y)}), nullptr, p.tape->needs_grad(pi),
                        [pi, pc, clamped, y](Tape& t, std::uint32_t self) {
                            if (clamped) return;
                            const double g = t.grad_ref(self)[0];
                            t.grad_ref(pi)[0] += g * (y ? -1.0 / pc : 1.0 / (1.0 - pc));
                        },
                        "bce");
}

/// Running averages E[g²] and E[Δx²], one pair per parameter tensor.
struct AdadeltaState {
    ParamSet sq_grad;
    ParamSet sq_update;

    static AdadeltaState for_params(const ParamSet& params) {
        return {params.zeros_like(), params.zeros_like()};
    }
};

/// One adadelta update, entry by entry:
///   E[g²] ← ρE[g²] + (1−ρ)g²
///   Δx    = −√(E[Δx²]+ε) / √(E[g²]+ε) · g
///   E[Δx²] ← ρE[Δx²] + (1−ρ)Δx²
///   x     ← x + Δx
inline void adadelta_step(ParamSet& params, const ParamSet& grads, AdadeltaState& state, double rho,
                          double eps) {
    if (!params.same_layout(grads) || !params.same_layout(state.sq_grad) ||
        !params.same_layout(state.sq_update)) {
        throw DimensionError("adadelta_step: parameter, gradient and state layouts differ");
    }
    for (std::size_t t = 0; t < params.size(); ++t) {
        if (!grads.tensors()[t].all_finite()) {
            throw NumericError("adadelta_step: non-finite gradient for " + grads.names()[t]);
        }
    }
    for (std::size_t t = 0; t < params.size(); ++t) {
        auto x = params.tensors()[t].data();
        const auto g = grads.tensors()[t].data();
        auto eg = state.sq_grad.tensors()[t].data();
        auto ex = state.sq_update.tensors()[t].data();
        for (std::size_t i = 0; i < x.size(); ++i) {
            eg[i] = rho * eg[i] + (1.0 - rho) * g[i] * g[i];
            const double dx = -(std::sqrt(ex[i] + eps) / std::sqrt(eg[i] + eps)) * g[i];
            ex[i] = rho * ex[i] + (1.0 - rho) * dx * dx;
            x[i] += dx;
        }
    }
}

/// Scales `grads` down so their global L2 norm is at most `max_norm`.
inline void clip_global_norm(ParamSet& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& t : grads.tensors()) sq += dot(t.data(), t.data());
    const double norm = std::sqrt(sq);
    if (norm <= max_norm || norm == 0.0) return;
    const double f = max_norm / norm;
    for (auto& t : grads.tensors()) {
        for (double& v : t.data()) v *= f;
    }
}

/// Mean BCE over `examples` under `params`; no parameter is touched.
inline double mean_loss(const ParamSet& params, std::span<const Example> examples) {
    if (examples.empty()) throw DegenerateInputError("mean_loss: no examples");
    Tape tape;
    double total = 0.0;
    for (const auto& ex : examples) {
        tape.clear();
        BoundParams bound(tape, params);
        total += bce_loss(forward(tape, bind_model(bound), ex).value()[0], ex.label);
    }
    return total / static_cast<double>(examples.size());
}

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainResult {
    ParamSet params;  // best-validation-loss weights
    std::vector<EpochStats> trace;
    std::size_t best_epoch = 0;
    ParamSet last_params;
};

/// Called after every epoch with the current weights; return false to stop.
using EpochObserver = std::function<bool(const EpochStats&, const ParamSet&)>;

/// Minibatch adadelta on mean BCE. Batches come from a seeded shuffle each
/// epoch; the last batch of an epoch may be short.
inline TrainResult train(std::span<const Example> train_set, std::span<const Example> val_set,
                         const TrainConfig& config, const EpochObserver& observer = {}) {
    config.validate();
    if (train_set.empty()) throw DegenerateInputError("train: empty training split");
    if (val_set.empty()) throw DegenerateInputError("train: empty validation split");

    ParamSet params = initialize_params(config.dims, config.seed);
    AdadeltaState state = AdadeltaState::for_params(params);
    Rng rng(config.seed ^ 0x5deece66dULL);
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainResult result;
    double best = std::numeric_limits<double>::infinity();
    Tape tape;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle(order, rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            ParamSet grads = params.zeros_like();
            for (std::size_t k = start; k < end; ++k) {
                const Example& ex = train_set[order[k]];
                tape.clear();
                BoundParams bound(tape, params);
                Var loss = bce(forward(tape, bind_model(bound), ex), ex.label);
                epoch_loss += loss.value()[0];
                tape.backward(loss);
                bound.accumulate_grads(tape, grads);
            }
            const double inv = 1.0 / static_cast<double>(end - start);
            for (auto& g : grads.tensors()) {
                for (double& v : g.data()) v *= inv;
            }
            if (config.clip_norm > 0.0) clip_global_norm(grads, config.clip_norm);
            adadelta_step(params, grads, state, config.adadelta_rho, config.adadelta_eps);
        }
        EpochStats stats{epoch, epoch_loss / static_cast<double>(train_set.size()), mean_loss(params, val_set)};
        if (!std::isfinite(stats.train_loss) || !std::isfinite(stats.val_loss)) {
            throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
        }
        result.trace.push_back(stats);
        if (stats.val_loss < best) {
            best = stats.val_loss;
            result.params = params;
            result.best_epoch = epoch;
        }
        if (observer && !observer(stats, params)) break;
    }
    result.last_params = std::move(params);
    return result;
}

/// `epoch,train_loss,val_loss` with a header row; values printed with 17
/// significant digits so the file pins the run exactly.
inline void write_loss_trace(std::ostream& out, std::span<const EpochStats> trace) {
    out << "epoch,train_loss,val_loss\n";
    char buf[96];
    for (const auto& s : trace) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", s.epoch, s.train_loss, s.val_loss);
        out << buf;
    }
}

}  // namespace swde
