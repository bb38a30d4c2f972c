#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "swde/errors.hpp"
#include "swde/numerics/tape.hpp"

namespace swde {

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    /// Entries whose ±ε probe crossed a ReLU/max-pool/clamp branch point.
    std::size_t skipped = 0;
    std::size_t worst_tensor = 0;
    std::size_t worst_entry = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

/// |a−b| / max(1e-8, |a|+|b|)
inline double relative_error(double a, double b) {
    return std::abs(a - b) / std::max(1e-8, std::abs(a) + std::abs(b));
}

using ScalarFn = std::function<Var(Tape&, std::span<const Var>)>;

/// Compares reverse-mode gradients of `f` against central differences
/// (f(θ+ε) − f(θ−ε)) / 2ε for every entry of every tensor in `params`.
///
/// An entry is skipped, not checked, when either probe lands on a different
/// piece of a piecewise function than the unperturbed point; the finite
/// difference is meaningless across a kink. `params` are restored on return.
inline GradCheckResult grad_check(const ScalarFn& f, std::vector<Tensor>& params, double epsilon) {
    if (!(epsilon >= 1e-7 && epsilon <= 1e-3)) {
        throw PreconditionError("grad_check: epsilon " + std::to_string(epsilon) +
                                " outside [1e-7, 1e-3]");
    }
    Tape tape;
    std::vector<Var> leaves;
    for (const Tensor& p : params) leaves.push_back(tape.parameter(p));
    Var loss = f(tape, leaves);
    tape.backward(loss);
    const std::uint64_t base_hash = tape.branch_hash();
    std::vector<Tensor> analytic;
    for (const Var& v : leaves) analytic.push_back(tape.grad(v));

    auto evaluate = [&](std::uint64_t& hash) {
        tape.clear();
        std::vector<Var> ls;
        for (const Tensor& p : params) ls.push_back(tape.parameter(p));
        const double value = f(tape, ls).value()[0];
        hash = tape.branch_hash();
        return value;
    };

    GradCheckResult result;
    for (std::size_t ti = 0; ti < params.size(); ++ti) {
        Tensor& p = params[ti];
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double saved = p[j];
            std::uint64_t h_plus = 0, h_minus = 0;
            p[j] = saved + epsilon;
            const double f_plus = evaluate(h_plus);
            p[j] = saved - epsilon;
            const double f_minus = evaluate(h_minus);
            p[j] = saved;
            if (h_plus != base_hash || h_minus != base_hash) {
                ++result.skipped;
                continue;
            }
            const double numeric = (f_plus - f_minus) / (2.0 * epsilon);
            const double err = relative_error(analytic[ti][j], numeric);
            ++result.checked;
            if (err > result.max_relative_error || result.checked == 1) {
                result.max_relative_error = std::max(result.max_relative_error, err);
                result.worst_tensor = ti;
                result.worst_entry = j;
                result.worst_analytic = analytic[ti][j];
                result.worst_numeric = numeric;
            }
        }
    }
    return result;
}

}  // namespace swde
