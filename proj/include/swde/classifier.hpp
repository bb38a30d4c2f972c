#pragma once

#include "swde/doc2vec.hpp"
#include "swde/errors.hpp"
#include "swde/numerics/tape.hpp"
#include "swde/params.hpp"

namespace swde {

struct ClassifierVars {
    Dense dense1;  // d1 × (d_t + 300)
    Dense dense2;  // d2 × d1
    Dense output;  // 1 × d2
};

/// Title/body interaction feature: elementwise product of the two document
/// vectors.
inline Var enrich(Var title_vec, Var body_vec) {
    if (title_vec.value().size() != kDocDim || body_vec.value().size() != kDocDim) {
        throw DimensionError("enrich: expected two " + std::to_string(kDocDim) + "-vectors, got " +
                             shape_str(title_vec.shape()) + " and " + shape_str(body_vec.shape()));
    }
    return multiply(title_vec, body_vec);
}

/// Probability that the post is clickbait, strictly inside (0, 1) for finite
/// inputs (the sigmoid is not clamped here).
inline Var classify(Var title_head_out, Var enrichment, const ClassifierVars& p) {
    const std::size_t expected = p.dense1.weight.value().rank() == 2 ? p.dense1.weight.value().dim(1) : 0;
    if (title_head_out.value().rank() != 1 || enrichment.value().rank() != 1 ||
        title_head_out.value().size() + enrichment.value().size() != expected) {
        throw DimensionError("classify: title features " + shape_str(title_head_out.shape()) +
                             " + enrichment " + shape_str(enrichment.shape()) +
                             " do not match dense1 weight " + shape_str(p.dense1.weight.shape()));
    }
    Var x = concat_rows({title_head_out, enrichment});
    x = relu(affine(x, p.dense1));
    x = relu(affine(x, p.dense2));
    return sigmoid(affine(x, p.output));
}

}  // namespace swde
