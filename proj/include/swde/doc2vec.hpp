#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "swde/corpus.hpp"
#include "swde/errors.hpp"
#include "swde/numerics/random.hpp"
#include "swde/numerics/tape.hpp"
#include "swde/numerics/tensor.hpp"

namespace swde {

/// Width of every document vector.
inline constexpr std::size_t kDocDim = 300;

struct Doc2VecConfig {
    std::size_t epochs = 20;
    std::size_t negatives = 5;
    double alpha = 0.025;
    double min_alpha = 1e-4;
    std::uint64_t seed = 1;
};

struct DocVector {
    std::string doc_id;
    Tensor values;
    /// Set when no token was in vocabulary and `values` is the zero vector.
    bool warning = false;
};

/// Tokenized document keyed by its id ("title:<id>", "body:<id>").
struct Document {
    std::string id;
    std::vector<std::string> tokens;
};

/// PV-DBOW paragraph vectors trained with negative sampling.
class Doc2VecModel {
public:
    Doc2VecModel() = default;

    Doc2VecModel(std::vector<std::string> doc_ids, Tensor doc_vectors, Tensor word_output_vectors,
                 TokenVocab vocab)
        : doc_ids_(std::move(doc_ids)),
          doc_vectors_(std::move(doc_vectors)),
          word_output_(std::move(word_output_vectors)),
          vocab_(std::move(vocab)) {
        if (doc_vectors_.rank() != 2 || doc_vectors_.dim(1) != kDocDim ||
            doc_vectors_.dim(0) != doc_ids_.size()) {
            throw DimensionError("doc vectors must be " + std::to_string(doc_ids_.size()) + "x" +
                                 std::to_string(kDocDim) + ", got " + shape_str(doc_vectors_.shape()));
        }
        if (word_output_.rank() != 2 || word_output_.dim(1) != kDocDim ||
            word_output_.dim(0) != vocab_.size()) {
            throw DimensionError("word output vectors must be " + std::to_string(vocab_.size()) + "x" +
                                 std::to_string(kDocDim) + ", got " + shape_str(word_output_.shape()));
        }
        for (std::size_t i = 0; i < doc_ids_.size(); ++i) row_of_.emplace(doc_ids_[i], i);
        build_noise();
    }

    std::size_t dim() const { return kDocDim; }
    const std::vector<std::string>& doc_ids() const { return doc_ids_; }
    const Tensor& doc_vectors() const { return doc_vectors_; }
    Tensor& doc_vectors() { return doc_vectors_; }
    const Tensor& word_output_vectors() const { return word_output_; }
    Tensor& word_output_vectors() { return word_output_; }
    const TokenVocab& vocab() const { return vocab_; }
    const std::vector<double>& noise_distribution() const { return noise_; }

    /// Mean per-term negative-sampling loss over all (doc, word) pairs, one
    /// entry per epoch.
    std::vector<double> epoch_loss;

    bool contains(const std::string& doc_id) const { return row_of_.count(doc_id) != 0; }

    DocVector lookup(const std::string& doc_id) const {
        auto it = row_of_.find(doc_id);
        if (it == row_of_.end()) throw PreconditionError("unknown document " + doc_id);
        const auto row = doc_vectors_.data().subspan(it->second * kDocDim, kDocDim);
        return DocVector{doc_id, Tensor({kDocDim}, std::vector<double>(row.begin(), row.end())), false};
    }

    /// Draws a word index from the unigram^0.75 distribution.
    int sample_noise(Rng& rng) const {
        const double u = uniform01(rng);
        auto it = std::upper_bound(noise_cdf_.begin(), noise_cdf_.end(), u);
        if (it == noise_cdf_.end()) --it;
        return static_cast<int>(it - noise_cdf_.begin());
    }

private:
    void build_noise() {
        const auto& counts = vocab_.counts();
        noise_.assign(counts.size(), 0.0);
        double z = 0.0;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            noise_[i] = std::pow(static_cast<double>(counts[i]), 0.75);
            z += noise_[i];
        }
        if (z <= 0.0) throw DegenerateInputError("doc2vec: vocabulary has no counted tokens");
        noise_cdf_.resize(noise_.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < noise_.size(); ++i) {
            noise_[i] /= z;
            acc += noise_[i];
            noise_cdf_[i] = acc;
        }
    }

    std::vector<std::string> doc_ids_;
    Tensor doc_vectors_;
    Tensor word_output_;
    TokenVocab vocab_;
    std::vector<double> noise_;
    std::vector<double> noise_cdf_;
    std::unordered_map<std::string, std::size_t> row_of_;
};

namespace detail {

inline double log_sigmoid(double z) { return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }

/// One PV-DBOW negative-sampling update of `doc` toward `word`. Output vectors
/// are updated only when `trainable` is non-empty (it then aliases
/// `word_output`). Returns the pair loss averaged over the terms evaluated;
/// a negative draw equal to `word` is skipped and not counted.
inline double dbow_pair(std::span<double> doc, std::span<const double> word_output,
                        std::span<double> trainable, int word, const Doc2VecModel& noise_source,
                        std::size_t negatives, double alpha, Rng& rng, std::vector<double>& grad_doc) {
    std::fill(grad_doc.begin(), grad_doc.end(), 0.0);
    double loss = 0.0;
    std::size_t terms = 0;
    for (std::size_t k = 0; k <= negatives; ++k) {
        int target = word;
        double label = 1.0;
        if (k > 0) {
            target = noise_source.sample_noise(rng);
            if (target == word) continue;
            label = 0.0;
        }
        const std::size_t off = static_cast<std::size_t>(target) * kDocDim;
        auto out = word_output.subspan(off, kDocDim);
        const double z = dot(doc, out);
        loss -= label > 0 ? log_sigmoid(z) : log_sigmoid(-z);
        ++terms;
        const double g = (label - sigmoid_scalar(z)) * alpha;
        for (std::size_t i = 0; i < kDocDim; ++i) grad_doc[i] += g * out[i];
        if (!trainable.empty()) {
            auto w = trainable.subspan(off, kDocDim);
            for (std::size_t i = 0; i < kDocDim; ++i) w[i] += g * doc[i];
        }
    }
    for (std::size_t i = 0; i < kDocDim; ++i) doc[i] += grad_doc[i];
    return loss / static_cast<double>(terms);
}

inline double decayed(double alpha, double min_alpha, std::size_t done, std::size_t total) {
    const double a = alpha - (alpha - min_alpha) * static_cast<double>(done) / static_cast<double>(total);
    return std::max(a, min_alpha);
}

}  // namespace detail

/// Trains paragraph vectors for `docs` with PV-DBOW. Each document's words
/// are visited in index order, so the result does not depend on token order.
inline Doc2VecModel train_doc2vec(std::span<const Document> docs, const TokenVocab& vocab,
                                  const Doc2VecConfig& config) {
    if (config.epochs < 1) throw PreconditionError("doc2vec: epochs must be at least 1");
    if (vocab.size() <= 1) throw DegenerateInputError("doc2vec: empty vocabulary");
    if (docs.empty()) throw DegenerateInputError("doc2vec: no documents");

    std::vector<std::vector<int>> words;
    std::vector<std::string> ids;
    std::size_t words_per_epoch = 0;
    for (const auto& d : docs) {
        auto w = vocab.filter(d.tokens);
        if (w.empty()) {
            throw PreconditionError("doc2vec: document " + d.id + " is empty after vocabulary filtering");
        }
        std::sort(w.begin(), w.end());
        words_per_epoch += w.size();
        words.push_back(std::move(w));
        ids.push_back(d.id);
    }

    Rng rng(config.seed);
    Tensor doc_vectors({docs.size(), kDocDim});
    for (double& v : doc_vectors.data()) v = (uniform01(rng) - 0.5) / static_cast<double>(kDocDim);
    Doc2VecModel model(std::move(ids), std::move(doc_vectors), Tensor({vocab.size(), kDocDim}, 0.0), vocab);

    const std::size_t total = config.epochs * words_per_epoch;
    std::size_t done = 0;
    std::vector<std::size_t> order(docs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> grad(kDocDim);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle(order, rng);
        double loss = 0.0;
        for (std::size_t di : order) {
            auto doc = model.doc_vectors().data().subspan(di * kDocDim, kDocDim);
            for (int w : words[di]) {
                const double alpha = detail::decayed(config.alpha, config.min_alpha, done++, total);
                auto out = model.word_output_vectors().data();
                loss += detail::dbow_pair(doc, out, out, w, model, config.negatives, alpha, rng, grad);
            }
        }
        model.epoch_loss.push_back(loss / static_cast<double>(words_per_epoch));
    }
    if (!model.doc_vectors().all_finite() || !model.word_output_vectors().all_finite()) {
        throw NumericError("doc2vec: training diverged");
    }
    return model;
}

/// Fits a fresh document vector for `tokens` against the frozen output
/// vectors. Out-of-vocabulary input yields the zero vector with `warning` set.
inline DocVector infer_vector(const Doc2VecModel& model, std::span<const std::string> tokens,
                              std::size_t steps, std::uint64_t seed, const Doc2VecConfig& config = {}) {
    if (steps < 1) throw PreconditionError("infer_vector: steps must be at least 1");
    auto words = model.vocab().filter(tokens);
    if (words.empty()) return DocVector{"", Tensor({kDocDim}, 0.0), true};
    std::sort(words.begin(), words.end());

    Rng rng(seed);
    Tensor v({kDocDim});
    for (double& x : v.data()) x = (uniform01(rng) - 0.5) / static_cast<double>(kDocDim);
    const std::size_t total = steps * words.size();
    std::size_t done = 0;
    std::vector<double> grad(kDocDim);
    for (std::size_t s = 0; s < steps; ++s) {
        for (int w : words) {
            const double alpha = detail::decayed(config.alpha, config.min_alpha, done++, total);
            detail::dbow_pair(v.data(), model.word_output_vectors().data(), {}, w, model,
                              config.negatives, alpha, rng, grad);
        }
    }
    return DocVector{"", std::move(v), false};
}

/// a·b / (‖a‖‖b‖); 0 when either norm is 0.
inline double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DimensionError("cosine: lengths " + std::to_string(a.size()) + " and " +
                             std::to_string(b.size()));
    }
    const double na = l2_norm(a), nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

inline double cosine(const DocVector& a, const DocVector& b) { return cosine(a.values.data(), b.values.data()); }

}  // namespace swde
