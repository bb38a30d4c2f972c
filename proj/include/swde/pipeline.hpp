#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "swde/config.hpp"
#include "swde/container.hpp"
#include "swde/corpus.hpp"
#include "swde/doc2vec.hpp"
#include "swde/errors.hpp"
#include "swde/model.hpp"
#include "swde/text.hpp"
#include "swde/trainer.hpp"

namespace swde {

inline std::string title_doc_id(const std::string& post_id) { return "title:" + post_id; }
inline std::string body_doc_id(const std::string& post_id) { return "body:" + post_id; }

/// Everything needed to score a post: configuration (with K and the character
/// vocabulary size resolved into dims), vocabularies, document embeddings and
/// network weights.
struct SwdeModel {
    TrainConfig config;
    CharVocab chars;
    Doc2VecModel doc2vec;
    ParamSet params;

    /// Stored vector when the document was embedded at training time,
    /// otherwise inferred with `seed`. `inferred`/`warning` report which path
    /// was taken.
    DocVector document_vector(const std::string& doc_id, const std::string& text, std::uint64_t seed) const {
        if (doc2vec.contains(doc_id)) return doc2vec.lookup(doc_id);
        const auto tokens = tokenize(text);
        DocVector v = infer_vector(doc2vec, tokens, config.infer_steps, seed, config.doc2vec);
        v.doc_id = doc_id;
        return v;
    }

    Example make_example(const Post& post, std::uint64_t seed) const {
        Example ex;
        ex.id = post.id;
        ex.title = encode_title(post.title, chars, config.dims.max_tokens, config.dims.max_chars);
        ex.title_vec = document_vector(title_doc_id(post.id), post.title, seed).values;
        ex.body_vec = document_vector(body_doc_id(post.id), post.body, seed).values;
        ex.label = post.label.value_or(0);
        ex.truth_mean = post.truth_mean;
        return ex;
    }

    double probability(const Post& post, std::uint64_t seed) const {
        return predict_probability(params, make_example(post, seed));
    }
};

/// Posts that the supervised pipeline can use: labeled, non-empty title,
/// first occurrence of each id.
inline std::vector<Post> trainable_posts(std::span<const Post> posts, std::size_t* dropped = nullptr) {
    std::vector<Post> out;
    std::set<std::string> seen;
    for (const auto& p : posts) {
        if (!p.labeled() || tokenize(p.title).empty() || !seen.insert(p.id).second) continue;
        out.push_back(p);
    }
    if (dropped) *dropped = posts.size() - out.size();
    return out;
}

struct PipelineResult {
    SwdeModel model;
    std::vector<EpochStats> trace;
    std::size_t best_epoch = 0;
    std::size_t train_posts = 0;
    std::size_t val_posts = 0;
};

/// corpus → 4:1 split → vocabularies → Doc2Vec → supervised training.
///
/// Vocabularies and K come from the training split only. Paragraph vectors are
/// learned for the titles and bodies of every post (the objective is
/// unsupervised); documents with no in-vocabulary token get the zero vector.
inline PipelineResult train_pipeline(std::span<const Post> corpus, TrainConfig config,
                                     const EpochObserver& observer = {}) {
    config.validate();
    std::vector<Post> posts = trainable_posts(corpus);
    if (posts.size() < 5) {
        throw CorpusError("need at least 5 labeled posts with non-empty titles, got " + std::to_string(posts.size()));
    }
    auto [train_posts, val_posts] = split_train_val(posts, config.seed);

    std::vector<std::string> train_titles;
    for (const auto& p : train_posts) train_titles.push_back(p.title);
    config.dims.max_tokens = title_length_bound(train_posts, config.k_ceiling);
    CharVocab chars = CharVocab::build(train_titles, config.char_min_count);
    config.dims.char_vocab = chars.size();
    config.dims.validate();

    std::vector<std::vector<std::string>> train_docs;
    for (const auto& p : train_posts) {
        train_docs.push_back(tokenize(p.title));
        train_docs.push_back(tokenize(p.body));
    }
    TokenVocab vocab = TokenVocab::build(train_docs, config.token_min_count);
    if (vocab.size() <= 1) {
        throw CorpusError("no token reaches token_min_count=" + std::to_string(config.token_min_count) +
                          " in the training split");
    }

    std::vector<Document> docs;
    for (const auto* split : {&train_posts, &val_posts}) {
        for (const auto& p : *split) {
            for (auto doc : {Document{title_doc_id(p.id), tokenize(p.title)}, Document{body_doc_id(p.id), tokenize(p.body)}}) {
                if (!vocab.filter(doc.tokens).empty()) docs.push_back(std::move(doc));
            }
        }
    }
    config.doc2vec.seed = config.seed;

    PipelineResult result;
    result.model.config = config;
    result.model.chars = std::move(chars);
    result.model.doc2vec = train_doc2vec(docs, vocab, config.doc2vec);

    auto examples = [&](const std::vector<Post>& split) {
        std::vector<Example> out;
        for (const auto& p : split) out.push_back(result.model.make_example(p, config.seed));
        return out;
    };
    const auto train_set = examples(train_posts);
    const auto val_set = examples(val_posts);
    TrainResult tr = train(train_set, val_set, config, observer);
    result.model.params = std::move(tr.params);
    result.trace = std::move(tr.trace);
    result.best_epoch = tr.best_epoch;
    result.train_posts = train_posts.size();
    result.val_posts = val_posts.size();
    return result;
}

inline constexpr const char* kDocVectorsTensor = "doc2vec.doc_vectors";
inline constexpr const char* kWordVectorsTensor = "doc2vec.word_output_vectors";

inline Container to_container(const SwdeModel& m) {
    Container c;
    nlohmann::json& meta = c.metadata;
    meta["config"] = config_to_json(m.config);
    meta["k"] = m.config.dims.max_tokens;
    meta["char_vocab"] = nlohmann::json::array();
    for (char32_t ch : m.chars.chars()) meta["char_vocab"].push_back(text::encode_utf8(std::u32string(1, ch)));
    meta["token_vocab"] = {{"tokens", m.doc2vec.vocab().tokens()}, {"counts", m.doc2vec.vocab().counts()}};
    meta["doc_index"] = m.doc2vec.doc_ids();
    for (std::size_t i = 0; i < m.params.size(); ++i) c.tensors.push_back({m.params.names()[i], m.params.tensors()[i]});
    c.tensors.push_back({kDocVectorsTensor, m.doc2vec.doc_vectors()});
    c.tensors.push_back({kWordVectorsTensor, m.doc2vec.word_output_vectors()});
    return c;
}

inline SwdeModel from_container(const Container& c) {
    SwdeModel m;
    try {
        const auto& meta = c.metadata;
        m.config = config_from_json(meta.at("config"));
        m.config.dims.max_tokens = meta.at("k").get<std::size_t>();
        std::vector<char32_t> chars;
        for (const auto& s : meta.at("char_vocab")) {
            const auto cps = text::decode_utf8(s.get<std::string>());
            if (cps.size() != 1) throw ContainerError("bad container: char_vocab entry is not one character");
            chars.push_back(cps[0]);
        }
        m.chars = CharVocab(std::move(chars));
        m.config.dims.char_vocab = m.chars.size();
        m.config.doc2vec.seed = m.config.seed;
        m.config.validate();

        TokenVocab vocab(meta.at("token_vocab").at("tokens").get<std::vector<std::string>>(),
                         meta.at("token_vocab").at("counts").get<std::vector<std::uint64_t>>());
        m.doc2vec = Doc2VecModel(meta.at("doc_index").get<std::vector<std::string>>(), c.tensor(kDocVectorsTensor),
                                 c.tensor(kWordVectorsTensor), std::move(vocab));
        for (const auto& spec : param_layout(m.config.dims)) {
            const Tensor& t = c.tensor(spec.name);
            if (t.shape() != spec.shape) {
                throw ContainerError("bad container: tensor " + spec.name + " has shape " + shape_str(t.shape()) +
                                     ", expected " + shape_str(spec.shape));
            }
            m.params.add(spec.name, t);
        }
    } catch (const ContainerError&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        throw ContainerError(std::string("bad container: manifest: ") + e.what());
    } catch (const Error& e) {
        throw ContainerError(std::string("bad container: ") + e.what());
    }
    return m;
}

inline void save_model(const SwdeModel& m, const std::filesystem::path& path) { save_container(to_container(m), path); }
inline SwdeModel load_model(const std::filesystem::path& path) { return from_container(load_container(path)); }

}  // namespace swde
