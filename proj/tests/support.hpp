#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "swde/corpus.hpp"
#include "swde/doc2vec.hpp"
#include "swde/model.hpp"
#include "swde/numerics/random.hpp"
#include "swde/numerics/tape.hpp"
#include "swde/params.hpp"
#include "swde/trainer.hpp"

namespace swde::testing {

inline Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(shape, 0.0);
    for (double& v : t.data()) v = uniform(rng, lo, hi);
    return t;
}

/// Model dimensions small enough for exhaustive finite differences.
inline ModelDims reduced_dims() {
    ModelDims d;
    d.max_tokens = 4;
    d.max_chars = 8;
    d.char_vocab = 12;
    d.d_char = 8;
    d.conv_widths = {3, 3, 3};
    d.conv_channels = {8, 8, 16};
    d.d_h = 8;
    d.d_a = 8;
    d.d_t = 8;
    d.d1 = 16;
    d.d2 = 8;
    return d;
}

/// A post with `valid` non-PAD title rows (random character indices, some
/// trailing PAD cells) and random document vectors.
inline Example synthetic_example(const ModelDims& d, std::size_t valid, Rng& rng, int label = 1) {
    Example ex;
    ex.id = "synthetic";
    ex.title.max_tokens = d.max_tokens;
    ex.title.max_chars = d.max_chars;
    ex.title.cells.assign(d.max_tokens * d.max_chars, CharVocab::pad);
    ex.title.valid_token_count = valid;
    for (std::size_t t = 0; t < valid; ++t) {
        const std::size_t len = 2 + uniform_index(rng, d.max_chars - 1);
        for (std::size_t c = 0; c < len; ++c) {
            ex.title.cells[t * d.max_chars + c] = 1 + static_cast<int>(uniform_index(rng, d.char_vocab - 1));
        }
    }
    ex.title_vec = random_tensor({kDocDim}, rng, -0.5, 0.5);
    ex.body_vec = random_tensor({kDocDim}, rng, -0.5, 0.5);
    ex.label = label;
    return ex;
}

/// Glorot weights as in training, but with small random biases so no ReLU
/// sits exactly on its kink.
inline ParamSet generic_params(const ModelDims& d, std::uint64_t seed) {
    ParamSet p = initialize_params(d, seed);
    Rng rng(seed + 17);
    for (const auto& spec : param_layout(d)) {
        if (spec.kind != InitKind::bias) continue;
        for (double& v : p[spec.name].data()) v = uniform(rng, -0.1, 0.1);
    }
    return p;
}

/// Name → Var lookup over a flat list of leaves, in param_layout order, with
/// the frozen PAD embedding row supplied as a constant.
class LeafLookup {
public:
    LeafLookup(Tape& tape, const ModelDims& d, std::span<const Var> leaves) {
        const auto layout = param_layout(d);
        for (std::size_t i = 0; i < layout.size(); ++i) {
            Var v = leaves[i];
            if (layout[i].name == "char_embeddings") {
                v = concat_rows({tape.constant(Tensor({1, d.d_char}, 0.0)), v});
            }
            vars_.emplace(layout[i].name, v);
        }
    }
    Var operator[](const std::string& name) const { return vars_.at(name); }

private:
    std::map<std::string, Var> vars_;
};

/// Parameter tensors in layout order; the PAD row of the embedding table is
/// dropped because it is a constant, not a parameter.
inline std::vector<Tensor> checkable_params(const ParamSet& p, const ModelDims& d) {
    std::vector<Tensor> out;
    for (const auto& spec : param_layout(d)) {
        const Tensor& t = p[spec.name];
        if (spec.name == "char_embeddings") {
            auto data = t.data().subspan(d.d_char);
            out.emplace_back(Shape{d.char_vocab - 1, d.d_char}, std::vector<double>(data.begin(), data.end()));
        } else {
            out.push_back(t);
        }
    }
    return out;
}

/// Separable posts: clickbait titles contain "shocking", the others
/// "official"; everything else is drawn from a shared neutral pool.
inline std::vector<Post> separable_posts(std::size_t n, std::uint64_t seed) {
    static const char* neutral[] = {"city",  "council", "report", "market", "weather",
                                    "school", "river",  "update", "local",  "game"};
    Rng rng(seed);
    std::vector<Post> posts;
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 2);
        std::vector<std::string> words;
        for (int w = 0; w < 3; ++w) words.emplace_back(neutral[uniform_index(rng, 10)]);
        words.insert(words.begin() + static_cast<std::ptrdiff_t>(uniform_index(rng, 4)),
                     label ? "shocking" : "official");
        std::string title, body;
        for (const auto& w : words) title += (title.empty() ? "" : " ") + w;
        for (int w = 0; w < 12; ++w) body += std::string(w ? " " : "") + neutral[uniform_index(rng, 10)];
        Post p;
        p.id = std::to_string(i);
        p.title = title;
        p.body = body;
        p.label = label;
        p.label_source = LabelSource::truth_class;
        posts.push_back(std::move(p));
    }
    return posts;
}

inline nlohmann::json post_json(const Post& p) {
    nlohmann::json j{{"id", p.id}, {"postText", {p.title}}, {"targetParagraphs", {p.body}}};
    if (p.label) j["truthClass"] = *p.label ? "clickbait" : "no-clickbait";
    if (p.truth_mean) j["truthMean"] = *p.truth_mean;
    return j;
}

inline void write_jsonl(const std::filesystem::path& path, const std::vector<Post>& posts) {
    std::ofstream out(path);
    for (const auto& p : posts) out << post_json(p).dump() << '\n';
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("swde-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// The 3-document corpus: two identical documents and one with a disjoint
/// vocabulary.
inline std::vector<Document> three_doc_corpus() {
    const std::vector<std::string> shared = {"apple", "banana", "cherry", "grape", "lemon", "mango",
                                             "apple", "banana", "cherry", "grape", "lemon", "mango"};
    const std::vector<std::string> other = {"river", "mountain", "ocean", "valley", "desert", "forest",
                                            "river", "mountain", "ocean", "valley", "desert", "forest"};
    return {{"a", shared}, {"b", shared}, {"c", other}};
}

inline TokenVocab vocab_of(std::span<const Document> docs) {
    std::vector<std::vector<std::string>> tokens;
    for (const auto& d : docs) tokens.push_back(d.tokens);
    return TokenVocab::build(tokens, 1);
}

}  // namespace swde::testing
