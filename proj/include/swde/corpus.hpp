#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "swde/errors.hpp"
#include "swde/numerics/random.hpp"
#include "swde/text.hpp"

namespace swde {

enum class LabelSource { none, truth_class, truth_mean };

/// One corpus record. `body` is the article text used for the document
/// embedding.
struct Post {
    std::string id;
    std::string title;
    std::string body;
    std::optional<double> truth_mean;
    std::optional<int> label;
    LabelSource label_source = LabelSource::none;

    bool labeled() const { return label.has_value(); }
};

struct LoadResult {
    std::vector<Post> posts;
    std::size_t malformed = 0;
};

namespace detail {

inline std::optional<std::string> join_strings(const nlohmann::json& v, const char* sep) {
    if (v.is_string()) return v.get<std::string>();
    if (!v.is_array()) return std::nullopt;
    std::string out;
    bool first = true;
    for (const auto& item : v) {
        if (!item.is_string()) return std::nullopt;
        if (!first) out += sep;
        out += item.get<std::string>();
        first = false;
    }
    return out;
}

}  // namespace detail

/// Maps one JSON object in the clickbait-corpus layout to a Post. Returns
/// nullopt when required fields are missing or mistyped.
inline std::optional<Post> post_from_json(const nlohmann::json& j) {
    if (!j.is_object()) return std::nullopt;
    Post p;
    auto id = j.find("id");
    if (id == j.end()) return std::nullopt;
    if (id->is_string()) {
        p.id = id->get<std::string>();
    } else if (id->is_number_integer()) {
        p.id = std::to_string(id->get<long long>());
    } else {
        return std::nullopt;
    }

    auto text = j.find("postText");
    if (text == j.end()) return std::nullopt;
    auto title = detail::join_strings(*text, " ");
    if (!title) return std::nullopt;
    p.title = std::move(*title);

    if (auto paras = j.find("targetParagraphs"); paras != j.end() && !paras->is_null()) {
        auto body = detail::join_strings(*paras, "\n");
        if (!body) return std::nullopt;
        p.body = std::move(*body);
    }
    if (p.body.empty()) {
        if (auto desc = j.find("targetDescription"); desc != j.end() && !desc->is_null()) {
            if (!desc->is_string()) return std::nullopt;
            p.body = desc->get<std::string>();
        }
    }

    if (auto tm = j.find("truthMean"); tm != j.end() && !tm->is_null()) {
        if (!tm->is_number()) return std::nullopt;
        const double v = tm->get<double>();
        if (!(v >= 0.0 && v <= 1.0)) return std::nullopt;
        p.truth_mean = v;
    }
    if (auto tc = j.find("truthClass"); tc != j.end() && !tc->is_null()) {
        if (!tc->is_string()) return std::nullopt;
        const auto cls = tc->get<std::string>();
        if (cls == "clickbait") {
            p.label = 1;
        } else if (cls == "no-clickbait") {
            p.label = 0;
        } else {
            return std::nullopt;
        }
        p.label_source = LabelSource::truth_class;
    } else if (p.truth_mean) {
        p.label = *p.truth_mean >= 0.5 ? 1 : 0;
        p.label_source = LabelSource::truth_mean;
    }
    return p;
}

/// Reads one JSON object per line. Blank lines are ignored; lines that fail to
/// parse or map are skipped and counted in `malformed`.
inline LoadResult load_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus file " + path.string());
    LoadResult result;
    std::string line;
    while (std::getline(in, line)) {
        if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
            continue;
        }
        auto j = nlohmann::json::parse(line, nullptr, false);
        auto post = j.is_discarded() ? std::nullopt : post_from_json(j);
        if (post) {
            result.posts.push_back(std::move(*post));
        } else {
            ++result.malformed;
        }
    }
    if (result.posts.empty()) {
        throw CorpusError("no valid records in " + path.string() + " (" +
                          std::to_string(result.malformed) + " malformed lines)");
    }
    return result;
}

using text::tokenize;

/// Character alphabet. Index 0 is PAD, 1 is UNK; the rest are ordered by
/// descending frequency, ties by code point.
class CharVocab {
public:
    static constexpr int pad = 0;
    static constexpr int unk = 1;

    CharVocab() = default;

    explicit CharVocab(std::vector<char32_t> chars) : chars_(std::move(chars)) {
        for (std::size_t i = 0; i < chars_.size(); ++i) {
            index_.emplace(chars_[i], static_cast<int>(i) + 2);
        }
    }

    /// Counts characters of the tokenized texts and keeps those seen at least
    /// `min_count` times.
    static CharVocab build(std::span<const std::string> texts, std::size_t min_count = 5) {
        std::map<char32_t, std::size_t> counts;
        for (const auto& t : texts) {
            for (const auto& tok : tokenize(t)) {
                for (char32_t c : text::decode_utf8(tok)) ++counts[c];
            }
        }
        std::vector<std::pair<char32_t, std::size_t>> kept;
        for (const auto& [c, n] : counts) {
            if (n >= min_count) kept.emplace_back(c, n);
        }
        std::stable_sort(kept.begin(), kept.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        std::vector<char32_t> chars;
        for (const auto& kv : kept) chars.push_back(kv.first);
        return CharVocab(std::move(chars));
    }

    int index(char32_t c) const {
        auto it = index_.find(c);
        return it == index_.end() ? unk : it->second;
    }

    std::size_t size() const { return chars_.size() + 2; }
    const std::vector<char32_t>& chars() const { return chars_; }

private:
    std::vector<char32_t> chars_;
    std::unordered_map<char32_t, int> index_;
};

/// Word vocabulary for document embeddings. Index 0 is UNK (count 0); the rest
/// are ordered by descending count, ties lexicographic.
class TokenVocab {
public:
    static constexpr int unk = 0;
    static constexpr const char* unk_token = "<unk>";

    TokenVocab() : tokens_{unk_token}, counts_{0} { index_.emplace(unk_token, 0); }

    TokenVocab(std::vector<std::string> tokens, std::vector<std::uint64_t> counts)
        : tokens_(std::move(tokens)), counts_(std::move(counts)) {
        if (tokens_.empty() || tokens_[0] != unk_token || tokens_.size() != counts_.size()) {
            throw CorpusError("token vocabulary must start with " + std::string(unk_token) +
                              " and have one count per token");
        }
        for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], static_cast<int>(i));
    }

    static TokenVocab build(std::span<const std::vector<std::string>> docs, std::size_t min_count = 2) {
        std::map<std::string, std::uint64_t> counts;
        for (const auto& d : docs) {
            for (const auto& t : d) ++counts[t];
        }
        std::vector<std::pair<std::string, std::uint64_t>> kept;
        for (auto& [t, n] : counts) {
            if (n >= min_count && t != unk_token) kept.emplace_back(t, n);
        }
        std::stable_sort(kept.begin(), kept.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        std::vector<std::string> tokens{unk_token};
        std::vector<std::uint64_t> cs{0};
        for (auto& [t, n] : kept) {
            tokens.push_back(t);
            cs.push_back(n);
        }
        return TokenVocab(std::move(tokens), std::move(cs));
    }

    int index(const std::string& token) const {
        auto it = index_.find(token);
        return it == index_.end() ? unk : it->second;
    }

    /// In-vocabulary indices of `tokens`, UNKs dropped.
    std::vector<int> filter(std::span<const std::string> tokens) const {
        std::vector<int> out;
        for (const auto& t : tokens) {
            const int i = index(t);
            if (i != unk) out.push_back(i);
        }
        return out;
    }

    std::size_t size() const { return tokens_.size(); }
    const std::vector<std::string>& tokens() const { return tokens_; }
    const std::vector<std::uint64_t>& counts() const { return counts_; }

private:
    std::vector<std::string> tokens_;
    std::vector<std::uint64_t> counts_;
    std::unordered_map<std::string, int> index_;
};

/// K × L_char grid of character indices, row-major, PAD-filled.
struct EncodedTitle {
    std::size_t max_tokens = 0;
    std::size_t max_chars = 0;
    std::vector<int> cells;
    std::size_t valid_token_count = 0;

    std::span<const int> row(std::size_t t) const {
        return std::span<const int>(cells).subspan(t * max_chars, max_chars);
    }
    bool row_is_pad(std::size_t t) const {
        auto r = row(t);
        return std::all_of(r.begin(), r.end(), [](int c) { return c == CharVocab::pad; });
    }
};

inline EncodedTitle encode_title(std::string_view title, const CharVocab& cv, std::size_t max_tokens,
                                 std::size_t max_chars) {
    if (max_tokens == 0 || max_chars == 0) {
        throw PreconditionError("encode_title: K and L_char must be at least 1");
    }
    EncodedTitle e{max_tokens, max_chars, std::vector<int>(max_tokens * max_chars, CharVocab::pad), 0};
    const auto tokens = tokenize(title);
    e.valid_token_count = std::min(tokens.size(), max_tokens);
    for (std::size_t t = 0; t < e.valid_token_count; ++t) {
        const auto chars = text::decode_utf8(tokens[t]);
        const std::size_t n = std::min(chars.size(), max_chars);
        for (std::size_t c = 0; c < n; ++c) e.cells[t * max_chars + c] = cv.index(chars[c]);
    }
    return e;
}

/// Longest title (in tokens) of `posts`, clamped to [1, ceiling].
inline std::size_t title_length_bound(std::span<const Post> posts, std::size_t ceiling = 30) {
    std::size_t k = 1;
    for (const auto& p : posts) k = std::max(k, tokenize(p.title).size());
    return std::min(k, std::max<std::size_t>(ceiling, 1));
}

/// Seeded 4:1 partition: the first ⌈4n/5⌉ shuffled posts train, the rest
/// validate.
inline std::pair<std::vector<Post>, std::vector<Post>> split_train_val(std::span<const Post> posts,
                                                                       std::uint64_t seed) {
    if (posts.size() < 5) {
        throw DegenerateInputError("split_train_val: need at least 5 posts, got " +
                                   std::to_string(posts.size()));
    }
    std::vector<std::size_t> order(posts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    shuffle(order, rng);
    const std::size_t n_train = (4 * posts.size() + 4) / 5;
    std::pair<std::vector<Post>, std::vector<Post>> out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_train ? out.first : out.second).push_back(posts[order[i]]);
    }
    return out;
}

}  // namespace swde
