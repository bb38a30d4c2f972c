#pragma once

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "swde/config.hpp"
#include "swde/corpus.hpp"
#include "swde/errors.hpp"
#include "swde/eval.hpp"
#include "swde/pipeline.hpp"

// Implementations of the `swde` subcommands. Results go to `out` in a
// machine-readable form (CSV, JSON, JSONL); diagnostics go to `err`.

namespace swde {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitCorpus = 2,
    kExitConfig = 3,
    kExitNumeric = 4,
    kExitLabels = 5,
    kExitContainer = 6,
};

struct CommandOptions {
    std::string corpus;
    std::string config;
    std::string model;
    std::string out;
    std::optional<std::uint64_t> seed;
    double threshold = 0.5;
    std::optional<std::string> title;
    std::optional<std::string> body;
};

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

/// Verbosity from SWDE_LOG: "quiet"/"0", "info"/"1" (default), "debug"/"2".
inline LogLevel log_level_from_env() {
    const char* v = std::getenv("SWDE_LOG");
    if (!v) return LogLevel::info;
    const std::string s = v;
    if (s == "quiet" || s == "0" || s == "error") return LogLevel::quiet;
    if (s == "debug" || s == "2") return LogLevel::debug;
    return LogLevel::info;
}

class Log {
public:
    explicit Log(std::ostream& err, LogLevel level = log_level_from_env()) : err_(err), level_(level) {}
    void info(const std::string& msg) const { emit(LogLevel::info, "info", msg); }
    void debug(const std::string& msg) const { emit(LogLevel::debug, "debug", msg); }
    void error(const std::string& msg) const { err_ << "swde: error: " << msg << '\n'; }

private:
    void emit(LogLevel at, const char* tag, const std::string& msg) const {
        if (level_ >= at) err_ << "swde: " << tag << ": " << msg << '\n';
    }
    std::ostream& err_;
    LogLevel level_;
};

namespace detail {

inline std::optional<LoadResult> read_corpus(const std::string& path, const Log& log) {
    if (path.empty()) {
        log.error("--corpus is required");
        return std::nullopt;
    }
    try {
        LoadResult r = load_jsonl(path);
        if (r.malformed) log.info("skipped " + std::to_string(r.malformed) + " malformed corpus lines");
        return r;
    } catch (const Error& e) {
        log.error(e.what());
        return std::nullopt;
    }
}

inline std::optional<SwdeModel> read_model(const std::string& path, const Log& log) {
    if (path.empty()) {
        log.error("--model is required");
        return std::nullopt;
    }
    try {
        return load_model(path);
    } catch (const Error& e) {
        log.error(e.what());
        return std::nullopt;
    }
}

}  // namespace detail

/// Trains end to end and writes the model container to `--out` and the loss
/// trace to `<out>.loss.csv` (also echoed to `out`).
inline int cmd_train(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    Log log(err);
    if (opt.out.empty()) {
        log.error("--out is required");
        return kExitUsage;
    }
    TrainConfig config;
    try {
        if (!opt.config.empty()) config = load_config(opt.config);
        if (opt.seed) config.seed = *opt.seed;
        config.validate();
    } catch (const ConfigError& e) {
        log.error(std::string("bad config: ") + e.what());
        return kExitConfig;
    }
    auto corpus = detail::read_corpus(opt.corpus, log);
    if (!corpus) return kExitCorpus;

    PipelineResult result;
    try {
        result = train_pipeline(corpus->posts, config, [&](const EpochStats& s, const ParamSet&) {
            log.info("epoch " + std::to_string(s.epoch) + " train_loss " + std::to_string(s.train_loss) +
                     " val_loss " + std::to_string(s.val_loss));
            return true;
        });
    } catch (const ConfigError& e) {
        log.error(std::string("bad config: ") + e.what());
        return kExitConfig;
    } catch (const NumericError& e) {
        log.error(std::string("numeric failure: ") + e.what());
        return kExitNumeric;
    } catch (const Error& e) {
        log.error(std::string("bad corpus: ") + e.what());
        return kExitCorpus;
    }
    log.info("trained on " + std::to_string(result.train_posts) + " posts, validated on " +
             std::to_string(result.val_posts) + ", best epoch " + std::to_string(result.best_epoch));

    try {
        save_model(result.model, opt.out);
        std::ofstream csv(opt.out + ".loss.csv", std::ios::trunc);
        if (!csv) throw IoError("cannot write " + opt.out + ".loss.csv");
        write_loss_trace(csv, result.trace);
    } catch (const Error& e) {
        log.error(e.what());
        return kExitUsage;
    }
    write_loss_trace(out, result.trace);
    return kExitOk;
}

/// Prints the metrics / reference-table comparison as JSON on `out` and as a
/// table on `err`.
inline int cmd_eval(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    Log log(err);
    auto model = detail::read_model(opt.model, log);
    if (!model) return kExitContainer;
    auto corpus = detail::read_corpus(opt.corpus, log);
    if (!corpus) return kExitCorpus;

    std::size_t unlabeled = 0;
    for (const auto& p : corpus->posts) unlabeled += p.labeled() ? 0 : 1;
    if (unlabeled) {
        log.error(std::to_string(unlabeled) + " unlabeled posts; eval needs truthClass or truthMean on every record");
        return kExitLabels;
    }
    std::vector<Post> posts;
    for (const auto& p : corpus->posts) {
        if (tokenize(p.title).empty()) {
            log.info("skipping post " + p.id + ": empty title");
        } else {
            posts.push_back(p);
        }
    }
    const std::uint64_t seed = opt.seed.value_or(model->config.seed);
    try {
        const Metrics m = evaluate(posts, [&](const Post& p) { return model->probability(p, seed); }, opt.threshold);
        const Table1Report report = compare_to_table1(m);
        nlohmann::json j = report.to_json();
        j["threshold"] = opt.threshold;
        j["skipped"] = corpus->posts.size() - posts.size();
        out << j.dump() << '\n';
        err << report.to_text();
    } catch (const NumericError& e) {
        log.error(std::string("numeric failure: ") + e.what());
        return kExitNumeric;
    }
    return kExitOk;
}

/// One JSONL line per post: {id, probability, label} or {id, error}.
inline int cmd_predict(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    Log log(err);
    auto model = detail::read_model(opt.model, log);
    if (!model) return kExitContainer;
    std::vector<Post> posts;
    if (opt.title) {
        posts.push_back(Post{"cli", *opt.title, opt.body.value_or(""), std::nullopt, std::nullopt, LabelSource::none});
    } else {
        auto corpus = detail::read_corpus(opt.corpus, log);
        if (!corpus) return kExitCorpus;
        posts = std::move(corpus->posts);
    }
    const std::uint64_t seed = opt.seed.value_or(model->config.seed);
    for (const auto& p : posts) {
        nlohmann::json line{{"id", p.id}};
        if (tokenize(p.title).empty()) {
            line["error"] = "empty title";
        } else {
            try {
                const double prob = model->probability(p, seed);
                line["probability"] = prob;
                line["label"] = predicted_positive(prob, opt.threshold) ? 1 : 0;
            } catch (const Error& e) {
                line["error"] = e.what();
            }
        }
        out << line.dump() << '\n';
    }
    return kExitOk;
}

/// One JSONL line per post with its title and body document vectors.
inline int cmd_embed(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
    Log log(err);
    auto model = detail::read_model(opt.model, log);
    if (!model) return kExitContainer;
    std::vector<Post> posts;
    if (opt.title) {
        posts.push_back(Post{"cli", *opt.title, opt.body.value_or(""), std::nullopt, std::nullopt, LabelSource::none});
    } else {
        auto corpus = detail::read_corpus(opt.corpus, log);
        if (!corpus) return kExitCorpus;
        posts = std::move(corpus->posts);
    }
    const std::uint64_t seed = opt.seed.value_or(model->config.seed);
    for (const auto& p : posts) {
        nlohmann::json line{{"id", p.id}};
        if (tokenize(p.title).empty()) {
            line["error"] = "empty title";
        } else {
            const DocVector t = model->document_vector(title_doc_id(p.id), p.title, seed);
            const DocVector b = model->document_vector(body_doc_id(p.id), p.body, seed);
            line["title_vector"] = t.values.storage();
            line["body_vector"] = b.values.storage();
            if (t.warning || b.warning) line["warning"] = "out-of-vocabulary document embedded as zero vector";
        }
        out << line.dump() << '\n';
    }
    return kExitOk;
}

}  // namespace swde
