#pragma once

#include <cstdio>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "swde/corpus.hpp"
#include "swde/errors.hpp"

namespace swde {

/// Binary classification summary; clickbait is the positive class.
struct Metrics {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double mse = 0.0;
    /// Which corpus field supplied the binary labels: "truthClass",
    /// "truthMean", "mixed" or "none".
    std::string label_source = "none";

    std::size_t evaluated() const { return tp + fp + tn + fn; }
};

inline bool predicted_positive(double probability, double threshold) { return probability >= threshold; }

/// Fills accuracy/precision/recall/F1 from the confusion counts.
inline void finalize_rates(Metrics& m) {
    const std::size_t n = m.evaluated();
    m.accuracy = n ? static_cast<double>(m.tp + m.tn) / static_cast<double>(n) : 0.0;
    m.precision = (m.tp + m.fp) ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
    m.recall = (m.tp + m.fn) ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
}

/// Metrics for parallel arrays of probabilities, binary labels and optional
/// graded scores. MSE uses the graded score where present, the label
/// otherwise.
inline Metrics compute_metrics(std::span<const double> probabilities, std::span<const int> labels,
                               std::span<const std::optional<double>> graded, double threshold = 0.5) {
    if (probabilities.size() != labels.size() || (!graded.empty() && graded.size() != labels.size())) {
        throw DimensionError("compute_metrics: probabilities, labels and scores differ in length");
    }
    Metrics m;
    double se = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool pred = predicted_positive(probabilities[i], threshold);
        const bool truth = labels[i] == 1;
        if (pred && truth) ++m.tp;
        else if (pred) ++m.fp;
        else if (truth) ++m.fn;
        else ++m.tn;
        const double target = (!graded.empty() && graded[i]) ? *graded[i] : static_cast<double>(labels[i]);
        se += (probabilities[i] - target) * (probabilities[i] - target);
    }
    finalize_rates(m);
    m.mse = labels.empty() ? 0.0 : se / static_cast<double>(labels.size());
    return m;
}

/// Scores every post and summarizes against its labels. Every post must be
/// labeled; otherwise a PreconditionError lists the offending ids.
inline Metrics evaluate(std::span<const Post> posts, const std::function<double(const Post&)>& score,
                        double threshold = 0.5) {
    std::string missing;
    std::size_t n_missing = 0;
    for (const auto& p : posts) {
        if (!p.labeled()) {
            if (n_missing++ < 20) missing += (missing.empty() ? "" : ", ") + p.id;
        }
    }
    if (n_missing) {
        throw PreconditionError(std::to_string(n_missing) + " unlabeled posts: " + missing +
                                (n_missing > 20 ? ", ..." : ""));
    }
    std::vector<double> probs;
    std::vector<int> labels;
    std::vector<std::optional<double>> graded;
    bool from_class = false, from_mean = false;
    for (const auto& p : posts) {
        probs.push_back(score(p));
        labels.push_back(*p.label);
        graded.push_back(p.truth_mean);
        from_class = from_class || p.label_source == LabelSource::truth_class;
        from_mean = from_mean || p.label_source == LabelSource::truth_mean;
    }
    Metrics m = compute_metrics(probs, labels, graded, threshold);
    m.label_source = from_class && from_mean ? "mixed" : from_class ? "truthClass" : from_mean ? "truthMean" : "none";
    return m;
}

struct Baseline {
    const char* model;
    double f1;
    double accuracy;  // fraction
};

/// Published reference results on the Webis Clickbait 2017 test split.
inline constexpr Baseline kTable1[] = {
    {"Proposed Approach", 0.63, 0.8349},
    {"BiLSTM", 0.61, 0.8328},
    {"Feature Engineering SotA", 0.55, 0.8324},
    {"Concatenated NN Architecture", 0.39, 0.74},
};

struct ComparisonRow {
    std::string model;
    double f1;
    double accuracy;
    double delta_f1;        // measured − reference
    double delta_accuracy;  // measured − reference, as a fraction
};

struct Table1Report {
    Metrics metrics;
    bool no_data = false;
    std::vector<ComparisonRow> rows;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["evaluated"] = metrics.evaluated();
        j["status"] = no_data ? "no data" : "ok";
        j["accuracy"] = metrics.accuracy;
        j["precision"] = metrics.precision;
        j["recall"] = metrics.recall;
        j["f1"] = metrics.f1;
        j["mse"] = metrics.mse;
        j["label_source"] = metrics.label_source;
        j["confusion"] = {{"tp", metrics.tp}, {"fp", metrics.fp}, {"tn", metrics.tn}, {"fn", metrics.fn}};
        auto& b = j["baselines"] = nlohmann::json::array();
        for (const auto& r : rows) {
            nlohmann::json row{{"model", r.model}, {"f1", r.f1}, {"accuracy", r.accuracy}};
            if (!no_data) {
                row["delta_f1"] = r.delta_f1;
                row["delta_accuracy"] = r.delta_accuracy;
            }
            b.push_back(std::move(row));
        }
        return j;
    }

    std::string to_text() const {
        std::string out;
        char buf[160];
        if (no_data) {
            out += "no data: 0 posts evaluated\n";
        } else {
            std::snprintf(buf, sizeof buf, "measured: accuracy %.2f%%  F1 %.2f  MSE %.4f  (%zu posts, labels from %s)\n",
                          100.0 * metrics.accuracy, metrics.f1, metrics.mse, metrics.evaluated(),
                          metrics.label_source.c_str());
            out += buf;
        }
        std::snprintf(buf, sizeof buf, "%-30s %8s %10s %9s %11s\n", "model", "F1", "accuracy", "dF1", "dacc(pp)");
        out += buf;
        for (const auto& r : rows) {
            if (no_data) {
                std::snprintf(buf, sizeof buf, "%-30s %8.2f %9.2f%% %9s %11s\n", r.model.c_str(), r.f1,
                              100.0 * r.accuracy, "-", "-");
            } else {
                std::snprintf(buf, sizeof buf, "%-30s %8.2f %9.2f%% %+9.2f %+11.2f\n", r.model.c_str(), r.f1,
                              100.0 * r.accuracy, r.delta_f1, 100.0 * r.delta_accuracy);
            }
            out += buf;
        }
        return out;
    }
};

inline Table1Report compare_to_table1(const Metrics& m) {
    Table1Report report{m, m.evaluated() == 0, {}};
    for (const auto& b : kTable1) {
        report.rows.push_back({b.model, b.f1, b.accuracy, m.f1 - b.f1, m.accuracy - b.accuracy});
    }
    return report;
}

}  // namespace swde
