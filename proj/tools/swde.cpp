#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "swde/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Clickbait detection engine: sub-word CNN + attentive BiLSTM + Doc2Vec enrichment"};
    app.require_subcommand(1);

    swde::CommandOptions opt;
    std::uint64_t seed = 0;
    std::string title, body;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "Seed for training / document-vector inference");
    };

    auto* train = app.add_subcommand("train", "Train a model from a JSONL corpus");
    train->add_option("--corpus", opt.corpus, "JSONL corpus")->required();
    train->add_option("--config", opt.config, "key = value training configuration");
    train->add_option("--out", opt.out, "Model file to write (loss trace goes to <out>.loss.csv)")->required();
    add_common(train);

    auto* eval = app.add_subcommand("eval", "Score a labeled corpus and compare to the reference table");
    eval->add_option("--model", opt.model, "Model file")->required();
    eval->add_option("--corpus", opt.corpus, "Labeled JSONL corpus")->required();
    eval->add_option("--threshold", opt.threshold, "Decision threshold (probability >= threshold is clickbait)");
    add_common(eval);

    auto* predict = app.add_subcommand("predict", "Emit clickbait probabilities as JSONL");
    predict->add_option("--model", opt.model, "Model file")->required();
    auto* predict_corpus = predict->add_option("--corpus", opt.corpus, "JSONL corpus");
    auto* predict_title = predict->add_option("--title", title, "Single post title");
    predict->add_option("--body", body, "Article text for --title");
    predict->add_option("--threshold", opt.threshold, "Decision threshold");
    predict_corpus->excludes(predict_title);
    add_common(predict);

    auto* embed = app.add_subcommand("embed", "Emit title/body document vectors as JSONL");
    embed->add_option("--model", opt.model, "Model file")->required();
    auto* embed_corpus = embed->add_option("--corpus", opt.corpus, "JSONL corpus");
    auto* embed_title = embed->add_option("--title", title, "Single post title");
    embed->add_option("--body", body, "Article text for --title");
    embed_corpus->excludes(embed_title);
    add_common(embed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : swde::kExitUsage;
    }

    for (auto* cmd : {train, eval, predict, embed}) {
        if (cmd->count("--seed")) opt.seed = seed;
    }
    for (auto* cmd : {predict, embed}) {
        if (cmd->count("--title")) opt.title = title;
        if (cmd->count("--body")) opt.body = body;
    }
    if ((predict->parsed() || embed->parsed()) && !opt.title && opt.corpus.empty()) {
        std::cerr << "swde: error: one of --corpus or --title is required\n";
        return swde::kExitUsage;
    }

    if (train->parsed()) return swde::cmd_train(opt, std::cout, std::cerr);
    if (eval->parsed()) return swde::cmd_eval(opt, std::cout, std::cerr);
    if (predict->parsed()) return swde::cmd_predict(opt, std::cout, std::cerr);
    return swde::cmd_embed(opt, std::cout, std::cerr);
}
