// Command-line front end: wires a JSON experiment config to the pipeline
// stages, with on-disk artifact caching keyed by config hashes.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "attnrec/runner.hpp"

namespace {

struct CliOptions {
    std::string config_path;
    std::string data_dir = "data/ml-100k";
    std::string out_dir = "runs/default";
    std::string fold;
    std::string embed_source;
    std::string side = "both";
    bool has_seed = false;
    std::uint64_t seed = 0;
    bool no_attention = false;
    int verbosity = 1;
    bool quiet = false;
};

attnrec::Runner make_runner(const CliOptions& opt) {
    attnrec::ExperimentConfig cfg;
    if (!opt.config_path.empty()) cfg = attnrec::load_experiment_config(opt.config_path);
    if (opt.has_seed) cfg.seed = opt.seed;
    if (!opt.fold.empty()) cfg.fold = opt.fold;
    if (opt.no_attention) cfg.ae.attention_enabled = false;
    if (!opt.embed_source.empty()) {
        if (opt.embed_source == "pre")
            cfg.ae.embed_source = attnrec::EmbedSource::pre_attention;
        else if (opt.embed_source == "post")
            cfg.ae.embed_source = attnrec::EmbedSource::post_attention;
        else
            throw attnrec::DomainError("--embed-source must be 'pre' or 'post'");
    }
    cfg.propagate_seed();
    cfg.validate();

    attnrec::Runner runner;
    runner.cfg = cfg;
    runner.data_dir = opt.data_dir;
    runner.out_dir = opt.out_dir;
    runner.verbosity = opt.quiet ? 0 : opt.verbosity;
    return runner;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"attention-autoencoder + boosted-tree rating prediction on MovieLens 100K"};
    app.require_subcommand(1);

    CliOptions opt;
    app.add_option("--config", opt.config_path, "experiment config (JSON)");
    app.add_option("--data", opt.data_dir, "MovieLens 100K directory");
    app.add_option("--out", opt.out_dir, "output directory for artifacts");
    app.add_option("--seed", opt.seed, "seed override")->each([&opt](const std::string&) {
        opt.has_seed = true;
    });
    app.add_option("--fold", opt.fold, "fold to use (u1..u5)");
    app.add_flag("--no-attention", opt.no_attention, "disable the attention branch (vanilla AE)");
    app.add_option("--embed-source", opt.embed_source,
                   "embedding fed to the supervised stage: pre | post");
    app.add_flag("-q,--quiet", opt.quiet, "suppress progress output");

    auto* prepare = app.add_subcommand("prepare", "parse the dataset and export feature CSVs");
    auto* train_ae = app.add_subcommand("train-ae", "train the autoencoder(s)");
    train_ae->add_option("--side", opt.side, "user | movie | both");
    auto* sweep = app.add_subcommand("sweep", "embedding-dimension sweep for both sides");
    auto* embed = app.add_subcommand("embed", "extract embeddings from trained checkpoints");
    embed->add_option("--side", opt.side, "user | movie | both");
    auto* train_gbt =
        app.add_subcommand("train-gbt", "tune the boosted-tree grid and train the final model");
    auto* evaluate = app.add_subcommand("evaluate", "score the test split and write the report");
    auto* run_all = app.add_subcommand("run-all", "run every stage in order");

    // the shared --config/--data/... flags may appear after the subcommand
    for (auto* sub : {prepare, train_ae, sweep, embed, train_gbt, evaluate, run_all})
        sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        attnrec::Runner runner = make_runner(opt);
        auto sides = [&opt]() -> std::vector<attnrec::Side> {
            if (opt.side == "user") return {attnrec::Side::user};
            if (opt.side == "movie") return {attnrec::Side::movie};
            if (opt.side == "both") return {attnrec::Side::user, attnrec::Side::movie};
            throw attnrec::DomainError("--side must be user, movie or both");
        };

        if (prepare->parsed()) {
            runner.run_prepare();
        } else if (train_ae->parsed()) {
            auto bundle = runner.load_dataset();
            for (auto side : sides()) runner.run_train_ae(side, bundle);
        } else if (sweep->parsed()) {
            auto bundle = runner.load_dataset();
            runner.run_sweep(bundle);
        } else if (embed->parsed()) {
            auto bundle = runner.load_dataset();
            for (auto side : sides()) runner.run_embed(side, bundle);
        } else if (train_gbt->parsed()) {
            auto bundle = runner.load_dataset();
            runner.run_train_gbt(bundle);
        } else if (evaluate->parsed()) {
            auto bundle = runner.load_dataset();
            runner.run_evaluate(bundle);
        } else if (run_all->parsed()) {
            runner.run_all();
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
