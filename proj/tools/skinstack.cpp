// skinstack command-line front end.
//
//   skinstack ingest    [--config PATH] [--seed N] [--force] [--toy]
//   skinstack train     [MODELS]     MODELS: all (default), replicas, or names
//   skinstack predict   [MODELS]
//   skinstack evaluate  [MODELS]
//   skinstack stack     [STACKS]     STACKS: all (default) or names
//   skinstack report    [--output DIR]
//   skinstack reproduce
//   skinstack describe  BACKBONE
//   skinstack config                 print the effective configuration
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 training failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <torch/torch.h>

#include "skinstack/config.hpp"
#include "skinstack/error.hpp"
#include "skinstack/model_zoo.hpp"
#include "skinstack/pipeline.hpp"

namespace {

using namespace skinstack;

struct GlobalFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    bool force = false;
    bool toy = false;
};

ExperimentConfig load_config(const GlobalFlags& flags) {
    ExperimentConfig config;
    if (!flags.config_path.empty()) {
        config = load_experiment_config(flags.config_path);
    } else if (std::filesystem::exists("skinstack.json")) {
        config = load_experiment_config("skinstack.json");
    } else {
        config = default_experiment_config();
    }
    if (flags.seed) {
        apply_seed_override(config, *flags.seed);
    }
    return config;
}

void configure_runtime(const ExperimentConfig& config) {
    torch::set_num_threads(config.num_threads);
    at::globalContext().setDeterministicAlgorithms(true, false);
}

int run(int argc, char** argv) {
    CLI::App app{"Skin lesion classification with fine-tuned CNNs and stacked ensembles"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "Experiment config (JSON); default ./skinstack.json");
    app.add_option("--seed", flags.seed, "Override split, augmentation and meta-learner seeds");
    app.add_flag("--force", flags.force, "Rerun stages even when the ledger says they are current");
    app.add_flag("--toy", flags.toy, "Stratified subsample per class and short training");

    std::string models = "all";
    std::string stacks = "all";
    std::string backbone;
    std::string report_dir;

    auto* ingest = app.add_subcommand("ingest", "Load metadata, validate images, write the split");
    auto* train = app.add_subcommand("train", "Train models and write checkpoints and histories");
    train->add_option("models", models, "all, replicas, or comma-separated model names");
    auto* predict = app.add_subcommand("predict", "Write validation predictions for trained models");
    predict->add_option("models", models, "all, replicas, or comma-separated model names");
    auto* evaluate = app.add_subcommand("evaluate", "Write evaluation reports from stored predictions");
    evaluate->add_option("models", models, "all, replicas, or comma-separated model names");
    auto* stack = app.add_subcommand("stack", "Fit decision-tree meta-learners on base predictions");
    stack->add_option("stacks", stacks, "all or comma-separated stack names");
    auto* report = app.add_subcommand("report", "Render tables, confusion heatmaps and training curves");
    report->add_option("--output", report_dir, "Output directory holding reports/ (default: config output_dir)");
    auto* reproduce = app.add_subcommand("reproduce", "ingest, train, predict, evaluate, stack, report");
    auto* describe = app.add_subcommand("describe", "Print a layer summary of one model");
    describe->add_option("backbone", backbone, "Backbone name, e.g. vgg16")->required();
    auto* show = app.add_subcommand("config", "Print the effective configuration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return static_cast<int>(ExitCode::kUsage);
    }

    auto config = load_config(flags);
    configure_runtime(config);

    if (*describe) {
        const auto id = parse_backbone(backbone);
        if (!id) {
            throw ConfigError("unknown backbone \"" + backbone + "\"");
        }
        ModelSpec spec;
        spec.backbone = *id;
        BuildOptions build;
        build.weights_dir = config.weights_dir;
        std::cout << describe_model(spec, build);
        return 0;
    }
    if (*show) {
        if (flags.toy) {
            apply_toy(config);
        }
        std::cout << to_json(config).dump(2) << '\n';
        return 0;
    }
    if (*report && !report_dir.empty()) {
        config.output_dir = report_dir;
    }

    Pipeline pipeline(config, RunOptions{flags.force, flags.toy, &std::cerr});
    if (*ingest) {
        pipeline.ingest();
    } else if (*train) {
        pipeline.train(models);
    } else if (*predict) {
        pipeline.predict(models);
    } else if (*evaluate) {
        pipeline.evaluate(models);
    } else if (*stack) {
        pipeline.stack(stacks);
    } else if (*report) {
        const auto art = pipeline.report();
        for (const auto& f : art.files) {
            std::cout << (pipeline.root() / f).string() << '\n';
        }
    } else if (*reproduce) {
        pipeline.reproduce();
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const skinstack::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(e.code());
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(skinstack::ExitCode::kUsage);
    } catch (const c10::Error& e) {
        std::cerr << "error: " << e.what_without_backtrace() << '\n';
        return static_cast<int>(skinstack::ExitCode::kTraining);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(skinstack::ExitCode::kTraining);
    }
}
