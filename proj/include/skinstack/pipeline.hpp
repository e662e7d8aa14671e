#pragma once

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <torch/torch.h>

#include "skinstack/config.hpp"
#include "skinstack/dataset.hpp"
#include "skinstack/evaluation.hpp"
#include "skinstack/ledger.hpp"
#include "skinstack/predictions.hpp"
#include "skinstack/report.hpp"
#include "skinstack/stacking.hpp"
#include "skinstack/trainer.hpp"

// Stage runner behind the command-line verbs. Output layout under
// config.output_dir:
//
//   ledger.jsonl                 completed stages with input hashes
//   manifest.txt, split.txt      ingest
//   checkpoints/<model>/         train (weights.pt, checkpoint.json, *.bin)
//   histories/<model>.csv        train
//   predictions/<model>.csv      predict (validation partition)
//   reports/models/<model>.json  evaluate
//   stacks/<stack>/              stack (meta_model.txt, summary.json)
//   reports/stacks/<stack>.json  stack
//   tables/, plots/              report

namespace skinstack {

struct RunOptions {
    bool force = false;
    bool toy = false;
    std::ostream* log = &std::cerr;
};

class Pipeline {
public:
    Pipeline(ExperimentConfig config, RunOptions options)
        : config_(std::move(config)), options_(options), root_(config_.output_dir), ledger_(root_ / "ledger.jsonl") {
        if (options_.toy) {
            apply_toy(config_);
        }
    }

    [[nodiscard]] const ExperimentConfig& config() const noexcept { return config_; }
    [[nodiscard]] const std::filesystem::path& root() const noexcept { return root_; }
    [[nodiscard]] const RunLedger& ledger() const noexcept { return ledger_; }

    // ---- selectors ------------------------------------------------------

    /// "all" = the primary entry of every configured backbone, "replicas" =
    /// the extra entries; otherwise comma-separated model names.
    [[nodiscard]] std::vector<const ModelEntry*> select_models(const std::string& selector) const {
        std::vector<const ModelEntry*> out;
        if (selector == "all" || selector == "replicas") {
            const bool primary = selector == "all";
            for (const auto& m : config_.models) {
                if (m.is_primary() == primary) {
                    out.push_back(&m);
                }
            }
            return out;
        }
        for (const auto& name : split_names(selector)) {
            const auto* m = config_.find_model(name);
            if (m == nullptr) {
                std::string valid = "all, replicas";
                for (const auto& e : config_.models) {
                    valid += ", " + e.name;
                }
                throw ConfigError("unknown model selector \"" + name + "\" (valid: " + valid + ")");
            }
            out.push_back(m);
        }
        return out;
    }

    [[nodiscard]] std::vector<const StackEntry*> select_stacks(const std::string& selector) const {
        std::vector<const StackEntry*> out;
        if (selector == "all") {
            for (const auto& s : config_.stacks) {
                out.push_back(&s);
            }
            return out;
        }
        for (const auto& name : split_names(selector)) {
            const auto parsed = parse_stack_name(name);
            const StackEntry* hit = nullptr;
            for (const auto& s : config_.stacks) {
                if (parsed && s.spec.name == *parsed) {
                    hit = &s;
                }
            }
            if (hit == nullptr) {
                std::string valid = "all";
                for (const auto& s : config_.stacks) {
                    valid += ", " + std::string(selector_name(s.spec.name));
                }
                throw ConfigError("unknown or unconfigured stack \"" + name + "\" (valid: " + valid + ")");
            }
            out.push_back(hit);
        }
        return out;
    }

    // ---- stages ---------------------------------------------------------

    void ingest() {
        validate_paths(config_);
        InputHash h;
        h.add("dataset", to_json(config_)["dataset"].dump()).add("split", to_json(config_)["split"].dump());
        h.add("toy", options_.toy ? std::to_string(config_.toy_per_class) : "off");
        h.add_file(config_.metadata);
        const std::vector<std::string> outputs = {"split.txt", "manifest.txt"};
        if (skip("ingest", "dataset", h.hex(), outputs)) {
            return;
        }
        const auto source = load_source();
        const auto split = stratified_split(source, config_.train_fraction, config_.split_seed);
        save_split(split, root_ / "split.txt");
        detail::write_file(root_ / "manifest.txt", manifest_summary(source, split));
        log() << "[ingest] " << source.size() << " records, " << split.train.size() << " train / "
              << split.validation.size() << " validation\n";
        ledger_.record("ingest", "dataset", h.hex(), outputs, "completed");
    }

    void train(const std::string& selector) {
        for (const auto* m : select_models(selector)) {
            train_one(*m);
        }
    }

    void predict(const std::string& selector) {
        for (const auto* m : select_models(selector)) {
            predict_one(*m);
        }
    }

    void evaluate(const std::string& selector) {
        for (const auto* m : select_models(selector)) {
            evaluate_one(*m);
        }
    }

    void stack(const std::string& selector) {
        for (const auto* s : select_stacks(selector)) {
            stack_one(*s);
        }
    }

    ReportArtifacts report() {
        auto art = write_report_artifacts(root_);
        log() << "[report] wrote " << art.files.size() << " files under " << root_.string() << '\n';
        return art;
    }

    /// ingest -> train -> predict -> evaluate -> stack -> report, covering
    /// the primary models plus every model a configured stack needs.
    void reproduce() {
        ingest();
        std::vector<const ModelEntry*> models;
        std::set<std::string> needed;
        for (const auto& s : config_.stacks) {
            needed.insert(s.base_names.begin(), s.base_names.end());
        }
        for (const auto& m : config_.models) {
            if (m.is_primary() || needed.contains(m.name)) {
                models.push_back(&m);
            }
        }
        for (const auto* m : models) {
            train_one(*m);
        }
        for (const auto* m : models) {
            predict_one(*m);
        }
        for (const auto* m : models) {
            if (m->is_primary()) {
                evaluate_one(*m);
            }
        }
        for (const auto& s : config_.stacks) {
            stack_one(s);
        }
        report();
    }

    // ---- per-model stages ----------------------------------------------

    void train_one(const ModelEntry& m) {
        const auto split_path = require_split();
        const auto dir = checkpoint_dir(m.name);
        InputHash h;
        h.add("model", model_json(m).dump()).add("aug", to_json(config_.augmentation).dump());
        h.add_file(split_path);
        const std::vector<std::string> outputs = {rel(dir / "checkpoint.json"), rel(dir / "weights.pt"),
                                                  rel(history_path(m.name))};
        if (skip("train", m.name, h.hex(), outputs)) {
            return;
        }
        const auto split = load_current_split();
        log() << "[train] " << m.name << " (" << symbol(m.spec.backbone) << ", lr "
              << detail::format_double(m.train.learning_rate) << ", " << m.train.epochs << " epochs, "
              << split.train.size() << " train images)\n";
        BuildOptions build;
        build.weights_dir = config_.weights_dir;
        auto [checkpoint, history] =
            skinstack::train(m.name, m.spec, split, m.train, config_.augmentation, dir, build, [&](const EpochRecord& e) {
                log() << "  epoch " << e.epoch << "/" << m.train.epochs << " train_loss "
                      << detail::format_double(e.train_loss) << " train_acc " << detail::format_double(e.train_accuracy)
                      << " val_loss " << detail::format_double(e.val_loss) << " val_acc "
                      << detail::format_double(e.val_accuracy) << '\n';
            });
        save_history(history, root_ / history_path(m.name));
        ledger_.record("train", m.name, h.hex(), outputs, "completed");
    }

    void predict_one(const ModelEntry& m) {
        const auto split_path = require_split();
        const auto dir = checkpoint_dir(m.name);
        require_checkpoint(m, "predict");
        InputHash h;
        h.add_file(dir / "checkpoint.json").add_file(split_path);
        const std::vector<std::string> outputs = {rel(prediction_path(m.name))};
        if (skip("predict", m.name, h.hex(), outputs)) {
            return;
        }
        auto loaded = load_checkpoint(dir);
        const auto split = load_current_split();
        const auto matrix = skinstack::predict(loaded, split.validation,
                                               static_cast<std::size_t>(loaded.checkpoint.train_config.batch_size));
        save_predictions(matrix, root_ / prediction_path(m.name));
        log() << "[predict] " << m.name << ": " << matrix.rows() << " validation rows\n";
        ledger_.record("predict", m.name, h.hex(), outputs, "completed");
    }

    void evaluate_one(const ModelEntry& m) {
        const auto split_path = require_split();
        const auto pred_path = root_ / prediction_path(m.name);
        if (!std::filesystem::exists(pred_path)) {
            predict_one(m);
        }
        InputHash h;
        h.add_file(pred_path).add_file(split_path);
        const std::vector<std::string> outputs = {rel(model_report_path(m.name))};
        if (skip("evaluate", m.name, h.hex(), outputs)) {
            return;
        }
        const auto split = load_current_split();
        const auto matrix = load_predictions(pred_path);
        if (matrix.image_ids != split.validation.image_ids()) {
            throw DataError("predictions for " + m.name + " do not match the validation partition; rerun predict");
        }
        const auto report = skinstack::evaluate(split.validation.labels(), matrix.argmax(), m.name);
        save_report(report, root_ / model_report_path(m.name));
        log() << "[evaluate] " << m.name << ": accuracy " << detail::format_2dp(report.accuracy) << '\n';
        ledger_.record("evaluate", m.name, h.hex(), outputs, "completed");
    }

    void stack_one(const StackEntry& s) {
        const auto split_path = require_split();
        const std::string name(selector_name(s.spec.name));
        for (std::size_t k = 0; k < s.base_names.size(); ++k) {
            const auto* m = config_.find_model(s.base_names[k]);
            if (m == nullptr || !std::filesystem::exists(checkpoint_dir(s.base_names[k]) / "checkpoint.json")) {
                throw DataError("stack " + name + ": missing checkpoint for base model " +
                                std::string(symbol(s.spec.base_models[k])) + " (" + s.base_names[k] +
                                "); run `train " + s.base_names[k] + "` first");
            }
            if (!std::filesystem::exists(root_ / prediction_path(m->name))) {
                predict_one(*m);
            }
        }
        InputHash h;
        h.add("stack", Json{{"bases", s.base_names}, {"tree", to_json(s.spec.tree_params)}}.dump());
        for (const auto& base : s.base_names) {
            h.add_file(root_ / prediction_path(base));
        }
        h.add_file(split_path);
        const auto stack_dir = std::filesystem::path("stacks") / name;
        const std::vector<std::string> outputs = {rel(stack_dir / "meta_model.txt"), rel(stack_dir / "summary.json"),
                                                  rel(stack_report_path(name))};
        if (skip("stack", name, h.hex(), outputs)) {
            return;
        }
        const auto split = load_current_split();
        std::vector<BaseModelRun> runs;
        for (std::size_t k = 0; k < s.base_names.size(); ++k) {
            auto stored = load_predictions(root_ / prediction_path(s.base_names[k]));
            runs.push_back({stored.source_checkpoint, s.spec.base_models[k], rows_for(std::move(stored))});
        }
        const auto result = run_stack(s.spec, runs, split);
        detail::write_file(root_ / stack_dir / "meta_model.txt", result.model.serialize());
        Json summary{{"stack", name},
                     {"bases", s.base_names},
                     {"base_checkpoints", result.base_ids},
                     {"feature_width", result.feature_width},
                     {"meta_train_samples", result.meta_train_ids.size()},
                     {"evaluation_samples", result.eval_ids.size()},
                     {"tree_depth", result.model.tree.depth()},
                     {"tree_leaves", result.model.tree.leaf_count()}};
        detail::write_file(root_ / stack_dir / "summary.json", summary.dump(2) + "\n");
        save_report(result.report, root_ / stack_report_path(name));
        log() << "[stack] " << name << ": width " << result.feature_width << ", accuracy "
              << detail::format_2dp(result.report.accuracy) << '\n';
        ledger_.record("stack", name, h.hex(), outputs, "completed");
    }

    // ---- layout ---------------------------------------------------------

    [[nodiscard]] std::filesystem::path checkpoint_dir(const std::string& model) const {
        return root_ / "checkpoints" / model;
    }
    [[nodiscard]] static std::filesystem::path history_path(const std::string& model) {
        return std::filesystem::path("histories") / (model + ".csv");
    }
    [[nodiscard]] static std::filesystem::path prediction_path(const std::string& model) {
        return std::filesystem::path("predictions") / (model + ".csv");
    }
    [[nodiscard]] static std::filesystem::path model_report_path(const std::string& model) {
        return std::filesystem::path("reports") / "models" / (model + ".json");
    }
    [[nodiscard]] static std::filesystem::path stack_report_path(const std::string& stack) {
        return std::filesystem::path("reports") / "stacks" / (stack + ".json");
    }

private:
    [[nodiscard]] std::ostream& log() const { return *options_.log; }

    static std::vector<std::string> split_names(const std::string& selector) {
        std::vector<std::string> out;
        std::istringstream in(selector);
        for (std::string part; std::getline(in, part, ',');) {
            const auto t = detail::trim(part);
            if (!t.empty()) {
                out.emplace_back(t);
            }
        }
        if (out.empty()) {
            throw ConfigError("empty selector");
        }
        return out;
    }

    [[nodiscard]] std::string rel(const std::filesystem::path& p) const {
        return (p.is_absolute() ? std::filesystem::relative(p, root_) : p).generic_string();
    }

    [[nodiscard]] Json model_json(const ModelEntry& m) const {
        return Json{{"name", m.name}, {"spec", to_json(m.spec)}, {"train", to_json(m.train)}};
    }

    bool skip(const std::string& stage, const std::string& key, const std::string& hash,
              const std::vector<std::string>& outputs) {
        if (options_.force || !ledger_.is_current(stage, key, hash)) {
            return false;
        }
        log() << "[" << stage << "] " << key << ": up to date, skipped (use --force to rerun)\n";
        ledger_.record(stage, key, hash, outputs, "skipped");
        return true;
    }

    [[nodiscard]] DatasetManifest load_source() const {
        auto manifest = load_manifest(config_.metadata, std::span<const std::filesystem::path>(config_.image_dirs));
        if (options_.toy) {
            manifest = stratified_subsample(manifest, config_.toy_per_class, detail::derive_seed(config_.split_seed, 1000));
        }
        return manifest;
    }

    [[nodiscard]] std::filesystem::path require_split() const {
        const auto p = root_ / "split.txt";
        if (!std::filesystem::exists(p)) {
            throw DataError("no split at " + p.string() + "; run `ingest` first");
        }
        return p;
    }

    [[nodiscard]] DatasetSplit load_current_split() const {
        return load_split(require_split(), load_source());
    }

    void require_checkpoint(const ModelEntry& m, const std::string& stage) const {
        if (!std::filesystem::exists(checkpoint_dir(m.name) / "checkpoint.json")) {
            throw DataError(stage + " " + m.name + ": no checkpoint for " + std::string(symbol(m.spec.backbone)) +
                            "; run `train " + m.name + "` first");
        }
    }

    // Predictor that answers from stored validation predictions; stacking
    // only ever asks for subsets of the validation partition.
    static std::function<PredictionMatrix(const DatasetManifest&)> rows_for(PredictionMatrix stored) {
        auto shared = std::make_shared<PredictionMatrix>(std::move(stored));
        return [shared](const DatasetManifest& subset) {
            std::unordered_map<std::string, std::size_t> index;
            for (std::size_t i = 0; i < shared->rows(); ++i) {
                index.emplace(shared->image_ids[i], i);
            }
            PredictionMatrix out;
            out.source_checkpoint = shared->source_checkpoint;
            for (const auto& r : subset.records()) {
                const auto it = index.find(r.image_id);
                if (it == index.end()) {
                    throw DataError("stored predictions of " + shared->source_checkpoint + " lack image " + r.image_id);
                }
                out.image_ids.push_back(r.image_id);
                out.probabilities.push_back(shared->probabilities[it->second]);
            }
            return out;
        };
    }

    [[nodiscard]] std::string manifest_summary(const DatasetManifest& source, const DatasetSplit& split) const {
        std::ostringstream out;
        out << "# dataset summary\n";
        out << "records=" << source.size() << '\n';
        out << "toy=" << (options_.toy ? "per_class=" + std::to_string(config_.toy_per_class) : std::string("off"))
            << '\n';
        out << "class,total,train,validation\n";
        const auto all = class_distribution(source);
        const auto tr = class_distribution(split.train);
        const auto va = class_distribution(split.validation);
        for (const auto label : kAllClasses) {
            const auto c = ordinal(label);
            out << symbol(label) << ',' << all[c] << ',' << tr[c] << ',' << va[c] << '\n';
        }
        return out.str();
    }

    ExperimentConfig config_;
    RunOptions options_;
    std::filesystem::path root_;
    RunLedger ledger_;
};

}  // namespace skinstack
