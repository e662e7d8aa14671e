// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fails.
//
//   acceptance --cli PATH/TO/skinstack --workdir DIR

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <set>
#include <iostream>
#include <map>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <torch/torch.h>

#include "skinstack/augment.hpp"
#include "skinstack/config.hpp"
#include "skinstack/evaluation.hpp"
#include "skinstack/model_zoo.hpp"
#include "skinstack/report.hpp"
#include "skinstack/stacking.hpp"
#include "skinstack/trainer.hpp"
#include "skinstack/zca.hpp"
#include "support/blobs.hpp"
#include "support/fixtures.hpp"

namespace fs = std::filesystem;
using namespace skinstack;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

using Clock = std::chrono::steady_clock;

struct Context {
    fs::path cli;
    fs::path workdir;
};

// ---- 1: metrics against a counting oracle --------------------------------

Outcome metric_oracle(const Context&) {
    Outcome out;
    std::mt19937_64 rng(1001);
    std::uniform_int_distribution<std::size_t> size(1, 1000);
    std::uniform_int_distribution<std::size_t> cls(0, kNumClasses - 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int inst = 0; inst < 500 && out.pass; ++inst) {
        const auto n = size(rng);
        const double skill = u(rng);
        std::vector<ClassLabel> t(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = kAllClasses[cls(rng)];
            p[i] = u(rng) < skill ? t[i] : kAllClasses[cls(rng)];
        }
        const auto r = evaluate(t, p, "x");

        std::size_t hits = 0;
        for (std::size_t i = 0; i < n; ++i) {
            hits += t[i] == p[i];
        }
        const double acc = static_cast<double>(hits) / static_cast<double>(n);
        double wp = 0.0, wr = 0.0, wf = 0.0;
        worst = std::max(worst, std::abs(r.accuracy - acc));
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            const auto k = kAllClasses[c];
            std::size_t tp = 0, fp = 0, fn = 0;
            for (std::size_t i = 0; i < n; ++i) {
                tp += t[i] == k && p[i] == k;
                fp += t[i] != k && p[i] == k;
                fn += t[i] == k && p[i] != k;
            }
            const double prec = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
            const double rec = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
            const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
            const double w = static_cast<double>(tp + fn) / static_cast<double>(n);
            wp += w * prec;
            wr += w * rec;
            wf += w * f1;
            worst = std::max({worst, std::abs(r.per_class[c].precision - prec),
                              std::abs(r.per_class[c].recall - rec), std::abs(r.per_class[c].f1 - f1)});
            out.require(r.per_class[c].support == tp + fn, "support mismatch in instance " + std::to_string(inst));
        }
        worst = std::max({worst, std::abs(r.weighted_precision - wp), std::abs(r.weighted_recall - wr),
                          std::abs(r.weighted_f1 - wf)});
    }
    out.require(worst <= 1e-12, "max deviation " + std::to_string(worst));
    if (out.pass) {
        std::ostringstream s;
        s << "500 instances, max deviation " << worst;
        out.detail = s.str();
    }
    return out;
}

// ---- 2: confusion identities ---------------------------------------------

Outcome confusion_identities(const Context&) {
    Outcome out;
    std::mt19937_64 rng(2002);
    std::uniform_int_distribution<std::size_t> size(1, 1000);
    std::uniform_int_distribution<std::size_t> cls(0, kNumClasses - 1);
    for (int inst = 0; inst < 500 && out.pass; ++inst) {
        const auto n = size(rng);
        std::vector<ClassLabel> t(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = kAllClasses[cls(rng)];
            p[i] = rng() % 3 == 0 ? kAllClasses[cls(rng)] : t[i];
        }
        const auto r = evaluate(t, p, "x");
        const auto& cm = r.confusion;
        const auto tag = " (instance " + std::to_string(inst) + ")";
        out.require(cm.total() == n, "total != N" + tag);
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            const auto support = static_cast<std::uint64_t>(std::count(t.begin(), t.end(), kAllClasses[c]));
            out.require(cm.row_sum(c) == support, "row sum != support" + tag);
            out.require(r.per_class[c].support == support, "reported support" + tag);
        }
        out.require(static_cast<double>(cm.trace()) / static_cast<double>(cm.total()) == r.accuracy,
                    "trace/total != accuracy" + tag);
        out.require(r.weighted_recall == r.accuracy, "weighted recall != accuracy" + tag);
    }
    if (out.pass) {
        out.detail = "500 instances, exact equality";
    }
    return out;
}

// ---- 3: augmentation algebra ---------------------------------------------

using Img = BasicImage<double>;

Img random_image(int h, int w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Img img(h, w, 3);
    for (auto& v : img.values()) {
        v = u(rng);
    }
    return img;
}

Outcome augmentation_algebra(const Context&) {
    Outcome out;
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto img = random_image(5 + static_cast<int>(s % 11), 4 + static_cast<int>(s % 13), s);
        out.require(flip(flip(img, FlipAxis::kHorizontal), FlipAxis::kHorizontal) == img, "horizontal flip twice");
        out.require(flip(flip(img, FlipAxis::kVertical), FlipAxis::kVertical) == img, "vertical flip twice");
        out.require(rotate(img, 0.0) == img, "rotate(0)");
        out.require(shift(img, 0.0, 0.0) == img, "shift(0, 0)");
        out.require(zoom(img, 1.0) == img, "zoom(1)");
    }
    std::vector<Img> batch;
    for (std::uint64_t s = 0; s < 16; ++s) {
        batch.push_back(random_image(12, 10, 500 + s));
    }
    out.require(augment_batch(batch, AugmentationConfig::none(), 9) == batch, "null-config augment_batch");
    AugmentationConfig cfg;
    cfg.std_normalization = false;
    cfg.zca_whitening = false;
    const auto a = augment_batch(batch, cfg, 1234);
    const auto b = augment_batch(batch, cfg, 1234);
    out.require(a == b, "seeded augmentation differs between runs");
    out.require(a != augment_batch(batch, cfg, 1235), "seed has no effect");
    if (out.pass) {
        out.detail = "50 images, 16-image batch";
    }
    return out;
}

// ---- 4: ZCA --------------------------------------------------------------

Eigen::MatrixXd population_covariance(const std::vector<Img>& batch) {
    const auto d = static_cast<Eigen::Index>(batch.front().size());
    const auto n = static_cast<Eigen::Index>(batch.size());
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < d; ++k) {
            x(i, k) = batch[static_cast<std::size_t>(i)].values()[static_cast<std::size_t>(k)];
        }
    }
    const Eigen::MatrixXd centred = x.rowwise() - x.colwise().mean();
    return centred.transpose() * centred / static_cast<double>(n);
}

Outcome zca_check(const Context&) {
    Outcome out;
    std::mt19937_64 rng(4004);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Img> batch;
    for (int i = 0; i < 64; ++i) {
        Img img(6, 6, 1);
        const double common = u(rng);
        for (auto& v : img.values()) {
            v = 0.6 * common + 0.4 * u(rng);
        }
        batch.push_back(std::move(img));
    }
    const auto zca = ZCAWhitener::fit(batch, 1e-6);
    const auto cov = population_covariance(zca.apply(batch));
    const double dev = (cov - Eigen::MatrixXd::Identity(36, 36)).cwiseAbs().maxCoeff();
    out.require(dev <= 1e-3, "whitened covariance off identity by " + std::to_string(dev));

    const std::vector<Img> flat(20, batch.front());
    const auto degenerate = ZCAWhitener::fit(flat, 1e-6);
    for (const auto& img : degenerate.apply(flat)) {
        for (const double v : img.values()) {
            out.require(v == 0.0, "zero-covariance batch did not map to zeros");
        }
    }
    if (out.pass) {
        std::ostringstream s;
        s << "max |cov - I| = " << dev;
        out.detail = s.str();
    }
    return out;
}

// ---- 5: model shapes and schedules ---------------------------------------

Outcome model_shapes(const Context&) {
    Outcome out;
    torch::NoGradGuard no_grad;
    torch::manual_seed(5);
    const int64_t n = 4;
    const auto x = torch::rand({n, 3, kInputHeight, kInputWidth});
    double worst = 0.0;
    for (const auto id : kAllBackbones) {
        ModelSpec spec;
        spec.backbone = id;
        auto model = build_model(spec, 1);
        model->eval();
        const auto p = model->forward(x).to(torch::kDouble);
        const auto name = std::string(selector_name(id));
        out.require(p.dim() == 2 && p.size(0) == n && p.size(1) == 7, name + ": output is not N x 7");
        if (!out.pass) {
            break;
        }
        out.require(p.ge(0).all().item<bool>(), name + ": negative probability");
        worst = std::max(worst, (p.sum(1) - 1.0).abs().max().item<double>());

        const auto c = default_train_config(id);
        const bool fast = id == BackboneId::kXception || id == BackboneId::kDenseNet;
        out.require(c.epochs == 30, name + ": epochs");
        out.require(c.learning_rate == (fast ? 1e-3 : 1e-4), name + ": learning rate");
        out.require(c.beta1 == 0.9, name + ": beta1");
    }
    out.require(worst <= 1e-5, "row sum off by " + std::to_string(worst));
    if (out.pass) {
        std::ostringstream s;
        s << "7 models, max |row sum - 1| = " << worst;
        out.detail = s.str();
    }
    return out;
}

// ---- 6: baseline CNN learns separable blobs ------------------------------

Outcome blob_learning(const Context&) {
    Outcome out;
    const auto blobs = skinstack::testing::make_blobs(10, kInputHeight, 606);
    const double oracle = skinstack::testing::nearest_centroid_accuracy(blobs);
    out.require(oracle == 1.0, "blobs are not separable (nearest centroid " + std::to_string(oracle) + ")");
    if (!out.pass) {
        return out;
    }
    LabeledImages data;
    for (std::size_t i = 0; i < blobs.images.size(); ++i) {
        data.ids.push_back("blob" + std::to_string(i));
    }
    data.images = blobs.images;
    data.labels = blobs.labels;

    ModelSpec spec;
    spec.backbone = BackboneId::kCnnBaseline;
    TrainConfig cfg = default_train_config(BackboneId::kCnnBaseline);
    cfg.epochs = 10;
    cfg.learning_rate = 1e-3;
    cfg.batch_size = 8;
    cfg.seed = 6;
    // the training images double as the validation set: val_accuracy is then
    // eval-mode accuracy on the training data after each epoch
    const auto r = train_in_memory(spec, data, data, cfg, AugmentationConfig::none());
    double best = 0.0;
    int at = 0;
    for (const auto& e : r.history.epochs) {
        if (e.val_accuracy > best) {
            best = e.val_accuracy;
            at = e.epoch;
        }
    }
    out.require(best >= 0.95, "best train accuracy " + std::to_string(best));
    if (out.pass) {
        std::ostringstream s;
        s << "train accuracy " << best << " at epoch " << at;
        out.detail = s.str();
    }
    return out;
}

// ---- 7: stacking ---------------------------------------------------------

BaseModelRun fixed_base(std::string id, BackboneId b, std::function<ProbabilityRow(const LesionRecord&)> row) {
    return {std::move(id), b, [row = std::move(row)](const DatasetManifest& m) {
                PredictionMatrix p;
                p.source_checkpoint = "fixed";
                for (const auto& r : m.records()) {
                    p.image_ids.push_back(r.image_id);
                    p.probabilities.push_back(row(r));
                }
                return p;
            }};
}

Outcome stacking_check(const Context&) {
    Outcome out;
    std::mt19937_64 rng(707);
    const auto random_matrix = [&](const std::vector<std::string>& ids) {
        PredictionMatrix m;
        m.image_ids = ids;
        std::uniform_real_distribution<double> u(0.01, 1.0);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            ProbabilityRow r;
            double s = 0.0;
            for (auto& v : r) {
                s += (v = u(rng));
            }
            for (auto& v : r) {
                v /= s;
            }
            m.probabilities.push_back(r);
        }
        return m;
    };
    const std::vector<std::string> ids{"a", "b", "c", "d"};
    std::vector<PredictionMatrix> ms{random_matrix(ids), random_matrix(ids)};
    out.require(assemble_meta_features(ms).width == 14, "two bases do not give width 14");
    while (ms.size() < 6) {
        ms.push_back(random_matrix(ids));
    }
    out.require(assemble_meta_features(ms).width == 42, "six bases do not give width 42");

    std::vector<LesionRecord> val;
    for (std::size_t k = 0; k < 12; ++k) {
        for (const auto c : kAllClasses) {
            val.push_back({"v" + std::to_string(val.size()), "", c, 0, 0});
        }
    }
    for (int k = 0; k < 9; ++k) {
        val.push_back({"extra" + std::to_string(k), "", ClassLabel::kBasalCellCarcinoma, 0, 0});
    }
    DatasetSplit split;
    split.validation = DatasetManifest(val);
    split.seed = 17;

    ProbabilityRow uniform;
    uniform.fill(1.0 / 7.0);
    const std::vector<BaseModelRun> perfect{
        fixed_base("oracle", BackboneId::kDenseNet,
                   [](const LesionRecord& r) {
                       ProbabilityRow p{};
                       p[ordinal(r.label)] = 1.0;
                       return p;
                   }),
        fixed_base("flat", BackboneId::kMobileNet, [&](const LesionRecord&) { return uniform; }),
    };
    const StackSpec dm{StackName::kDenseNetMobileNet, builtin_bases(StackName::kDenseNetMobileNet), TreeParams{}};
    const auto res = run_stack(dm, perfect, split);
    out.require(res.report.accuracy == 1.0, "perfect oracle base gives " + std::to_string(res.report.accuracy));

    const std::vector<BaseModelRun> flat{
        fixed_base("r", BackboneId::kResNet50, [&](const LesionRecord&) { return uniform; }),
        fixed_base("v", BackboneId::kVgg16, [&](const LesionRecord&) { return uniform; }),
    };
    const StackSpec rv{StackName::kResNet50Vgg16, builtin_bases(StackName::kResNet50Vgg16), TreeParams{}};
    const auto res_flat = run_stack(rv, flat, split);
    // majority of the meta-training half, scored on the held-out half
    std::array<std::size_t, kNumClasses> train_counts{};
    std::set<std::string> train_ids(res_flat.meta_train_ids.begin(), res_flat.meta_train_ids.end());
    for (const auto& r : val) {
        train_counts[ordinal(r.label)] += train_ids.contains(r.image_id);
    }
    const auto majority = static_cast<std::size_t>(
        std::max_element(train_counts.begin(), train_counts.end()) - train_counts.begin());
    std::size_t hits = 0;
    for (const auto& r : val) {
        hits += !train_ids.contains(r.image_id) && ordinal(r.label) == majority;
    }
    const double expected = static_cast<double>(hits) / static_cast<double>(res_flat.eval_ids.size());
    out.require(res_flat.report.accuracy == expected, "uniform bases give " + std::to_string(res_flat.report.accuracy) +
                                                          ", majority rate " + std::to_string(expected));

    bool rejected = false;
    try {
        const std::vector<std::string> a{"x", "y"};
        const std::vector<std::string> b{"y", "z"};
        check_disjoint(a, b);
    } catch (const DataError&) {
        rejected = true;
    }
    out.require(rejected, "overlapping meta-train/eval ids accepted");
    if (out.pass) {
        std::ostringstream s;
        s << "widths 14/42, oracle 1.0, uniform " << res_flat.report.accuracy << " = majority rate";
        out.detail = s.str();
    }
    return out;
}

// ---- 8: toy reproduce ----------------------------------------------------

int run_cli(const Context& ctx, const std::string& args, const fs::path& log) {
    const std::string cmd = "\"" + ctx.cli.string() + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) {
            continue;
        }
        const auto rel = fs::relative(e.path(), root).generic_string();
        // timestamps only
        if (rel == "ledger.jsonl") {
            continue;
        }
        auto bytes = skinstack::detail::read_file(e.path());
        if (e.path().filename() == "checkpoint.json") {
            auto j = nlohmann::ordered_json::parse(bytes);
            j.erase("created_at");
            bytes = j.dump(2);
        }
        files[rel] = std::move(bytes);
    }
    return files;
}

void write_toy_config(const fs::path& path, const fs::path& data, const fs::path& output) {
    nlohmann::ordered_json j;
    j["dataset"] = {{"metadata", (data / "metadata.csv").string()}, {"image_dirs", {(data / "images").string()}}};
    j["models"] = nlohmann::ordered_json::array({
        {{"name", "inceptionv3"}, {"backbone", "inceptionv3"}, {"pretrained", false}, {"train", {{"seed", 2}}}},
        {{"name", "inceptionv3-replica"}, {"backbone", "inceptionv3"}, {"pretrained", false}, {"train", {{"seed", 101}}}},
    });
    j["stacks"] = nlohmann::ordered_json::array(
        {{{"name", "inceptionv3-inceptionv3"}, {"bases", {"inceptionv3", "inceptionv3-replica"}}}});
    j["output_dir"] = output.string();
    skinstack::detail::write_file(path, j.dump(2) + "\n");
}

Outcome toy_reproduce(const Context& ctx) {
    Outcome out;
    const auto root = ctx.workdir / "toy";
    fs::remove_all(root);
    const auto data = root / "data";
    // 40 per class so the toy subsample actually caps at 35
    std::array<std::size_t, kNumClasses> per_class;
    per_class.fill(40);
    (void)skinstack::testing::write_fake_dataset(data, skinstack::testing::fake_samples(per_class), 450, 600, ".jpg");

    std::vector<std::map<std::string, std::string>> runs;
    for (const char* tag : {"a", "b"}) {
        const auto cfg = root / (std::string("config_") + tag + ".json");
        const auto output = root / (std::string("run_") + tag);
        write_toy_config(cfg, data, output);
        const auto log = root / (std::string("log_") + tag + ".txt");
        const int rc = run_cli(ctx, "--toy --config \"" + cfg.string() + "\" reproduce", log);
        out.require(rc == 0, std::string("reproduce run ") + tag + " exited " + std::to_string(rc) + ", see " +
                                 log.string());
        if (!out.pass) {
            return out;
        }
        runs.push_back(snapshot(output));
    }
    const auto& a = runs[0];
    for (const auto* must : {"tables/table1.txt", "tables/table1.csv", "tables/table2.txt", "tables/table2.csv",
                             "plots/confusion_inceptionv3.png", "plots/confusion_inceptionv3-inceptionv3.png",
                             "plots/curves_inceptionv3.png", "plots/curves_inceptionv3-replica.png", "split.txt",
                             "predictions/inceptionv3.csv", "reports/models/inceptionv3.json",
                             "reports/stacks/inceptionv3-inceptionv3.json"}) {
        out.require(a.contains(must), std::string("missing ") + must);
    }
    if (!out.pass) {
        return out;
    }
    const std::regex row1("Inceptionv3( +[01]\\.[0-9]{2}){4}");
    const std::regex row2("Inceptionv3-Inceptionv3( +[01]\\.[0-9]{2}){4}");
    out.require(a.at("tables/table1.txt").find("Model") != std::string::npos &&
                    std::regex_search(a.at("tables/table1.txt"), row1),
                "table1.txt is not Table-1 shaped");
    out.require(std::regex_search(a.at("tables/table2.txt"), row2), "table2.txt is not Table-2 shaped");

    const auto& b = runs[1];
    out.require(a.size() == b.size(), "runs produced different file sets");
    for (const auto& [rel, bytes] : a) {
        const auto it = b.find(rel);
        out.require(it != b.end() && it->second == bytes, rel + " differs between runs");
    }
    if (out.pass) {
        out.detail = std::to_string(a.size()) + " files byte-identical across two runs";
    }
    return out;
}

// ---- 9: report fidelity --------------------------------------------------

Outcome report_fidelity(const Context& ctx) {
    Outcome out;
    struct Row {
        const char* name;
        double acc, p, r, f1;
    };
    static constexpr Row kStored[] = {
        {"vgg16", 0.73, 0.71, 0.73, 0.71},    {"cnn", 0.77, 0.73, 0.77, 0.73},
        {"resnet50", 0.82, 0.80, 0.82, 0.81}, {"mobilenet", 0.87, 0.88, 0.87, 0.86},
        {"densenet", 0.88, 0.88, 0.88, 0.87}, {"xception", 0.88, 0.88, 0.88, 0.87},
        {"inceptionv3", 0.90, 0.90, 0.90, 0.90},
    };
    const auto root = ctx.workdir / "fidelity";
    fs::remove_all(root);
    for (const auto& row : kStored) {
        EvaluationReport r;
        r.model_name = row.name;
        r.accuracy = row.acc;
        r.weighted_precision = row.p;
        r.weighted_recall = row.r;
        r.weighted_f1 = row.f1;
        r.confusion.counts[0][0] = 1;
        r.per_class = per_class_metrics(r.confusion);
        save_report(r, root / "reports" / "models" / (std::string(row.name) + ".json"));
    }
    const int rc = run_cli(ctx, "report --output \"" + root.string() + "\"", root / "log.txt");
    out.require(rc == 0, "report exited " + std::to_string(rc));
    if (!out.pass) {
        return out;
    }
    std::vector<std::string> lines;
    std::istringstream in(skinstack::detail::read_file(root / "tables" / "table1.txt"));
    for (std::string line; std::getline(in, line);) {
        lines.emplace_back(skinstack::detail::trim(std::regex_replace(line, std::regex("\\s+"), " ")));
    }
    const std::vector<std::string> expected{
        "Inceptionv3 0.90 0.90 0.90 0.90", "Xception 0.88 0.88 0.88 0.87", "Densenet 0.88 0.88 0.88 0.87",
        "Mobilenet 0.87 0.88 0.87 0.86",   "Resnet-50 0.82 0.80 0.82 0.81", "CNN 0.77 0.73 0.77 0.73",
        "VGG-16 0.73 0.71 0.73 0.71",
    };
    out.require(lines.size() >= expected.size() + 2, "table1.txt too short");
    if (out.pass) {
        const std::vector<std::string> body(lines.begin() + 2, lines.begin() + 2 + static_cast<long>(expected.size()));
        out.require(body == expected, "rows differ; first row \"" + body.front() + "\"");
    }
    if (out.pass) {
        out.detail = "\"" + expected.front() + "\", 7 rows in reference order";
    }
    return out;
}

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    Outcome (*run)(const Context&);
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"skinstack acceptance checks"};
    std::string cli;
    std::string workdir = "acceptance_work";
    std::vector<int> only;
    app.add_option("--cli", cli, "Path to the skinstack executable")->required();
    app.add_option("--workdir", workdir, "Scratch directory");
    app.add_option("--only", only, "Run only these criteria");
    CLI11_PARSE(app, argc, argv);

    torch::set_num_threads(1);
    Context ctx{fs::absolute(cli), fs::absolute(workdir)};
    fs::create_directories(ctx.workdir);

    const std::vector<Criterion> criteria{
        {1, "metric oracle", 30, metric_oracle},
        {2, "confusion identities", 30, confusion_identities},
        {3, "augmentation algebra", 10, augmentation_algebra},
        {4, "zca whitening", 10, zca_check},
        {5, "model shapes", 300, model_shapes},
        {6, "cnn separable blobs", 300, blob_learning},
        {7, "stacking", 60, stacking_check},
        {8, "toy reproduce", 900, toy_reproduce},
        {9, "report fidelity", 60, report_fidelity},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) {
            continue;
        }
        const auto start = Clock::now();
        Outcome o;
        try {
            o = c.run(ctx);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(Clock::now() - start).count();
        if (o.pass && secs > c.budget_seconds) {
            o.pass = false;
            o.detail += " (over the " + std::to_string(static_cast<int>(c.budget_seconds)) + " s budget)";
        }
        failures += !o.pass;
        std::ostringstream line;
        line << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " " << c.name << " [" << std::fixed
             << std::setprecision(1) << secs << " s] " << o.detail;
        std::cout << line.str() << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
