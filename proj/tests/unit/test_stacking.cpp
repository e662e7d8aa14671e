#include <random>

#include <gtest/gtest.h>

#include "skinstack/stacking.hpp"

namespace {

using namespace skinstack;

std::vector<LesionRecord> records(std::size_t per_class) {
    std::vector<LesionRecord> out;
    std::size_t next = 0;
    for (std::size_t k = 0; k < per_class; ++k) {
        for (const auto c : kAllClasses) {
            out.push_back({"img" + std::to_string(next++), "", c, 0, 0});
        }
    }
    return out;
}

ProbabilityRow one_hot(ClassLabel c) {
    ProbabilityRow r{};
    r[ordinal(c)] = 1.0;
    return r;
}

ProbabilityRow uniform_row() {
    ProbabilityRow r;
    r.fill(1.0 / 7.0);
    return r;
}

ProbabilityRow random_row(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.01, 1.0);
    ProbabilityRow r;
    double s = 0.0;
    for (auto& v : r) {
        s += (v = u(rng));
    }
    for (auto& v : r) {
        v /= s;
    }
    return r;
}

BaseModelRun base(std::string id, BackboneId b, std::function<ProbabilityRow(const LesionRecord&)> row) {
    return {std::move(id), b, [row = std::move(row)](const DatasetManifest& m) {
                PredictionMatrix p;
                p.source_checkpoint = "test";
                for (const auto& r : m.records()) {
                    p.image_ids.push_back(r.image_id);
                    p.probabilities.push_back(row(r));
                }
                return p;
            }};
}

DatasetSplit split_of(std::vector<LesionRecord> val, std::uint64_t seed = 3) {
    DatasetSplit s;
    s.validation = DatasetManifest(std::move(val));
    s.seed = seed;
    s.train_fraction = 0.9;
    return s;
}

PredictionMatrix matrix(const std::vector<std::string>& ids, std::mt19937_64& rng) {
    PredictionMatrix m;
    m.image_ids = ids;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        m.probabilities.push_back(random_row(rng));
    }
    return m;
}

TEST(Stacking, FeatureWidthsFollowBaseCount) {
    std::mt19937_64 rng(1);
    const std::vector<std::string> ids{"a", "b", "c"};
    std::vector<PredictionMatrix> two{matrix(ids, rng), matrix(ids, rng)};
    EXPECT_EQ(assemble_meta_features(two).width, 14u);
    std::vector<PredictionMatrix> six;
    for (int k = 0; k < 6; ++k) {
        six.push_back(matrix(ids, rng));
    }
    const auto f = assemble_meta_features(six);
    EXPECT_EQ(f.width, 42u);
    ASSERT_EQ(f.matrix.size(), 3u * 42u);
    // block k of row i is base k's probabilities for image i
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t k = 0; k < 6; ++k) {
            for (std::size_t c = 0; c < 7; ++c) {
                EXPECT_EQ(f.matrix[i * 42 + k * 7 + c], six[k].probabilities[i][c]);
            }
        }
    }
}

TEST(Stacking, MismatchedIdsAreRejected) {
    std::mt19937_64 rng(2);
    std::vector<PredictionMatrix> ms{matrix({"a", "b", "c"}, rng), matrix({"a", "c", "b"}, rng)};
    try {
        (void)assemble_meta_features(ms);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
    }
    ms[1] = matrix({"a", "b"}, rng);
    EXPECT_THROW((void)assemble_meta_features(ms), DataError);
}

TEST(Stacking, PerfectOracleBaseGivesPerfectStack) {
    const auto split = split_of(records(12));
    const std::vector<BaseModelRun> runs{
        base("oracle", BackboneId::kDenseNet, [](const LesionRecord& r) { return one_hot(r.label); }),
        base("noise", BackboneId::kMobileNet, [](const LesionRecord&) { return uniform_row(); }),
    };
    StackSpec spec{StackName::kDenseNetMobileNet, builtin_bases(StackName::kDenseNetMobileNet), TreeParams{}};
    const auto res = run_stack(spec, runs, split);
    EXPECT_EQ(res.feature_width, 14u);
    EXPECT_EQ(res.report.accuracy, 1.0);
    EXPECT_EQ(res.base_ids, (std::vector<std::string>{"oracle", "noise"}));
}

TEST(Stacking, UniformBasesPredictTheMetaTrainingMajority) {
    auto val = records(6);
    // skew: extra melanoma samples make it the majority
    for (int k = 0; k < 10; ++k) {
        val.push_back({"extra" + std::to_string(k), "", ClassLabel::kMelanoma, 0, 0});
    }
    const auto split = split_of(val);
    const std::vector<BaseModelRun> runs{
        base("r50", BackboneId::kResNet50, [](const LesionRecord&) { return uniform_row(); }),
        base("vgg", BackboneId::kVgg16, [](const LesionRecord&) { return uniform_row(); }),
    };
    StackSpec spec{StackName::kResNet50Vgg16, builtin_bases(StackName::kResNet50Vgg16), TreeParams{}};
    const auto res = run_stack(spec, runs, split);

    const auto halves = stratified_split(split.validation, 0.5, split.seed);
    const auto train_counts = halves.train.class_counts();
    const auto majority = static_cast<std::size_t>(
        std::max_element(train_counts.begin(), train_counts.end()) - train_counts.begin());
    const auto eval_counts = halves.validation.class_counts();
    const double expected = static_cast<double>(eval_counts[majority]) / static_cast<double>(halves.validation.size());
    EXPECT_EQ(majority, ordinal(ClassLabel::kMelanoma));
    EXPECT_DOUBLE_EQ(res.report.accuracy, expected);
}

TEST(Stacking, LeakageGuardRejectsOverlap) {
    const std::vector<std::string> a{"x", "y", "z"};
    const std::vector<std::string> b{"p", "q"};
    EXPECT_NO_THROW(check_disjoint(a, b));
    const std::vector<std::string> c{"q", "y"};
    try {
        check_disjoint(a, c);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("y"), std::string::npos);
    }
}

TEST(Stacking, MetaHalvesAreDisjoint) {
    const auto split = split_of(records(10));
    std::mt19937_64 rng(9);
    const std::vector<BaseModelRun> runs{
        base("i1", BackboneId::kInceptionV3, [&](const LesionRecord&) { return random_row(rng); }),
        base("i2", BackboneId::kInceptionV3, [&](const LesionRecord&) { return random_row(rng); }),
    };
    StackSpec spec{StackName::kInceptionV3InceptionV3, builtin_bases(StackName::kInceptionV3InceptionV3), TreeParams{}};
    const auto res = run_stack(spec, runs, split);
    std::set<std::string> train(res.meta_train_ids.begin(), res.meta_train_ids.end());
    for (const auto& id : res.eval_ids) {
        EXPECT_FALSE(train.contains(id));
    }
    EXPECT_EQ(train.size() + res.eval_ids.size(), split.validation.size());
}

TEST(Stacking, MissingBaseIsNamed) {
    const auto split = split_of(records(4));
    const std::vector<BaseModelRun> runs{
        base("m", BackboneId::kMobileNet, [](const LesionRecord&) { return uniform_row(); }),
    };
    StackSpec spec{StackName::kDenseNetMobileNet, builtin_bases(StackName::kDenseNetMobileNet), TreeParams{}};
    try {
        (void)run_stack(spec, runs, split);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("DENSENET"), std::string::npos) << e.what();
    }
}

TEST(Stacking, RepeatedBackboneNeedsDistinctRuns) {
    const auto split = split_of(records(4));
    const std::vector<BaseModelRun> one{
        base("i1", BackboneId::kInceptionV3, [](const LesionRecord&) { return uniform_row(); }),
    };
    StackSpec spec{StackName::kInceptionV3InceptionV3, builtin_bases(StackName::kInceptionV3InceptionV3), TreeParams{}};
    EXPECT_THROW((void)run_stack(spec, one, split), DataError);
}

TEST(Stacking, BuiltinStacks) {
    const auto stacks = builtin_stacks();
    ASSERT_EQ(stacks.size(), 5u);
    EXPECT_EQ(stacks[0].base_models, (std::vector<BackboneId>{BackboneId::kInceptionV3, BackboneId::kInceptionV3}));
    EXPECT_EQ(stacks[1].base_models, (std::vector<BackboneId>{BackboneId::kDenseNet, BackboneId::kMobileNet}));
    EXPECT_EQ(stacks[2].base_models, (std::vector<BackboneId>{BackboneId::kInceptionV3, BackboneId::kXception}));
    EXPECT_EQ(stacks[3].base_models, (std::vector<BackboneId>{BackboneId::kResNet50, BackboneId::kVgg16}));
    EXPECT_EQ(stacks[4].base_models.size(), 6u);
    EXPECT_EQ(std::count(stacks[4].base_models.begin(), stacks[4].base_models.end(), BackboneId::kCnnBaseline), 0);
    for (const auto& s : stacks) {
        EXPECT_EQ(parse_stack_name(selector_name(s.name)), s.name);
    }
}

TEST(Stacking, SameFeaturesGiveSamePredictions) {
    std::mt19937_64 rng(4);
    std::vector<std::string> ids;
    std::vector<ClassLabel> y;
    for (int i = 0; i < 140; ++i) {
        ids.push_back("s" + std::to_string(i));
        y.push_back(kAllClasses[static_cast<std::size_t>(i % 7)]);
    }
    std::vector<PredictionMatrix> ms{matrix(ids, rng), matrix(ids, rng)};
    const auto f = assemble_meta_features(ms);
    const auto model = train_meta(f, y, TreeParams{});
    EXPECT_EQ(stack_predict(model, f), stack_predict(model, f));
    // memorized training rows
    EXPECT_EQ(stack_predict(model, f), y);
    const auto back = DecisionTree::parse(model.tree.serialize());
    EXPECT_EQ(back, model.tree);
}

TEST(Stacking, SingleClassLabelsAreRejected) {
    std::mt19937_64 rng(5);
    std::vector<PredictionMatrix> ms{matrix({"a", "b"}, rng)};
    const std::vector<ClassLabel> y(2, ClassLabel::kMelanoma);
    EXPECT_THROW((void)train_meta(assemble_meta_features(ms), y, TreeParams{}), DataError);
}

}  // namespace
