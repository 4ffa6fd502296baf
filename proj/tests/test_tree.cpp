#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "dfsel/tree.hpp"
#include "rule_text_eval.hpp"

using namespace dfsel;

namespace {

// Dataset with an identity scaler so scaled features equal raw ones (all test
// feature values are kept inside [0,1]).
Dataset make_dataset(const std::vector<std::pair<FeatureVector, Dataflow>>& samples) {
    Dataset d;
    int n = 0;
    for (const auto& [f, label] : samples) {
        DatasetRow r;
        r.pair_id = "g" + std::to_string(n++);
        r.features = f;
        r.label = label;
        d.rows.push_back(std::move(r));
    }
    for (int f = 0; f < feature::kCount; ++f) {
        d.scaler.min[f] = 0.0;
        d.scaler.max[f] = 1.0;
    }
    d.has_scaler = true;
    return d;
}

FeatureVector fv(std::initializer_list<std::pair<int, double>> assignments) {
    FeatureVector f;
    for (auto& [idx, val] : assignments) f[idx] = val;
    return f;
}

int tree_depth(const DecisionTree& t, int node, int depth) {
    if (t.nodes[node].feature < 0) return depth;
    return std::max(tree_depth(t, t.nodes[node].left, depth + 1),
                    tree_depth(t, t.nodes[node].right, depth + 1));
}

std::map<std::string, double> to_named(const FeatureVector& f) {
    std::map<std::string, double> m;
    for (int i = 0; i < feature::kCount; ++i) m[feature::names()[i]] = f[i];
    return m;
}

}  // namespace

TEST_SUITE_BEGIN("tree");

TEST_CASE("single-class training set collapses to one leaf") {
    std::vector<std::pair<FeatureVector, Dataflow>> samples;
    for (int i = 0; i < 10; ++i)
        samples.push_back({fv({{feature::kSparsityA, 0.1 * i}}), Dataflow::RW});
    DecisionTree t = fit_tree(make_dataset(samples), TreeParams{});
    REQUIRE(t.nodes.size() == 1);
    CHECK(t.nodes[0].feature == -1);
    CHECK(t.nodes[0].label == Dataflow::RW);
    CHECK(t.nodes[0].class_counts[2] == 10);
    CHECK(t.predict_scaled(fv({})) == Dataflow::RW);
}

TEST_CASE("1-D threshold data: depth-1 tree at the straddling midpoint") {
    // label OP iff x > 0.5; closest straddling values fix the threshold
    std::vector<std::pair<FeatureVector, Dataflow>> samples;
    std::mt19937_64 rng(17);
    double below = 0.0, above = 1.0;
    for (int i = 0; i < 100; ++i) {
        const double x = static_cast<double>(rng() % 1000) / 999.0;
        if (x <= 0.5)
            below = std::max(below, x);
        else
            above = std::min(above, x);
        samples.push_back({fv({{feature::kSparsityA, x}}),
                           x > 0.5 ? Dataflow::OP : Dataflow::IP});
    }
    TreeParams params;
    params.feature_subset = {feature::kSparsityA};
    DecisionTree t = fit_tree(make_dataset(samples), params);
    REQUIRE(t.nodes.size() == 3);
    CHECK(t.nodes[0].threshold == doctest::Approx(below + (above - below) / 2).epsilon(1e-12));
    CHECK(t.predict_scaled(fv({{feature::kSparsityA, 0.0}})) == Dataflow::IP);
    CHECK(t.predict_scaled(fv({{feature::kSparsityA, 1.0}})) == Dataflow::OP);
    // boundary input routes left
    CHECK(t.predict_scaled(fv({{feature::kSparsityA, t.nodes[0].threshold}})) == Dataflow::IP);
}

TEST_CASE("XOR data needs depth 2 and reaches 100% training accuracy") {
    std::vector<std::pair<FeatureVector, Dataflow>> samples;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int rep = 0; rep < 5; ++rep)
                samples.push_back({fv({{feature::kSparsityA, static_cast<double>(a)},
                                       {feature::kSparsityB, static_cast<double>(b)}}),
                                   a == b ? Dataflow::IP : Dataflow::OP});
    TreeParams params;
    params.feature_subset = {feature::kSparsityA, feature::kSparsityB};
    Dataset d = make_dataset(samples);
    DecisionTree t = fit_tree(d, params);
    CHECK(tree_depth(t, 0, 0) == 2);
    for (const auto& r : d.rows) CHECK(t.predict_raw(r.features) == r.label);
}

TEST_CASE("max_depth is honored") {
    std::mt19937_64 rng(23);
    std::vector<std::pair<FeatureVector, Dataflow>> samples;
    for (int i = 0; i < 300; ++i) {
        FeatureVector f = fv({{feature::kSparsityA, (rng() % 1000) / 999.0},
                              {feature::kSparsityB, (rng() % 1000) / 999.0},
                              {feature::kBlocksAccessed, (rng() % 1000) / 999.0}});
        samples.push_back({f, static_cast<Dataflow>(rng() % 3)});
    }
    for (int depth : {1, 3, 9}) {
        TreeParams params;
        params.max_depth = depth;
        DecisionTree t = fit_tree(make_dataset(samples), params);
        CHECK(tree_depth(t, 0, 0) <= depth);
    }
}

TEST_CASE("leaf class_counts sum to routed samples; weighted majority label") {
    std::vector<std::pair<FeatureVector, Dataflow>> samples;
    // left region: 3 IP vs 2 RW; right region: pure OP
    for (int i = 0; i < 3; ++i) samples.push_back({fv({{0, 0.1}}), Dataflow::IP});
    for (int i = 0; i < 2; ++i) samples.push_back({fv({{0, 0.12}}), Dataflow::RW});
    for (int i = 0; i < 4; ++i) samples.push_back({fv({{0, 0.9}}), Dataflow::OP});
    TreeParams params;
    params.feature_subset = {0};
    params.max_depth = 1;  // single split: left mixed, right pure

    DecisionTree plain = fit_tree(make_dataset(samples), params);
    REQUIRE(plain.nodes.size() == 3);
    const TreeNode& left = plain.nodes[plain.nodes[0].left];
    CHECK(left.class_counts[0] + left.class_counts[1] + left.class_counts[2] == 5);
    CHECK(left.label == Dataflow::IP);  // unweighted majority

    // upweight RW so the same leaf flips
    params.class_weights = {1.0, 1.0, 2.0};
    DecisionTree weighted = fit_tree(make_dataset(samples), params);
    CHECK(weighted.nodes[weighted.nodes[0].left].label == Dataflow::RW);
}

TEST_CASE("duplicated dataset with uniform weights yields the identical tree") {
    std::mt19937_64 rng(29);
    std::vector<std::pair<FeatureVector, Dataflow>> samples;
    for (int i = 0; i < 60; ++i) {
        const double x = (rng() % 1000) / 999.0;
        const double y = (rng() % 1000) / 999.0;
        Dataflow label = x + y > 1.0 ? Dataflow::OP : (x > 0.4 ? Dataflow::RW : Dataflow::IP);
        samples.push_back({fv({{feature::kSparsityA, x}, {feature::kSparsityB, y}}), label});
    }
    auto doubled = samples;
    doubled.insert(doubled.end(), samples.begin(), samples.end());

    TreeParams params;
    params.feature_subset = {feature::kSparsityA, feature::kSparsityB};
    DecisionTree t1 = fit_tree(make_dataset(samples), params);
    DecisionTree t2 = fit_tree(make_dataset(doubled), params);
    REQUIRE(t1.nodes.size() == t2.nodes.size());
    for (size_t n = 0; n < t1.nodes.size(); ++n) {
        CHECK(t1.nodes[n].feature == t2.nodes[n].feature);
        CHECK(t1.nodes[n].threshold == t2.nodes[n].threshold);
        CHECK(t1.nodes[n].label == t2.nodes[n].label);
    }
}

TEST_CASE("resubstitution on separable data recovers every label") {
    std::mt19937_64 rng(31);
    std::vector<std::pair<FeatureVector, Dataflow>> samples;
    for (int i = 0; i < 200; ++i) {
        const double x = (rng() % 1000) / 999.0;
        Dataflow label = x < 0.3 ? Dataflow::IP : (x < 0.6 ? Dataflow::OP : Dataflow::RW);
        samples.push_back({fv({{feature::kBlocksAccessed, x}}), label});
    }
    Dataset d = make_dataset(samples);
    DecisionTree t = fit_tree(d, TreeParams{});
    for (const auto& r : d.rows) CHECK(t.predict_raw(r.features) == r.label);
}

TEST_CASE("empty training set rejected") {
    Dataset d;
    d.has_scaler = true;
    CHECK_THROWS_AS(fit_tree(d, TreeParams{}), std::invalid_argument);
}

TEST_CASE("feature_importance") {
    SUBCASE("depth-1 tree puts importance 1 on its split feature") {
        std::vector<std::pair<FeatureVector, Dataflow>> samples;
        for (int i = 0; i < 10; ++i)
            samples.push_back({fv({{feature::kSparsityA, i < 5 ? 0.1 : 0.9}}),
                               i < 5 ? Dataflow::IP : Dataflow::OP});
        Dataset d = make_dataset(samples);
        DecisionTree t = fit_tree(d, TreeParams{});
        auto imp = feature_importance(t, d);
        CHECK(imp[feature::kSparsityA] == doctest::Approx(1.0));
        for (int f = 0; f < feature::kCount; ++f)
            if (f != feature::kSparsityA) CHECK(imp[f] == 0.0);
    }
    SUBCASE("importances sum to 1 and track impurity decrease") {
        std::mt19937_64 rng(37);
        std::vector<std::pair<FeatureVector, Dataflow>> samples;
        // kBlocksAccessed separates IP cleanly; kSparsityB only partially
        // separates OP from RW, so it must earn less importance
        for (int i = 0; i < 200; ++i) {
            const double x = (rng() % 1000) / 999.0;
            const double y = (rng() % 1000) / 999.0;
            Dataflow label;
            if (x > 0.5)
                label = Dataflow::IP;
            else if (y > 0.5)
                label = rng() % 10 < 8 ? Dataflow::OP : Dataflow::RW;
            else
                label = rng() % 10 < 8 ? Dataflow::RW : Dataflow::OP;
            samples.push_back(
                {fv({{feature::kBlocksAccessed, x}, {feature::kSparsityB, y}}), label});
        }
        Dataset d = make_dataset(samples);
        TreeParams params;
        params.max_depth = 4;
        DecisionTree t = fit_tree(d, params);
        auto imp = feature_importance(t, d);
        double total = 0.0;
        for (double v : imp) total += v;
        CHECK(total == doctest::Approx(1.0));
        CHECK(imp[feature::kBlocksAccessed] > imp[feature::kSparsityB]);
        CHECK(imp[feature::kSparsityB] > 0.0);
    }
    SUBCASE("single leaf has all-zero importance") {
        std::vector<std::pair<FeatureVector, Dataflow>> samples = {{fv({}), Dataflow::IP}};
        Dataset d = make_dataset(samples);
        DecisionTree t = fit_tree(d, TreeParams{});
        auto imp = feature_importance(t, d);
        for (double v : imp) CHECK(v == 0.0);
    }
}

TEST_CASE("kfold_cv") {
    // groups with consistent separable labels
    auto grouped_dataset = [](int n_groups, int rows_per_group) {
        Dataset d;
        std::mt19937_64 rng(41);
        for (int g = 0; g < n_groups; ++g) {
            Dataflow label = static_cast<Dataflow>(g % 3);
            for (int r = 0; r < rows_per_group; ++r) {
                DatasetRow row;
                row.pair_id = "g" + std::to_string(g);
                row.features =
                    fv({{feature::kSparsityA,
                         0.3 * static_cast<double>(label == Dataflow::OP) +
                             0.6 * static_cast<double>(label == Dataflow::RW) +
                             0.02 * static_cast<double>(rng() % 10) / 10.0}});
                row.label = label;
                d.rows.push_back(std::move(row));
            }
        }
        for (int f = 0; f < feature::kCount; ++f) {
            d.scaler.min[f] = 0.0;
            d.scaler.max[f] = 1.0;
        }
        d.has_scaler = true;
        return d;
    };

    SUBCASE("perfectly separable data scores 1.0") {
        Dataset d = grouped_dataset(12, 6);
        CvResult cv = kfold_cv(d, 5, TreeParams{}, 7);
        CHECK(cv.fold_accuracy.size() == 5);
        CHECK(cv.mean_accuracy == doctest::Approx(1.0));
    }
    SUBCASE("k equal to group count is leave-one-group-out") {
        Dataset d = grouped_dataset(9, 4);
        CvResult cv = kfold_cv(d, 9, TreeParams{}, 7);
        CHECK(cv.fold_accuracy.size() == 9);
        for (double acc : cv.fold_accuracy) CHECK(acc == doctest::Approx(1.0));
    }
    SUBCASE("same seed reproduces folds, different seed may not") {
        Dataset d = grouped_dataset(12, 6);
        CvResult a = kfold_cv(d, 4, TreeParams{}, 11);
        CvResult b = kfold_cv(d, 4, TreeParams{}, 11);
        CHECK(a.fold_accuracy == b.fold_accuracy);
    }
    SUBCASE("fewer groups than k rejected") {
        Dataset d = grouped_dataset(3, 4);
        CHECK_THROWS_AS(kfold_cv(d, 5, TreeParams{}, 1), std::invalid_argument);
    }
}

TEST_CASE("export_rules") {
    SUBCASE("single leaf exports one append line") {
        std::vector<std::pair<FeatureVector, Dataflow>> samples = {{fv({}), Dataflow::OP}};
        DecisionTree t = fit_tree(make_dataset(samples), TreeParams{});
        CHECK(export_rules(t, 2) == "predicted.append('1')\n");
    }
    SUBCASE("depth-2 truncation has at most 3 conditions and 4 leaves") {
        std::mt19937_64 rng(43);
        std::vector<std::pair<FeatureVector, Dataflow>> samples;
        for (int i = 0; i < 400; ++i) {
            const double x = (rng() % 1000) / 999.0;
            const double y = (rng() % 1000) / 999.0;
            Dataflow label = x > 0.55 ? Dataflow::IP
                                      : (y > 0.5 ? Dataflow::OP : Dataflow::RW);
            if (rng() % 20 == 0) label = static_cast<Dataflow>(rng() % 3);  // noise
            samples.push_back(
                {fv({{feature::kBlocksAccessed, x}, {feature::kAvgRowLengthVarA, y}}), label});
        }
        DecisionTree t = fit_tree(make_dataset(samples), TreeParams{});
        CHECK(tree_depth(t, 0, 0) > 2);  // truncation is real
        std::string text = export_rules(t, 2);
        int conditions = 0, leaves = 0;
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            if (line.find("if ") != std::string::npos && line.find("elif") == std::string::npos)
                ++conditions;
            if (line.find("predicted.append") != std::string::npos) ++leaves;
        }
        CHECK(conditions <= 3);
        CHECK(leaves <= 4);
        CHECK(leaves >= 2);
    }
    SUBCASE("re-parsed rule text agrees with the truncated tree on 1000 inputs") {
        std::mt19937_64 rng(47);
        std::vector<std::pair<FeatureVector, Dataflow>> samples;
        for (int i = 0; i < 300; ++i) {
            FeatureVector f;
            for (int j : feature::kTopFive) f[j] = (rng() % 1000) / 999.0;
            Dataflow label = f[feature::kBlocksAccessed] > 0.5
                                 ? Dataflow::IP
                                 : (f[feature::kSparsityA] > 0.5 ? Dataflow::OP : Dataflow::RW);
            samples.push_back({f, label});
        }
        DecisionTree full = fit_tree(make_dataset(samples), TreeParams{});
        for (int limit : {0, 1, 2, 3}) {
            auto parsed = ruletext::parse(export_rules(full, limit));
            // reference: truncated tree via a fresh fit with max_depth=limit is
            // NOT the same object; compare against explicit truncated walk
            DecisionTree trunc = full;
            // evaluate by walking full tree but stopping at depth limit
            auto predict_truncated = [&](const FeatureVector& f) {
                int node = 0;
                int depth = 0;
                while (trunc.nodes[node].feature >= 0 && depth < limit) {
                    const auto& n = trunc.nodes[node];
                    const double x = f[trunc.params.feature_subset[n.feature]];
                    node = x <= n.threshold ? n.left : n.right;
                    ++depth;
                }
                return static_cast<int>(trunc.nodes[node].label);
            };
            for (int trial = 0; trial < 1000; ++trial) {
                FeatureVector f;
                for (int j = 0; j < feature::kCount; ++j) f[j] = (rng() % 10000) / 9999.0;
                CHECK(ruletext::evaluate(*parsed, to_named(f)) == predict_truncated(f));
            }
        }
    }
}

TEST_CASE("save/load round-trip preserves the tree and its predictions") {
    std::mt19937_64 rng(53);
    std::vector<std::pair<FeatureVector, Dataflow>> samples;
    for (int i = 0; i < 150; ++i) {
        FeatureVector f;
        for (int j : feature::kTopFive) f[j] = (rng() % 1000) / 999.0;
        samples.push_back({f, static_cast<Dataflow>((f[feature::kSparsityA] > 0.5) +
                                                    (f[feature::kSparsityB] > 0.5))});
    }
    DecisionTree t = fit_tree(make_dataset(samples), TreeParams{});
    const std::string path = "/tmp/dfsel_tree_test.model";
    save_tree(t, path);
    DecisionTree back = load_tree(path);
    REQUIRE(back.nodes.size() == t.nodes.size());
    CHECK(back.params.feature_subset == t.params.feature_subset);
    for (int trial = 0; trial < 200; ++trial) {
        FeatureVector f;
        for (int j = 0; j < feature::kCount; ++j) f[j] = (rng() % 1000) / 999.0;
        CHECK(back.predict_scaled(f) == t.predict_scaled(f));
    }
    CHECK_THROWS_AS(load_tree("/tmp/dfsel_tree_missing.model"), IoError);
}

TEST_SUITE_END();
