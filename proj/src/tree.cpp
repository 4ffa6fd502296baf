#include "dfsel/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

namespace dfsel {

void TreeParams::validate() const {
    if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
    if (min_samples_leaf < 1) throw std::invalid_argument("min_samples_leaf must be >= 1");
    if (feature_subset.empty()) throw std::invalid_argument("feature_subset must be non-empty");
    for (int f : feature_subset)
        if (f < 0 || f >= feature::kCount)
            throw std::invalid_argument("feature_subset index out of range");
}

int DecisionTree::depth() const {
    if (nodes.empty()) return 0;
    int max_depth = 0;
    // iterative DFS with explicit depth
    std::vector<std::pair<int, int>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [n, d] = stack.back();
        stack.pop_back();
        max_depth = std::max(max_depth, d);
        if (nodes[n].feature >= 0) {
            stack.push_back({nodes[n].left, d + 1});
            stack.push_back({nodes[n].right, d + 1});
        }
    }
    return max_depth;
}

Dataflow DecisionTree::predict_scaled(const FeatureVector& scaled) const {
    if (nodes.empty()) throw std::logic_error("predict on an empty tree");
    int n = 0;
    while (nodes[n].feature >= 0) {
        const TreeNode& node = nodes[n];
        const double x = scaled[params.feature_subset[node.feature]];
        n = x <= node.threshold ? node.left : node.right;
    }
    return nodes[n].label;
}

namespace {

double gini(const std::array<double, 3>& wcounts) {
    const double total = wcounts[0] + wcounts[1] + wcounts[2];
    if (total <= 0.0) return 0.0;
    double sum_sq = 0.0;
    for (double w : wcounts) {
        const double p = w / total;
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

Dataflow weighted_majority(const std::array<std::int64_t, 3>& counts,
                           const std::array<double, 3>& weights) {
    int best = 0;
    for (int c = 1; c < 3; ++c)
        if (static_cast<double>(counts[c]) * weights[c] >
            static_cast<double>(counts[best]) * weights[best])
            best = c;
    return static_cast<Dataflow>(best);
}

struct Builder {
    const std::vector<std::array<double, feature::kCount>>& x;  // scaled rows
    const std::vector<int>& y;
    const TreeParams& params;
    std::vector<TreeNode> nodes;

    int build(std::vector<int> samples, int depth) {
        std::array<std::int64_t, 3> counts{};
        for (int r : samples) counts[y[r]]++;
        std::array<double, 3> wcounts{};
        for (int c = 0; c < 3; ++c)
            wcounts[c] = static_cast<double>(counts[c]) * params.class_weights[c];

        const int idx = static_cast<int>(nodes.size());
        nodes.emplace_back();
        nodes[idx].class_counts = counts;
        nodes[idx].label = weighted_majority(counts, params.class_weights);

        int present = 0;
        for (auto c : counts)
            if (c > 0) ++present;
        const bool pure = present <= 1;
        if (pure || depth >= params.max_depth ||
            static_cast<int>(samples.size()) < 2 * params.min_samples_leaf)
            return idx;

        // best split: lowest weighted child impurity, ties to the lowest
        // feature position then the lowest threshold
        int best_feature = -1;
        double best_threshold = 0.0;
        double best_impurity = std::numeric_limits<double>::infinity();
        const double w_total = wcounts[0] + wcounts[1] + wcounts[2];

        std::vector<int> order(samples);
        for (size_t fpos = 0; fpos < params.feature_subset.size(); ++fpos) {
            const int f = params.feature_subset[fpos];
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                return x[a][f] < x[b][f] || (x[a][f] == x[b][f] && a < b);
            });

            std::array<double, 3> wl{};
            std::array<std::int64_t, 3> cl{};
            std::int64_t n_left = 0;
            const std::int64_t n = static_cast<std::int64_t>(order.size());
            for (std::int64_t p = 0; p + 1 < n; ++p) {
                const int r = order[p];
                wl[y[r]] += params.class_weights[y[r]];
                cl[y[r]]++;
                ++n_left;
                const double v1 = x[r][f];
                const double v2 = x[order[p + 1]][f];
                if (v1 == v2) continue;
                if (n_left < params.min_samples_leaf || n - n_left < params.min_samples_leaf)
                    continue;

                std::array<double, 3> wr;
                for (int c = 0; c < 3; ++c) wr[c] = wcounts[c] - wl[c];
                const double w_left = wl[0] + wl[1] + wl[2];
                const double w_right = wr[0] + wr[1] + wr[2];
                const double impurity =
                    (w_left * gini(wl) + w_right * gini(wr)) / (w_total > 0 ? w_total : 1.0);
                if (impurity < best_impurity) {
                    double thr = v1 + (v2 - v1) / 2.0;
                    if (!(thr < v2)) thr = v1;  // guard midpoint rounding up
                    best_impurity = impurity;
                    best_feature = static_cast<int>(fpos);
                    best_threshold = thr;
                }
            }
        }
        if (best_feature < 0) return idx;  // no valid threshold (constant features)

        std::vector<int> left, right;
        const int f = params.feature_subset[best_feature];
        for (int r : samples)
            (x[r][f] <= best_threshold ? left : right).push_back(r);
        samples.clear();
        samples.shrink_to_fit();

        nodes[idx].feature = best_feature;
        nodes[idx].threshold = best_threshold;
        const int l = build(std::move(left), depth + 1);
        nodes[idx].left = l;
        const int r = build(std::move(right), depth + 1);
        nodes[idx].right = r;
        return idx;
    }
};

}  // namespace

DecisionTree fit_tree(const Dataset& train, const TreeParams& params) {
    params.validate();
    if (train.rows.empty()) throw std::invalid_argument("fit_tree: empty training set");
    if (!train.has_scaler) throw std::invalid_argument("fit_tree: dataset has no scaler");

    std::vector<std::array<double, feature::kCount>> x;
    std::vector<int> y;
    x.reserve(train.rows.size());
    y.reserve(train.rows.size());
    for (const auto& r : train.rows) {
        x.push_back(train.scaled(r).v);
        y.push_back(static_cast<int>(r.label));
    }

    Builder b{x, y, params, {}};
    std::vector<int> all(train.rows.size());
    std::iota(all.begin(), all.end(), 0);
    b.build(std::move(all), 0);

    DecisionTree t;
    t.nodes = std::move(b.nodes);
    t.params = params;
    t.scaler = train.scaler;
    return t;
}

std::array<double, feature::kCount> feature_importance(const DecisionTree& tree,
                                                       const Dataset& train) {
    std::array<double, feature::kCount> importance{};
    if (tree.empty() || train.rows.empty()) return importance;

    // route the training rows through the tree, accumulating weighted class
    // counts per node
    std::vector<std::array<double, 3>> node_w(tree.nodes.size(), std::array<double, 3>{});
    for (const auto& r : train.rows) {
        const FeatureVector f = tree.scaler.apply(r.features);
        int n = 0;
        for (;;) {
            node_w[n][static_cast<int>(r.label)] +=
                tree.params.class_weights[static_cast<int>(r.label)];
            if (tree.nodes[n].feature < 0) break;
            const double x = f[tree.params.feature_subset[tree.nodes[n].feature]];
            n = x <= tree.nodes[n].threshold ? tree.nodes[n].left : tree.nodes[n].right;
        }
    }

    const double w_root = node_w[0][0] + node_w[0][1] + node_w[0][2];
    if (w_root <= 0.0) return importance;
    for (size_t n = 0; n < tree.nodes.size(); ++n) {
        const TreeNode& node = tree.nodes[n];
        if (node.feature < 0) continue;
        const auto& w = node_w[n];
        const auto& lw = node_w[node.left];
        const auto& rw = node_w[node.right];
        const double wn = w[0] + w[1] + w[2];
        if (wn <= 0.0) continue;
        const double wl = lw[0] + lw[1] + lw[2];
        const double wr = rw[0] + rw[1] + rw[2];
        const double decrease = gini(w) - (wl / wn) * gini(lw) - (wr / wn) * gini(rw);
        importance[tree.params.feature_subset[node.feature]] += (wn / w_root) * decrease;
    }
    double total = 0.0;
    for (double v : importance) total += v;
    if (total > 0.0)
        for (double& v : importance) v /= total;
    return importance;
}

CvResult kfold_cv(const Dataset& d, int k, const TreeParams& params, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("kfold_cv: k must be >= 2");

    // groups in first-appearance order, with per-group majority label
    std::vector<std::string> group_order;
    std::unordered_map<std::string, std::array<std::int64_t, 3>> group_counts;
    for (const auto& r : d.rows) {
        auto [it, inserted] = group_counts.try_emplace(r.pair_id);
        if (inserted) group_order.push_back(r.pair_id);
        it->second[static_cast<int>(r.label)]++;
    }
    if (static_cast<int>(group_order.size()) < k)
        throw std::invalid_argument("kfold_cv: fewer pair groups (" +
                                    std::to_string(group_order.size()) + ") than folds (" +
                                    std::to_string(k) + ")");

    // stratify: bucket groups by majority label, shuffle each bucket, deal
    // round-robin with a shared fold cursor
    std::array<std::vector<std::string>, 3> buckets;
    for (const auto& g : group_order) {
        const auto& counts = group_counts[g];
        int best = 0;
        for (int c = 1; c < 3; ++c)
            if (counts[c] > counts[best]) best = c;
        buckets[best].push_back(g);
    }
    std::mt19937_64 rng(seed);
    std::unordered_map<std::string, int> fold_of;
    int cursor = 0;
    for (auto& bucket : buckets) {
        std::shuffle(bucket.begin(), bucket.end(), rng);
        for (const auto& g : bucket) fold_of[g] = cursor++ % k;
    }

    CvResult result;
    for (int fold = 0; fold < k; ++fold) {
        Dataset train, test;
        for (const auto& r : d.rows)
            (fold_of[r.pair_id] == fold ? test : train).rows.push_back(r);

        std::vector<FeatureVector> feats;
        feats.reserve(train.rows.size());
        for (const auto& r : train.rows) feats.push_back(r.features);
        train.scaler = fit_scaler(feats);
        train.has_scaler = true;

        TreeParams fold_params = params;
        fold_params.class_weights = class_weights(train);
        DecisionTree t = fit_tree(train, fold_params);

        std::int64_t correct = 0;
        for (const auto& r : test.rows)
            if (t.predict_raw(r.features) == r.label) ++correct;
        result.fold_accuracy.push_back(
            test.rows.empty() ? 1.0 : static_cast<double>(correct) / test.rows.size());
    }
    result.mean_accuracy =
        std::accumulate(result.fold_accuracy.begin(), result.fold_accuracy.end(), 0.0) /
        static_cast<double>(k);
    return result;
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void emit_rules(const DecisionTree& tree, int node, int depth, int depth_limit,
                std::string& out) {
    const std::string indent(static_cast<size_t>(depth) * 4, ' ');
    const TreeNode& n = tree.nodes[node];
    if (n.feature < 0 || depth >= depth_limit) {
        out += indent + "predicted.append('" + std::to_string(static_cast<int>(n.label)) + "')\n";
        return;
    }
    const std::string& name = feature::names()[tree.params.feature_subset[n.feature]];
    const std::string thr = fmt_double(n.threshold);
    out += indent + "if " + name + " <= " + thr + ":\n";
    emit_rules(tree, n.left, depth + 1, depth_limit, out);
    out += indent + "elif " + name + " > " + thr + ":\n";
    emit_rules(tree, n.right, depth + 1, depth_limit, out);
}

}  // namespace

std::string export_rules(const DecisionTree& tree, int depth_limit) {
    if (tree.empty()) throw std::logic_error("export_rules on an empty tree");
    if (depth_limit < 0) depth_limit = 0;
    std::string out;
    emit_rules(tree, 0, 0, depth_limit, out);
    return out;
}

void save_tree(const DecisionTree& tree, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "dfsel-dt 1\n";
    out << "max_depth " << tree.params.max_depth << "\n";
    out << "min_samples_leaf " << tree.params.min_samples_leaf << "\n";
    out << "features " << tree.params.feature_subset.size();
    for (int f : tree.params.feature_subset) out << " " << f;
    out << "\n";
    out << "class_weights " << fmt_double(tree.params.class_weights[0]) << " "
        << fmt_double(tree.params.class_weights[1]) << " "
        << fmt_double(tree.params.class_weights[2]) << "\n";
    out << "scaler " << feature::kCount << "\n";
    for (int f = 0; f < feature::kCount; ++f)
        out << feature::names()[static_cast<size_t>(f)] << " " << fmt_double(tree.scaler.min[f])
            << " " << fmt_double(tree.scaler.max[f]) << "\n";
    out << "nodes " << tree.nodes.size() << "\n";
    for (const TreeNode& n : tree.nodes) {
        if (n.feature >= 0)
            out << "I " << n.feature << " " << fmt_double(n.threshold) << " " << n.left << " "
                << n.right;
        else
            out << "L";
        out << " " << static_cast<int>(n.label) << " " << n.class_counts[0] << " "
            << n.class_counts[1] << " " << n.class_counts[2] << "\n";
    }
    if (!out) throw IoError("write to '" + path + "' failed");
}

DecisionTree load_tree(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");

    auto expect_key = [&](const std::string& key) {
        std::string tok;
        if (!(in >> tok) || tok != key)
            throw ParseError("tree file: expected '" + key + "', got '" + tok + "'");
    };

    expect_key("dfsel-dt");
    int version = 0;
    in >> version;
    if (version != 1) throw ParseError("unsupported tree file version");

    DecisionTree t;
    expect_key("max_depth");
    in >> t.params.max_depth;
    expect_key("min_samples_leaf");
    in >> t.params.min_samples_leaf;
    expect_key("features");
    size_t n_features = 0;
    in >> n_features;
    t.params.feature_subset.resize(n_features);
    for (auto& f : t.params.feature_subset) in >> f;
    expect_key("class_weights");
    for (auto& w : t.params.class_weights) in >> w;
    expect_key("scaler");
    int n_scaler = 0;
    in >> n_scaler;
    if (n_scaler != feature::kCount) throw ParseError("tree file: bad scaler size");
    for (int f = 0; f < feature::kCount; ++f) {
        std::string name;
        in >> name >> t.scaler.min[f] >> t.scaler.max[f];
        if (name != feature::names()[static_cast<size_t>(f)])
            throw ParseError("tree file: unexpected scaler feature '" + name + "'");
    }
    expect_key("nodes");
    size_t n_nodes = 0;
    in >> n_nodes;
    t.nodes.resize(n_nodes);
    for (size_t n = 0; n < n_nodes; ++n) {
        std::string kind;
        if (!(in >> kind)) throw ParseError("tree file: truncated node list");
        TreeNode& node = t.nodes[n];
        if (kind == "I") {
            in >> node.feature >> node.threshold >> node.left >> node.right;
            if (node.feature < 0 ||
                node.feature >= static_cast<int>(t.params.feature_subset.size()))
                throw ParseError("tree file: node feature out of range");
            if (node.left < 0 || node.right < 0 || node.left >= static_cast<int>(n_nodes) ||
                node.right >= static_cast<int>(n_nodes))
                throw ParseError("tree file: child index out of range");
        } else if (kind == "L") {
            node.feature = -1;
        } else {
            throw ParseError("tree file: unknown node kind '" + kind + "'");
        }
        int label = 0;
        in >> label >> node.class_counts[0] >> node.class_counts[1] >> node.class_counts[2];
        if (!in) throw ParseError("tree file: truncated node");
        node.label = dataflow_from_code(label);
    }
    t.params.validate();
    return t;
}

}  // namespace dfsel
