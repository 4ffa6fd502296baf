#include <doctest.h>

#include <cstdio>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "dfsel/dataset.hpp"

using namespace dfsel;

namespace {

std::filesystem::path temp_dir() {
    static int counter = 0;
    auto p = std::filesystem::temp_directory_path() /
             ("dfsel_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(p);
    return p;
}

std::vector<MatrixPair> synthetic_pairs(int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<MatrixPair> pairs;
    for (int p = 0; p < count; ++p) {
        index_t n = 12 + static_cast<index_t>(rng() % 24);
        double d = 0.03 + 0.5 * static_cast<double>(rng() % 100) / 100.0;
        Pattern pat = static_cast<Pattern>(p % 3);
        pairs.push_back({"p" + std::to_string(p), random_sparse(n, n, d, pat, rng()),
                         random_sparse(n, n, d, pat, rng())});
    }
    return pairs;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_SUITE_BEGIN("dataset");

TEST_CASE("label_row: argmin, utilization tiebreak, code tiebreak") {
    CHECK(label_row({10, 5, 7}, {0.1, 0.1, 0.1}) == Dataflow::OP);
    CHECK(label_row({5, 5, 9}, {0.5, 0.9, 0.1}) == Dataflow::OP);
    CHECK(label_row({5, 5, 5}, {0.4, 0.4, 0.4}) == Dataflow::IP);
    CHECK(label_row({9, 7, 7}, {0.5, 0.5, 0.9}) == Dataflow::RW);
}

TEST_CASE("build_dataset: one dense 4x4 pair in one 4x4 block") {
    SimConfig cfg;
    std::vector<MatrixPair> pairs = {{"p0", random_sparse(4, 4, 1.0, Pattern::Uniform, 1),
                                      random_sparse(4, 4, 1.0, Pattern::Uniform, 2)}};
    Dataset d = build_dataset(pairs, cfg, {4, 4});
    REQUIRE(d.rows.size() == 1);
    CHECK(d.rows[0].pair_id == "p0");
    CHECK(d.rows[0].label == Dataflow::IP);  // full three-way tie resolves to IP
    CHECK(d.has_scaler);
}

TEST_CASE("build_dataset: empty blocks produce no rows") {
    SimConfig cfg;
    // A's left half empty: blocks (0,k=0) skip
    SparseMatrix a = from_triplets(4, 8, {{0, 6, 1.0}, {3, 7, 2.0}});
    SparseMatrix b = random_sparse(8, 4, 1.0, Pattern::Uniform, 5);
    Dataset d = build_dataset({{"p0", a, b}}, cfg, {4, 4});
    REQUIRE(d.rows.size() == 1);  // only the (i=0, k=1) A block is nonempty
    CHECK(d.rows[0].k == 1);
}

TEST_CASE("build_dataset: labels match an independent re-run of the simulators") {
    SimConfig cfg;
    cfg.mem_block_rows = 4;
    cfg.resident_blocks = 2;
    auto pairs = synthetic_pairs(20, 11);
    Dataset d = build_dataset(pairs, cfg, {8, 8});
    CHECK(d.rows.size() > 20);

    std::mt19937_64 rng(3);
    int checked = 0;
    for (const auto& row : d.rows) {
        if (rng() % 7 != 0) continue;  // spot-check a sample
        ++checked;
        const MatrixPair* src = nullptr;
        for (const auto& p : pairs)
            if (p.id == row.pair_id) src = &p;
        REQUIRE(src != nullptr);
        auto [ta, tb] = trim_to_fit(src->a, src->b);
        BlockGrid ga = partition_blocks(ta, 8, 8);
        BlockGrid gb = partition_blocks(tb, 8, 8);
        auto rs = simulate_all(ga.at(row.i, row.k), gb.at(row.k, row.j), cfg);
        for (int c = 0; c < 3; ++c) CHECK(rs[c].latency_cycles == row.latency[c]);
        CHECK(label_row({rs[0].latency_cycles, rs[1].latency_cycles, rs[2].latency_cycles},
                        {rs[0].pe_utilization, rs[1].pe_utilization, rs[2].pe_utilization}) ==
              row.label);
        CHECK(row.latency[static_cast<int>(row.label)] ==
              *std::min_element(row.latency.begin(), row.latency.end()));
    }
    CHECK(checked > 10);
}

TEST_CASE("build_dataset: parallel build is byte-identical to serial") {
    SimConfig cfg;
    auto pairs = synthetic_pairs(8, 21);
    Dataset serial = build_dataset(pairs, cfg, {8, 8}, 1);
    Dataset parallel = build_dataset(pairs, cfg, {8, 8}, 4);
    auto dir = temp_dir();
    save_dataset_csv(serial, (dir / "serial.csv").string());
    save_dataset_csv(parallel, (dir / "parallel.csv").string());
    CHECK(slurp((dir / "serial.csv").string()) == slurp((dir / "parallel.csv").string()));
}

TEST_CASE("csv round-trip preserves rows and scaler") {
    SimConfig cfg;
    auto pairs = synthetic_pairs(6, 31);
    Dataset d = build_dataset(pairs, cfg, {8, 8});
    auto dir = temp_dir();
    const std::string path = (dir / "data.csv").string();
    save_dataset_csv(d, path);
    Dataset back = load_dataset_csv(path);
    REQUIRE(back.rows.size() == d.rows.size());
    CHECK(back.has_scaler);
    for (size_t r = 0; r < d.rows.size(); ++r) {
        CHECK(back.rows[r].pair_id == d.rows[r].pair_id);
        CHECK(back.rows[r].label == d.rows[r].label);
        CHECK(back.rows[r].latency == d.rows[r].latency);
        for (int f = 0; f < feature::kCount; ++f)
            CHECK(back.rows[r].features[f] == d.rows[r].features[f]);
    }
    for (int f = 0; f < feature::kCount; ++f) {
        CHECK(back.scaler.min[f] == d.scaler.min[f]);
        CHECK(back.scaler.max[f] == d.scaler.max[f]);
    }

    // re-saving the loaded dataset is byte-identical
    const std::string again = (dir / "again.csv").string();
    save_dataset_csv(back, again);
    CHECK(slurp(path) == slurp(again));
}

TEST_CASE("load_dataset_csv rejects malformed input") {
    auto dir = temp_dir();
    const std::string path = (dir / "bad.csv").string();
    std::ofstream(path) << "pair,wrong,header\n";
    CHECK_THROWS_AS(load_dataset_csv(path), ParseError);
    CHECK_THROWS_AS(load_dataset_csv((dir / "missing.csv").string()), IoError);
}

TEST_CASE("split_train_eval: grouped, deterministic, exhaustive") {
    SimConfig cfg;
    auto pairs = synthetic_pairs(10, 41);
    Dataset d = build_dataset(pairs, cfg, {8, 8});

    auto [train, eval] = split_train_eval(d, 0.7, 99);
    std::set<std::string> train_ids, eval_ids;
    for (const auto& r : train.rows) train_ids.insert(r.pair_id);
    for (const auto& r : eval.rows) eval_ids.insert(r.pair_id);
    CHECK(train_ids.size() == 7);
    CHECK(eval_ids.size() == 3);
    for (const auto& id : train_ids) CHECK(eval_ids.count(id) == 0);
    CHECK(train.rows.size() + eval.rows.size() == d.rows.size());

    // same seed reproduces the split
    auto [train2, eval2] = split_train_eval(d, 0.7, 99);
    CHECK(train2.rows.size() == train.rows.size());
    for (size_t r = 0; r < train.rows.size(); ++r)
        CHECK(train2.rows[r].pair_id == train.rows[r].pair_id);

    // scaler comes from the training side only
    std::vector<FeatureVector> train_feats;
    for (const auto& r : train.rows) train_feats.push_back(r.features);
    Scaler expect = fit_scaler(train_feats);
    for (int f = 0; f < feature::kCount; ++f) {
        CHECK(train.scaler.min[f] == expect.min[f]);
        CHECK(eval.scaler.min[f] == expect.min[f]);
        CHECK(eval.scaler.max[f] == expect.max[f]);
    }
}

TEST_CASE("split_train_eval: needs at least two groups and a valid fraction") {
    SimConfig cfg;
    auto pairs = synthetic_pairs(1, 51);
    Dataset d = build_dataset(pairs, cfg, {8, 8});
    CHECK_THROWS_AS(split_train_eval(d, 0.7, 1), std::invalid_argument);

    auto two = build_dataset(synthetic_pairs(2, 52), cfg, {8, 8});
    CHECK_THROWS_AS(split_train_eval(two, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(split_train_eval(two, 1.0, 1), std::invalid_argument);
    auto [tr, ev] = split_train_eval(two, 0.5, 1);
    CHECK(tr.rows.size() > 0);
    CHECK(ev.rows.size() > 0);
}

TEST_CASE("class_weights") {
    Dataset d;
    auto push = [&](Dataflow label, int n) {
        for (int c = 0; c < n; ++c) {
            DatasetRow r;
            r.label = label;
            d.rows.push_back(r);
        }
    };
    SUBCASE("inverse frequency: counts (50,25,25)") {
        push(Dataflow::IP, 50);
        push(Dataflow::OP, 25);
        push(Dataflow::RW, 25);
        auto w = class_weights(d);
        CHECK(w[0] == doctest::Approx(100.0 / (3 * 50.0)));  // 0.667
        CHECK(w[1] == doctest::Approx(100.0 / (3 * 25.0)));  // 1.333
        CHECK(w[2] == doctest::Approx(100.0 / (3 * 25.0)));
    }
    SUBCASE("balanced counts give unit weights") {
        push(Dataflow::IP, 10);
        push(Dataflow::OP, 10);
        push(Dataflow::RW, 10);
        auto w = class_weights(d);
        for (double x : w) CHECK(x == doctest::Approx(1.0));
    }
    SUBCASE("absent class gets 0, others renormalize over present classes") {
        push(Dataflow::IP, 30);
        push(Dataflow::OP, 10);
        auto w = class_weights(d);
        CHECK(w[0] == doctest::Approx(40.0 / (2 * 30.0)));
        CHECK(w[1] == doctest::Approx(40.0 / (2 * 10.0)));
        CHECK(w[2] == 0.0);
    }
    SUBCASE("empty set rejected") {
        CHECK_THROWS_AS(class_weights(d), std::invalid_argument);
    }
}

TEST_CASE("manifest loading trims pairs and resolves relative paths") {
    auto dir = temp_dir();
    SparseMatrix a = random_sparse(10, 20, 0.2, Pattern::Uniform, 61);
    SparseMatrix b = random_sparse(15, 10, 0.2, Pattern::Uniform, 62);
    write_matrix_market_file(a, (dir / "a.mtx").string());
    write_matrix_market_file(b, (dir / "b.mtx").string());
    std::ofstream(dir / "pairs.txt") << "# comment\n"
                                     << "self a.mtx a.mtx\n"
                                     << "ab a.mtx b.mtx\n";
    auto pairs = load_manifest((dir / "pairs.txt").string());
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].id == "self");
    CHECK(pairs[0].a.cols == pairs[0].b.rows);
    CHECK(pairs[1].a.cols == 15);  // trimmed to min(a.cols=20, b.rows=15)
    CHECK(pairs[1].a.cols == pairs[1].b.rows);

    CHECK_THROWS_AS(load_manifest((dir / "nope.txt").string()), IoError);
    std::ofstream(dir / "bad.txt") << "only_two_tokens x.mtx\n";
    CHECK_THROWS_AS(load_manifest((dir / "bad.txt").string()), ParseError);
}

TEST_SUITE_END();
