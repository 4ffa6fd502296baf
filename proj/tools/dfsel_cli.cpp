// Command-line front door: generate matrices, run the dataflow simulators,
// build labeled datasets, train/evaluate the selectors and emit reports.
// Everything goes through the public C API in dfsel.h.
#include <dfsel.h>

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct Settings {
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string config_path;

    dfsel_sim_config sim{};
    dfsel_tree_params tree{};
    dfsel_dqn_hyper dqn{};

    Settings() {
        dfsel_sim_config_default(&sim);
        dfsel_tree_params_default(&tree);
        dfsel_dqn_hyper_default(&dqn);
    }
};

struct CliError {
    int code;
    std::string message;
};

[[noreturn]] void fail_usage(const std::string& msg) { throw CliError{kExitUsage, msg}; }
[[noreturn]] void fail_data(const std::string& msg) { throw CliError{kExitData, msg}; }

void check(dfsel_status status) {
    if (status == DFSEL_OK) return;
    if (status == DFSEL_ERR_INVALID_ARGUMENT) fail_usage(dfsel_last_error());
    fail_data(dfsel_last_error());
}

std::string resolve_out(const Settings& s, const std::string& path) {
    if (path.empty() || s.out_dir.empty()) return path;
    std::filesystem::path p(path);
    if (p.is_absolute()) return path;
    std::filesystem::create_directories(s.out_dir);
    return (std::filesystem::path(s.out_dir) / p).string();
}

// key=value configuration; explicitly-given command line flags win
void apply_config(Settings& s, const std::map<std::string, CLI::Option*>& flag_of) {
    if (s.config_path.empty()) return;
    std::ifstream in(s.config_path);
    if (!in) fail_data("cannot open config file '" + s.config_path + "'");

    std::map<std::string, std::function<void(const std::string&)>> setters;
    auto num = [](const std::string& v, double lo, double hi) {
        char* end = nullptr;
        const double x = std::strtod(v.c_str(), &end);
        if (end == v.c_str() || *end != '\0' || x < lo || x > hi)
            fail_usage("bad config value '" + v + "'");
        return x;
    };
    setters["num_pes"] = [&](const std::string& v) { s.sim.num_pes = (int)num(v, 1, 1 << 20); };
    setters["mem_block_rows"] = [&](const std::string& v) {
        s.sim.mem_block_rows = (int64_t)num(v, 1, 1e15);
    };
    setters["resident_blocks"] = [&](const std::string& v) {
        s.sim.resident_blocks = (int)num(v, 1, 1 << 30);
    };
    setters["miss_penalty_cycles"] = [&](const std::string& v) {
        s.sim.miss_penalty_cycles = (uint64_t)num(v, 0, 1e15);
    };
    setters["max_depth"] = [&](const std::string& v) { s.tree.max_depth = (int)num(v, 1, 64); };
    setters["min_samples_leaf"] = [&](const std::string& v) {
        s.tree.min_samples_leaf = (int)num(v, 1, 1e9);
    };
    setters["epsilon_start"] = [&](const std::string& v) { s.dqn.epsilon_start = num(v, 0, 1); };
    setters["epsilon_decay"] = [&](const std::string& v) { s.dqn.epsilon_decay = num(v, 0, 1); };
    setters["epsilon_min"] = [&](const std::string& v) { s.dqn.epsilon_min = num(v, 0, 1); };
    setters["replay_capacity"] = [&](const std::string& v) {
        s.dqn.replay_capacity = (int64_t)num(v, 1, 1e12);
    };
    setters["batch_size"] = [&](const std::string& v) { s.dqn.batch_size = (int)num(v, 1, 1e9); };
    setters["learning_rate"] = [&](const std::string& v) {
        s.dqn.learning_rate = num(v, 1e-12, 1e3);
    };
    setters["reward_weight"] = [&](const std::string& v) { s.dqn.reward_weight = num(v, 0, 1e3); };
    setters["episodes"] = [&](const std::string& v) { s.dqn.episodes = (int64_t)num(v, 1, 1e12); };
    setters["hidden_dim"] = [&](const std::string& v) { s.dqn.hidden_dim = (int)num(v, 1, 1e7); };

    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail_usage("config line " + std::to_string(lineno) + ": expected key=value");
        auto trim = [](std::string v) {
            const auto b = v.find_first_not_of(" \t\r");
            const auto e = v.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto it = setters.find(key);
        if (it == setters.end())
            fail_usage("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        auto flag = flag_of.find(key);
        if (flag != flag_of.end() && flag->second->count() > 0) continue;  // flag wins
        it->second(value);
    }
}

using MatrixPtr = std::unique_ptr<dfsel_matrix, decltype(&dfsel_matrix_free)>;
using DatasetPtr = std::unique_ptr<dfsel_dataset, decltype(&dfsel_dataset_free)>;
using TreePtr = std::unique_ptr<dfsel_tree, decltype(&dfsel_tree_free)>;
using QModelPtr = std::unique_ptr<dfsel_qmodel, decltype(&dfsel_qmodel_free)>;

MatrixPtr read_matrix(const std::string& path) {
    dfsel_matrix* m = nullptr;
    check(dfsel_matrix_read_mtx(path.c_str(), &m));
    return MatrixPtr(m, &dfsel_matrix_free);
}

DatasetPtr load_dataset(const std::string& path) {
    dfsel_dataset* d = nullptr;
    check(dfsel_dataset_load_csv(path.c_str(), &d));
    return DatasetPtr(d, &dfsel_dataset_free);
}

// stdout when path is empty
class OutputFile {
public:
    explicit OutputFile(const std::string& path) {
        if (!path.empty()) {
            file_.open(path, std::ios::binary);
            if (!file_) fail_data("cannot open '" + path + "' for writing");
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---- subcommand payloads ----

struct GenArgs {
    int count = 1;
    std::int64_t rows = 256, cols = 256;
    double density = 0.01;
    std::string pattern = "uniform";
    std::string out_dir;
    std::string prefix = "gen";
    std::string manifest;
};

int run_gen(const Settings& s, const GenArgs& a) {
    const std::string dir = resolve_out(s, a.out_dir);
    std::filesystem::create_directories(dir);
    std::ofstream manifest;
    if (!a.manifest.empty()) {
        manifest.open(resolve_out(s, a.manifest));
        if (!manifest) fail_data("cannot open manifest '" + a.manifest + "' for writing");
    }
    static const std::vector<std::string> kCycle = {"uniform", "banded", "clustered"};
    for (int i = 0; i < a.count; ++i) {
        const std::string pattern = a.pattern == "mixed" ? kCycle[i % 3] : a.pattern;
        dfsel_matrix* m = nullptr;
        check(dfsel_matrix_random(a.rows, a.cols, a.density, pattern.c_str(), s.seed + i, &m));
        MatrixPtr holder(m, &dfsel_matrix_free);
        const std::string path =
            (std::filesystem::path(dir) / (a.prefix + "_" + std::to_string(i) + ".mtx")).string();
        check(dfsel_matrix_write_mtx(m, path.c_str()));
        if (manifest.is_open())
            manifest << a.prefix << i << " " << path << " " << path << "\n";
        std::cout << path << " rows=" << dfsel_matrix_rows(m) << " cols=" << dfsel_matrix_cols(m)
                  << " nnz=" << dfsel_matrix_nnz(m) << "\n";
    }
    return 0;
}

struct PairArgs {
    std::string a_path, b_path;
    bool trim = false;
    std::string out;
};

std::pair<MatrixPtr, MatrixPtr> load_pair(const PairArgs& a) {
    MatrixPtr ma = read_matrix(a.a_path);
    MatrixPtr mb = read_matrix(a.b_path);
    if (a.trim) {
        dfsel_matrix* ta = nullptr;
        dfsel_matrix* tb = nullptr;
        check(dfsel_trim_to_fit(ma.get(), mb.get(), &ta, &tb));
        ma.reset(ta);
        mb.reset(tb);
    }
    return {std::move(ma), std::move(mb)};
}

int run_simulate(const Settings& s, const PairArgs& a, const std::string& dataflow) {
    auto [ma, mb] = load_pair(a);
    OutputFile out(resolve_out(s, a.out));
    out.stream() << "dataflow,latency_cycles,pe_utilization,result_nnz\n";
    dfsel_sim_result rs[3];
    const bool all = dataflow == "all";
    const int code = all ? -1 : (dataflow == "ip" ? 0 : dataflow == "op" ? 1 : 2);
    check(dfsel_simulate(ma.get(), mb.get(), code, &s.sim, rs));
    static const char* kNames[3] = {"ip", "op", "rw"};
    const int n = all ? 3 : 1;
    for (int i = 0; i < n; ++i) {
        const dfsel_sim_result& r = rs[i];
        out.stream() << kNames[r.dataflow] << "," << r.latency_cycles << ","
                     << fmt(r.pe_utilization) << "," << r.result_nnz << "\n";
    }
    return 0;
}

int run_features(const Settings& s, const PairArgs& a) {
    auto [ma, mb] = load_pair(a);
    double f[DFSEL_FEATURE_COUNT];
    check(dfsel_extract_features(ma.get(), mb.get(), &s.sim, f));
    OutputFile out(resolve_out(s, a.out));
    for (int i = 0; i < DFSEL_FEATURE_COUNT; ++i)
        out.stream() << (i ? "," : "") << dfsel_feature_name(i);
    out.stream() << "\n";
    for (int i = 0; i < DFSEL_FEATURE_COUNT; ++i) out.stream() << (i ? "," : "") << fmt(f[i]);
    out.stream() << "\n";
    return 0;
}

struct BuildArgs {
    std::string manifest;
    std::string out_dir;
    std::int64_t block_rows = 256, block_cols = 256;
    int jobs = 1;
};

int run_build_dataset(const Settings& s, const BuildArgs& a) {
    dfsel_dataset* d = nullptr;
    check(dfsel_dataset_build(a.manifest.c_str(), &s.sim, a.block_rows, a.block_cols, a.jobs, &d));
    DatasetPtr holder(d, &dfsel_dataset_free);
    const std::string dir = resolve_out(s, a.out_dir);
    std::filesystem::create_directories(dir);
    const std::string csv = (std::filesystem::path(dir) / "dataset.csv").string();
    check(dfsel_dataset_save_csv(d, csv.c_str()));
    std::cout << "dataset: " << csv << " (" << dfsel_dataset_rows(d) << " rows)\n"
              << "scaler:  " << csv << ".scaler\n";
    return 0;
}

struct TrainArgs {
    std::string dataset;
    std::string out;
    std::string eval_out;
    double train_fraction = 0.7;
    bool no_split = false;
};

// split helper shared by both trainers; eval may come back empty (no_split)
std::pair<DatasetPtr, DatasetPtr> split_for_training(const Settings& s, const TrainArgs& a) {
    DatasetPtr full = load_dataset(a.dataset);
    if (a.no_split)
        return {std::move(full), DatasetPtr(nullptr, &dfsel_dataset_free)};
    dfsel_dataset* train = nullptr;
    dfsel_dataset* eval = nullptr;
    check(dfsel_dataset_split(full.get(), a.train_fraction, s.seed, &train, &eval));
    return {DatasetPtr(train, &dfsel_dataset_free), DatasetPtr(eval, &dfsel_dataset_free)};
}

void maybe_write_eval(const Settings& s, const TrainArgs& a, const dfsel_dataset* eval) {
    if (a.eval_out.empty()) return;
    if (!eval) fail_usage("--eval-out requires a split (drop --no-split)");
    const std::string path = resolve_out(s, a.eval_out);
    check(dfsel_dataset_save_csv(eval, path.c_str()));
    std::cout << "eval rows: " << path << "\n";
}

int run_train_dt(const Settings& s, const TrainArgs& a) {
    auto [train, eval] = split_for_training(s, a);
    dfsel_tree* tree = nullptr;
    check(dfsel_tree_train(train.get(), &s.tree, &tree));
    TreePtr holder(tree, &dfsel_tree_free);
    const std::string model = resolve_out(s, a.out);
    check(dfsel_tree_save(tree, model.c_str()));
    std::cout << "trained on " << dfsel_dataset_rows(train.get()) << " rows\n";
    if (eval) {
        double acc = 0;
        check(dfsel_tree_accuracy(tree, eval.get(), &acc));
        std::cout << "holdout rows " << dfsel_dataset_rows(eval.get()) << ", accuracy "
                  << fmt(acc) << "\n";
    }
    std::cout << "model: " << model << "\n";
    maybe_write_eval(s, a, eval.get());
    return 0;
}

int run_train_rl(const Settings& s, const TrainArgs& a) {
    auto [train, eval] = split_for_training(s, a);
    dfsel_dqn_hyper hyper = s.dqn;
    hyper.seed = s.seed;
    dfsel_qmodel* q = nullptr;
    check(dfsel_qmodel_train(train.get(), &hyper, &q));
    QModelPtr holder(q, &dfsel_qmodel_free);
    const std::string model = resolve_out(s, a.out);
    check(dfsel_qmodel_save(q, model.c_str()));
    std::cout << "trained on " << dfsel_dataset_rows(train.get()) << " rows ("
              << dfsel_qmodel_param_count(q) << " parameters, " << hyper.episodes
              << " episodes)\n";
    if (eval) {
        double acc = 0;
        check(dfsel_qmodel_accuracy(q, eval.get(), &acc));
        std::cout << "holdout rows " << dfsel_dataset_rows(eval.get()) << ", accuracy "
                  << fmt(acc) << "\n";
    }
    std::cout << "model: " << model << "\n";
    maybe_write_eval(s, a, eval.get());
    return 0;
}

int run_export_rules(const Settings& s, const std::string& model, int depth,
                     const std::string& out) {
    dfsel_tree* tree = nullptr;
    check(dfsel_tree_load(model.c_str(), &tree));
    TreePtr holder(tree, &dfsel_tree_free);
    const std::string path = resolve_out(s, out);
    check(dfsel_tree_export_rules(tree, depth, path.c_str()));
    std::cout << "rules: " << path << " (" << std::filesystem::file_size(path) << " bytes)\n";
    return 0;
}

struct HeuristicArgs {
    std::string features_csv;
    std::string scaler;
    std::string out;
    std::string rules_out;
};

int run_heuristic(const Settings& s, const HeuristicArgs& a) {
    if (!a.rules_out.empty()) {
        const std::string path = resolve_out(s, a.rules_out);
        check(dfsel_heuristic_write_rules(path.c_str()));
        std::cout << "rules: " << path << " (" << std::filesystem::file_size(path)
                  << " bytes)\n";
    }
    if (a.features_csv.empty()) {
        if (a.rules_out.empty()) fail_usage("heuristic needs --features or --rules-out");
        return 0;
    }

    std::ifstream in(a.features_csv);
    if (!in) fail_data("cannot open '" + a.features_csv + "'");
    std::string header;
    if (!std::getline(in, header)) fail_data("empty features file");
    if (!header.empty() && header.back() == '\r') header.pop_back();

    // locate the 12 feature columns by name; works for both `features`
    // output and full dataset CSVs
    std::vector<std::string> columns;
    {
        std::stringstream hs(header);
        std::string col;
        while (std::getline(hs, col, ',')) columns.push_back(col);
    }
    int where[DFSEL_FEATURE_COUNT];
    for (int f = 0; f < DFSEL_FEATURE_COUNT; ++f) {
        where[f] = -1;
        for (size_t c = 0; c < columns.size(); ++c)
            if (columns[c] == dfsel_feature_name(f)) where[f] = static_cast<int>(c);
        if (where[f] < 0)
            fail_data(std::string("features file is missing column '") + dfsel_feature_name(f) +
                      "'");
    }

    OutputFile out(resolve_out(s, a.out));
    out.stream() << header << ",heuristic_label\n";
    std::string line;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ls(line);
        std::string fval;
        while (std::getline(ls, fval, ',')) fields.push_back(fval);
        double raw[DFSEL_FEATURE_COUNT];
        for (int f = 0; f < DFSEL_FEATURE_COUNT; ++f) {
            if (where[f] >= static_cast<int>(fields.size()))
                fail_data("line " + std::to_string(lineno) + ": too few columns");
            try {
                raw[f] = std::stod(fields[where[f]]);
            } catch (const std::exception&) {
                fail_data("line " + std::to_string(lineno) + ": bad number '" +
                          fields[where[f]] + "'");
            }
        }
        double scaled[DFSEL_FEATURE_COUNT];
        if (!a.scaler.empty()) {
            check(dfsel_scaler_apply_file(a.scaler.c_str(), raw, scaled));
        } else {
            for (int f = 0; f < DFSEL_FEATURE_COUNT; ++f) scaled[f] = raw[f];
        }
        out.stream() << line << "," << dfsel_heuristic_predict(scaled) << "\n";
    }
    return 0;
}

struct EvaluateArgs {
    std::string model;
    std::string model_file;
    std::string dataset;
    std::string out;
};

int run_evaluate(const Settings& s, const EvaluateArgs& a) {
    DatasetPtr eval = load_dataset(a.dataset);
    const std::string report = resolve_out(s, a.out);
    dfsel_metrics m{};
    check(dfsel_evaluate(a.model.c_str(), a.model_file.empty() ? nullptr : a.model_file.c_str(),
                         eval.get(), report.empty() ? nullptr : report.c_str(), &m));
    std::cout << "selector: " << a.model << "\n"
              << "rows: " << dfsel_dataset_rows(eval.get()) << "\n"
              << "accuracy: " << fmt(m.accuracy) << "\n"
              << "total cycles: " << m.total_cycles << "\n";
    static const char* kBase[4] = {"ip", "op", "rw", "heuristic"};
    for (int b = 0; b < 4; ++b)
        std::cout << "speedup vs " << kBase[b] << ": " << fmt(m.speedup_vs[b])
                  << " (mean of pairs " << fmt(m.mean_pair_speedup[b]) << ")\n";
    if (!report.empty()) std::cout << "report: " << report << "\n";
    return 0;
}

int run_cv(const Settings& s, const std::string& dataset, int k) {
    DatasetPtr d = load_dataset(dataset);
    std::vector<double> folds(static_cast<size_t>(k), 0.0);
    double mean = 0;
    check(dfsel_cross_validate(d.get(), k, &s.tree, s.seed, folds.data(), k, &mean));
    for (int f = 0; f < k; ++f)
        std::cout << "fold " << f << ": " << fmt(folds[static_cast<size_t>(f)]) << "\n";
    std::cout << "mean accuracy: " << fmt(mean) << "\n";
    return 0;
}

int run_storage_report(const Settings& s, const std::vector<std::string>& paths,
                       const std::string& out) {
    std::vector<const char*> raw;
    raw.reserve(paths.size());
    for (const auto& p : paths) raw.push_back(p.c_str());
    const std::string csv = resolve_out(s, out);
    check(dfsel_storage_report(raw.data(), static_cast<int>(raw.size()),
                               csv.empty() ? nullptr : csv.c_str()));
    for (const auto& p : paths)
        std::cout << p << ": " << std::filesystem::file_size(p) << " bytes\n";
    if (!csv.empty()) std::cout << "report: " << csv << "\n";
    return 0;
}

int run_sweep(const Settings& s, const std::string& dataset, const std::string& out) {
    DatasetPtr d = load_dataset(dataset);
    const std::string csv = resolve_out(s, out);
    check(dfsel_sweep_report(d.get(), csv.c_str()));
    std::cout << "sweep: " << csv << " (" << dfsel_dataset_rows(d.get()) << " rows)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    Settings s;
    CLI::App app{"adaptive SpGEMM dataflow selection: simulators, dataset builder and selectors"};
    app.require_subcommand(1);
    app.fallthrough();

    app.add_option("--seed", s.seed, "seed for every random choice")->capture_default_str();
    app.add_option("--out-dir", s.out_dir, "directory that relative output paths resolve under");
    app.add_option("--config", s.config_path,
                   "key=value file overriding simulator/tree/DQN defaults (keys: num_pes, "
                   "mem_block_rows, resident_blocks, miss_penalty_cycles, max_depth, "
                   "min_samples_leaf, epsilon_start, epsilon_decay, epsilon_min, "
                   "replay_capacity, batch_size, learning_rate, reward_weight, episodes, "
                   "hidden_dim)");

    std::map<std::string, CLI::Option*> flag_of;
    auto sim_flags = [&](CLI::App* cmd) {
        flag_of["num_pes"] =
            cmd->add_option("--num-pes", s.sim.num_pes, "processing elements")
                ->capture_default_str();
        flag_of["mem_block_rows"] = cmd->add_option("--mem-block-rows", s.sim.mem_block_rows,
                                                    "rows of B per memory block")
                                        ->capture_default_str();
        flag_of["resident_blocks"] = cmd->add_option("--resident-blocks", s.sim.resident_blocks,
                                                     "LRU window size in blocks")
                                         ->capture_default_str();
        flag_of["miss_penalty_cycles"] =
            cmd->add_option("--miss-penalty", s.sim.miss_penalty_cycles,
                            "cycles charged per evicting fetch")
                ->capture_default_str();
    };

    // gen
    GenArgs gen;
    auto* cmd_gen = app.add_subcommand("gen", "generate random .mtx matrices");
    cmd_gen->add_option("--count", gen.count, "matrices to generate")->capture_default_str();
    cmd_gen->add_option("--rows", gen.rows, "rows")->capture_default_str();
    cmd_gen->add_option("--cols", gen.cols, "columns")->capture_default_str();
    cmd_gen->add_option("--density", gen.density, "nnz fraction in (0,1]")->capture_default_str();
    cmd_gen->add_option("--pattern", gen.pattern, "uniform|banded|clustered|mixed")
        ->check(CLI::IsMember({"uniform", "banded", "clustered", "mixed"}))
        ->capture_default_str();
    cmd_gen->add_option("--out", gen.out_dir, "output directory")->required();
    cmd_gen->add_option("--prefix", gen.prefix, "file name prefix")->capture_default_str();
    cmd_gen->add_option("--manifest", gen.manifest, "also write a self-pair manifest here");

    // simulate
    PairArgs sim_args;
    std::string sim_dataflow = "all";
    auto* cmd_sim = app.add_subcommand("simulate", "run the cycle models on one matrix pair");
    cmd_sim->add_option("--a", sim_args.a_path, "left operand (.mtx)")->required();
    cmd_sim->add_option("--b", sim_args.b_path, "right operand (.mtx)")->required();
    cmd_sim->add_option("--dataflow", sim_dataflow, "ip|op|rw|all")
        ->check(CLI::IsMember({"ip", "op", "rw", "all"}))
        ->capture_default_str();
    cmd_sim->add_flag("--trim", sim_args.trim, "trim the pair to conformant dimensions");
    cmd_sim->add_option("--out", sim_args.out, "CSV path (default stdout)");
    sim_flags(cmd_sim);

    // features
    PairArgs feat_args;
    auto* cmd_feat = app.add_subcommand("features", "emit the 12 per-pair features as CSV");
    cmd_feat->add_option("--a", feat_args.a_path, "left operand (.mtx)")->required();
    cmd_feat->add_option("--b", feat_args.b_path, "right operand (.mtx)")->required();
    cmd_feat->add_flag("--trim", feat_args.trim, "trim the pair to conformant dimensions");
    cmd_feat->add_option("--out", feat_args.out, "CSV path (default stdout)");
    sim_flags(cmd_feat);

    // build-dataset
    BuildArgs build;
    auto* cmd_build = app.add_subcommand("build-dataset",
                                         "simulate every block pair of a manifest and label it");
    cmd_build->add_option("--manifest", build.manifest, "pair_id path_a path_b lines")
        ->required();
    cmd_build->add_option("--out", build.out_dir, "output directory")->required();
    cmd_build->add_option("--block-rows", build.block_rows, "A row-block height")
        ->capture_default_str();
    cmd_build->add_option("--block-cols", build.block_cols, "shared-dimension block width")
        ->capture_default_str();
    cmd_build->add_option("--jobs", build.jobs, "parallel pair workers")->capture_default_str();
    sim_flags(cmd_build);

    // train-dt
    TrainArgs dt;
    auto* cmd_dt = app.add_subcommand("train-dt", "train the weighted decision tree");
    cmd_dt->add_option("--dataset", dt.dataset, "dataset CSV")->required();
    cmd_dt->add_option("--out", dt.out, "model file")->required();
    flag_of["max_depth"] =
        cmd_dt->add_option("--max-depth", s.tree.max_depth, "depth cap")->capture_default_str();
    flag_of["min_samples_leaf"] = cmd_dt->add_option("--min-samples-leaf",
                                                     s.tree.min_samples_leaf, "leaf size floor")
                                      ->capture_default_str();
    cmd_dt->add_flag("--all-features", s.tree.use_all_features,
                     "split on all 12 features instead of the top five");
    bool dt_no_weights = false;
    cmd_dt->add_flag("--no-class-weights", dt_no_weights,
                     "uniform class weights instead of inverse-frequency");
    cmd_dt->add_option("--train-fraction", dt.train_fraction, "grouped split fraction")
        ->capture_default_str();
    cmd_dt->add_flag("--no-split", dt.no_split, "train on every row");
    cmd_dt->add_option("--eval-out", dt.eval_out, "write the held-out rows to this CSV");

    // train-rl
    TrainArgs rl;
    auto* cmd_rl = app.add_subcommand("train-rl", "train the DQN selector offline");
    cmd_rl->add_option("--dataset", rl.dataset, "dataset CSV")->required();
    cmd_rl->add_option("--out", rl.out, "model file")->required();
    flag_of["episodes"] =
        cmd_rl->add_option("--episodes", s.dqn.episodes, "training episodes")
            ->capture_default_str();
    flag_of["batch_size"] =
        cmd_rl->add_option("--batch-size", s.dqn.batch_size, "replay batch")
            ->capture_default_str();
    flag_of["learning_rate"] = cmd_rl->add_option("--learning-rate", s.dqn.learning_rate,
                                                  "SGD step size")
                                   ->capture_default_str();
    flag_of["hidden_dim"] =
        cmd_rl->add_option("--hidden-dim", s.dqn.hidden_dim, "hidden layer width")
            ->capture_default_str();
    cmd_rl->add_option("--train-fraction", rl.train_fraction, "grouped split fraction")
        ->capture_default_str();
    cmd_rl->add_flag("--no-split", rl.no_split, "train on every row");
    cmd_rl->add_option("--eval-out", rl.eval_out, "write the held-out rows to this CSV");

    // export-rules
    std::string er_model, er_out;
    int er_depth = 2;
    auto* cmd_er = app.add_subcommand("export-rules", "emit a tree as nested if/elif rule text");
    cmd_er->add_option("--model", er_model, "tree model file")->required();
    cmd_er->add_option("--depth", er_depth, "truncation depth")->capture_default_str();
    cmd_er->add_option("--out", er_out, "rule text path")->required();

    // heuristic
    HeuristicArgs heur;
    auto* cmd_heur =
        app.add_subcommand("heuristic", "append the rule selector's label to a features CSV");
    cmd_heur->add_option("--features", heur.features_csv,
                         "CSV containing the 12 feature columns");
    cmd_heur->add_option("--scaler", heur.scaler, "scaler sidecar to apply first");
    cmd_heur->add_option("--out", heur.out, "output CSV (default stdout)");
    cmd_heur->add_option("--rules-out", heur.rules_out, "also write the fixed rule text here");

    // evaluate
    EvaluateArgs ev;
    auto* cmd_ev = app.add_subcommand("evaluate", "score a selector over a labeled dataset");
    cmd_ev->add_option("--model", ev.model, "dt|rl|heuristic|oracle|ip|op|rw")->required();
    cmd_ev->add_option("--model-file", ev.model_file, "model path for dt/rl");
    cmd_ev->add_option("--dataset", ev.dataset, "labeled dataset CSV")->required();
    cmd_ev->add_option("--out", ev.out, "per-pair report CSV");

    // cv
    std::string cv_dataset;
    int cv_k = 5;
    auto* cmd_cv = app.add_subcommand("cv", "grouped stratified k-fold cross-validation");
    cmd_cv->add_option("--dataset", cv_dataset, "dataset CSV")->required();
    cmd_cv->add_option("--k", cv_k, "folds")->capture_default_str();
    cmd_cv->add_option("--max-depth", s.tree.max_depth, "depth cap")->capture_default_str();

    // storage-report
    std::vector<std::string> storage_paths;
    std::string storage_out;
    auto* cmd_st = app.add_subcommand("storage-report", "byte sizes of model/rule files");
    cmd_st->add_option("paths", storage_paths, "files to measure")->required();
    cmd_st->add_option("--out", storage_out, "CSV path");

    // sweep
    std::string sweep_dataset, sweep_out;
    auto* cmd_sw = app.add_subcommand("sweep", "per-row sparsity/latency CSV for plotting");
    cmd_sw->add_option("--dataset", sweep_dataset, "dataset CSV")->required();
    cmd_sw->add_option("--out", sweep_out, "CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        apply_config(s, flag_of);
        if (cmd_gen->parsed()) return run_gen(s, gen);
        if (cmd_sim->parsed()) return run_simulate(s, sim_args, sim_dataflow);
        if (cmd_feat->parsed()) return run_features(s, feat_args);
        if (cmd_build->parsed()) return run_build_dataset(s, build);
        if (cmd_dt->parsed()) {
            if (dt_no_weights) {
                s.tree.auto_class_weights = 0;
                s.tree.class_weights[0] = s.tree.class_weights[1] = s.tree.class_weights[2] = 1.0;
            }
            return run_train_dt(s, dt);
        }
        if (cmd_rl->parsed()) return run_train_rl(s, rl);
        if (cmd_er->parsed()) return run_export_rules(s, er_model, er_depth, er_out);
        if (cmd_heur->parsed()) return run_heuristic(s, heur);
        if (cmd_ev->parsed()) return run_evaluate(s, ev);
        if (cmd_cv->parsed()) return run_cv(s, cv_dataset, cv_k);
        if (cmd_st->parsed()) return run_storage_report(s, storage_paths, storage_out);
        if (cmd_sw->parsed()) return run_sweep(s, sweep_dataset, sweep_out);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
