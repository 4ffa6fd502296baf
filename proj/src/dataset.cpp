#include "dfsel/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace dfsel {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s, long lineno) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw ParseError("bad number '" + s + "'", lineno);
    return v;
}

long long parse_int(const std::string& s, long lineno) {
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0') throw ParseError("bad integer '" + s + "'", lineno);
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

Dataflow label_row(const std::array<std::uint64_t, 3>& latencies,
                   const std::array<double, 3>& utilizations) {
    int best = 0;
    for (int c = 1; c < 3; ++c) {
        if (latencies[c] < latencies[best] ||
            (latencies[c] == latencies[best] && utilizations[c] > utilizations[best]))
            best = c;
    }
    return static_cast<Dataflow>(best);
}

namespace {

std::vector<DatasetRow> build_pair_rows(const MatrixPair& pair, const SimConfig& cfg,
                                        index_t block_rows, index_t block_cols) {
    if (pair.a.cols != pair.b.rows)
        throw DimensionError("pair '" + pair.id + "': a.cols (" + std::to_string(pair.a.cols) +
                             ") != b.rows (" + std::to_string(pair.b.rows) +
                             "); trim the pair first");
    const BlockGrid ga = partition_blocks(pair.a, block_rows, block_cols);
    const BlockGrid gb = partition_blocks(pair.b, block_cols, block_cols);

    std::vector<DatasetRow> rows;
    for (index_t i = 0; i < ga.grid_rows; ++i) {
        for (index_t j = 0; j < gb.grid_cols; ++j) {
            for (index_t k = 0; k < ga.grid_cols; ++k) {
                const SparseMatrix& ablk = ga.at(i, k);
                const SparseMatrix& bblk = gb.at(k, j);
                if (ablk.empty() || bblk.empty()) continue;

                DatasetRow row;
                row.pair_id = pair.id;
                row.i = i;
                row.j = j;
                row.k = k;
                row.features = extract_features(ablk, bblk, cfg);
                auto rs = simulate_all(ablk, bblk, cfg);
                for (int c = 0; c < 3; ++c) {
                    row.latency[c] = rs[c].latency_cycles;
                    row.utilization[c] = rs[c].pe_utilization;
                }
                row.label = label_row(row.latency, row.utilization);
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

}  // namespace

Dataset build_dataset(const std::vector<MatrixPair>& pairs, const SimConfig& cfg,
                      std::pair<index_t, index_t> block_dims, int jobs) {
    cfg.validate();
    if (block_dims.first < 1 || block_dims.second < 1)
        throw std::invalid_argument("block dimensions must be >= 1");
    if (jobs < 1) jobs = 1;

    std::vector<std::vector<DatasetRow>> per_pair(pairs.size());
    if (jobs == 1 || pairs.size() <= 1) {
        for (size_t p = 0; p < pairs.size(); ++p)
            per_pair[p] = build_pair_rows(pairs[p], cfg, block_dims.first, block_dims.second);
    } else {
        std::atomic<size_t> next{0};
        std::atomic<bool> failed{false};
        std::string error_msg;
        std::mutex error_mu;
        auto worker = [&] {
            for (;;) {
                const size_t p = next.fetch_add(1);
                if (p >= pairs.size() || failed.load()) return;
                try {
                    per_pair[p] =
                        build_pair_rows(pairs[p], cfg, block_dims.first, block_dims.second);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    failed.store(true);
                    if (error_msg.empty()) error_msg = e.what();
                }
            }
        };
        std::vector<std::thread> threads;
        const int n = std::min<int>(jobs, static_cast<int>(pairs.size()));
        threads.reserve(static_cast<size_t>(n));
        for (int t = 0; t < n; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
        if (failed.load()) throw std::runtime_error(error_msg);
    }

    Dataset d;
    for (auto& rows : per_pair)
        for (auto& r : rows) d.rows.push_back(std::move(r));
    if (!d.rows.empty()) {
        std::vector<FeatureVector> feats;
        feats.reserve(d.rows.size());
        for (const auto& r : d.rows) feats.push_back(r.features);
        d.scaler = fit_scaler(feats);
        d.has_scaler = true;
    }
    return d;
}

std::pair<Dataset, Dataset> split_train_eval(const Dataset& d, double train_fraction,
                                             std::uint64_t seed) {
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
        throw std::invalid_argument("train_fraction must be in (0, 1)");

    std::vector<std::string> groups;  // first-appearance order
    std::unordered_set<std::string> seen;
    for (const auto& r : d.rows) {
        if (seen.insert(r.pair_id).second) groups.push_back(r.pair_id);
    }
    if (groups.size() < 2)
        throw std::invalid_argument("split_train_eval: need at least 2 pair groups, have " +
                                    std::to_string(groups.size()));

    std::mt19937_64 rng(seed);
    std::shuffle(groups.begin(), groups.end(), rng);
    const auto n_groups = static_cast<long long>(groups.size());
    long long n_train = std::llround(train_fraction * static_cast<double>(n_groups));
    n_train = std::clamp<long long>(n_train, 1, n_groups - 1);

    std::unordered_set<std::string> train_ids(groups.begin(), groups.begin() + n_train);
    Dataset train, eval;
    for (const auto& r : d.rows)
        (train_ids.count(r.pair_id) ? train : eval).rows.push_back(r);

    std::vector<FeatureVector> feats;
    feats.reserve(train.rows.size());
    for (const auto& r : train.rows) feats.push_back(r.features);
    train.scaler = fit_scaler(feats);
    train.has_scaler = true;
    eval.scaler = train.scaler;
    eval.has_scaler = true;
    return {std::move(train), std::move(eval)};
}

std::array<double, 3> class_weights(const Dataset& d) {
    if (d.rows.empty()) throw std::invalid_argument("class_weights: empty training set");
    std::array<double, 3> counts{};
    for (const auto& r : d.rows) counts[static_cast<int>(r.label)] += 1.0;
    int present = 0;
    for (double c : counts)
        if (c > 0) ++present;
    std::array<double, 3> w{};
    const double n = static_cast<double>(d.rows.size());
    for (int c = 0; c < 3; ++c) {
        if (counts[c] > 0) {
            w[c] = n / (static_cast<double>(present) * counts[c]);
        } else {
            w[c] = 0.0;
            std::cerr << "warning: class " << c << " (" << dataflow_name(static_cast<Dataflow>(c))
                      << ") absent from training data\n";
        }
    }
    return w;
}

std::string dataset_csv_header() {
    std::string h = "pair_id,i,j,k";
    for (const auto& name : feature::names()) h += "," + name;
    h += ",lat_ip,lat_op,lat_rw,util_ip,util_op,util_rw,label";
    return h;
}

void save_dataset_csv(const Dataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << dataset_csv_header() << "\n";
    for (const auto& r : d.rows) {
        if (r.pair_id.find(',') != std::string::npos || r.pair_id.find('\n') != std::string::npos)
            throw std::invalid_argument("pair_id '" + r.pair_id + "' contains a separator");
        out << r.pair_id << "," << r.i << "," << r.j << "," << r.k;
        for (int f = 0; f < feature::kCount; ++f) out << "," << fmt_double(r.features[f]);
        for (int c = 0; c < 3; ++c) out << "," << r.latency[c];
        for (int c = 0; c < 3; ++c) out << "," << fmt_double(r.utilization[c]);
        out << "," << static_cast<int>(r.label) << "\n";
    }
    if (!out) throw IoError("write to '" + path + "' failed");
    out.close();
    if (d.has_scaler) save_scaler(d.scaler, path + ".scaler");
}

Dataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");

    std::string line;
    long lineno = 0;
    if (!std::getline(in, line)) throw ParseError("empty dataset file", 1);
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != dataset_csv_header())
        throw ParseError("unexpected dataset header (expected '" + dataset_csv_header() + "')",
                         lineno);

    Dataset d;
    const size_t expected = 4 + feature::kCount + 3 + 3 + 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != expected)
            throw ParseError("expected " + std::to_string(expected) + " fields, got " +
                                 std::to_string(fields.size()),
                             lineno);
        DatasetRow r;
        size_t c = 0;
        r.pair_id = fields[c++];
        r.i = parse_int(fields[c], lineno);
        ++c;
        r.j = parse_int(fields[c], lineno);
        ++c;
        r.k = parse_int(fields[c], lineno);
        ++c;
        for (int f = 0; f < feature::kCount; ++f) r.features[f] = parse_double(fields[c++], lineno);
        for (int l = 0; l < 3; ++l) {
            const long long v = parse_int(fields[c++], lineno);
            if (v < 0) throw ParseError("negative latency", lineno);
            r.latency[l] = static_cast<std::uint64_t>(v);
        }
        for (int l = 0; l < 3; ++l) r.utilization[l] = parse_double(fields[c++], lineno);
        const long long code = parse_int(fields[c++], lineno);
        if (code < 0 || code > 2) throw ParseError("label must be 0, 1 or 2", lineno);
        r.label = static_cast<Dataflow>(code);
        d.rows.push_back(std::move(r));
    }

    const std::string sidecar = path + ".scaler";
    if (std::filesystem::exists(sidecar)) {
        d.scaler = load_scaler(sidecar);
        d.has_scaler = true;
    }
    return d;
}

void save_scaler(const Scaler& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    for (int f = 0; f < feature::kCount; ++f)
        out << feature::names()[static_cast<size_t>(f)] << " " << fmt_double(s.min[f]) << " "
            << fmt_double(s.max[f]) << "\n";
    if (!out) throw IoError("write to '" + path + "' failed");
}

Scaler load_scaler(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    Scaler s;
    std::string line;
    long lineno = 0;
    for (int f = 0; f < feature::kCount; ++f) {
        if (!std::getline(in, line)) throw ParseError("scaler file truncated", lineno + 1);
        ++lineno;
        std::istringstream ls(line);
        std::string name, lo, hi;
        if (!(ls >> name >> lo >> hi)) throw ParseError("malformed scaler line", lineno);
        if (name != feature::names()[static_cast<size_t>(f)])
            throw ParseError("expected feature '" + feature::names()[static_cast<size_t>(f)] +
                                 "', got '" + name + "'",
                             lineno);
        s.min[f] = parse_double(lo, lineno);
        s.max[f] = parse_double(hi, lineno);
    }
    return s;
}

std::vector<MatrixPair> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest '" + path + "'");
    const auto base = std::filesystem::path(path).parent_path();

    std::vector<MatrixPair> pairs;
    std::unordered_set<std::string> ids;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        std::string id, pa, pb, extra;
        if (!(ls >> id >> pa >> pb))
            throw ParseError("manifest line needs 'pair_id path_a path_b'", lineno);
        if (ls >> extra) throw ParseError("unexpected token '" + extra + "'", lineno);
        if (id.find(',') != std::string::npos)
            throw ParseError("pair id may not contain a comma", lineno);
        if (!ids.insert(id).second) throw ParseError("duplicate pair id '" + id + "'", lineno);

        auto resolve = [&](const std::string& p) {
            std::filesystem::path fp(p);
            return fp.is_absolute() ? fp.string() : (base / fp).string();
        };
        SparseMatrix a = read_matrix_market_file(resolve(pa));
        SparseMatrix b = read_matrix_market_file(resolve(pb));
        auto [ta, tb] = trim_to_fit(a, b);
        pairs.push_back({id, std::move(ta), std::move(tb)});
    }
    return pairs;
}

}  // namespace dfsel
