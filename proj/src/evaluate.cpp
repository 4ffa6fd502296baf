#include "dfsel/evaluate.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unordered_map>

#include "dfsel/heuristic.hpp"

namespace dfsel {

Selector fixed_selector(Dataflow d) {
    return [d](const DatasetRow&) { return d; };
}

Selector oracle_selector() {
    return [](const DatasetRow& r) { return r.label; };
}

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double ratio(std::uint64_t baseline, std::uint64_t selector) {
    if (selector == 0) return baseline == 0 ? 1.0 : static_cast<double>(baseline);
    return static_cast<double>(baseline) / static_cast<double>(selector);
}

}  // namespace

SelectorMetrics evaluate_selector(const Selector& selector, const Dataset& eval) {
    if (eval.rows.empty()) throw std::invalid_argument("evaluate_selector: empty dataset");
    if (!eval.has_scaler)
        throw std::invalid_argument(
            "evaluate_selector: dataset has no scaler (needed for the rule baseline)");

    struct PairTotals {
        std::uint64_t selector = 0;
        std::array<std::uint64_t, 4> baseline{};  // IP, OP, RW, heuristic
        std::int64_t correct = 0;
        std::int64_t rows = 0;
    };
    std::vector<std::string> order;
    std::unordered_map<std::string, PairTotals> totals;

    for (const auto& r : eval.rows) {
        auto [it, inserted] = totals.try_emplace(r.pair_id);
        if (inserted) order.push_back(r.pair_id);
        PairTotals& t = it->second;

        const Dataflow chosen = selector(r);
        t.selector += r.latency[static_cast<int>(chosen)];
        for (int d = 0; d < 3; ++d) t.baseline[d] += r.latency[d];
        const Dataflow h = heuristic_predict(eval.scaled(r));
        t.baseline[3] += r.latency[static_cast<int>(h)];
        if (chosen == r.label) t.correct++;
        t.rows++;
    }

    SelectorMetrics m;
    std::uint64_t all_selector = 0;
    std::array<std::uint64_t, 4> all_baseline{};
    std::int64_t all_correct = 0;
    for (const auto& id : order) {
        const PairTotals& t = totals[id];
        PairSpeedups p;
        p.pair_id = id;
        p.selector_cycles = t.selector;
        p.accuracy = t.rows > 0 ? static_cast<double>(t.correct) / static_cast<double>(t.rows) : 0;
        for (int b = 0; b < 4; ++b) {
            p.speedup[b] = ratio(t.baseline[b], t.selector);
            m.mean_pair_speedup[b] += p.speedup[b];
            all_baseline[b] += t.baseline[b];
        }
        all_selector += t.selector;
        all_correct += t.correct;
        m.per_pair.push_back(std::move(p));
    }
    for (int b = 0; b < 4; ++b) {
        m.speedup_vs[b] = ratio(all_baseline[b], all_selector);
        m.mean_pair_speedup[b] /= static_cast<double>(m.per_pair.size());
    }
    m.total_cycles = all_selector;
    m.accuracy = static_cast<double>(all_correct) / static_cast<double>(eval.rows.size());
    return m;
}

void write_report_csv(const SelectorMetrics& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "pair_id,speedup_ip,speedup_op,speedup_rw,speedup_h,accuracy\n";
    for (const auto& p : m.per_pair) {
        out << p.pair_id;
        for (double s : p.speedup) out << "," << fmt_double(s);
        out << "," << fmt_double(p.accuracy) << "\n";
    }
    out << "overall";
    for (double s : m.speedup_vs) out << "," << fmt_double(s);
    out << "," << fmt_double(m.accuracy) << "\n";
    if (!out) throw IoError("write to '" + path + "' failed");
}

std::vector<std::pair<std::string, std::uint64_t>> storage_report(
    const std::vector<std::string>& paths) {
    std::vector<std::pair<std::string, std::uint64_t>> sizes;
    sizes.reserve(paths.size());
    for (const auto& p : paths) {
        std::error_code ec;
        const auto bytes = std::filesystem::file_size(p, ec);
        if (ec) throw IoError("cannot stat '" + p + "': " + ec.message());
        sizes.emplace_back(p, static_cast<std::uint64_t>(bytes));
    }
    return sizes;
}

void write_storage_csv(const std::vector<std::pair<std::string, std::uint64_t>>& sizes,
                       const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "name,bytes\n";
    for (const auto& [name, bytes] : sizes) out << name << "," << bytes << "\n";
    if (!out) throw IoError("write to '" + path + "' failed");
}

void write_sweep_csv(const Dataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "sparsityA,sparsityB,avg_row_lengthA,label,lat_ip,lat_op,lat_rw\n";
    for (const auto& r : d.rows) {
        out << fmt_double(r.features[feature::kSparsityA]) << ","
            << fmt_double(r.features[feature::kSparsityB]) << ","
            << fmt_double(r.features[feature::kAvgRowLengthA]) << ","
            << static_cast<int>(r.label) << "," << r.latency[0] << "," << r.latency[1] << ","
            << r.latency[2] << "\n";
    }
    if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace dfsel
