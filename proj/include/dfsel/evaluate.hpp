#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dfsel/dataset.hpp"

namespace dfsel {

// A selector sees only a row's (raw) features; the oracle variant may read
// the whole row.
using Selector = std::function<Dataflow(const DatasetRow&)>;

Selector fixed_selector(Dataflow d);
Selector oracle_selector();  // always the labeled argmin

struct PairSpeedups {
    std::string pair_id;
    std::array<double, 4> speedup{};  // vs IP, OP, RW, heuristic
    double accuracy = 0.0;
    std::uint64_t selector_cycles = 0;
};

struct SelectorMetrics {
    double accuracy = 0.0;
    std::array<double, 4> speedup_vs{};        // ratio of total cycles
    std::array<double, 4> mean_pair_speedup{}; // arithmetic mean of per-pair ratios
    std::vector<PairSpeedups> per_pair;
    std::uint64_t total_cycles = 0;
};

// Charges each row the latency of the selected dataflow and compares the
// totals against the three fixed dataflows and the two-feature rule selector
// (which consumes features scaled by the dataset's scaler).
SelectorMetrics evaluate_selector(const Selector& selector, const Dataset& eval);

// report columns: pair_id,speedup_ip,speedup_op,speedup_rw,speedup_h,accuracy
// with a final "overall" row holding the totals-ratio speedups.
void write_report_csv(const SelectorMetrics& m, const std::string& path);

// (name, bytes) for each path; missing files raise IoError.
std::vector<std::pair<std::string, std::uint64_t>> storage_report(
    const std::vector<std::string>& paths);
void write_storage_csv(const std::vector<std::pair<std::string, std::uint64_t>>& sizes,
                       const std::string& path);

// One line per dataset row for external plotting:
// sparsityA,sparsityB,avg_row_lengthA,label,lat_ip,lat_op,lat_rw
void write_sweep_csv(const Dataset& d, const std::string& path);

}  // namespace dfsel
