#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dfsel/features.hpp"
#include "dfsel/sim.hpp"
#include "dfsel/sparse.hpp"

namespace dfsel {

// One block-pair SpGEMM record: raw features, the three simulated latencies
// and utilizations, and the latency-optimal label.
struct DatasetRow {
    std::string pair_id;
    index_t i = 0;  // A block-row
    index_t j = 0;  // B block-col
    index_t k = 0;  // shared block index
    FeatureVector features;  // raw (unscaled)
    std::array<std::uint64_t, 3> latency{};
    std::array<double, 3> utilization{};
    Dataflow label = Dataflow::IP;
};

struct Dataset {
    std::vector<DatasetRow> rows;
    Scaler scaler;  // fitted on the training portion only (whole set before a split)
    bool has_scaler = false;

    FeatureVector scaled(const DatasetRow& r) const { return scaler.apply(r.features); }
};

struct MatrixPair {
    std::string id;
    SparseMatrix a;
    SparseMatrix b;
};

// argmin latency; ties broken by higher utilization, then lower enum code.
Dataflow label_row(const std::array<std::uint64_t, 3>& latencies,
                   const std::array<double, 3>& utilizations);

// Runs simulate_all over every compatible (i, k) x (k, j) block combination
// of each pair, skipping combinations where either block is empty. A is tiled
// block_dims.first x block_dims.second; B is tiled square on
// block_dims.second so the shared-dimension tilings agree. The scaler is
// fitted on all produced rows. `jobs` > 1 simulates pairs on a worker pool;
// output order is input order regardless.
Dataset build_dataset(const std::vector<MatrixPair>& pairs, const SimConfig& cfg,
                      std::pair<index_t, index_t> block_dims, int jobs = 1);

// Deterministic split grouped by pair_id: all rows of one pair land on the
// same side. The scaler is refitted on the training side and shared with the
// evaluation side.
std::pair<Dataset, Dataset> split_train_eval(const Dataset& d, double train_fraction,
                                             std::uint64_t seed);

// Inverse-frequency class weights: N / (K_present * count_c) for classes
// present in the training rows, 0 for absent classes.
std::array<double, 3> class_weights(const Dataset& d);

// CSV schema: pair_id,i,j,k,<12 feature columns>,lat_ip,lat_op,lat_rw,
// util_ip,util_op,util_rw,label. The scaler travels in a sidecar file
// "<csv path>.scaler" of one "name min max" line per feature.
void save_dataset_csv(const Dataset& d, const std::string& path);
Dataset load_dataset_csv(const std::string& path);

std::string dataset_csv_header();

void save_scaler(const Scaler& s, const std::string& path);
Scaler load_scaler(const std::string& path);

// Manifest: one "pair_id path_a path_b" line per pair ('#' comments allowed);
// relative paths resolve against the manifest directory. Pairs with
// mismatched dimensions are trimmed to fit.
std::vector<MatrixPair> load_manifest(const std::string& path);

}  // namespace dfsel
