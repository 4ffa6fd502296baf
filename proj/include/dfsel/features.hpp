#pragma once

#include <array>
#include <span>
#include <string>

#include "dfsel/sim.hpp"
#include "dfsel/sparse.hpp"

namespace dfsel {

namespace feature {

// Fixed feature order; this is also the CSV column order.
enum Index : int {
    kSparsityA = 0,
    kSparsityB,
    kAvgRowLengthA,
    kAvgRowLengthB,
    kAvgColLengthA,
    kAvgColLengthB,
    kAvgRowLengthVarA,
    kAvgRowLengthVarB,
    kAvgColLengthVarA,
    kAvgColLengthVarB,
    kBlocksAccessed,
    kSize,
    kCount
};

const std::array<std::string, kCount>& names();
int index_of(const std::string& name);

// Most influential features, in importance order; the selected inputs for
// both trained models.
inline constexpr std::array<int, 5> kTopFive = {kBlocksAccessed, kAvgColLengthB,
                                                kAvgRowLengthVarA, kSparsityA, kSparsityB};

}  // namespace feature

struct FeatureVector {
    std::array<double, feature::kCount> v{};

    double& operator[](int i) { return v[static_cast<size_t>(i)]; }
    const double& operator[](int i) const { return v[static_cast<size_t>(i)]; }
};

// Per-pair features: density, average and population-variance of per-row and
// per-column nonzero counts for both operands, the blocks_accessed miss ratio
// of A, and the A block's rows*cols.
FeatureVector extract_features(const SparseMatrix& a, const SparseMatrix& b, const SimConfig& cfg);

// Fraction of A's nonzero accesses (replayed in CSR order) whose B row block
// is absent from an LRU window of cfg.resident_blocks blocks. Cold misses
// count; empty A gives 0.
double blocks_accessed(const SparseMatrix& a_csr, const SimConfig& cfg);

// Per-feature min-max ranges fitted on training rows. transform maps
// [min, max] to [0, 1], clamping out-of-range inputs; a degenerate feature
// (min == max) maps to 0.
struct Scaler {
    std::array<double, feature::kCount> min{};
    std::array<double, feature::kCount> max{};

    double transform(int f, double x) const;
    FeatureVector apply(const FeatureVector& raw) const;
};

Scaler fit_scaler(std::span<const FeatureVector> rows);

}  // namespace dfsel
