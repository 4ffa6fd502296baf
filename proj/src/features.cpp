#include "dfsel/features.hpp"

#include <algorithm>
#include <unordered_map>

namespace dfsel {

namespace feature {

const std::array<std::string, kCount>& names() {
    static const std::array<std::string, kCount> kNames = {
        "sparsityA",          "sparsityB",          "avg_row_lengthA",
        "avg_row_lengthB",    "avg_col_lengthA",    "avg_col_lengthB",
        "avg_row_lengthA_var", "avg_row_lengthB_var", "avg_col_lengthA_var",
        "avg_col_lengthB_var", "blocks_accessed",    "size"};
    return kNames;
}

int index_of(const std::string& name) {
    const auto& n = names();
    for (int i = 0; i < kCount; ++i)
        if (n[static_cast<size_t>(i)] == name) return i;
    throw std::invalid_argument("unknown feature '" + name + "'");
}

}  // namespace feature

namespace {

struct SliceStats {
    double mean = 0.0;
    double variance = 0.0;  // population variance
};

// mean/variance of per-row (axis 0) or per-column (axis 1) nonzero counts
SliceStats count_stats(const SparseMatrix& m, int axis) {
    const index_t dim = axis == 0 ? m.rows : m.cols;
    if (dim == 0) return {};
    std::vector<index_t> counts(static_cast<size_t>(dim), 0);
    const bool along_major = (m.layout == Layout::CSR) == (axis == 0);
    if (along_major) {
        for (index_t i = 0; i < dim; ++i) counts[i] = m.slice_nnz(i);
    } else {
        for (index_t idx : m.indices) counts[idx]++;
    }
    SliceStats s;
    for (index_t c : counts) s.mean += static_cast<double>(c);
    s.mean /= static_cast<double>(dim);
    for (index_t c : counts) {
        const double d = static_cast<double>(c) - s.mean;
        s.variance += d * d;
    }
    s.variance /= static_cast<double>(dim);
    return s;
}

}  // namespace

double blocks_accessed(const SparseMatrix& a_csr, const SimConfig& cfg) {
    cfg.validate();
    const SparseMatrix& a = a_csr.layout == Layout::CSR ? a_csr : convert(a_csr, Layout::CSR);
    if (a.nnz() == 0) return 0.0;

    std::unordered_map<index_t, std::uint64_t> stamp;
    std::uint64_t clock = 0;
    std::uint64_t misses = 0;
    for (index_t idx : a.indices) {
        const index_t block = idx / cfg.mem_block_rows;
        auto it = stamp.find(block);
        if (it != stamp.end()) {
            it->second = ++clock;
            continue;
        }
        ++misses;
        if (static_cast<int>(stamp.size()) >= cfg.resident_blocks) {
            auto victim = stamp.begin();
            for (auto jt = stamp.begin(); jt != stamp.end(); ++jt)
                if (jt->second < victim->second) victim = jt;
            stamp.erase(victim);
        }
        stamp[block] = ++clock;
    }
    return static_cast<double>(misses) / static_cast<double>(a.nnz());
}

FeatureVector extract_features(const SparseMatrix& a, const SparseMatrix& b,
                               const SimConfig& cfg) {
    if (a.cols != b.rows)
        throw DimensionError("extract_features: a.cols (" + std::to_string(a.cols) +
                             ") != b.rows (" + std::to_string(b.rows) + ")");

    FeatureVector f;
    const double cells_a = static_cast<double>(a.rows) * static_cast<double>(a.cols);
    const double cells_b = static_cast<double>(b.rows) * static_cast<double>(b.cols);
    f[feature::kSparsityA] = cells_a > 0 ? static_cast<double>(a.nnz()) / cells_a : 0.0;
    f[feature::kSparsityB] = cells_b > 0 ? static_cast<double>(b.nnz()) / cells_b : 0.0;

    const SliceStats row_a = count_stats(a, 0);
    const SliceStats row_b = count_stats(b, 0);
    const SliceStats col_a = count_stats(a, 1);
    const SliceStats col_b = count_stats(b, 1);
    f[feature::kAvgRowLengthA] = row_a.mean;
    f[feature::kAvgRowLengthB] = row_b.mean;
    f[feature::kAvgColLengthA] = col_a.mean;
    f[feature::kAvgColLengthB] = col_b.mean;
    f[feature::kAvgRowLengthVarA] = row_a.variance;
    f[feature::kAvgRowLengthVarB] = row_b.variance;
    f[feature::kAvgColLengthVarA] = col_a.variance;
    f[feature::kAvgColLengthVarB] = col_b.variance;

    f[feature::kBlocksAccessed] = blocks_accessed(convert(a, Layout::CSR), cfg);
    f[feature::kSize] = cells_a;
    return f;
}

double Scaler::transform(int f, double x) const {
    const double lo = min[static_cast<size_t>(f)];
    const double hi = max[static_cast<size_t>(f)];
    if (hi <= lo) return 0.0;
    return std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
}

FeatureVector Scaler::apply(const FeatureVector& raw) const {
    FeatureVector out;
    for (int i = 0; i < feature::kCount; ++i) out[i] = transform(i, raw[i]);
    return out;
}

Scaler fit_scaler(std::span<const FeatureVector> rows) {
    if (rows.empty()) throw std::invalid_argument("fit_scaler: empty feature set");
    Scaler s;
    for (int i = 0; i < feature::kCount; ++i) {
        s.min[static_cast<size_t>(i)] = rows[0][i];
        s.max[static_cast<size_t>(i)] = rows[0][i];
    }
    for (const FeatureVector& f : rows) {
        for (int i = 0; i < feature::kCount; ++i) {
            s.min[static_cast<size_t>(i)] = std::min(s.min[static_cast<size_t>(i)], f[i]);
            s.max[static_cast<size_t>(i)] = std::max(s.max[static_cast<size_t>(i)], f[i]);
        }
    }
    return s;
}

}  // namespace dfsel
