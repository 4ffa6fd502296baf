#include "dfsel/sim.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <vector>

namespace dfsel {

void SimConfig::validate() const {
    if (num_pes < 1) throw std::invalid_argument("num_pes must be >= 1");
    if (mem_block_rows < 1) throw std::invalid_argument("mem_block_rows must be >= 1");
    if (resident_blocks < 1) throw std::invalid_argument("resident_blocks must be >= 1");
}

namespace {

void require_layout(const SparseMatrix& m, Layout want, const char* which, const char* op) {
    if (m.layout != want)
        throw std::invalid_argument(std::string(op) + ": operand " + which + " must be " +
                                    (want == Layout::CSR ? "CSR" : "CSC"));
}

void require_conformant(const SparseMatrix& a, const SparseMatrix& b, const char* op) {
    if (a.cols != b.rows)
        throw DimensionError(std::string(op) + ": a.cols (" + std::to_string(a.cols) +
                             ") != b.rows (" + std::to_string(b.rows) + ")");
}

// Accumulates C(i,j) sums keyed by linear cell index. Dense storage for small
// outputs, hashed otherwise; either way each cell is updated in ascending-k
// order so sums match the dense oracle bit for bit.
class ResultAccumulator {
public:
    ResultAccumulator(index_t rows, index_t cols) : rows_(rows), cols_(cols) {
        if (rows > 0 && cols > 0 && rows * cols <= kDenseCap) {
            dense_.assign(static_cast<size_t>(rows * cols), 0.0);
            touched_.assign(static_cast<size_t>(rows * cols), false);
        }
    }

    void add(index_t i, index_t j, double v) {
        const index_t key = i * cols_ + j;
        if (!dense_.empty()) {
            dense_[key] += v;
            touched_[key] = true;
        } else {
            hashed_[key] += v;
        }
    }

    SparseMatrix finish() {
        std::vector<Triplet> t;
        if (!dense_.empty()) {
            for (index_t key = 0; key < static_cast<index_t>(dense_.size()); ++key)
                if (touched_[key] && std::abs(dense_[key]) >= 1e-12)
                    t.emplace_back(key / cols_, key % cols_, dense_[key]);
        } else {
            t.reserve(hashed_.size());
            for (auto& [key, v] : hashed_)
                if (std::abs(v) >= 1e-12) t.emplace_back(key / cols_, key % cols_, v);
        }
        return from_triplets(rows_, cols_, std::move(t));
    }

private:
    static constexpr index_t kDenseCap = index_t{1} << 22;
    index_t rows_, cols_;
    std::vector<double> dense_;
    std::vector<bool> touched_;
    std::unordered_map<index_t, double> hashed_;
};

double utilization(std::uint64_t work, std::uint64_t latency, int pes) {
    if (latency == 0) return 1.0;
    return static_cast<double>(work) /
           (static_cast<double>(pes) * static_cast<double>(latency));
}

// LRU set of memory-block ids. insert() returns true when the fetch evicted a
// resident block (the charged-miss case); filling a free slot is not charged.
class LruWindow {
public:
    explicit LruWindow(int capacity) : capacity_(capacity) {}

    bool resident(index_t block) const { return stamp_.count(block) > 0; }

    void touch(index_t block) { stamp_[block] = ++clock_; }

    bool insert(index_t block) {
        bool evicted = false;
        if (static_cast<int>(stamp_.size()) >= capacity_) {
            auto victim = stamp_.begin();
            for (auto it = stamp_.begin(); it != stamp_.end(); ++it)
                if (it->second < victim->second) victim = it;
            stamp_.erase(victim);
            evicted = true;
        }
        stamp_[block] = ++clock_;
        return evicted;
    }

private:
    int capacity_;
    std::uint64_t clock_ = 0;
    std::unordered_map<index_t, std::uint64_t> stamp_;
};

}  // namespace

SimResult simulate_inner(const SparseMatrix& a_csr, const SparseMatrix& b_csc,
                         const SimConfig& cfg) {
    cfg.validate();
    require_layout(a_csr, Layout::CSR, "a", "simulate_inner");
    require_layout(b_csc, Layout::CSC, "b", "simulate_inner");
    require_conformant(a_csr, b_csc, "simulate_inner");

    SimResult r;
    r.dataflow = Dataflow::IP;
    ResultAccumulator acc(a_csr.rows, b_csc.cols);
    std::vector<std::uint64_t> pe_load(cfg.num_pes, 0);
    std::uint64_t task_counter = 0;

    for (index_t i = 0; i < a_csr.rows; ++i) {
        const index_t a_begin = a_csr.offsets[i], a_end = a_csr.offsets[i + 1];
        if (a_begin == a_end) continue;
        for (index_t j = 0; j < b_csc.cols; ++j) {
            const index_t b_begin = b_csc.offsets[j], b_end = b_csc.offsets[j + 1];
            if (b_begin == b_end) continue;

            const std::uint64_t cost =
                static_cast<std::uint64_t>(a_end - a_begin) + static_cast<std::uint64_t>(b_end - b_begin);
            pe_load[task_counter % cfg.num_pes] += cost;
            ++task_counter;

            // sorted-list intersection over the shared dimension
            index_t pa = a_begin, pb = b_begin;
            while (pa < a_end && pb < b_end) {
                const index_t ka = a_csr.indices[pa], kb = b_csc.indices[pb];
                if (ka == kb) {
                    acc.add(i, j, a_csr.values[pa] * b_csc.values[pb]);
                    ++pa;
                    ++pb;
                } else if (ka < kb) {
                    ++pa;
                } else {
                    ++pb;
                }
            }
        }
    }

    r.latency_cycles = pe_load.empty() ? 0 : *std::max_element(pe_load.begin(), pe_load.end());
    for (std::uint64_t w : pe_load) r.total_work_cycles += w;
    r.pe_utilization = utilization(r.total_work_cycles, r.latency_cycles, cfg.num_pes);
    r.result = acc.finish();
    return r;
}

SimResult simulate_outer(const SparseMatrix& a_csc, const SparseMatrix& b_csr,
                         const SimConfig& cfg) {
    cfg.validate();
    require_layout(a_csc, Layout::CSC, "a", "simulate_outer");
    require_layout(b_csr, Layout::CSR, "b", "simulate_outer");
    require_conformant(a_csc, b_csr, "simulate_outer");

    SimResult r;
    r.dataflow = Dataflow::OP;
    ResultAccumulator acc(a_csc.rows, b_csr.cols);
    std::vector<std::uint64_t> multiply_load(cfg.num_pes, 0);
    std::vector<std::uint64_t> merge_cost(static_cast<size_t>(std::max<index_t>(a_csc.rows, 1)), 0);
    std::uint64_t partials = 0;

    for (index_t k = 0; k < a_csc.cols; ++k) {
        const std::uint64_t ca = static_cast<std::uint64_t>(a_csc.slice_nnz(k));
        const std::uint64_t rb = static_cast<std::uint64_t>(b_csr.slice_nnz(k));
        const std::uint64_t cost = ca * rb;
        multiply_load[k % cfg.num_pes] += cost;
        partials += cost;
        if (cost == 0) continue;
        for (index_t pa = a_csc.offsets[k]; pa < a_csc.offsets[k + 1]; ++pa) {
            const index_t i = a_csc.indices[pa];
            merge_cost[i] += rb;
            for (index_t pb = b_csr.offsets[k]; pb < b_csr.offsets[k + 1]; ++pb)
                acc.add(i, b_csr.indices[pb], a_csc.values[pa] * b_csr.values[pb]);
        }
    }

    std::vector<std::uint64_t> merge_load(cfg.num_pes, 0);
    for (index_t i = 0; i < a_csc.rows; ++i) merge_load[i % cfg.num_pes] += merge_cost[i];

    const std::uint64_t mul_lat = *std::max_element(multiply_load.begin(), multiply_load.end());
    const std::uint64_t mrg_lat = *std::max_element(merge_load.begin(), merge_load.end());
    r.latency_cycles = mul_lat + mrg_lat;
    r.total_work_cycles = 2 * partials;
    r.pe_utilization = utilization(r.total_work_cycles, r.latency_cycles, cfg.num_pes);
    r.result = acc.finish();
    return r;
}

SimResult simulate_rowwise(const SparseMatrix& a_csr, const SparseMatrix& b_csr,
                           const SimConfig& cfg) {
    cfg.validate();
    require_layout(a_csr, Layout::CSR, "a", "simulate_rowwise");
    require_layout(b_csr, Layout::CSR, "b", "simulate_rowwise");
    require_conformant(a_csr, b_csr, "simulate_rowwise");

    SimResult r;
    r.dataflow = Dataflow::RW;
    ResultAccumulator acc(a_csr.rows, b_csr.cols);
    std::vector<std::uint64_t> pe_load(cfg.num_pes, 0);
    LruWindow window(cfg.resident_blocks);

    for (index_t i = 0; i < a_csr.rows; ++i) {
        std::uint64_t base = 0;
        std::uint64_t penalty = 0;
        for (index_t pa = a_csr.offsets[i]; pa < a_csr.offsets[i + 1]; ++pa) {
            const index_t k = a_csr.indices[pa];
            const double av = a_csr.values[pa];
            base += 2 * static_cast<std::uint64_t>(b_csr.slice_nnz(k));

            const index_t block = k / cfg.mem_block_rows;
            if (window.resident(block)) {
                window.touch(block);
            } else if (window.insert(block)) {
                penalty += cfg.miss_penalty_cycles;
            }

            for (index_t pb = b_csr.offsets[k]; pb < b_csr.offsets[k + 1]; ++pb)
                acc.add(i, b_csr.indices[pb], av * b_csr.values[pb]);
        }
        pe_load[i % cfg.num_pes] += base + penalty;
        r.total_work_cycles += base;
    }

    r.latency_cycles = *std::max_element(pe_load.begin(), pe_load.end());
    r.pe_utilization = utilization(r.total_work_cycles, r.latency_cycles, cfg.num_pes);
    r.result = acc.finish();
    return r;
}

std::array<SimResult, 3> simulate_all(const SparseMatrix& a, const SparseMatrix& b,
                                      const SimConfig& cfg) {
    require_conformant(a, b, "simulate_all");
    const SparseMatrix a_csr = convert(a, Layout::CSR);
    const SparseMatrix a_csc = convert(a, Layout::CSC);
    const SparseMatrix b_csr = convert(b, Layout::CSR);
    const SparseMatrix b_csc = convert(b, Layout::CSC);
    return {simulate_inner(a_csr, b_csc, cfg), simulate_outer(a_csc, b_csr, cfg),
            simulate_rowwise(a_csr, b_csr, cfg)};
}

}  // namespace dfsel
