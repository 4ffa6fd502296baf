#pragma once

#include <array>
#include <cstdint>

#include "dfsel/sparse.hpp"

namespace dfsel {

// Cost-model knobs for the 4-PE array. mem_block_rows / resident_blocks /
// miss_penalty_cycles drive the row-wise memory window and the
// blocks_accessed feature.
struct SimConfig {
    int num_pes = 4;
    index_t mem_block_rows = 256;  // rows of B per memory block
    int resident_blocks = 4;       // LRU window size, in blocks
    std::uint64_t miss_penalty_cycles = 64;

    void validate() const;
};

struct SimResult {
    Dataflow dataflow = Dataflow::IP;
    std::uint64_t latency_cycles = 0;
    double pe_utilization = 1.0;  // total_work / (num_pes * latency); 1 when idle
    std::uint64_t total_work_cycles = 0;
    SparseMatrix result;
};

// Inner product: one task per output pair (i, j) whose A row and B column are
// both nonempty, costing nnz(row_i(A)) + nnz(col_j(B)) cycles; tasks assigned
// round-robin in row-major order. Requires a in CSR, b in CSC.
SimResult simulate_inner(const SparseMatrix& a_csr, const SparseMatrix& b_csc,
                         const SimConfig& cfg);

// Outer product: per-k multiply tasks of nnz(col_k(A)) * nnz(row_k(B)) cycles
// assigned round-robin by k, then per-output-row merge tasks costing one cycle
// per partial product landing in the row. Requires a in CSC, b in CSR.
SimResult simulate_outer(const SparseMatrix& a_csc, const SparseMatrix& b_csr,
                         const SimConfig& cfg);

// Row-wise (Gustavson): per-output-row tasks of 2 * sum over k in row_i(A) of
// nnz(row_k(B)) cycles, rows assigned round-robin. B's rows stream through an
// LRU window of resident_blocks blocks of mem_block_rows rows; a fetch that
// evicts a resident block serializes miss_penalty_cycles onto the row's task
// (cold fills into free window slots are not charged). Both operands CSR.
SimResult simulate_rowwise(const SparseMatrix& a_csr, const SparseMatrix& b_csr,
                           const SimConfig& cfg);

// Converts the operands to the layouts each dataflow requires and runs all
// three simulators. Results indexed by Dataflow code.
std::array<SimResult, 3> simulate_all(const SparseMatrix& a, const SparseMatrix& b,
                                      const SimConfig& cfg);

}  // namespace dfsel
