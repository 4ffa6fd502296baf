#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "dfsel/errors.hpp"

namespace dfsel {

using index_t = std::int64_t;

enum class Layout { CSR, CSC };

// The three SpGEMM dataflow schemes. The integer codes double as the label
// values written to dataset CSVs and rule files.
enum class Dataflow : int { IP = 0, OP = 1, RW = 2 };

inline const char* dataflow_name(Dataflow d) {
    switch (d) {
        case Dataflow::IP: return "ip";
        case Dataflow::OP: return "op";
        case Dataflow::RW: return "rw";
    }
    return "?";
}

Dataflow dataflow_from_code(int code);
Dataflow dataflow_from_name(const std::string& name);

// Compressed sparse matrix. `offsets` has rows+1 entries for CSR (cols+1 for
// CSC), indices within each major slice are strictly increasing.
struct SparseMatrix {
    index_t rows = 0;
    index_t cols = 0;
    Layout layout = Layout::CSR;
    std::vector<index_t> offsets{0};
    std::vector<index_t> indices;
    std::vector<double> values;

    index_t nnz() const { return static_cast<index_t>(indices.size()); }
    bool empty() const { return indices.empty(); }

    index_t major_dim() const { return layout == Layout::CSR ? rows : cols; }
    index_t minor_dim() const { return layout == Layout::CSR ? cols : rows; }

    // nnz of major slice i (row for CSR, column for CSC).
    index_t slice_nnz(index_t i) const { return offsets[i + 1] - offsets[i]; }

    // Throws if the structural invariants are violated.
    void validate() const;
};

using Triplet = std::tuple<index_t, index_t, double>;

// Builds a matrix from (row, col, value) triplets. Duplicates are summed,
// entries that sum to exactly zero are dropped.
SparseMatrix from_triplets(index_t rows, index_t cols, std::vector<Triplet> triplets,
                           Layout layout = Layout::CSR);
std::vector<Triplet> to_triplets(const SparseMatrix& m);

bool same_entries(const SparseMatrix& a, const SparseMatrix& b, double tol = 0.0);

SparseMatrix convert(const SparseMatrix& m, Layout target);

SparseMatrix identity(index_t n, Layout layout = Layout::CSR);

// Matrix Market coordinate format. Real/integer/pattern fields, general or
// symmetric symmetry. Symmetric inputs are expanded to full storage, pattern
// entries get value 1.0, duplicates are summed and explicit zeros dropped.
SparseMatrix parse_matrix_market(std::istream& in);
SparseMatrix parse_matrix_market(const std::string& text);
SparseMatrix read_matrix_market_file(const std::string& path);
void write_matrix_market(const SparseMatrix& m, std::ostream& out);
void write_matrix_market_file(const SparseMatrix& m, const std::string& path);

enum class Pattern { Uniform, Banded, Clustered };

Pattern pattern_from_name(const std::string& name);
const char* pattern_name(Pattern p);

// Deterministic random matrix. `uniform` places round(density*rows*cols)
// entries uniformly; `banded` confines them to |i-j| <= max(1, rows/16);
// `clustered` confines them to 4 seeded random rectangles. Banded/clustered
// counts are capped by the capacity of the allowed region.
SparseMatrix random_sparse(index_t rows, index_t cols, double density, Pattern pattern,
                           std::uint64_t seed);

struct BlockGrid {
    index_t block_rows = 0;  // nominal block height
    index_t block_cols = 0;  // nominal block width
    index_t grid_rows = 0;
    index_t grid_cols = 0;
    std::vector<SparseMatrix> blocks;  // row-major grid

    const SparseMatrix& at(index_t i, index_t j) const { return blocks[i * grid_cols + j]; }
    SparseMatrix& at(index_t i, index_t j) { return blocks[i * grid_cols + j]; }
};

// Splits m into ceil(rows/block_rows) x ceil(cols/block_cols) blocks with
// local coordinates; ragged edge blocks are smaller.
BlockGrid partition_blocks(const SparseMatrix& m, index_t block_rows, index_t block_cols);

// Trims the pair so that a.cols == b.rows == min(a.cols, b.rows), keeping the
// leading index ranges.
std::pair<SparseMatrix, SparseMatrix> trim_to_fit(const SparseMatrix& a, const SparseMatrix& b);

// Exact dense triple-loop product, re-sparsified dropping |v| < 1e-12.
// The correctness reference for all three dataflow simulators.
SparseMatrix dense_multiply_oracle(const SparseMatrix& a, const SparseMatrix& b);

}  // namespace dfsel
