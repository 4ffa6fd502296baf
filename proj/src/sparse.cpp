#include "dfsel/sparse.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

namespace dfsel {

Dataflow dataflow_from_code(int code) {
    if (code < 0 || code > 2) throw std::invalid_argument("dataflow code must be 0, 1 or 2");
    return static_cast<Dataflow>(code);
}

Dataflow dataflow_from_name(const std::string& name) {
    if (name == "ip") return Dataflow::IP;
    if (name == "op") return Dataflow::OP;
    if (name == "rw") return Dataflow::RW;
    throw std::invalid_argument("unknown dataflow '" + name + "' (expected ip, op or rw)");
}

void SparseMatrix::validate() const {
    const index_t major = major_dim();
    const index_t minor = minor_dim();
    if (rows < 0 || cols < 0) throw std::invalid_argument("negative dimensions");
    if (static_cast<index_t>(offsets.size()) != major + 1)
        throw std::invalid_argument("offsets length must be major_dim + 1");
    if (offsets.front() != 0) throw std::invalid_argument("offsets[0] must be 0");
    if (offsets.back() != nnz()) throw std::invalid_argument("last offset must equal nnz");
    if (indices.size() != values.size())
        throw std::invalid_argument("indices/values length mismatch");
    for (index_t i = 0; i < major; ++i) {
        if (offsets[i] > offsets[i + 1]) throw std::invalid_argument("offsets must be non-decreasing");
        for (index_t p = offsets[i]; p < offsets[i + 1]; ++p) {
            if (indices[p] < 0 || indices[p] >= minor)
                throw std::invalid_argument("index out of range");
            if (p > offsets[i] && indices[p] <= indices[p - 1])
                throw std::invalid_argument("indices must be strictly increasing within a slice");
        }
    }
}

SparseMatrix from_triplets(index_t rows, index_t cols, std::vector<Triplet> triplets,
                           Layout layout) {
    const bool csr = layout == Layout::CSR;
    for (auto& [i, j, v] : triplets) {
        if (i < 0 || i >= rows || j < 0 || j >= cols)
            throw std::invalid_argument("triplet coordinate out of range");
    }
    std::sort(triplets.begin(), triplets.end(), [csr](const Triplet& a, const Triplet& b) {
        index_t ma = csr ? std::get<0>(a) : std::get<1>(a);
        index_t mb = csr ? std::get<0>(b) : std::get<1>(b);
        index_t na = csr ? std::get<1>(a) : std::get<0>(a);
        index_t nb = csr ? std::get<1>(b) : std::get<0>(b);
        return std::tie(ma, na) < std::tie(mb, nb);
    });

    SparseMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.layout = layout;
    const index_t major = m.major_dim();
    m.offsets.assign(major + 1, 0);
    m.indices.reserve(triplets.size());
    m.values.reserve(triplets.size());

    size_t p = 0;
    while (p < triplets.size()) {
        index_t mi = csr ? std::get<0>(triplets[p]) : std::get<1>(triplets[p]);
        index_t ni = csr ? std::get<1>(triplets[p]) : std::get<0>(triplets[p]);
        double sum = std::get<2>(triplets[p]);
        ++p;
        while (p < triplets.size()) {
            index_t mj = csr ? std::get<0>(triplets[p]) : std::get<1>(triplets[p]);
            index_t nj = csr ? std::get<1>(triplets[p]) : std::get<0>(triplets[p]);
            if (mj != mi || nj != ni) break;
            sum += std::get<2>(triplets[p]);
            ++p;
        }
        if (sum == 0.0) continue;
        m.indices.push_back(ni);
        m.values.push_back(sum);
        m.offsets[mi + 1]++;
    }
    std::partial_sum(m.offsets.begin(), m.offsets.end(), m.offsets.begin());
    return m;
}

std::vector<Triplet> to_triplets(const SparseMatrix& m) {
    std::vector<Triplet> t;
    t.reserve(m.nnz());
    const bool csr = m.layout == Layout::CSR;
    for (index_t i = 0; i < m.major_dim(); ++i) {
        for (index_t p = m.offsets[i]; p < m.offsets[i + 1]; ++p) {
            if (csr)
                t.emplace_back(i, m.indices[p], m.values[p]);
            else
                t.emplace_back(m.indices[p], i, m.values[p]);
        }
    }
    return t;
}

bool same_entries(const SparseMatrix& a, const SparseMatrix& b, double tol) {
    if (a.rows != b.rows || a.cols != b.cols || a.nnz() != b.nnz()) return false;
    auto ta = to_triplets(a);
    auto tb = to_triplets(b);
    auto key = [](const Triplet& t) { return std::make_pair(std::get<0>(t), std::get<1>(t)); };
    auto cmp = [&](const Triplet& x, const Triplet& y) { return key(x) < key(y); };
    std::sort(ta.begin(), ta.end(), cmp);
    std::sort(tb.begin(), tb.end(), cmp);
    for (size_t p = 0; p < ta.size(); ++p) {
        if (key(ta[p]) != key(tb[p])) return false;
        if (std::abs(std::get<2>(ta[p]) - std::get<2>(tb[p])) > tol) return false;
    }
    return true;
}

SparseMatrix convert(const SparseMatrix& m, Layout target) {
    if (m.layout == target) return m;
    // counting sort over the minor dimension
    SparseMatrix out;
    out.rows = m.rows;
    out.cols = m.cols;
    out.layout = target;
    const index_t out_major = out.major_dim();
    out.offsets.assign(out_major + 1, 0);
    out.indices.resize(m.nnz());
    out.values.resize(m.nnz());
    for (index_t idx : m.indices) out.offsets[idx + 1]++;
    std::partial_sum(out.offsets.begin(), out.offsets.end(), out.offsets.begin());
    std::vector<index_t> cursor(out.offsets.begin(), out.offsets.end() - 1);
    for (index_t i = 0; i < m.major_dim(); ++i) {
        for (index_t p = m.offsets[i]; p < m.offsets[i + 1]; ++p) {
            index_t dst = cursor[m.indices[p]]++;
            out.indices[dst] = i;
            out.values[dst] = m.values[p];
        }
    }
    return out;
}

SparseMatrix identity(index_t n, Layout layout) {
    SparseMatrix m;
    m.rows = m.cols = n;
    m.layout = layout;
    m.offsets.resize(n + 1);
    m.indices.resize(n);
    m.values.assign(n, 1.0);
    std::iota(m.offsets.begin(), m.offsets.end(), 0);
    std::iota(m.indices.begin(), m.indices.end(), 0);
    return m;
}

namespace {

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

SparseMatrix parse_matrix_market(std::istream& in) {
    std::string line;
    long lineno = 0;

    if (!std::getline(in, line)) throw ParseError("empty input", 1);
    ++lineno;
    std::istringstream header(line);
    std::string banner, object, format, field, symmetry;
    header >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket") throw ParseError("missing %%MatrixMarket banner", lineno);
    if (lower(object) != "matrix") throw ParseError("unsupported object '" + object + "'", lineno);
    if (lower(format) != "coordinate")
        throw ParseError("unsupported format '" + format + "' (only coordinate)", lineno);
    field = lower(field);
    symmetry = lower(symmetry);
    const bool pattern = field == "pattern";
    if (field != "real" && field != "integer" && !pattern)
        throw ParseError("unsupported field '" + field + "'", lineno);
    const bool symmetric = symmetry == "symmetric";
    if (symmetry != "general" && !symmetric)
        throw ParseError("unsupported symmetry '" + symmetry + "'", lineno);

    // size line, skipping comments and blanks
    index_t rows = 0, cols = 0;
    long declared = 0;
    for (;;) {
        if (!std::getline(in, line)) throw ParseError("missing size line", lineno + 1);
        ++lineno;
        if (line.empty() || line[0] == '%') continue;
        std::istringstream sz(line);
        if (!(sz >> rows >> cols >> declared)) throw ParseError("malformed size line", lineno);
        break;
    }
    if (rows < 0 || cols < 0 || declared < 0) throw ParseError("negative size", lineno);

    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<size_t>(declared) * (symmetric ? 2 : 1));
    long seen = 0;
    while (seen < declared) {
        if (!std::getline(in, line))
            throw ParseError("entry list truncated: expected " + std::to_string(declared) +
                                 " entries, got " + std::to_string(seen),
                             lineno + 1);
        ++lineno;
        if (line.empty() || line[0] == '%') continue;
        std::istringstream entry(line);
        index_t i = 0, j = 0;
        double v = 1.0;
        if (!(entry >> i >> j)) throw ParseError("malformed entry", lineno);
        if (!pattern && !(entry >> v)) throw ParseError("entry missing value", lineno);
        if (i < 1 || i > rows || j < 1 || j > cols)
            throw ParseError("coordinate (" + std::to_string(i) + "," + std::to_string(j) +
                                 ") out of range",
                             lineno);
        triplets.emplace_back(i - 1, j - 1, v);
        if (symmetric && i != j) triplets.emplace_back(j - 1, i - 1, v);
        ++seen;
    }
    return from_triplets(rows, cols, std::move(triplets));
}

SparseMatrix parse_matrix_market(const std::string& text) {
    std::istringstream in(text);
    return parse_matrix_market(in);
}

SparseMatrix read_matrix_market_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    try {
        return parse_matrix_market(in);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void write_matrix_market(const SparseMatrix& m, std::ostream& out) {
    const SparseMatrix& csr = m.layout == Layout::CSR ? m : convert(m, Layout::CSR);
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << m.rows << " " << m.cols << " " << csr.nnz() << "\n";
    char buf[64];
    for (index_t i = 0; i < csr.rows; ++i) {
        for (index_t p = csr.offsets[i]; p < csr.offsets[i + 1]; ++p) {
            std::snprintf(buf, sizeof(buf), "%.17g", csr.values[p]);
            out << (i + 1) << " " << (csr.indices[p] + 1) << " " << buf << "\n";
        }
    }
}

void write_matrix_market_file(const SparseMatrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    write_matrix_market(m, out);
    if (!out) throw IoError("write to '" + path + "' failed");
}

Pattern pattern_from_name(const std::string& name) {
    if (name == "uniform") return Pattern::Uniform;
    if (name == "banded") return Pattern::Banded;
    if (name == "clustered") return Pattern::Clustered;
    throw std::invalid_argument("unknown pattern '" + name + "'");
}

const char* pattern_name(Pattern p) {
    switch (p) {
        case Pattern::Uniform: return "uniform";
        case Pattern::Banded: return "banded";
        case Pattern::Clustered: return "clustered";
    }
    return "?";
}

namespace {

// Draws `target` distinct cells from `cells` (cell k given by unrank(k),
// k < capacity) and returns them sorted row-major.
template <typename Unrank>
std::vector<std::pair<index_t, index_t>> sample_cells(index_t capacity, index_t target,
                                                      std::mt19937_64& rng, Unrank unrank) {
    std::vector<std::pair<index_t, index_t>> picked;
    if (target <= 0) return picked;
    if (target >= capacity) {
        picked.reserve(capacity);
        for (index_t k = 0; k < capacity; ++k) picked.push_back(unrank(k));
    } else if (target * 2 >= capacity) {
        std::vector<index_t> all(capacity);
        std::iota(all.begin(), all.end(), index_t{0});
        std::shuffle(all.begin(), all.end(), rng);
        picked.reserve(target);
        for (index_t t = 0; t < target; ++t) picked.push_back(unrank(all[t]));
    } else {
        std::unordered_set<index_t> chosen;
        chosen.reserve(static_cast<size_t>(target) * 2);
        std::uniform_int_distribution<index_t> dist(0, capacity - 1);
        while (static_cast<index_t>(chosen.size()) < target) chosen.insert(dist(rng));
        picked.reserve(target);
        for (index_t k : chosen) picked.push_back(unrank(k));
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

SparseMatrix matrix_from_cells(index_t rows, index_t cols,
                               const std::vector<std::pair<index_t, index_t>>& cells,
                               std::mt19937_64& rng) {
    // values assigned in row-major cell order so the result depends only on
    // the chosen cell set, not on set iteration order
    std::uniform_real_distribution<double> val(0.0, 1.0);
    std::vector<Triplet> triplets;
    triplets.reserve(cells.size());
    for (auto& [i, j] : cells) triplets.emplace_back(i, j, 1.0 - val(rng));
    return from_triplets(rows, cols, std::move(triplets));
}

}  // namespace

SparseMatrix random_sparse(index_t rows, index_t cols, double density, Pattern pattern,
                           std::uint64_t seed) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("matrix dimensions must be positive");
    if (!(density > 0.0) || density > 1.0)
        throw std::invalid_argument("density must be in (0, 1]");

    std::mt19937_64 rng(seed);
    const index_t total = rows * cols;
    const index_t target = std::llround(density * static_cast<double>(total));

    switch (pattern) {
        case Pattern::Uniform: {
            auto cells = sample_cells(total, target, rng,
                                      [cols](index_t k) { return std::make_pair(k / cols, k % cols); });
            return matrix_from_cells(rows, cols, cells, rng);
        }
        case Pattern::Banded: {
            const index_t hw = std::max<index_t>(1, rows / 16);
            // per-row band extents and prefix capacity
            std::vector<index_t> start(rows), width(rows), prefix(rows + 1, 0);
            for (index_t i = 0; i < rows; ++i) {
                index_t lo = std::max<index_t>(0, i - hw);
                index_t hi = std::min<index_t>(cols - 1, i + hw);
                start[i] = lo;
                width[i] = hi >= lo ? hi - lo + 1 : 0;
                prefix[i + 1] = prefix[i] + width[i];
            }
            const index_t capacity = prefix[rows];
            auto unrank = [&](index_t k) {
                auto it = std::upper_bound(prefix.begin(), prefix.end(), k);
                index_t i = static_cast<index_t>(it - prefix.begin()) - 1;
                return std::make_pair(i, start[i] + (k - prefix[i]));
            };
            auto cells = sample_cells(capacity, std::min(target, capacity), rng, unrank);
            return matrix_from_cells(rows, cols, cells, rng);
        }
        case Pattern::Clustered: {
            constexpr int kClusters = 4;
            struct Rect {
                index_t r0, c0, h, w;
            };
            std::vector<Rect> rects;
            std::vector<index_t> prefix{0};
            for (int c = 0; c < kClusters; ++c) {
                index_t h = std::max<index_t>(1, rows / 8) +
                            static_cast<index_t>(rng() % std::max<index_t>(1, rows / 8));
                index_t w = std::max<index_t>(1, cols / 8) +
                            static_cast<index_t>(rng() % std::max<index_t>(1, cols / 8));
                h = std::min(h, rows);
                w = std::min(w, cols);
                index_t r0 = static_cast<index_t>(rng() % static_cast<std::uint64_t>(rows - h + 1));
                index_t c0 = static_cast<index_t>(rng() % static_cast<std::uint64_t>(cols - w + 1));
                rects.push_back({r0, c0, h, w});
                prefix.push_back(prefix.back() + h * w);
            }
            // rectangles may overlap, so sample by rank into the concatenated
            // area and dedupe on cell coordinates
            const index_t area = prefix.back();
            std::uniform_int_distribution<index_t> dist(0, area - 1);
            std::set<std::pair<index_t, index_t>> chosen;
            const index_t want = std::min(target, area);
            index_t stale = 0;
            while (static_cast<index_t>(chosen.size()) < want && stale < 64 * want + 1024) {
                index_t k = dist(rng);
                auto it = std::upper_bound(prefix.begin(), prefix.end(), k);
                int r = static_cast<int>(it - prefix.begin()) - 1;
                index_t off = k - prefix[r];
                auto cell = std::make_pair(rects[r].r0 + off / rects[r].w,
                                           rects[r].c0 + off % rects[r].w);
                if (chosen.insert(cell).second)
                    stale = 0;
                else
                    ++stale;
            }
            std::vector<std::pair<index_t, index_t>> cells(chosen.begin(), chosen.end());
            return matrix_from_cells(rows, cols, cells, rng);
        }
    }
    throw std::invalid_argument("unreachable pattern");
}

BlockGrid partition_blocks(const SparseMatrix& m, index_t block_rows, index_t block_cols) {
    if (block_rows < 1 || block_cols < 1)
        throw std::invalid_argument("block dimensions must be >= 1");
    const SparseMatrix& csr = m.layout == Layout::CSR ? m : convert(m, Layout::CSR);

    BlockGrid g;
    g.block_rows = block_rows;
    g.block_cols = block_cols;
    g.grid_rows = (m.rows + block_rows - 1) / block_rows;
    g.grid_cols = (m.cols + block_cols - 1) / block_cols;
    if (g.grid_rows == 0) g.grid_rows = 1;
    if (g.grid_cols == 0) g.grid_cols = 1;

    std::vector<std::vector<Triplet>> per_block(g.grid_rows * g.grid_cols);
    for (index_t i = 0; i < csr.rows; ++i) {
        const index_t bi = i / block_rows;
        for (index_t p = csr.offsets[i]; p < csr.offsets[i + 1]; ++p) {
            const index_t j = csr.indices[p];
            const index_t bj = j / block_cols;
            per_block[bi * g.grid_cols + bj].emplace_back(i - bi * block_rows, j - bj * block_cols,
                                                          csr.values[p]);
        }
    }
    g.blocks.reserve(per_block.size());
    for (index_t bi = 0; bi < g.grid_rows; ++bi) {
        const index_t h = std::min(block_rows, m.rows - bi * block_rows);
        for (index_t bj = 0; bj < g.grid_cols; ++bj) {
            const index_t w = std::min(block_cols, m.cols - bj * block_cols);
            g.blocks.push_back(from_triplets(std::max<index_t>(h, 0), std::max<index_t>(w, 0),
                                             std::move(per_block[bi * g.grid_cols + bj])));
        }
    }
    return g;
}

namespace {

// keep entries with major index < major_cut and minor index < minor_cut
SparseMatrix clip(const SparseMatrix& m, index_t new_rows, index_t new_cols) {
    const SparseMatrix& csr = m.layout == Layout::CSR ? m : convert(m, Layout::CSR);
    SparseMatrix out;
    out.rows = new_rows;
    out.cols = new_cols;
    out.layout = Layout::CSR;
    out.offsets.assign(new_rows + 1, 0);
    for (index_t i = 0; i < std::min(csr.rows, new_rows); ++i) {
        for (index_t p = csr.offsets[i]; p < csr.offsets[i + 1]; ++p) {
            if (csr.indices[p] >= new_cols) break;
            out.indices.push_back(csr.indices[p]);
            out.values.push_back(csr.values[p]);
        }
        out.offsets[i + 1] = static_cast<index_t>(out.indices.size());
    }
    for (index_t i = std::min(csr.rows, new_rows); i < new_rows; ++i)
        out.offsets[i + 1] = out.offsets[i];
    return m.layout == Layout::CSR ? out : convert(out, m.layout);
}

}  // namespace

std::pair<SparseMatrix, SparseMatrix> trim_to_fit(const SparseMatrix& a, const SparseMatrix& b) {
    const index_t cut = std::min(a.cols, b.rows);
    SparseMatrix ta = a.cols == cut ? a : clip(a, a.rows, cut);
    SparseMatrix tb = b.rows == cut ? b : clip(b, cut, b.cols);
    return {std::move(ta), std::move(tb)};
}

SparseMatrix dense_multiply_oracle(const SparseMatrix& a, const SparseMatrix& b) {
    if (a.cols != b.rows)
        throw DimensionError("dense_multiply_oracle: a.cols (" + std::to_string(a.cols) +
                             ") != b.rows (" + std::to_string(b.rows) + ")");
    const index_t m = a.rows, n = a.cols, p = b.cols;
    std::vector<double> da(static_cast<size_t>(m) * n, 0.0);
    std::vector<double> db(static_cast<size_t>(n) * p, 0.0);
    for (auto& [i, j, v] : to_triplets(a)) da[static_cast<size_t>(i) * n + j] = v;
    for (auto& [i, j, v] : to_triplets(b)) db[static_cast<size_t>(i) * p + j] = v;

    std::vector<Triplet> out;
    for (index_t i = 0; i < m; ++i) {
        for (index_t j = 0; j < p; ++j) {
            double sum = 0.0;
            for (index_t k = 0; k < n; ++k)
                sum += da[static_cast<size_t>(i) * n + k] * db[static_cast<size_t>(k) * p + j];
            if (std::abs(sum) >= 1e-12) out.emplace_back(i, j, sum);
        }
    }
    return from_triplets(m, p, std::move(out));
}

}  // namespace dfsel
