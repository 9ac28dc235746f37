#pragma once

// Block-structured conservative q-matrices given by lazy block callbacks,
// their finite northwest-corner truncations, and the last-column-block
// augmentation that folds all mass beyond the truncation level into the
// last block column.

#include <lctrunc/types.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace lctrunc {

/// Lazily evaluated block-structured generator. block(k, l) returns the
/// level-(k,l) block; blocks outside the declared bandwidths are zero and
/// the callback is never invoked for them. Callbacks must be pure; a
/// BlockGenerator is immutable and safe to share across threads.
class BlockGenerator {
public:
    using BlockFn = std::function<Matrix(int, int)>;

    BlockGenerator(LevelLayout layout, BlockFn block,
                   std::optional<int> lower_bandwidth, int upper_bandwidth)
        : layout_(layout),
          block_(std::move(block)),
          lower_bw_(lower_bandwidth),
          upper_bw_(upper_bandwidth) {
        if (upper_bw_ < 0)
            throw StructureError("BlockGenerator: upper bandwidth must be finite and >= 0");
        if (lower_bw_ && *lower_bw_ < 0)
            throw StructureError("BlockGenerator: lower bandwidth must be >= 0 or unbounded");
    }

    const LevelLayout& layout() const { return layout_; }
    std::optional<int> lower_bandwidth() const { return lower_bw_; }
    int upper_bandwidth() const { return upper_bw_; }

    bool in_band(int k, int l) const {
        if (l > k + upper_bw_) return false;
        if (lower_bw_ && l < k - *lower_bw_) return false;
        return true;
    }

    /// First source level that can reach level k downward.
    int lowest_column(int k) const {
        return lower_bw_ ? std::max(0, k - *lower_bw_) : 0;
    }

    Matrix block(int k, int l) const {
        const int rows = layout_.level_size(k);
        const int cols = layout_.level_size(l);
        if (!in_band(k, l)) return Matrix::Zero(rows, cols);
        Matrix b = block_(k, l);
        if (b.rows() != rows || b.cols() != cols)
            throw StructureError("block(" + std::to_string(k) + ";" + std::to_string(l) +
                                 ") has shape " + std::to_string(b.rows()) + "x" +
                                 std::to_string(b.cols()) + ", expected " +
                                 std::to_string(rows) + "x" + std::to_string(cols));
        return b;
    }

    /// Row sums of the block row of level k over the whole (infinite) state
    /// space; exact because the upper bandwidth is finite.
    Vector block_row_sum(int k) const {
        Vector s = Vector::Zero(layout_.level_size(k));
        for (int l = lowest_column(k); l <= k + upper_bw_; ++l)
            s += block(k, l).rowwise().sum();
        return s;
    }

private:
    LevelLayout layout_;
    BlockFn block_;
    std::optional<int> lower_bw_;
    int upper_bw_;
};

/// Sum of the blocks Q(k; m) over m in (n, k + upper_bandwidth], m != k.
/// This is the mass folded into block column n by the last-column-block
/// augmentation.
inline Matrix tail_block_sum(const BlockGenerator& q, int k, int n) {
    const LevelLayout& lay = q.layout();
    Matrix sum = Matrix::Zero(lay.level_size(k), lay.level_size(std::max(n, 1)));
    for (int m = n + 1; m <= k + q.upper_bandwidth(); ++m) {
        if (m == k) continue;
        sum += q.block(k, m);
    }
    return sum;
}

/// Finite q-matrix over the levels 0..n. Stored banded (LAPACK-style band
/// layout, kl/ku scalar bandwidths) when the block bandwidth is at most 2,
/// dense otherwise.
class FiniteQMatrix {
public:
    FiniteQMatrix() = default;

    static FiniteQMatrix from_dense(LevelLayout layout, int n, Matrix entries,
                                    bool conservative) {
        FiniteQMatrix m;
        m.n_ = n;
        m.layout_ = layout;
        m.conservative_ = conservative;
        m.banded_ = false;
        if (entries.rows() != layout.num_states(n) || entries.cols() != entries.rows())
            throw StructureError("FiniteQMatrix: entry matrix does not match layout");
        m.dense_ = std::move(entries);
        return m;
    }

    static FiniteQMatrix banded(LevelLayout layout, int n, int kl, int ku,
                                bool conservative) {
        FiniteQMatrix m;
        m.n_ = n;
        m.layout_ = layout;
        m.conservative_ = conservative;
        m.banded_ = true;
        m.kl_ = kl;
        m.ku_ = ku;
        m.band_ = Matrix::Zero(kl + ku + 1, layout.num_states(n));
        return m;
    }

    int truncation_level() const { return n_; }
    const LevelLayout& layout() const { return layout_; }
    bool conservative() const { return conservative_; }
    bool is_banded() const { return banded_; }
    int order() const { return layout_.num_states(n_); }
    int kl() const { return kl_; }
    int ku() const { return ku_; }

    double entry(int i, int j) const {
        if (!banded_) return dense_(i, j);
        const int d = i - j;
        if (d > kl_ || -d > ku_) return 0.0;
        return band_(ku_ + d, j);
    }

    void add_entry(int i, int j, double v) {
        if (!banded_) {
            dense_(i, j) += v;
            return;
        }
        const int d = i - j;
        if (d > kl_ || -d > ku_) {
            if (v != 0.0) throw StructureError("FiniteQMatrix: write outside band");
            return;
        }
        band_(ku_ + d, j) += v;
    }

    /// Block (k, l) as a dense matrix.
    Matrix block(int k, int l) const {
        const int r0 = layout_.level_offset(k), nr = layout_.level_size(k);
        const int c0 = layout_.level_offset(l), nc = layout_.level_size(l);
        Matrix b(nr, nc);
        for (int i = 0; i < nr; ++i)
            for (int j = 0; j < nc; ++j) b(i, j) = entry(r0 + i, c0 + j);
        return b;
    }

    Matrix to_dense() const {
        if (!banded_) return dense_;
        Matrix d = Matrix::Zero(order(), order());
        const int m = order();
        for (int j = 0; j < m; ++j)
            for (int i = std::max(0, j - ku_); i <= std::min(m - 1, j + kl_); ++i)
                d(i, j) = band_(ku_ + i - j, j);
        return d;
    }

    Vector row_sums() const {
        const int m = order();
        Vector s = Vector::Zero(m);
        if (!banded_) return dense_.rowwise().sum();
        for (int j = 0; j < m; ++j)
            for (int i = std::max(0, j - ku_); i <= std::min(m - 1, j + kl_); ++i)
                s(i) += band_(ku_ + i - j, j);
        return s;
    }

    /// y = Q^T x.
    void apply_transpose(const Vector& x, Vector& y) const {
        const int m = order();
        if (!banded_) {
            y.noalias() = dense_.transpose() * x;
            return;
        }
        y.setZero(m);
        for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            const int lo = std::max(0, j - ku_), hi = std::min(m - 1, j + kl_);
            for (int i = lo; i <= hi; ++i) acc += band_(ku_ + i - j, j) * x(i);
            y(j) = acc;
        }
    }

    /// y = Q x.
    void apply(const Vector& x, Vector& y) const {
        const int m = order();
        if (!banded_) {
            y.noalias() = dense_ * x;
            return;
        }
        y.setZero(m);
        for (int j = 0; j < m; ++j) {
            const int lo = std::max(0, j - ku_), hi = std::min(m - 1, j + kl_);
            const double xj = x(j);
            for (int i = lo; i <= hi; ++i) y(i) += band_(ku_ + i - j, j) * xj;
        }
    }

    double max_abs_diagonal() const {
        double m = 0.0;
        for (int i = 0; i < order(); ++i) m = std::max(m, std::abs(entry(i, i)));
        return m;
    }

    double max_abs_entry() const {
        if (!banded_) return dense_.cwiseAbs().maxCoeff();
        return band_.cwiseAbs().maxCoeff();
    }

    /// Raw band storage: row ku + i - j, column j holds entry (i, j).
    const Matrix& band_storage() const { return band_; }

private:
    int n_ = 0;
    LevelLayout layout_;
    bool conservative_ = false;
    bool banded_ = false;
    int kl_ = 0, ku_ = 0;
    Matrix dense_;
    Matrix band_;
};

namespace detail {

inline FiniteQMatrix assemble_truncation(const BlockGenerator& q, int n, bool augment) {
    if (n < 1) throw StructureError("truncation level must be >= 1");
    const LevelLayout& lay = q.layout();
    const int block_bw =
        std::max(q.upper_bandwidth(),
                 q.lower_bandwidth() ? *q.lower_bandwidth() : std::numeric_limits<int>::max());

    struct Placed {
        int k, l;
        Matrix block;
    };
    std::vector<Placed> blocks;
    int kl = 0, ku = 0;  // extents of the actual nonzeros
    for (int k = 0; k <= n; ++k) {
        const int r0 = lay.level_offset(k);
        for (int l = std::min(n, q.lowest_column(k)); l <= std::min(n, k + q.upper_bandwidth());
             ++l) {
            Matrix b = q.block(k, l);
            if (augment && l == n) b += tail_block_sum(q, k, n);
            const int c0 = lay.level_offset(l);
            for (int i = 0; i < b.rows(); ++i)
                for (int j = 0; j < b.cols(); ++j)
                    if (b(i, j) != 0.0) {
                        kl = std::max(kl, (r0 + i) - (c0 + j));
                        ku = std::max(ku, (c0 + j) - (r0 + i));
                    }
            blocks.push_back({k, l, std::move(b)});
        }
    }

    FiniteQMatrix out =
        block_bw <= 2
            ? FiniteQMatrix::banded(lay, n, kl, ku, augment)
            : FiniteQMatrix::from_dense(
                  lay, n, Matrix::Zero(lay.num_states(n), lay.num_states(n)), augment);
    for (const Placed& p : blocks) {
        const int r0 = lay.level_offset(p.k), c0 = lay.level_offset(p.l);
        for (int i = 0; i < p.block.rows(); ++i)
            for (int j = 0; j < p.block.cols(); ++j)
                if (p.block(i, j) != 0.0) out.add_entry(r0 + i, c0 + j, p.block(i, j));
    }
    return out;
}

}  // namespace detail

/// Levels 0..n of q copied verbatim; not conservative (outflow to levels
/// above n is cut).
inline FiniteQMatrix northwest_truncation(const BlockGenerator& q, int n) {
    return detail::assemble_truncation(q, n, false);
}

/// Northwest-corner truncation with the tail mass of every row folded into
/// block column n; conservative by construction.
inline FiniteQMatrix lc_block_augment(const BlockGenerator& q, int n) {
    return detail::assemble_truncation(q, n, true);
}

struct ValidationReport {
    struct RowDefect {
        int level;
        int phase;
        double defect;  // |row sum|
    };
    struct NegativeEntry {
        int k, i, l, j;
        double value;
    };

    bool pass = false;
    double tol = 0.0;
    int max_level = 0;
    double max_defect = 0.0;
    int worst_level = 0;
    int worst_phase = 0;
    std::vector<RowDefect> row_defects;       // one per inspected row
    std::vector<NegativeEntry> negatives;     // negative off-diagonal entries
    bool diagonals_finite = true;
};

/// Checks that q is a stable conservative q-matrix on levels 0..max_level:
/// nonnegative off-diagonal entries, finite diagonals, zero row sums within
/// tol. Row sums are exact since the upper bandwidth is finite. Rates are
/// normally exact arithmetic, so a defect beyond the default tolerance
/// indicates a modeling bug rather than roundoff.
inline ValidationReport validate_qmatrix(const BlockGenerator& q, int max_level,
                                         double tol = 1e-10) {
    if (max_level < 1) throw StructureError("validate_qmatrix: max_level must be >= 1");
    if (!(tol > 0)) throw StructureError("validate_qmatrix: tol must be > 0");
    const LevelLayout& lay = q.layout();
    ValidationReport rep;
    rep.tol = tol;
    rep.max_level = max_level;
    for (int k = 0; k <= max_level; ++k) {
        const int sz = lay.level_size(k);
        Vector row_sum = Vector::Zero(sz);
        for (int l = q.lowest_column(k); l <= k + q.upper_bandwidth(); ++l) {
            Matrix b = q.block(k, l);
            row_sum += b.rowwise().sum();
            for (int i = 0; i < b.rows(); ++i) {
                for (int j = 0; j < b.cols(); ++j) {
                    if (k == l && i == j) {
                        if (!std::isfinite(b(i, j))) rep.diagonals_finite = false;
                        continue;
                    }
                    if (b(i, j) < 0.0)
                        rep.negatives.push_back({k, i, l, j, b(i, j)});
                }
            }
        }
        for (int i = 0; i < sz; ++i) {
            const double defect = std::abs(row_sum(i));
            rep.row_defects.push_back({k, i, defect});
            if (defect > rep.max_defect) {
                rep.max_defect = defect;
                rep.worst_level = k;
                rep.worst_phase = i;
            }
        }
    }
    rep.pass = rep.max_defect <= tol && rep.negatives.empty() && rep.diagonals_finite;
    return rep;
}

}  // namespace lctrunc
