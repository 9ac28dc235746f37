#pragma once

// Rows of the truncated resolvent Phi = (I - Q_{F_N}/beta)^{-1} and the
// scalar phi_bar = max over columns of the min over the F_K rows, which
// feeds every computable error constant. Only the F_K row slice is ever
// solved for; the factorization is banded whenever the truncation is.

#include <lctrunc/generator.hpp>
#include <lctrunc/linalg.hpp>

#include <algorithm>
#include <thread>
#include <vector>

namespace lctrunc {

/// Result of a phi_bar evaluation. value is 0 (and positive is false) when
/// no column attains a positive minimum, i.e. the resolvent corner has not
/// become positive yet and the caller should raise N.
struct PhiBarResult {
    double value = 0.0;
    bool positive = false;
};

/// max over columns of the min over rows; rows must cover all of F_K.
inline PhiBarResult phi_bar(const Matrix& rows, int K, const LevelLayout& layout) {
    if (rows.rows() != layout.num_states(K))
        throw StructureError("phi_bar: row slice does not cover F_K");
    PhiBarResult res;
    double best = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < rows.cols(); ++j) best = std::max(best, rows.col(j).minCoeff());
    if (best > 0.0) {
        res.value = best;
        res.positive = true;
    }
    return res;
}

/// Shared factorization of I - Q/beta with per-row solves of the
/// transposed system; each solved column is one row of Phi.
class ResolventSolver {
public:
    ResolventSolver(const FiniteQMatrix& q, double beta)
        : q_(&q), beta_(beta), lu_(q, 1.0, -1.0 / beta) {
        if (!(beta > 0)) throw StructureError("resolvent: beta must be > 0");
    }

    int order() const { return q_->order(); }
    double beta() const { return beta_; }

    /// Solve for the Phi rows with the given state indices; column c of the
    /// result is the row rows[c] of Phi, as a vector over F_N.
    Matrix rows(const std::vector<int>& row_ids) const {
        const int n = q_->order();
        Matrix b = Matrix::Zero(n, static_cast<Eigen::Index>(row_ids.size()));
        for (std::size_t c = 0; c < row_ids.size(); ++c) b(row_ids[c], static_cast<int>(c)) = 1.0;
        solve_rows_in_place(b, row_ids);
        return b;
    }

    /// In-place variant: b holds unit columns e_r on entry, Phi rows on exit.
    void solve_rows_in_place(Matrix& b, const std::vector<int>& row_ids) const {
        lu_.solve_in_place(b, /*transpose=*/true);
        // One refinement pass, then a residual gate relative to the scale
        // of A = I - Q/beta and of the solution.
        const double scale = 1.0 + q_->max_abs_entry() / beta_;
        Matrix r(b.rows(), b.cols());
        Vector tmp(b.rows());
        for (int c = 0; c < b.cols(); ++c) {
            Vector x = b.col(c);
            q_->apply_transpose(x, tmp);
            r.col(c) = -(x - tmp / beta_);
            r(row_ids[static_cast<std::size_t>(c)], c) += 1.0;
        }
        lu_.solve_in_place(r, /*transpose=*/true);
        b += r;
        for (int c = 0; c < b.cols(); ++c) {
            Vector x = b.col(c);
            q_->apply_transpose(x, tmp);
            Vector res = -(x - tmp / beta_);
            res(row_ids[static_cast<std::size_t>(c)]) += 1.0;
            const double rel = res.cwiseAbs().maxCoeff() /
                               std::max(1.0, scale * x.cwiseAbs().maxCoeff());
            if (rel > 1e-10)
                throw NumericalError("resolvent row solve residual " + std::to_string(rel));
        }
    }

private:
    const FiniteQMatrix* q_;
    double beta_;
    ShiftedLU lu_;
};

/// Rows of (I - Q/beta)^{-1} for an explicit list of states, as a
/// |row_set| x |F_N| matrix.
inline Matrix resolvent_rows(const FiniteQMatrix& qfin, double beta,
                             const std::vector<int>& row_set) {
    ResolventSolver solver(qfin, beta);
    return solver.rows(row_set).transpose();
}

/// Neumann-series evaluation of the same rows: Phi = (1/(qbar+1)) sum F^m
/// with F = I + (Q/beta - I)/(qbar+1), stopping once the additive term
/// drops below tol in the infinity norm. Kept for cross-validation of the
/// direct path.
inline Matrix resolvent_neumann(const FiniteQMatrix& qfin, double beta, double tol,
                                int max_terms, const std::vector<int>& row_set) {
    if (!(beta > 0)) throw StructureError("resolvent: beta must be > 0");
    if (!(tol > 0)) throw StructureError("resolvent_neumann: tol must be > 0");
    const int n = qfin.order();
    const double qbar = qfin.max_abs_diagonal() / beta;
    const double denom = qbar + 1.0;
    Matrix out(static_cast<Eigen::Index>(row_set.size()), n);
    Vector y(n), tmp(n);
    for (std::size_t ridx = 0; ridx < row_set.size(); ++ridx) {
        y.setZero();
        y(row_set[ridx]) = 1.0;
        Vector acc = y;
        bool converged = false;
        for (int m = 0; m < max_terms; ++m) {
            // y <- F^T y = y + (Q^T y / beta - y) / (qbar + 1)
            qfin.apply_transpose(y, tmp);
            y += (tmp / beta - y) / denom;
            acc += y;
            if (y.cwiseAbs().maxCoeff() / denom <= tol) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw NumericalError(
                "resolvent_neumann: series did not reach tol within max_terms");
        out.row(static_cast<Eigen::Index>(ridx)) = (acc / denom).transpose();
    }
    return out;
}

/// phi_bar at a given truncation plus the statistics needed to use and
/// validate it: the per-column minimum over the F_K rows, the minimum of
/// the F_K x F_K corner (its positivity is the validity condition for N),
/// and the row slice itself when it is small enough to retain.
struct ResolventSummary {
    double beta = 0.0;
    int K = 0;
    int N = 0;
    double phi_bar = 0.0;
    bool positive = false;
    Vector col_min;       // min over F_K rows, one entry per F_N column
    double corner_min = 0.0;
    double max_row_sum = 0.0;
    Matrix rows;          // |F_K| x |F_N| slice; empty when above retain cap

    bool corner_positive() const { return corner_min > 0.0; }
};

struct ResolventOptions {
    int threads = 1;
    Eigen::Index retain_rows_cap = 4'000'000;  // entries of the stored slice
    int chunk = 128;
};

/// Summary over the F_K rows of the resolvent of a northwest truncation at
/// level N (qfin must cover levels 0..N).
inline ResolventSummary resolvent_summary(const FiniteQMatrix& qfin, int K, double beta,
                                          const ResolventOptions& opts = {}) {
    const LevelLayout& lay = qfin.layout();
    const int N = qfin.truncation_level();
    if (K > N) throw StructureError("resolvent_summary: K must be <= N");
    const int n_rows = lay.num_states(K);
    const int n = qfin.order();

    ResolventSummary sum;
    sum.beta = beta;
    sum.K = K;
    sum.N = N;
    sum.col_min = Vector::Constant(n, std::numeric_limits<double>::infinity());
    sum.corner_min = std::numeric_limits<double>::infinity();
    const bool retain = static_cast<Eigen::Index>(n_rows) * n <= opts.retain_rows_cap;
    if (retain) sum.rows.resize(n_rows, n);

    ResolventSolver solver(qfin, beta);

    struct Acc {
        Vector col_min;
        double corner_min = std::numeric_limits<double>::infinity();
        double max_row_sum = -std::numeric_limits<double>::infinity();
    };

    auto run_range = [&](int r_begin, int r_end, Acc& acc) {
        acc.col_min = Vector::Constant(n, std::numeric_limits<double>::infinity());
        std::vector<int> ids;
        for (int r0 = r_begin; r0 < r_end; r0 += opts.chunk) {
            const int cnt = std::min(opts.chunk, r_end - r0);
            ids.resize(cnt);
            for (int c = 0; c < cnt; ++c) ids[c] = r0 + c;
            Matrix b = Matrix::Zero(n, cnt);
            for (int c = 0; c < cnt; ++c) b(ids[c], c) = 1.0;
            solver.solve_rows_in_place(b, ids);
            for (int c = 0; c < cnt; ++c) {
                acc.col_min = acc.col_min.cwiseMin(b.col(c));
                acc.corner_min = std::min(acc.corner_min, b.col(c).head(n_rows).minCoeff());
                acc.max_row_sum = std::max(acc.max_row_sum, b.col(c).sum());
                if (retain) sum.rows.row(r0 + c) = b.col(c).transpose();
            }
        }
    };

    const int threads = std::max(1, opts.threads);
    if (threads == 1 || n_rows < 2 * opts.chunk) {
        Acc acc;
        run_range(0, n_rows, acc);
        sum.col_min = acc.col_min;
        sum.corner_min = acc.corner_min;
        sum.max_row_sum = acc.max_row_sum;
    } else {
        std::vector<Acc> accs(threads);
        std::vector<std::thread> pool;
        const int per = (n_rows + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int lo = t * per, hi = std::min(n_rows, lo + per);
            if (lo >= hi) break;
            pool.emplace_back([&, lo, hi, t] { run_range(lo, hi, accs[t]); });
        }
        for (auto& th : pool) th.join();
        for (const Acc& acc : accs) {
            if (acc.col_min.size() == 0) continue;
            sum.col_min = sum.col_min.cwiseMin(acc.col_min);
            sum.corner_min = std::min(sum.corner_min, acc.corner_min);
            sum.max_row_sum = std::max(sum.max_row_sum, acc.max_row_sum);
        }
    }

    const double best = sum.col_min.maxCoeff();
    if (best > 0.0) {
        sum.phi_bar = best;
        sum.positive = true;
    }
    return sum;
}

/// Smallest N in [N0, N_max] whose F_K x F_K resolvent corner is entrywise
/// positive; returns the summary at that N.
inline ResolventSummary find_valid_N(const BlockGenerator& q, int K, double beta, int N0,
                                     int N_max, const ResolventOptions& opts = {}) {
    if (N0 < std::max(K, 1)) N0 = std::max(K, 1);
    for (int N = N0; N <= N_max; ++N) {
        FiniteQMatrix nw = northwest_truncation(q, N);
        ResolventSummary sum = resolvent_summary(nw, K, beta, opts);
        if (sum.corner_positive()) return sum;
    }
    throw InfeasibleError("find_valid_N: no N <= " + std::to_string(N_max) +
                          " has a positive resolvent corner on F_K");
}

}  // namespace lctrunc
