#pragma once

// Stationary distributions of finite conservative q-matrices: a dense
// direct solve, the backward R-matrix recursion for block-tridiagonal
// truncations, a rank-one specialization for the retrial queue, a guarded
// high-truncation reference solve, and the finite deviation matrix used as
// a desk-scale oracle.

#include <lctrunc/generator.hpp>
#include <lctrunc/linalg.hpp>
#include <lctrunc/models.hpp>

#include <vector>

namespace lctrunc {

/// Level-indexed stationary vector of a truncation at level n. Levels
/// above n carry no mass by construction.
struct TruncatedStationary {
    int n = 0;
    LevelLayout layout;
    Vector flat;  // level-major, length layout.num_states(n)

    Vector level(int k) const {
        if (k > n) return Vector::Zero(layout.level_size(k));
        return flat.segment(layout.level_offset(k), layout.level_size(k));
    }

    double operator()(int k, int i) const {
        if (k > n) return 0.0;
        return flat(layout.state_index(k, i));
    }

    double mass() const { return flat.sum(); }

    /// Probability mass on levels k0..n.
    double mass_above(int k0) const {
        if (k0 > n) return 0.0;
        if (k0 <= 0) return flat.sum();
        const int off = layout.level_offset(k0);
        return flat.tail(flat.size() - off).sum();
    }
};

namespace detail {

inline void clamp_and_normalize(Vector& pi) {
    for (int i = 0; i < pi.size(); ++i)
        if (pi(i) < 0.0 && pi(i) > -1e-12) pi(i) = 0.0;
    const double total = pi.sum();
    if (!(total > 0)) throw NumericalError("stationary vector has nonpositive mass");
    pi /= total;
}

}  // namespace detail

/// Direct solve of pi Q = 0, pi e = 1 with the last column replaced by the
/// normalization. Requires a conservative matrix with a single closed
/// communicating class; a rank defect beyond one raises NumericalError.
inline TruncatedStationary solve_stationary_dense(const FiniteQMatrix& qfin) {
    if (!qfin.conservative())
        throw StructureError("solve_stationary_dense: matrix must be conservative");
    const Matrix q = qfin.to_dense();
    const double qmax = qfin.max_abs_entry();
    Vector pi = detail::stationary_of_generator(q, 1e-8 * qmax);
    detail::clamp_and_normalize(pi);
    const double residual = (pi.transpose() * q).cwiseAbs().maxCoeff();
    if (residual > 1e-10 * std::max(qmax, 1.0))
        throw NumericalError("solve_stationary_dense: residual " + std::to_string(residual));
    return {qfin.truncation_level(), qfin.layout(), std::move(pi)};
}

/// Backward recursion solution of the last-column-block-augmented
/// truncation of a block-tridiagonal generator, with the R matrices kept
/// for inspection.
struct GaverSolution {
    TruncatedStationary pi;
    std::vector<Matrix> r;  // r[l], l = 0..n-1
};

inline GaverSolution solve_stationary_ldqbd_full(const BlockGenerator& q, int n) {
    if (q.upper_bandwidth() != 1 || !q.lower_bandwidth() || *q.lower_bandwidth() != 1)
        throw StructureError("solve_stationary_ldqbd: generator must have bandwidths (1,1)");
    if (n < 1) throw StructureError("solve_stationary_ldqbd: n must be >= 1");
    const LevelLayout& lay = q.layout();

    // X = B * M^{-1} with a singularity guard on the per-level factorization.
    auto right_solve = [](const Matrix& b, const Matrix& m) {
        Eigen::PartialPivLU<Matrix> lu(m.transpose());
        const double floor = 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff());
        if (!(lu.matrixLU().diagonal().cwiseAbs().minCoeff() > floor))
            throw NumericalError("R recursion: singular level matrix (defective truncation)");
        return Matrix(lu.solve(b.transpose()).transpose());
    };

    std::vector<Matrix> r(n);
    // The augmented diagonal block at level n is A_n(0) + A_n(1).
    Matrix m_level = -(q.block(n, n) + q.block(n, n + 1));
    r[n - 1] = right_solve(q.block(n - 1, n), m_level);
    for (int l = n - 2; l >= 0; --l) {
        Matrix m = -q.block(l + 1, l + 1) - r[l + 1] * q.block(l + 2, l + 1);
        r[l] = right_solve(q.block(l, l + 1), m);
    }

    Matrix b0 = q.block(0, 0) + r[0] * q.block(1, 0);
    Vector level0 =
        detail::stationary_of_generator(b0, 1e-12 * std::max(1.0, b0.cwiseAbs().maxCoeff()));

    Vector pi = Vector::Zero(lay.num_states(n));
    pi.segment(0, lay.level_size(0)) = level0;
    Vector w = level0;
    for (int k = 1; k <= n; ++k) {
        w = (w.transpose() * r[k - 1]).transpose();
        pi.segment(lay.level_offset(k), lay.level_size(k)) = w;
    }
    detail::clamp_and_normalize(pi);
    return {{n, lay, std::move(pi)}, std::move(r)};
}

inline TruncatedStationary solve_stationary_ldqbd(const BlockGenerator& q, int n) {
    return solve_stationary_ldqbd_full(q, n).pi;
}

/// Retrial-queue specialization: every R matrix is e_s xi with xi a row
/// vector, so the recursion runs on row vectors.
inline TruncatedStationary solve_stationary_retrial_rank1(const RetrialParams& p, int n) {
    p.check();
    if (n < 1) throw StructureError("solve_stationary_retrial_rank1: n must be >= 1");
    const int s = p.s;
    const LevelLayout lay(s + 1, s + 1);

    auto solve_row = [s](const Vector& rhs, Matrix m) {
        Eigen::PartialPivLU<Matrix> lu(m.transpose());
        const double floor = 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff());
        if (!(lu.matrixLU().diagonal().cwiseAbs().minCoeff() > floor))
            throw NumericalError("xi recursion: singular level matrix");
        return Vector(lu.solve(rhs));
    };

    Vector lambda_row = Vector::Zero(s + 1);
    lambda_row(s) = p.lambda;

    std::vector<Vector> xi(n);
    {
        Matrix m = -detail::retrial_a0(p, n);
        m(s, s) -= p.lambda;  // e_s lambda_row
        xi[n - 1] = solve_row(lambda_row, std::move(m));
    }
    for (int l = n - 2; l >= 0; --l) {
        Vector w = (xi[l + 1].transpose() * detail::retrial_am1(p, l + 2)).transpose();
        Matrix m = -detail::retrial_a0(p, l + 1);
        m.row(s) -= w.transpose();
        xi[l] = solve_row(lambda_row, std::move(m));
    }

    Matrix b0 = detail::retrial_a0(p, 0);
    b0.row(s) += (xi[0].transpose() * detail::retrial_am1(p, 1));
    Vector level0 =
        detail::stationary_of_generator(b0, 1e-12 * std::max(1.0, b0.cwiseAbs().maxCoeff()));

    Vector pi = Vector::Zero(lay.num_states(n));
    pi.segment(0, s + 1) = level0;
    Vector w = level0;
    for (int k = 1; k <= n; ++k) {
        w = w(s) * xi[k - 1];
        pi.segment(lay.level_offset(k), s + 1) = w;
    }
    detail::clamp_and_normalize(pi);
    return {n, lay, std::move(pi)};
}

/// High-truncation surrogate for the stationary distribution of the
/// infinite chain. Fails when the mass on the top 10% of levels exceeds
/// tail_tol, which would invalidate its use as a reference.
inline TruncatedStationary reference_stationary(const BlockGenerator& q, int n_ref,
                                                double tail_tol) {
    if (tail_tol < 0) throw StructureError("reference_stationary: tail_tol must be >= 0");
    TruncatedStationary pi;
    if (q.upper_bandwidth() == 1 && q.lower_bandwidth() && *q.lower_bandwidth() == 1)
        pi = solve_stationary_ldqbd(q, n_ref);
    else
        pi = solve_stationary_dense(lc_block_augment(q, n_ref));
    const int k0 = n_ref - n_ref / 10;
    const double tail = pi.mass_above(k0);
    if (tail > tail_tol)
        throw InfeasibleError("reference_stationary: tail mass " + std::to_string(tail) +
                              " above level " + std::to_string(k0) + " exceeds tolerance");
    return pi;
}

/// Deviation matrix of a finite ergodic chain, solving -Q D = I - e pi
/// with pi D = 0 through one bordered factorization.
struct DeviationMatrixFinite {
    Matrix d;
    TruncatedStationary pi;
};

inline DeviationMatrixFinite deviation_matrix_finite(const FiniteQMatrix& qfin) {
    TruncatedStationary pi = solve_stationary_dense(qfin);
    const int m = qfin.order();
    const Matrix q = qfin.to_dense();

    Matrix bordered(m + 1, m + 1);
    bordered.topLeftCorner(m, m) = -q;
    bordered.topRightCorner(m, 1).setOnes();
    bordered.bottomLeftCorner(1, m) = pi.flat.transpose();
    bordered(m, m) = 0.0;

    Matrix rhs(m + 1, m);
    rhs.topRows(m) = Matrix::Identity(m, m) - Vector::Ones(m) * pi.flat.transpose();
    rhs.bottomRows(1).setZero();

    Eigen::PartialPivLU<Matrix> lu(bordered);
    const double floor = 1e-10 * std::max(1.0, qfin.max_abs_entry());
    if (!(lu.matrixLU().diagonal().cwiseAbs().minCoeff() > floor))
        throw NumericalError("deviation_matrix_finite: bordered system is singular");
    Matrix z = lu.solve(rhs);
    // One refinement pass for the 1e-8 residual contract.
    z += lu.solve(rhs - bordered * z);
    return {z.topRows(m), std::move(pi)};
}

}  // namespace lctrunc
