#pragma once

// LU backends: LAPACK band factorization for banded finite q-matrices and
// Eigen partial-pivot LU for dense ones, behind one interface. Factors
// shift * I + scale * Q once; solves are const and reusable.

#include <lctrunc/generator.hpp>

#include <vector>

extern "C" {
void dgbtrf_(const int* m, const int* n, const int* kl, const int* ku, double* ab,
             const int* ldab, int* ipiv, int* info);
void dgbtrs_(const char* trans, const int* n, const int* kl, const int* ku, const int* nrhs,
             const double* ab, const int* ldab, const int* ipiv, double* b, const int* ldb,
             int* info);
}

namespace lctrunc {

class ShiftedLU {
public:
    /// Factor shift * I + scale * Q.
    ShiftedLU(const FiniteQMatrix& q, double shift, double scale) : n_(q.order()) {
        banded_ = q.is_banded();
        if (banded_) {
            kl_ = q.kl();
            ku_ = q.ku();
            ldab_ = 2 * kl_ + ku_ + 1;
            ab_.assign(static_cast<std::size_t>(ldab_) * n_, 0.0);
            const Matrix& band = q.band_storage();
            for (int j = 0; j < n_; ++j) {
                const int lo = std::max(0, j - ku_), hi = std::min(n_ - 1, j + kl_);
                for (int i = lo; i <= hi; ++i) {
                    double v = scale * band(ku_ + i - j, j);
                    if (i == j) v += shift;
                    ab_[static_cast<std::size_t>(kl_ + ku_ + i - j) +
                        static_cast<std::size_t>(j) * ldab_] = v;
                }
            }
            ipiv_.resize(n_);
            int info = 0;
            dgbtrf_(&n_, &n_, &kl_, &ku_, ab_.data(), &ldab_, ipiv_.data(), &info);
            if (info != 0)
                throw NumericalError("banded LU failed, info=" + std::to_string(info));
        } else {
            Matrix a = scale * q.to_dense();
            a.diagonal().array() += shift;
            dense_.compute(a);
            // PartialPivLU has no rank query; pivot magnitudes are inspected
            // by the caller through min_abs_pivot().
        }
    }

    int order() const { return n_; }

    /// Solve A X = B (or A^T X = B) in place; B is column-major n x nrhs.
    void solve_in_place(Matrix& b, bool transpose) const {
        if (b.rows() != n_) throw NumericalError("ShiftedLU: rhs size mismatch");
        if (banded_) {
            const char tr = transpose ? 'T' : 'N';
            const int nrhs = static_cast<int>(b.cols());
            int info = 0;
            dgbtrs_(&tr, &n_, &kl_, &ku_, &nrhs, ab_.data(), &ldab_, ipiv_.data(), b.data(), &n_,
                    &info);
            if (info != 0)
                throw NumericalError("banded solve failed, info=" + std::to_string(info));
        } else {
            if (transpose)
                b = dense_.transpose().solve(b);
            else
                b = dense_.solve(b);
        }
    }

    double min_abs_pivot() const {
        if (banded_) {
            double m = std::numeric_limits<double>::infinity();
            for (int j = 0; j < n_; ++j)
                m = std::min(m, std::abs(ab_[static_cast<std::size_t>(kl_ + ku_) +
                                             static_cast<std::size_t>(j) * ldab_]));
            return m;
        }
        return dense_.matrixLU().diagonal().cwiseAbs().minCoeff();
    }

private:
    int n_;
    bool banded_ = false;
    int kl_ = 0, ku_ = 0, ldab_ = 0;
    std::vector<double> ab_;
    std::vector<int> ipiv_;
    Eigen::PartialPivLU<Matrix> dense_;
};

namespace detail {

/// Left null vector of a singular conservative generator B (x B = 0,
/// x e = 1), computed by replacing the last column of B with ones and
/// solving x B~ = e_last. pivot_floor guards against a rank defect larger
/// than one, which signals multiple closed communicating classes.
inline Vector stationary_of_generator(Matrix b, double pivot_floor) {
    const int m = static_cast<int>(b.rows());
    b.col(m - 1).setOnes();
    Eigen::PartialPivLU<Matrix> lu(b.transpose());
    const double piv = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(piv > pivot_floor))
        throw NumericalError(
            "stationary solve: matrix is numerically singular (multiple closed classes?)");
    Vector rhs = Vector::Zero(m);
    rhs(m - 1) = 1.0;
    Vector x = lu.solve(rhs);
    // One refinement pass keeps the residual near machine precision.
    Vector r = rhs - b.transpose() * x;
    x += lu.solve(r);
    return x;
}

}  // namespace detail

}  // namespace lctrunc
