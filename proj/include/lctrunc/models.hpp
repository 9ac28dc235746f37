#pragma once

// Concrete block-generator constructors: the M/M/s retrial queue, generic
// level-dependent QBDs built from explicit block triples, and the M/M/1
// queue used as an analytically solvable reference model.

#include <lctrunc/generator.hpp>

#include <utility>
#include <vector>

namespace lctrunc {

/// M/M/s retrial queue: s servers, Poisson arrivals at rate lambda,
/// exponential service at rate mu, exponential retrial clock at rate eta
/// per orbiting customer. Level = orbit size, phase = busy servers.
struct RetrialParams {
    int s = 1;
    double lambda = 1.0;
    double mu = 1.0;
    double eta = 1.0;

    double rho() const { return lambda / (s * mu); }

    void check() const {
        if (s < 1) throw StructureError("RetrialParams: s must be >= 1");
        if (!(lambda > 0) || !(mu > 0) || !(eta > 0))
            throw StructureError("RetrialParams: rates must be > 0");
    }
};

namespace detail {

inline Matrix retrial_a1(const RetrialParams& p) {
    Matrix b = Matrix::Zero(p.s + 1, p.s + 1);
    b(p.s, p.s) = p.lambda;  // arrival joins the orbit only when all servers busy
    return b;
}

inline Matrix retrial_am1(const RetrialParams& p, int k) {
    Matrix b = Matrix::Zero(p.s + 1, p.s + 1);
    for (int i = 0; i < p.s; ++i) b(i, i + 1) = k * p.eta;
    return b;
}

inline Matrix retrial_a0(const RetrialParams& p, int k) {
    Matrix b = Matrix::Zero(p.s + 1, p.s + 1);
    for (int i = 0; i <= p.s; ++i) {
        if (i < p.s) b(i, i + 1) = p.lambda;
        if (i > 0) b(i, i - 1) = i * p.mu;
        const double psi =
            (i < p.s) ? p.lambda + i * p.mu + k * p.eta : p.lambda + p.s * p.mu;
        b(i, i) = -psi;
    }
    return b;
}

}  // namespace detail

/// Block-tridiagonal generator of the retrial queue length process.
inline BlockGenerator retrial_generator(const RetrialParams& p) {
    p.check();
    const LevelLayout lay(p.s + 1, p.s + 1);
    auto blocks = [p](int k, int l) -> Matrix {
        if (l == k + 1) return detail::retrial_a1(p);
        if (l == k - 1) return detail::retrial_am1(p, k);
        if (l == k) return detail::retrial_a0(p, k);
        return Matrix::Zero(p.s + 1, p.s + 1);
    };
    return BlockGenerator(lay, blocks, 1, 1);
}

/// One level of an LD-QBD block row: (A(-1), A(0), A(1)). At level 0 the
/// A(-1) member is ignored.
struct LdqbdLevel {
    Matrix a_minus;
    Matrix a_zero;
    Matrix a_plus;
};

/// LD-QBD from an explicit list of per-level block triples; levels beyond
/// the list repeat the last supplied triple. With complete_diagonal set,
/// the diagonal of each A(0) is overwritten with minus the off-diagonal
/// row mass, so hand-typed block files need not balance rows themselves.
inline BlockGenerator ldqbd_generator(std::vector<LdqbdLevel> levels,
                                      bool complete_diagonal = false) {
    if (levels.empty()) throw StructureError("ldqbd_generator: empty level list");
    const int s0 = static_cast<int>(levels[0].a_zero.rows());
    const int s1 = levels.size() > 1 ? static_cast<int>(levels[1].a_zero.rows()) : s0;
    const LevelLayout lay(s0, s1);

    auto size_of = [&lay](int k) { return lay.level_size(k); };
    for (std::size_t k = 0; k < levels.size(); ++k) {
        const int sk = size_of(static_cast<int>(k));
        if (levels[k].a_zero.rows() != sk || levels[k].a_zero.cols() != sk)
            throw StructureError("ldqbd_generator: A(0) shape mismatch at level " +
                                 std::to_string(k));
        if (k > 0 && (levels[k].a_minus.rows() != sk ||
                      levels[k].a_minus.cols() != size_of(static_cast<int>(k) - 1)))
            throw StructureError("ldqbd_generator: A(-1) shape mismatch at level " +
                                 std::to_string(k));
        if (levels[k].a_plus.rows() != sk || levels[k].a_plus.cols() != s1)
            throw StructureError("ldqbd_generator: A(1) shape mismatch at level " +
                                 std::to_string(k));
    }
    // The last triple repeats for all higher levels, so its A(-1) must be
    // valid even when the list has a single (level 0) entry.
    if (levels.back().a_minus.rows() != s1 || levels.back().a_minus.cols() != s1)
        throw StructureError("ldqbd_generator: repeating A(-1) must be s1 x s1");

    // Completion happens per level, not per stored triple: a repeated
    // triple picks up its A(-1) mass at levels >= 1 but not at level 0, so
    // the diagonal differs between the two uses.
    auto blocks = [levels = std::move(levels), lay, complete_diagonal](int k, int l) -> Matrix {
        const auto& lv = levels[std::min<std::size_t>(k, levels.size() - 1)];
        if (l == k - 1) return lv.a_minus;
        if (l == k + 1) return lv.a_plus;
        if (l == k) {
            if (!complete_diagonal) return lv.a_zero;
            Matrix a0 = lv.a_zero;
            for (int i = 0; i < a0.rows(); ++i) {
                double off = lv.a_plus.row(i).sum();
                if (k > 0) off += lv.a_minus.row(i).sum();
                for (int j = 0; j < a0.cols(); ++j)
                    if (j != i) off += a0(i, j);
                a0(i, i) = -off;
            }
            return a0;
        }
        return Matrix::Zero(lay.level_size(k), lay.level_size(l));
    };
    return BlockGenerator(lay, blocks, 1, 1);
}

/// M/M/1 queue as a birth-death chain with 1x1 blocks. Its last-column
/// augmented truncation is exactly the M/M/1/n queue, so the stationary
/// law is the truncated-normalized geometric distribution.
inline BlockGenerator mm1_generator(double lambda, double mu) {
    if (!(lambda > 0) || !(mu > 0))
        throw StructureError("mm1_generator: rates must be > 0");
    const LevelLayout lay(1, 1);
    auto blocks = [lambda, mu](int k, int l) -> Matrix {
        Matrix b(1, 1);
        if (l == k + 1)
            b(0, 0) = lambda;
        else if (l == k - 1)
            b(0, 0) = mu;
        else if (l == k)
            b(0, 0) = (k == 0) ? -lambda : -(lambda + mu);
        else
            b(0, 0) = 0.0;
        return b;
    };
    return BlockGenerator(lay, blocks, 1, 1);
}

}  // namespace lctrunc
