#pragma once

// Error decay functions for last-column-block-augmented truncations: the
// general pair E / E+, their closed-form sharp variant, the computable
// exponential-case family E~_N / E~_N+ / E~_N#, the block-tridiagonal and
// retrial specializations, and the row-scaling reduction that turns an
// f-modulated chain into an exponentially ergodic one.

#include <lctrunc/certificates.hpp>
#include <lctrunc/resolvent.hpp>
#include <lctrunc/stationary.hpp>

#include <utility>
#include <vector>

namespace lctrunc {

namespace detail {

inline double resolvent_gain(const ResolventSummary& phi) {
    if (!phi.positive)
        throw InfeasibleError("bound evaluation: phi_bar is not positive; raise N");
    return 2.0 / (phi.beta * phi.phi_bar);
}

}  // namespace detail

/// E(n) = 2 sum_{k<=n} npi(k) sum_{m>n} Q(k;m) { v(m) + v(n)
///         + 2 (pi_v_bound + 2b/(beta phi_bar)) e }.
/// The tail over m is exact because the upper bandwidth is finite.
inline double error_decay_E(const BlockGenerator& q, const DriftCertificate& cert,
                            double pi_v_bound, const ResolventSummary& phi,
                            const TruncatedStationary& npi) {
    const int n = npi.n;
    const double kappa = pi_v_bound + cert.b * detail::resolvent_gain(phi);
    const Vector vn = cert.v(n);
    double total = 0.0;
    for (int k = std::max(0, n + 1 - q.upper_bandwidth()); k <= n; ++k) {
        Vector tail = Vector::Zero(q.layout().level_size(k));
        for (int m = n + 1; m <= k + q.upper_bandwidth(); ++m) {
            const Matrix b = q.block(k, m);
            tail += b * (cert.v(m) + vn) + 2.0 * kappa * b.rowwise().sum();
        }
        total += npi.level(k).dot(tail);
    }
    return 2.0 * total;
}

struct BoundValue {
    double value = 0.0;
    bool monotone_ok = true;  // false flags a violated level-wise-nondecreasing premise
};

/// E+(n) = 4 sum_{k<=n} npi(k) sum_{m>n} Q(k;m) { v(m)
///          + (pi_v_bound + 2b/(beta phi_bar)) e }; dominates E when v is
/// level-wise nondecreasing above level 0.
inline BoundValue error_decay_E_plus(const BlockGenerator& q, const DriftCertificate& cert,
                                     double pi_v_bound, const ResolventSummary& phi,
                                     const TruncatedStationary& npi) {
    const int n = npi.n;
    const double kappa = pi_v_bound + cert.b * detail::resolvent_gain(phi);
    double total = 0.0;
    for (int k = std::max(0, n + 1 - q.upper_bandwidth()); k <= n; ++k) {
        Vector tail = Vector::Zero(q.layout().level_size(k));
        for (int m = n + 1; m <= k + q.upper_bandwidth(); ++m) {
            const Matrix b = q.block(k, m);
            tail += b * cert.v(m) + kappa * b.rowwise().sum();
        }
        total += npi.level(k).dot(tail);
    }
    BoundValue out;
    out.value = 4.0 * total;
    out.monotone_ok =
        level_wise_nondecreasing(cert.v, 1, n + q.upper_bandwidth() + 1);
    return out;
}

/// Closed-form decay function free of the truncated stationary vector:
/// (4 r0# r1# b# / T(n)) [1 + (pi_v_bound + 2b/(beta phi_bar))
///                            / (a_min V(n+1))].
inline double error_decay_E_sharp(const DriftCertificate& cert, const SharpCertificate& sharp,
                                  double pi_v_bound, const ResolventSummary& phi, int n) {
    if (!(sharp.T(1.0) > 1.0 + 1e-15))
        throw InfeasibleError("error_decay_E_sharp: T must diverge (T(1) <= 1)");
    const double kappa = pi_v_bound + cert.b * detail::resolvent_gain(phi);
    return 4.0 * sharp.r0_sharp * sharp.r1_sharp * sharp.b_sharp / sharp.T(n) *
           (1.0 + kappa / (sharp.a_min * sharp.V(n + 1.0)));
}

/// Exponential-case instances: pi v is replaced by its computable bound
/// b / c and phi_bar by the finite-truncation value carried in phi.
inline double exp_error_decay_EN(const BlockGenerator& q, const ExponentialCertificate& cert,
                                 const ResolventSummary& phi, const TruncatedStationary& npi) {
    return error_decay_E(q, cert.as_drift(), cert.pi_v_upper(), phi, npi);
}

inline BoundValue exp_error_decay_EN_plus(const BlockGenerator& q,
                                          const ExponentialCertificate& cert,
                                          const ResolventSummary& phi,
                                          const TruncatedStationary& npi) {
    return error_decay_E_plus(q, cert.as_drift(), cert.pi_v_upper(), phi, npi);
}

inline double exp_error_decay_EN_sharp(const ExponentialCertificate& cert,
                                       const SharpCertificate& sharp,
                                       const ResolventSummary& phi, int n) {
    return error_decay_E_sharp(cert.as_drift(), sharp, cert.pi_v_upper(), phi, n);
}

/// Block-tridiagonal collapse of the exponential-case bound:
/// 2 npi(n) A_n(1) [ v(n) + v(n+1) + 2b (1/c + 2/(beta phi_bar)) e ].
inline double ldqbd_bound(const BlockGenerator& q, const ExponentialCertificate& cert,
                          const ResolventSummary& phi, const TruncatedStationary& npi, int n) {
    if (q.upper_bandwidth() != 1 || !q.lower_bandwidth() || *q.lower_bandwidth() != 1)
        throw StructureError("ldqbd_bound: generator must have bandwidths (1,1)");
    if (n != npi.n)
        throw StructureError("ldqbd_bound: npi was solved at level " + std::to_string(npi.n) +
                             ", not " + std::to_string(n));
    const double kappa = cert.b * (1.0 / cert.c + detail::resolvent_gain(phi));
    const Matrix a1 = q.block(n, n + 1);
    const Vector bracket =
        a1 * (cert.v(n) + cert.v(n + 1)) + 2.0 * kappa * a1.rowwise().sum();
    return 2.0 * npi.level(n).dot(bracket);
}

/// Retrial-queue form of the same bound, written through pi(n, s):
/// (4 lambda / gamma) [ (alpha+1)/(2c) + (gamma b / alpha^n)(1/c +
/// 2/(beta phi_bar)) ] pi(n, s) alpha^n.
inline double retrial_bound_1(const RetrialParams& p, const RetrialTuning& t,
                              const ExponentialCertificate& cert, const ResolventSummary& phi,
                              const TruncatedStationary& npi) {
    const int n = npi.n;
    const double pow_alpha = std::pow(t.alpha, n);
    const double inner = (t.alpha + 1.0) / (2.0 * cert.c) +
                         t.gamma * cert.b / pow_alpha *
                             (1.0 / cert.c + detail::resolvent_gain(phi));
    return 4.0 * p.lambda / t.gamma * inner * npi(n, p.s) * pow_alpha;
}

/// Stationary-free retrial bound:
/// (4 lambda / gamma) [ alpha/c + (b/alpha^n)(1/c + 2/(beta phi_bar)) ]
/// (b#/c#) (alpha/alpha#)^n.
inline double retrial_bound_sharp(const RetrialParams& p, const RetrialTuning& t,
                                  const ExponentialCertificate& cert,
                                  const SharpCertificate& sharp, const ResolventSummary& phi,
                                  int n) {
    const double pow_alpha = std::pow(t.alpha, n);
    const double inner =
        t.alpha / cert.c +
        cert.b / pow_alpha * (1.0 / cert.c + detail::resolvent_gain(phi));
    return 4.0 * p.lambda / t.gamma * inner * sharp.b_sharp / sharp.c_sharp *
           std::pow(t.alpha / t.alpha_sharp, n);
}

/// Row scaling Q^ = Delta_{v/f} Q, which satisfies the exponential drift
/// inequality Q^ v <= -v + b^ 1_{F_K} with b^ = b max_{F_K} v/f.
struct HatChain {
    BlockGenerator generator;
    double b_hat = 0.0;
};

inline HatChain build_hat_generator(const BlockGenerator& q, const DriftCertificate& cert,
                                    double c_fv, int sample_levels = 64) {
    LevelVectorFn v = cert.v, f = cert.f;
    double b_hat_factor = 0.0;
    for (int k = 0; k <= std::max(sample_levels, cert.K + 1); ++k) {
        const Vector vk = v(k), fk = f(k);
        for (int i = 0; i < vk.size(); ++i) {
            if (!(vk(i) > 0.0))
                throw InfeasibleError("build_hat_generator: v must be positive");
            if (k <= cert.K) b_hat_factor = std::max(b_hat_factor, vk(i) / fk(i));
            if (fk(i) > c_fv * vk(i) * (1.0 + 1e-9))
                throw InfeasibleError(
                    "build_hat_generator: supplied sup f/v is violated on the sampled prefix");
        }
    }
    auto base = q;  // copy shares the pure block callback
    auto scaled = [base, v, f](int k, int l) -> Matrix {
        Matrix blk = base.block(k, l);
        const Vector scale = (v(k).array() / f(k).array()).matrix();
        return scale.asDiagonal() * blk;
    };
    BlockGenerator hat(q.layout(), scaled, q.lower_bandwidth(), q.upper_bandwidth());
    return {std::move(hat), cert.b * b_hat_factor};
}

/// Total-variation and relative bounds recovered from a decay value E^(n)
/// of the row-scaled chain.
struct ReductionBounds {
    double tv = 0.0;
    double rel = 0.0;
};

inline ReductionBounds reduction_bounds(double e_hat_at_n, double b, double b_hat, double c_fv,
                                        bool monotone_v) {
    if (e_hat_at_n < 0) throw StructureError("reduction_bounds: E^(n) must be >= 0");
    const double denom = std::max(1.0 - std::min(e_hat_at_n, 1.0), 1.0 / (b_hat * c_fv));
    double inner = (1.0 + e_hat_at_n) / denom;
    if (monotone_v) inner = std::min(inner, b);
    return {2.0 * e_hat_at_n, e_hat_at_n * (1.0 + inner)};
}

enum class BoundKind {
    E,
    E_plus,
    E_sharp,
    EN,
    EN_plus,
    EN_sharp,
    ldqbd,
    retrial_1,
    retrial_sharp,
    reduced_tv,
    reduced_rel,
};

inline const char* to_string(BoundKind k) {
    switch (k) {
        case BoundKind::E: return "E";
        case BoundKind::E_plus: return "E_plus";
        case BoundKind::E_sharp: return "E_sharp";
        case BoundKind::EN: return "EN";
        case BoundKind::EN_plus: return "EN_plus";
        case BoundKind::EN_sharp: return "EN_sharp";
        case BoundKind::ldqbd: return "ldqbd";
        case BoundKind::retrial_1: return "retrial_1";
        case BoundKind::retrial_sharp: return "retrial_sharp";
        case BoundKind::reduced_tv: return "reduced_tv";
        case BoundKind::reduced_rel: return "reduced_rel";
    }
    return "?";
}

inline BoundKind bound_kind_from_string(const std::string& s) {
    for (BoundKind k :
         {BoundKind::E, BoundKind::E_plus, BoundKind::E_sharp, BoundKind::EN, BoundKind::EN_plus,
          BoundKind::EN_sharp, BoundKind::ldqbd, BoundKind::retrial_1, BoundKind::retrial_sharp,
          BoundKind::reduced_tv, BoundKind::reduced_rel})
        if (s == to_string(k)) return k;
    throw StructureError("unknown bound kind: " + s);
}

/// One (n, value) curve of a chosen bound kind plus the configuration it
/// was computed under.
struct ErrorCurve {
    BoundKind kind;
    std::vector<std::pair<int, double>> points;
    double beta = 0.0;
    int K = 0;
    int N = 0;
};

}  // namespace lctrunc
