#pragma once

// Weighted v-norms and the perturbation bounds on the stationary
// distribution: the exponential-drift bound through C_{K,N}^{(beta)} and
// the f-modulated bound through the row-scaled chain.

#include <lctrunc/bounds.hpp>

#include <optional>
#include <string>

namespace lctrunc {

inline double v_norm_vector(const Vector& x, const Vector& v) {
    return x.cwiseAbs().dot(v);
}

/// Weighted sup norm of the block difference Q* - Q over the sampled level
/// range: sup over rows (k,i), k <= levels, of sum |z| v / v(k,i). This is
/// a lower estimate of the true sup when v grows and the difference has
/// unbounded support; stabilized reports that the per-level factor has
/// settled on the sampled prefix.
struct VNormEstimate {
    double value = 0.0;
    bool stabilized = false;
    int levels = 0;
};

inline VNormEstimate v_norm_matrix(const BlockGenerator& q_star, const BlockGenerator& q,
                                   const LevelVectorFn& v, int levels) {
    if (q_star.layout().s0 != q.layout().s0 || q_star.layout().s1 != q.layout().s1)
        throw StructureError("v_norm_matrix: layouts differ");
    const int ub = std::max(q.upper_bandwidth(), q_star.upper_bandwidth());
    auto lowest = [&](int k) { return std::min(q.lowest_column(k), q_star.lowest_column(k)); };
    VNormEstimate est;
    est.levels = levels;
    double prev = -1.0, prev2 = -1.0;
    for (int k = 0; k <= levels; ++k) {
        Vector weighted = Vector::Zero(q.layout().level_size(k));
        for (int l = lowest(k); l <= k + ub; ++l) {
            const Matrix z = q_star.block(k, l) - q.block(k, l);
            weighted += z.cwiseAbs() * v(l);
        }
        const Vector vk = v(k);
        double level_max = 0.0;
        for (int i = 0; i < weighted.size(); ++i) {
            if (!(vk(i) > 0)) throw StructureError("v_norm_matrix: v must be positive");
            level_max = std::max(level_max, weighted(i) / vk(i));
        }
        est.value = std::max(est.value, level_max);
        if (k >= 2)
            est.stabilized = std::abs(level_max - prev) <= 1e-12 * std::max(1.0, level_max) &&
                             std::abs(prev - prev2) <= 1e-12 * std::max(1.0, level_max);
        prev2 = prev;
        prev = level_max;
    }
    return est;
}

/// C_{K,N}^{(beta)} = ((b+1)/c) (1 + b + 2 b c / (beta phi_bar)).
inline double C_constant(const ExponentialCertificate& cert, const ResolventSummary& phi) {
    if (!phi.positive) throw InfeasibleError("C_constant: phi_bar is not positive");
    return (cert.b + 1.0) / cert.c *
           (1.0 + cert.b + 2.0 * cert.b * cert.c / (phi.beta * phi.phi_bar));
}

/// (b/c) C delta / (1 - C delta), valid only for delta < 1/C.
inline double perturbation_bound_exp(const ExponentialCertificate& cert,
                                     const ResolventSummary& phi, double norm_delta) {
    const double c_const = C_constant(cert, phi);
    if (!(c_const * norm_delta < 1.0))
        throw InfeasibleError("perturbation_bound_exp: C * ||Q*-Q||_v >= 1");
    return cert.b / cert.c * c_const * norm_delta / (1.0 - c_const * norm_delta);
}

/// C^_{K,N}^{(beta)} of the row-scaled chain.
inline double C_hat_constant(double b_hat, const ResolventSummary& hat_phi) {
    if (!hat_phi.positive) throw InfeasibleError("C_hat_constant: phi_bar is not positive");
    return (b_hat + 1.0) *
           (1.0 + b_hat + 2.0 * b_hat / (hat_phi.beta * hat_phi.phi_bar));
}

/// Bound on ||pi* - pi||_f under the f-modulated drift condition:
/// C_fv (1 + b^ C_fv) b^ C^ delta^ / (1 - C^ delta^).
inline double perturbation_bound_general(double c_fv, double b_hat,
                                         const ResolventSummary& hat_phi,
                                         double norm_delta_hat) {
    const double c_hat = C_hat_constant(b_hat, hat_phi);
    if (!(c_hat * norm_delta_hat < 1.0))
        throw InfeasibleError("perturbation_bound_general: C^ * ||Delta (Q*-Q)||_v >= 1");
    return c_fv * (1.0 + b_hat * c_fv) * b_hat * c_hat * norm_delta_hat /
           (1.0 - c_hat * norm_delta_hat);
}

/// Report form used by the CLI: bound present iff the contraction
/// precondition norm_delta * C < 1 holds.
struct PerturbationReport {
    double norm_delta = 0.0;
    double c_value = 0.0;
    std::optional<double> bound;
    bool feasible = false;
    bool norm_stabilized = false;
    int norm_levels = 0;
};

inline PerturbationReport perturbation_report_exp(const BlockGenerator& q_star,
                                                  const BlockGenerator& q,
                                                  const ExponentialCertificate& cert,
                                                  const ResolventSummary& phi, int levels) {
    PerturbationReport rep;
    const VNormEstimate est = v_norm_matrix(q_star, q, cert.v, levels);
    rep.norm_delta = est.value;
    rep.norm_stabilized = est.stabilized;
    rep.norm_levels = est.levels;
    rep.c_value = C_constant(cert, phi);
    rep.feasible = rep.c_value * rep.norm_delta < 1.0;
    if (rep.feasible) rep.bound = perturbation_bound_exp(cert, phi, rep.norm_delta);
    return rep;
}

}  // namespace lctrunc
