#include <catch2/catch_amalgamated.hpp>

#include <lctrunc/cli.hpp>
#include <lctrunc/perturbation.hpp>

using namespace lctrunc;

namespace {

ResolventSummary fake_phi(double beta, double value) {
    ResolventSummary s;
    s.beta = beta;
    s.phi_bar = value;
    s.positive = value > 0.0;
    return s;
}

}  // namespace

TEST_CASE("vector v-norm", "[perturbation]") {
    Vector x(4), v = Vector::Ones(4);
    x << 1, -1, 0, 0;
    CHECK(v_norm_vector(x, v) == 2.0);
    CHECK(v_norm_vector(Vector::Zero(4), v) == 0.0);
}

TEST_CASE("v-norm of a rate perturbation of the retrial generator", "[perturbation]") {
    const RetrialParams p{2, 1.0, 1.0, 1.0};
    RetrialParams p_star = p;
    p_star.lambda *= 1.01;
    const RetrialTuning t = retrial_default_tuning(0.5, 1.5);
    const ExponentialCertificate cert = retrial_certificate(p, t);
    const VNormEstimate est = v_norm_matrix(retrial_generator(p_star), retrial_generator(p),
                                            cert.v, 200);
    // The perturbation enters every arrival rate: in the all-busy phase the
    // row picks up 0.01 lambda (v(k+1,s) + v(k,s)) / v(k,s) = 0.01 lambda
    // (alpha + 1), which dominates the idle-phase rows since alpha > 1/gamma.
    CHECK(est.value == Catch::Approx(0.01 * p.lambda * (t.alpha + 1.0)).epsilon(1e-12));
    CHECK(est.stabilized);
}

TEST_CASE("zero perturbation has zero norm", "[perturbation]") {
    const RetrialParams p{2, 1.0, 1.0, 1.0};
    const RetrialTuning t = retrial_default_tuning(0.5, 1.5);
    const ExponentialCertificate cert = retrial_certificate(p, t);
    const VNormEstimate est =
        v_norm_matrix(retrial_generator(p), retrial_generator(p), cert.v, 50);
    CHECK(est.value == 0.0);
}

TEST_CASE("C constant arithmetic and monotonicity in N", "[perturbation]") {
    ExponentialCertificate unit;
    unit.b = 1.0;
    unit.c = 1.0;
    unit.K = 0;
    unit.v = [](int) { return Vector::Ones(1); };
    CHECK(C_constant(unit, fake_phi(1.0, 1.0)) == Catch::Approx(8.0));

    const RetrialParams p{2, 1.0, 1.0, 1.0};
    const RetrialTuning t = retrial_default_tuning(0.5, 1.25);
    const ExponentialCertificate cert = retrial_certificate(p, t);
    const BlockGenerator gen = retrial_generator(p);
    double prev = std::numeric_limits<double>::infinity();
    for (int offset : {10, 50, 100}) {
        const ResolventSummary phi =
            resolvent_summary(northwest_truncation(gen, cert.K + offset), cert.K, 0.5);
        const double c_val = C_constant(cert, phi);
        CHECK(c_val > 0.0);
        CHECK(c_val <= prev + 1e-12);
        prev = c_val;
    }
}

TEST_CASE("exponential perturbation bound arithmetic", "[perturbation]") {
    ExponentialCertificate unit;
    unit.b = 1.0;
    unit.c = 1.0;
    unit.K = 0;
    unit.v = [](int) { return Vector::Ones(1); };
    const ResolventSummary phi = fake_phi(1.0, 1.0);  // C = 8
    CHECK(perturbation_bound_exp(unit, phi, 0.0) == 0.0);
    CHECK(perturbation_bound_exp(unit, phi, 1.0 / 16.0) == Catch::Approx(1.0));
    CHECK_THROWS_AS(perturbation_bound_exp(unit, phi, 1.0 / 8.0), InfeasibleError);
    CHECK_THROWS_AS(perturbation_bound_exp(unit, phi, 0.2), InfeasibleError);
}

TEST_CASE("general bound reduces to the scaled chain under f = c v", "[perturbation]") {
    // With f = c v the row scaling is uniform: Q^ = Q / c, b^ = b / c, and
    // the general bound evaluated with those inputs matches its formula.
    const double b_hat = 2.0, c_fv = 3.0, delta_hat = 0.01;
    const ResolventSummary hat_phi = fake_phi(1.0, 0.5);
    const double c_hat = (b_hat + 1.0) * (1.0 + b_hat + 2.0 * b_hat / 0.5);
    const double expect = c_fv * (1.0 + b_hat * c_fv) * b_hat * c_hat * delta_hat /
                          (1.0 - c_hat * delta_hat);
    CHECK(perturbation_bound_general(c_fv, b_hat, hat_phi, delta_hat) ==
          Catch::Approx(expect).epsilon(1e-14));
    CHECK(perturbation_bound_general(c_fv, b_hat, hat_phi, 0.0) == 0.0);
    CHECK_THROWS_AS(perturbation_bound_general(c_fv, b_hat, hat_phi, 1.0),
                    InfeasibleError);
}

namespace {

// Retrial generator with the arrival rate changed at level 0 only. A
// perturbation supported on finitely many levels keeps the row-scaled
// difference norm finite when the scaling v/f grows with the level.
BlockGenerator retrial_perturbed_at_level0(const RetrialParams& p, double eps) {
    const BlockGenerator base = retrial_generator(p);
    const int s = p.s;
    const double d = eps * p.lambda;
    return BlockGenerator(
        base.layout(),
        [base, s, d](int k, int l) -> Matrix {
            Matrix b = base.block(k, l);
            if (k == 0 && l == 0) {
                for (int i = 0; i < s; ++i) {
                    b(i, i + 1) += d;
                    b(i, i) -= d;
                }
                b(s, s) -= d;  // pays for the extra orbit-bound arrival below
            } else if (k == 0 && l == 1) {
                b(s, s) += d;
            }
            return b;
        },
        base.lower_bandwidth(), base.upper_bandwidth());
}

}  // namespace

TEST_CASE("general bound through the row-scaled chain covers the f-distance",
          "[perturbation]") {
    // f = sqrt(c v): the scaled chain's resolvent summary and the scaled
    // difference norm feed the f-modulated bound, which must cover the
    // f-weighted distance between the reference stationary vectors.
    const RetrialParams p{2, 1.0, 1.0, 1.0};
    const double eps = 1e-9;
    const RetrialTuning t = retrial_default_tuning(0.5, 1.1);
    const ExponentialCertificate ecert = retrial_certificate(p, t);
    DriftCertificate base;
    base.b = ecert.b;
    base.K = ecert.K;
    base.v = ecert.v;
    const double c = ecert.c;
    LevelVectorFn vfn = ecert.v;
    base.f = [vfn, c](int k) { return Vector((c * vfn(k)).array().sqrt().matrix()); };
    const double c_fv = c;

    const BlockGenerator gen = retrial_generator(p);
    const BlockGenerator gen_star = retrial_perturbed_at_level0(p, eps);
    REQUIRE(validate_qmatrix(gen_star, 10, 1e-12).pass);
    const HatChain hat = build_hat_generator(gen, base, c_fv);
    const HatChain hat_star = build_hat_generator(gen_star, base, c_fv);
    const double beta = 0.5;
    const ResolventSummary hat_phi = resolvent_summary(
        northwest_truncation(hat.generator, base.K + 100), base.K, beta);

    // || Delta_{v/f} (Q* - Q) ||_v ; exact here since the support is level 0
    const VNormEstimate delta_hat =
        v_norm_matrix(hat_star.generator, hat.generator, base.v, 40);
    const double bound =
        perturbation_bound_general(c_fv, hat.b_hat, hat_phi, delta_hat.value);

    const TruncatedStationary pi = reference_stationary(gen, 500, 1e-12);
    const TruncatedStationary pi_star = reference_stationary(gen_star, 500, 1e-12);
    double dist_f = 0.0;
    for (int k = 0; k <= 500; ++k)
        dist_f += (pi.level(k) - pi_star.level(k)).cwiseAbs().dot(base.f(k));
    CHECK(dist_f > 0.0);
    CHECK(dist_f <= bound);
}

TEST_CASE("perturbation bound covers the true distance at desk scale", "[perturbation]") {
    const RetrialParams p{2, 1.0, 1.0, 1.0};
    RetrialParams p_star = p;
    p_star.lambda *= 1.0 + 1e-4;
    const RetrialTuning t = retrial_default_tuning(0.5, 1.1);
    const ExponentialCertificate cert = retrial_certificate(p, t);
    const BlockGenerator gen = retrial_generator(p);
    const ResolventSummary phi =
        resolvent_summary(northwest_truncation(gen, cert.K + 100), cert.K, 0.5);

    const PerturbationReport rep =
        perturbation_report_exp(retrial_generator(p_star), gen, cert, phi, 620);
    REQUIRE(rep.feasible);

    const TruncatedStationary pi = reference_stationary(gen, 600, 1e-12);
    const TruncatedStationary pi_star =
        reference_stationary(retrial_generator(p_star), 600, 1e-12);
    double dist = 0.0;
    for (int k = 0; k <= 600; ++k)
        dist += (pi.level(k) - pi_star.level(k)).cwiseAbs().dot(cert.v(k));
    CHECK(dist <= *rep.bound);
}
