#include <catch2/catch_amalgamated.hpp>

#include <lctrunc/certificates.hpp>

using namespace lctrunc;

TEST_CASE("retrial certificate passes drift verification deep into the levels",
          "[certificates]") {
    const RetrialParams p{50, 25.0, 1.0, 50.0};  // rho = 0.5
    const RetrialTuning t = retrial_default_tuning(p.rho());
    const ExponentialCertificate cert = retrial_certificate(p, t);
    const DriftReport rep =
        verify_drift(retrial_generator(p), cert.as_drift(), 500, 1e-9);
    CHECK(rep.pass);
    CHECK(rep.worst_margin <= 1e-9);
}

TEST_CASE("halving b breaks the drift inequality below K", "[certificates]") {
    const RetrialParams p{50, 45.0, 1.0, 50.0};  // rho = 0.9, K = 18
    const RetrialTuning t = retrial_default_tuning(p.rho());
    ExponentialCertificate cert = retrial_certificate(p, t);
    REQUIRE(cert.K >= 1);
    DriftCertificate halved = cert.as_drift();
    halved.b /= 2.0;
    const DriftReport rep = verify_drift(retrial_generator(p), halved, 60, 1e-9);
    CHECK_FALSE(rep.pass);
    CHECK(rep.worst_level <= cert.K);
}

TEST_CASE("trivial certificate passes for any conservative generator", "[certificates]") {
    const RetrialParams p{3, 1.3, 0.8, 0.4};
    const BlockGenerator gen = retrial_generator(p);
    const int levels = 30;
    double max_diag = 0.0;
    for (int k = 0; k <= levels; ++k)
        max_diag = std::max(max_diag, gen.block(k, k).cwiseAbs().maxCoeff());
    DriftCertificate trivial;
    trivial.b = max_diag + 1.0;
    trivial.K = levels;
    trivial.v = [&gen](int k) { return Vector::Ones(gen.layout().level_size(k)); };
    trivial.f = trivial.v;
    CHECK(verify_drift(gen, trivial, levels - 2, 1e-12).pass);
}

TEST_CASE("drift levels K match the closed form across the rho grid", "[certificates]") {
    const std::vector<double> rhos{0.1, 0.5, 0.9, 0.95, 0.99};
    const std::vector<int> expected{1, 2, 18, 38, 219};
    for (std::size_t i = 0; i < rhos.size(); ++i) {
        const RetrialParams p{50, rhos[i] * 50.0, 1.0, 50.0};
        const ExponentialCertificate cert =
            retrial_certificate(p, retrial_default_tuning(rhos[i]));
        CHECK(cert.K == expected[i]);
    }
}

TEST_CASE("K is the smallest level after which no b term is needed",
          "[certificates][property]") {
    for (double rho : {0.1, 0.5, 0.9, 0.95, 0.99}) {
        const RetrialParams p{50, rho * 50.0, 1.0, 50.0};
        const BlockGenerator gen = retrial_generator(p);
        const ExponentialCertificate cert = retrial_certificate(p, retrial_default_tuning(rho));
        const int levels = 2000;
        CHECK(verify_drift(gen, cert.as_drift(), levels, 1e-9).pass);
        if (cert.K >= 1) {
            DriftCertificate smaller = cert.as_drift();
            smaller.K = cert.K - 1;
            CHECK_FALSE(verify_drift(gen, smaller, levels, 1e-9).pass);
        }
    }
}

TEST_CASE("tuning domain violations are rejected", "[certificates]") {
    const RetrialParams p{2, 1.0, 1.0, 1.0};  // rho = 0.5
    CHECK_THROWS_AS(retrial_certificate(p, {2.5, 0.7, 0, 0}), InfeasibleError);
    CHECK_THROWS_AS(retrial_certificate(p, {0.9, 0.99, 0, 0}), InfeasibleError);
    CHECK_THROWS_AS(retrial_default_gamma(1.5, 1.2), InfeasibleError);
}

TEST_CASE("default gamma is the interval midpoint", "[certificates]") {
    CHECK(retrial_default_gamma(1.5, 0.5) == Catch::Approx(0.5 * (2.0 / 3.0 + 0.75)));
    CHECK(retrial_default_gamma(1.0 + 1e-9, 0.5) == Catch::Approx(1.0).margin(1e-8));
    CHECK(retrial_default_gamma(1.001, 0.1) == Catch::Approx(0.999450497).epsilon(1e-8));
}

TEST_CASE("sharp certificate constants", "[certificates]") {
    const RetrialParams p{2, 1.0, 1.0, 1.0};  // rho = 0.5
    const RetrialTuning t = retrial_default_tuning(0.5);
    const SharpCertificate sharp = retrial_sharp_certificate(p, t);
    // decay ratio sits strictly inside (1, 1/rho)
    CHECK(sharp.alpha_sharp / t.alpha > 1.0);
    CHECK(sharp.alpha_sharp / t.alpha < 2.0);
    // geometric V and T are log-subadditive with equality
    CHECK(sharp.V(2.0) == Catch::Approx(t.alpha * t.alpha).epsilon(1e-14));
    CHECK(sharp.T(2.0) ==
          Catch::Approx(std::pow(sharp.alpha_sharp / t.alpha, 2.0)).epsilon(1e-14));
    CHECK(sharp.r0_sharp == Catch::Approx(1.0 / sharp.c_sharp));
}

TEST_CASE("r1 for s=1 equals the single-entry product", "[certificates]") {
    const RetrialParams p{1, 0.5, 1.0, 1.0};
    const RetrialTuning t = retrial_default_tuning(p.rho());
    const ExponentialCertificate cert = retrial_certificate(p, t);
    const SharpCertificate sharp = retrial_sharp_certificate(p, t);
    // || e_s lambda a ||_inf alpha = alpha lambda / (c gamma)
    const double expect = t.alpha * p.lambda / (cert.c * t.gamma);
    CHECK(sharp.r1_sharp == Catch::Approx(expect).epsilon(1e-14));
}

TEST_CASE("pi_f_upper returns b under monotone v and warns otherwise", "[certificates]") {
    const RetrialParams p{2, 1.0, 1.0, 1.0};
    const ExponentialCertificate cert = retrial_certificate(p, retrial_default_tuning(0.5));
    const PiFBound bound = pi_f_upper(cert.as_drift());
    CHECK(bound.bound == cert.b);
    CHECK(bound.monotone_ok);
    CHECK(cert.pi_v_upper() == Catch::Approx(cert.b / cert.c));

    DriftCertificate decreasing;
    decreasing.b = 1.0;
    decreasing.K = 0;
    decreasing.v = [](int k) { return Vector::Constant(1, std::pow(0.5, k)); };
    decreasing.f = [](int) { return Vector::Ones(1); };
    CHECK_FALSE(pi_f_upper(decreasing).monotone_ok);
}

TEST_CASE("M/M/1 certificate satisfies its drift inequality", "[certificates]") {
    const ExponentialCertificate cert = mm1_certificate(1.0, 2.0, 1.2);
    // The inequality is tight at every level, so the admissible margin is
    // set by rounding noise of the geometric terms over the prefix.
    const DriftReport rep = verify_drift(mm1_generator(1.0, 2.0), cert.as_drift(), 60, 1e-8);
    CHECK(rep.pass);
    CHECK_THROWS_AS(mm1_certificate(1.0, 2.0, 2.5), InfeasibleError);
}
