// Acceptance suite: end-to-end checks of the table reproductions, the
// bound-validity properties, solver equivalence, the resolvent invariants,
// the deviation-matrix oracle, the perturbation bound, and the sharp decay
// rate. Prints one PASS/FAIL line per criterion and exits nonzero on any
// failure.

#include <lctrunc/lctrunc.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace lctrunc;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

bool match_3sig(double got, double expect) {
    return std::abs(sig_round(got, 3) - expect) <= 1e-9 * std::abs(expect);
}

std::string fmt(double x) { return format_sci(x); }

// --- criterion 1 -----------------------------------------------------------

Outcome criterion_table_kphi() {
    RunConfig cfg;  // s = eta = 50, mu = 1, alpha = 1+1e-3, beta = 1
    const auto rows = cmd_table_kphi(cfg);
    const std::vector<int> expect_k{1, 2, 18, 38, 219};
    const std::vector<std::array<double, 4>> expect_phi{
        {1.84e-2, 1.84e-2, 1.84e-2, 1.84e-2}, {1.79e-2, 1.79e-2, 1.79e-2, 1.79e-2},
        {8.66e-3, 8.66e-3, 8.66e-3, 8.66e-3}, {1.48e-3, 1.52e-3, 1.52e-3, 1.52e-3},
        {4.32e-9, 4.52e-9, 4.52e-9, 4.52e-9}};
    Outcome out;
    std::ostringstream detail;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].K != expect_k[i]) {
            out.pass = false;
            detail << " K(rho=" << rows[i].rho << ")=" << rows[i].K << " want " << expect_k[i]
                   << ";";
        }
        for (int c = 0; c < 4; ++c) {
            if (!match_3sig(rows[i].phi[c], expect_phi[i][c])) {
                out.pass = false;
                detail << " phi(rho=" << rows[i].rho << ",col" << c
                       << ")=" << fmt(rows[i].phi[c]) << " want " << fmt(expect_phi[i][c])
                       << ";";
            }
        }
    }
    out.detail = out.pass ? "all 5 K values and 20 phi_bar cells match at 3 significant digits"
                          : detail.str();
    return out;
}

// --- criterion 2 -----------------------------------------------------------

Outcome criterion_table_beta() {
    RunConfig cfg;
    const auto rows = cmd_table_beta(cfg);  // 4 rules per rho, rules in pow order
    const std::vector<std::array<double, 4>> expect_phi{
        {2.03e-2, 2.23e-2, 2.65e-2, 3.09e-2}, {2.70e-2, 3.65e-2, 5.34e-2, 6.50e-2},
        {2.37e-2, 3.70e-2, 4.77e-2, 4.92e-2}, {8.87e-3, 2.10e-2, 3.11e-2, 2.13e-2},
        {1.81e-4, 2.11e-3, 1.86e-3, 2.67e-5}};
    const std::vector<std::array<double, 4>> expect_inv{
        {5.20e1, 4.99e1, 4.66e1, 4.44e1}, {5.24e1, 5.48e1, 7.49e1, 1.23e2},
        {1.34e2, 2.70e2, 2.10e3, 2.03e4}, {5.04e2, 9.53e2, 1.29e4, 3.76e5},
        {5.52e4, 4.74e4, 5.39e6, 3.74e10}};
    Outcome out;
    std::ostringstream detail;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t r = i / 4, c = i % 4;
        if (!match_3sig(rows[i].phi_bar, expect_phi[r][c])) {
            out.pass = false;
            detail << " phi(rho=" << rows[i].rho << "," << rows[i].rule
                   << ")=" << fmt(rows[i].phi_bar) << " want " << fmt(expect_phi[r][c]) << ";";
        }
        if (!match_3sig(rows[i].inv_beta_phi, expect_inv[r][c])) {
            out.pass = false;
            detail << " 1/(beta phi)(rho=" << rows[i].rho << "," << rows[i].rule
                   << ")=" << fmt(rows[i].inv_beta_phi) << " want " << fmt(expect_inv[r][c])
                   << ";";
        }
    }
    out.detail = out.pass ? "all 20 phi_bar and 20 1/(beta phi_bar) cells match at 3 "
                            "significant digits"
                          : detail.str();
    return out;
}

// --- criterion 3 -----------------------------------------------------------

Outcome criterion_table_x() {
    RunConfig cfg;
    const auto rows = cmd_table_x(cfg);
    const std::vector<double> expect{1.111e-4, 0.001, 0.009, 0.019, 0.099};
    Outcome out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double rel = std::abs(rows[i].x - expect[i]) / expect[i];
        if (rel > 5e-4) {
            out.pass = false;
            out.detail += " x(rho=" + std::to_string(rows[i].rho) + ")=" + fmt(rows[i].x) + ";";
        }
    }
    if (out.pass) out.detail = "x = 1e-3/(1/rho - 1) reproduced on the whole grid";
    return out;
}

// --- criterion 4 -----------------------------------------------------------

Outcome criterion_bound_validity() {
    SuiteOptions opt;  // retrial s=2, rho=0.5, beta=1-rho, n in 10..200, n_ref=600
    const SuiteReport rep = run_bound_validity_suite(opt);
    Outcome out;
    std::ostringstream detail;
    for (const auto& line : rep.lines) {
        const bool required = line.name == "truncation_error_le_EN" ||
                              line.name == "relative_error_cv_le_EN" ||
                              line.name == "EN_le_EN_sharp" || line.name == "npi_f_le_b" ||
                              line.name == "E_le_E_plus";
        if (required && !line.pass) {
            out.pass = false;
            detail << ' ' << line.name << " margin " << fmt(line.margin) << ';';
        }
    }
    out.detail = out.pass
                     ? "zero violations over n = 10..200 against the n_ref = 600 reference"
                     : detail.str();
    return out;
}

// --- criterion 5 -----------------------------------------------------------

Outcome criterion_solver_equivalence() {
    std::mt19937 rng(20240811);
    std::uniform_int_distribution<int> phase_d(1, 4), depth_d(1, 6), n_d(1, 40);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Outcome out;
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int phases = phase_d(rng), depth = depth_d(rng), n = n_d(rng);
        std::vector<LdqbdLevel> levels;
        for (int k = 0; k < depth; ++k) {
            auto rand_mat = [&](int r, int c) {
                Matrix m(r, c);
                for (int i = 0; i < r; ++i)
                    for (int j = 0; j < c; ++j) m(i, j) = u(rng);
                return m;
            };
            levels.push_back(
                {rand_mat(phases, phases), rand_mat(phases, phases), rand_mat(phases, phases)});
        }
        const BlockGenerator gen = ldqbd_generator(std::move(levels), true);
        const TruncatedStationary gaver = solve_stationary_ldqbd(gen, n);
        const TruncatedStationary dense = solve_stationary_dense(lc_block_augment(gen, n));
        worst = std::max(worst, (gaver.flat - dense.flat).cwiseAbs().maxCoeff());
    }
    if (worst > 1e-10) {
        out.pass = false;
        out.detail = "max recursion-vs-dense difference " + fmt(worst);
    }

    double worst_mm1 = 0.0;
    for (int n : {5, 25, 60}) {
        const TruncatedStationary pi = solve_stationary_ldqbd(mm1_generator(1.0, 2.0), n);
        for (int k = 0; k <= n; ++k) {
            const double law = 0.5 * std::pow(0.5, k) / (1.0 - std::pow(0.5, n + 1));
            worst_mm1 = std::max(worst_mm1, std::abs(pi(k, 0) - law));
        }
    }
    if (worst_mm1 > 1e-12) {
        out.pass = false;
        out.detail += " M/M/1 law deviation " + fmt(worst_mm1);
    }
    if (out.pass)
        out.detail = "50 random LD-QBDs within " + fmt(worst) + "; M/M/1 law within " +
                     fmt(worst_mm1);
    return out;
}

// --- criterion 6 -----------------------------------------------------------

Outcome criterion_resolvent_properties() {
    Outcome out;
    const RetrialParams p{2, 1.0, 1.0, 1.0};
    const BlockGenerator gen = retrial_generator(p);
    const ExponentialCertificate cert = retrial_certificate(p, retrial_default_tuning(0.5));

    double prev = -1.0;
    double worst_drop = 0.0;
    for (int offset : {0, 10, 50, 100}) {
        const double phi =
            resolvent_summary(northwest_truncation(gen, std::max(cert.K + offset, 1)), cert.K,
                              0.5)
                .phi_bar;
        worst_drop = std::max(worst_drop, prev - phi);
        prev = phi;
    }
    if (worst_drop > 1e-14) {
        out.pass = false;
        out.detail = "phi_bar decreased by " + fmt(worst_drop) + " along N;";
    }

    const FiniteQMatrix nw = northwest_truncation(mm1_generator(1.0, 2.0), 20);
    std::vector<int> all(nw.order());
    for (int i = 0; i < nw.order(); ++i) all[i] = i;
    const Matrix direct = resolvent_rows(nw, 1.0, all);
    const Matrix neumann = resolvent_neumann(nw, 1.0, 1e-13, 2000000, all);
    const double diff = (direct - neumann).cwiseAbs().maxCoeff();
    if (diff > 1e-11) {
        out.pass = false;
        out.detail += " Neumann-vs-direct difference " + fmt(diff) + ";";
    }

    const FiniteQMatrix cons = lc_block_augment(gen, 15);
    std::vector<int> rows(cons.order());
    for (int i = 0; i < cons.order(); ++i) rows[i] = i;
    const Matrix phi_rows = resolvent_rows(cons, 0.7, rows);
    double worst_sum = 0.0;
    for (int r = 0; r < phi_rows.rows(); ++r)
        worst_sum = std::max(worst_sum, std::abs(phi_rows.row(r).sum() - 1.0));
    if (worst_sum > 1e-12) {
        out.pass = false;
        out.detail += " conservative row sums off by " + fmt(worst_sum) + ";";
    }

    if (out.pass)
        out.detail = "monotone in N (worst drop " + fmt(worst_drop) +
                     "), Neumann agrees within " + fmt(diff) + ", row sums within " +
                     fmt(worst_sum);
    return out;
}

// --- criterion 7 -----------------------------------------------------------

Outcome criterion_deviation_oracle() {
    Outcome out;
    const RetrialParams p{2, 1.0, 1.0, 1.0};
    const BlockGenerator gen = retrial_generator(p);
    const RetrialTuning t = retrial_default_tuning(0.5, 1.25);
    const ExponentialCertificate cert = retrial_certificate(p, t);
    const int n = 9;  // 30 states
    const FiniteQMatrix qn = lc_block_augment(gen, n);
    const DeviationMatrixFinite dev = deviation_matrix_finite(qn);

    const Matrix qd = qn.to_dense();
    const int m = qn.order();
    const double r1 =
        (-qd * dev.d - (Matrix::Identity(m, m) - Vector::Ones(m) * dev.pi.flat.transpose()))
            .cwiseAbs()
            .maxCoeff();
    const double r2 = (dev.pi.flat.transpose() * dev.d).cwiseAbs().maxCoeff();
    if (r1 > 1e-8 || r2 > 1e-8) {
        out.pass = false;
        out.detail = "Poisson residuals " + fmt(r1) + ", " + fmt(r2) + ";";
    }

    // |D| e <= (pi e + 1)[ v + (pi v + 2b/(beta phi_bar)) e ] on the finite
    // surrogate, with its exact pi, v-moment, and resolvent.
    const double beta = 0.5;
    const ResolventSummary phi = resolvent_summary(qn, cert.K, beta);
    double pi_v = 0.0;
    for (int k = 0; k <= n; ++k) pi_v += dev.pi.level(k).dot(cert.v(k));
    const double shift = pi_v + 2.0 * cert.b / (beta * phi.phi_bar);
    const Vector lhs = dev.d.cwiseAbs() * Vector::Ones(m);
    double worst = -1e300;
    for (int k = 0; k <= n; ++k) {
        const Vector rhs = 2.0 * (cert.v(k).array() + shift).matrix();
        worst = std::max(
            worst,
            (lhs.segment(qn.layout().level_offset(k), qn.layout().level_size(k)) - rhs)
                .maxCoeff());
    }
    if (worst > 1e-6) {
        out.pass = false;
        out.detail += " deviation bound violated by " + fmt(worst) + ";";
    }
    if (out.pass)
        out.detail = "Poisson residuals " + fmt(std::max(r1, r2)) +
                     "; deviation bound slack " + fmt(-worst);
    return out;
}

// --- criterion 8 -----------------------------------------------------------

Outcome criterion_perturbation() {
    Outcome out;
    const RetrialParams p{2, 1.0, 1.0, 1.0};
    RetrialParams p_star = p;
    p_star.lambda *= 1.0 + 1e-4;
    const RetrialTuning t = retrial_default_tuning(0.5, 1.1);
    const ExponentialCertificate cert = retrial_certificate(p, t);
    const BlockGenerator gen = retrial_generator(p);
    const double beta = 0.5;

    const ResolventSummary phi =
        resolvent_summary(northwest_truncation(gen, cert.K + 100), cert.K, beta);
    const PerturbationReport rep =
        perturbation_report_exp(retrial_generator(p_star), gen, cert, phi, 620);
    if (!rep.feasible) {
        out.pass = false;
        out.detail = "C delta = " + fmt(rep.c_value * rep.norm_delta) + " >= 1;";
        return out;
    }

    const TruncatedStationary pi = reference_stationary(gen, 600, 1e-12);
    const TruncatedStationary pi_star =
        reference_stationary(retrial_generator(p_star), 600, 1e-12);
    double dist = 0.0;
    for (int k = 0; k <= 600; ++k)
        dist += (pi.level(k) - pi_star.level(k)).cwiseAbs().dot(cert.v(k));
    if (dist > *rep.bound) {
        out.pass = false;
        out.detail += " true v-distance " + fmt(dist) + " exceeds bound " + fmt(*rep.bound) + ";";
    }

    double prev = std::numeric_limits<double>::infinity();
    double worst_rise = 0.0;
    for (int offset : {10, 50, 100}) {
        const double c_val = C_constant(
            cert, resolvent_summary(northwest_truncation(gen, cert.K + offset), cert.K, beta));
        worst_rise = std::max(worst_rise, c_val - prev);
        prev = c_val;
    }
    if (worst_rise > 1e-12) {
        out.pass = false;
        out.detail += " C increased by " + fmt(worst_rise) + " along N;";
    }
    if (out.pass)
        out.detail = "C delta = " + fmt(rep.c_value * rep.norm_delta) + " < 1, distance " +
                     fmt(dist) + " <= bound " + fmt(*rep.bound) + ", C nonincreasing in N";
    return out;
}

// --- criterion 9 -----------------------------------------------------------

Outcome criterion_decay_rate() {
    Outcome out;
    const RetrialParams p{2, 1.0, 1.0, 1.0};
    const RetrialPipeline pipe = retrial_pipeline(p, 1.5, 0.9, 0.5, 100);
    auto sharp_at = [&](int n) {
        return retrial_bound_sharp(p, pipe.tuning, pipe.cert, pipe.sharp, pipe.phi, n);
    };
    const double ratio = sharp_at(101) / sharp_at(100);
    const double target = pipe.tuning.alpha / pipe.tuning.alpha_sharp;
    const double err = std::abs(ratio - target);
    out.pass = err <= 1e-6;
    out.detail = "ratio at n=100 is " + fmt(ratio) + ", alpha/alpha# = " + fmt(target) +
                 ", |diff| = " + fmt(err);
    return out;
}

}  // namespace

int main() {
    struct Entry {
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Entry> criteria{
        {"1 K and phi_bar table (s=eta=50, beta=1)", criterion_table_kphi},
        {"2 beta impact tables", criterion_table_beta},
        {"3 x table", criterion_table_x},
        {"4 bound validity (retrial s=2, n=10..200)", criterion_bound_validity},
        {"5 solver equivalence (50 random LD-QBDs + M/M/1 law)", criterion_solver_equivalence},
        {"6 resolvent properties", criterion_resolvent_properties},
        {"7 deviation-matrix oracle (30-state surrogate)", criterion_deviation_oracle},
        {"8 perturbation bound validity", criterion_perturbation},
        {"9 sharp decay rate alpha/alpha#", criterion_decay_rate},
    };

    int failures = 0;
    for (const Entry& entry : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = entry.run();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s criterion %s — %s [%.1fs]\n", out.pass ? "PASS" : "FAIL", entry.name,
                    out.detail.c_str(), secs);
        std::fflush(stdout);
        if (!out.pass) ++failures;
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
