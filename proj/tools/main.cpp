// Command-line front end: stationary solves, resolvent summaries, error
// bound curves, perturbation reports, and the table/figure sweeps.
//
// Exit codes: 0 success, 2 infeasible precondition, 3 numerical failure.

#include <lctrunc/cli.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>

namespace {

using namespace lctrunc;

std::unique_ptr<std::ofstream> open_out(const std::string& path) {
    if (path.empty()) return nullptr;
    auto f = std::make_unique<std::ofstream>(path);
    if (!*f) throw StructureError("cannot open output file: " + path);
    return f;
}

std::ostream& sink(std::unique_ptr<std::ofstream>& f) {
    return f ? static_cast<std::ostream&>(*f) : std::cout;
}

std::string normalize_beta_rule(const std::string& rule) {
    // a bare number means a fixed beta
    return rule.find_first_not_of("0123456789.eE+-") == std::string::npos ? "fixed:" + rule
                                                                          : rule;
}

std::vector<int> parse_n_range(const std::string& spec) {
    // "a..b" or comma-separated list
    std::vector<int> out;
    const auto dots = spec.find("..");
    if (dots != std::string::npos) {
        const int a = std::stoi(spec.substr(0, dots));
        const int b = std::stoi(spec.substr(dots + 2));
        for (int n = a; n <= b; ++n) out.push_back(n);
        return out;
    }
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

RetrialParams require_retrial(const LoadedModel& model) {
    if (!model.retrial)
        throw InfeasibleError("this command requires a retrial model descriptor");
    return *model.retrial;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stationary distributions and error bounds for last-column-block-augmented "
                 "truncations of block-structured Markov chains"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string model_path, out_path, n_spec, beta_spec = "one_minus_rho", kinds_spec = "EN,EN_sharp";
    std::string model_star_path, k_spec = "auto", figure_name = "fig7";
    int levels = 50, solve_n = 50;
    double tol = 1e-10;
    bool bounds_suite = false;
    double rho_override = -1.0;

    app.add_option("--threads", cfg.threads, "worker threads for resolvent row solves");

    auto add_model = [&](CLI::App* cmd) {
        cmd->add_option("--model", model_path, "model descriptor JSON")->required();
    };
    auto add_out = [&](CLI::App* cmd) {
        cmd->add_option("--out", out_path, "output path (default stdout)");
    };
    auto add_beta = [&](CLI::App* cmd) {
        cmd->add_option("--beta", beta_spec,
                        "beta rule: number | one_minus_rho | pow:<p>");
    };

    CLI::App* validate = app.add_subcommand("validate", "q-matrix structure checks");
    validate->add_option("--model", model_path, "model descriptor JSON");
    validate->add_option("--levels", levels, "levels to inspect");
    validate->add_option("--tol", tol, "conservativeness tolerance");
    validate->add_flag("--bounds", bounds_suite, "run the bound-validity suite instead");

    CLI::App* solve = app.add_subcommand("solve", "stationary vector of the truncation");
    add_model(solve);
    add_out(solve);
    solve->add_option("--n", solve_n, "truncation level")->required();

    CLI::App* phi_cmd = app.add_subcommand("phi", "resolvent summary phi_bar");
    add_model(phi_cmd);
    add_out(phi_cmd);
    add_beta(phi_cmd);
    phi_cmd->add_option("--rho", rho_override, "override lambda = rho * s * mu");
    phi_cmd->add_option("--K", k_spec, "drift level (auto = from certificate)");
    phi_cmd->add_option("--N-offset", cfg.n_offset, "N = K + offset");
    phi_cmd->add_option("--alpha", cfg.alpha, "certificate tuning alpha");

    CLI::App* bounds_cmd = app.add_subcommand("bounds", "error bound curves");
    add_model(bounds_cmd);
    add_out(bounds_cmd);
    add_beta(bounds_cmd);
    bounds_cmd->add_option("--kind", kinds_spec, "comma list of bound kinds");
    bounds_cmd->add_option("--n", n_spec, "n grid: a..b or comma list")->required();
    bounds_cmd->add_option("--alpha", cfg.alpha, "certificate tuning alpha");
    bounds_cmd->add_option("--alpha-sharp-frac", cfg.alpha_sharp_fraction,
                           "alpha# = alpha + frac (1/rho - alpha)");
    bounds_cmd->add_option("--n-offset", cfg.n_offset, "N = K + offset");

    CLI::App* perturb = app.add_subcommand("perturb", "perturbation bound report");
    add_model(perturb);
    add_out(perturb);
    add_beta(perturb);
    perturb->add_option("--model-star", model_star_path, "perturbed model")->required();
    perturb->add_option("--levels", levels, "levels sampled for the v-norm");
    perturb->add_option("--alpha", cfg.alpha, "certificate tuning alpha");
    perturb->add_option("--n-offset", cfg.n_offset, "N = K + offset");

    CLI::App* tk = app.add_subcommand("table-kphi", "K and phi_bar sweep over rho");
    add_out(tk);
    tk->add_option("--rho", cfg.rho_grid, "rho grid");
    tk->add_option("--s", cfg.s, "servers (= eta)");
    tk->add_option("--beta", cfg.beta_rule, "beta rule");

    CLI::App* tb = app.add_subcommand("table-beta", "impact of beta on phi_bar");
    add_out(tb);
    tb->add_option("--rho", cfg.rho_grid, "rho grid");
    tb->add_option("--s", cfg.s, "servers (= eta)");
    tb->add_option("--n-offset", cfg.n_offset, "N = K + offset");

    CLI::App* tx = app.add_subcommand("table-x", "x for which alpha = 1 + 1e-3");
    add_out(tx);
    tx->add_option("--rho", cfg.rho_grid, "rho grid");

    CLI::App* figure = app.add_subcommand("figure", "figure data sweeps");
    add_out(figure);
    figure->add_option("--name", figure_name, "fig1|fig2|fig4|fig5|fig6|fig7");
    figure->add_option("--rho", cfg.rho_grid, "rho grid (fig1/2/5/6)");
    figure->add_option("--n", n_spec, "n grid");
    figure->add_option("--beta", cfg.beta_rule, "beta rule");
    figure->add_option("--s", cfg.s, "servers (= eta)");
    figure->add_option("--n-offset", cfg.n_offset, "N = K + offset");

    CLI11_PARSE(app, argc, argv);

    try {
        cfg.eta = cfg.s;  // sweep convention: eta tracks s
        auto out_file = open_out(out_path);
        std::ostream& out = sink(out_file);

        if (validate->parsed()) {
            if (bounds_suite) {
                SuiteOptions opt;
                opt.threads = cfg.threads;
                const SuiteReport rep = run_bound_validity_suite(opt);
                write_suite_report(rep, std::cout);
                return rep.all_pass ? 0 : 3;
            }
            if (model_path.empty())
                throw StructureError("validate: --model is required without --bounds");
            const LoadedModel model = load_model_file(model_path);
            const ValidationReport rep = validate_qmatrix(model.generator, levels, tol);
            std::cout << (rep.pass ? "PASS" : "FAIL") << " max row defect "
                      << format_sci(rep.max_defect) << " at (" << rep.worst_level << ","
                      << rep.worst_phase << "); " << rep.negatives.size()
                      << " negative off-diagonal entries\n";
            return rep.pass ? 0 : 3;
        }
        if (solve->parsed()) {
            const LoadedModel model = load_model_file(model_path);
            TruncatedStationary pi;
            if (model.retrial)
                pi = solve_stationary_retrial_rank1(*model.retrial, solve_n);
            else
                pi = solve_stationary_ldqbd(model.generator, solve_n);
            stationary_to_csv(pi, out);
            return 0;
        }
        if (phi_cmd->parsed()) {
            const LoadedModel model = load_model_file(model_path);
            RetrialParams p = require_retrial(model);
            if (rho_override > 0) p.lambda = rho_override * p.s * p.mu;
            const double beta = beta_from_rule(normalize_beta_rule(beta_spec), p.rho());
            PhiResult res;
            if (k_spec == "auto") {
                res = cmd_phi(p, cfg.alpha, beta, cfg.n_offset, cfg.threads);
            } else {
                const int K = std::stoi(k_spec);
                const FiniteQMatrix nw =
                    northwest_truncation(retrial_generator(p), K + cfg.n_offset);
                ResolventOptions opts;
                opts.threads = cfg.threads;
                const ResolventSummary sum = resolvent_summary(nw, K, beta, opts);
                res = {K, sum.N, sum.phi_bar, 1.0 / (beta * sum.phi_bar)};
            }
            out << phi_result_to_json(res).dump(2) << '\n';
            return 0;
        }
        if (bounds_cmd->parsed()) {
            const LoadedModel model = load_model_file(model_path);
            const RetrialParams p = require_retrial(model);
            std::vector<BoundKind> kinds;
            std::stringstream ss(kinds_spec);
            std::string tok;
            while (std::getline(ss, tok, ',')) kinds.push_back(bound_kind_from_string(tok));
            const double beta = beta_from_rule(normalize_beta_rule(beta_spec), p.rho());
            const auto rows =
                cmd_bounds_retrial(p, kinds, parse_n_range(n_spec), cfg.alpha,
                                   cfg.alpha_sharp_fraction, beta, cfg.n_offset, cfg.threads);
            write_bounds_csv(rows, out);
            return 0;
        }
        if (perturb->parsed()) {
            const LoadedModel model = load_model_file(model_path);
            const LoadedModel model_star = load_model_file(model_star_path);
            const RetrialParams p = require_retrial(model);
            const double beta = beta_from_rule(normalize_beta_rule(beta_spec), p.rho());
            const RetrialTuning t = retrial_default_tuning(p.rho(), cfg.alpha);
            const ExponentialCertificate cert = retrial_certificate(p, t);
            ResolventOptions opts;
            opts.threads = cfg.threads;
            const ResolventSummary phi = resolvent_summary(
                northwest_truncation(model.generator, cert.K + cfg.n_offset), cert.K, beta,
                opts);
            const PerturbationReport rep = perturbation_report_exp(
                model_star.generator, model.generator, cert, phi, levels);
            json doc{{"norm_delta", rep.norm_delta},
                     {"C", rep.c_value},
                     {"feasible", rep.feasible},
                     {"norm_levels", rep.norm_levels},
                     {"norm_stabilized", rep.norm_stabilized}};
            if (rep.bound) doc["bound"] = *rep.bound;
            out << doc.dump(2) << '\n';
            return rep.feasible ? 0 : 2;
        }
        if (tk->parsed()) {
            write_table_kphi_csv(cmd_table_kphi(cfg), out);
            return 0;
        }
        if (tb->parsed()) {
            write_table_beta_csv(cmd_table_beta(cfg), out);
            return 0;
        }
        if (tx->parsed()) {
            write_table_x_csv(cmd_table_x(cfg), out);
            return 0;
        }
        if (figure->parsed()) {
            if (!n_spec.empty()) cfg.n_grid = parse_n_range(n_spec);
            if (cfg.n_grid.empty() && figure_name != "fig1" && figure_name != "fig2")
                for (int n = 1; n <= 200; ++n) cfg.n_grid.push_back(n);
            write_figure_csv(cmd_figure(cfg, figure_name), out);
            return 0;
        }
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
