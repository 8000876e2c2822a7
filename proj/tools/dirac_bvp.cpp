// Command-line front end: loads JSON problem files, dispatches to the solver
// modules, and writes JSON reports and plot-ready CSV.

#include "dirac_bvp/acceptance.hpp"
#include "dirac_bvp/bvp_model.hpp"
#include "dirac_bvp/bvp_perturbed.hpp"
#include "dirac_bvp/error.hpp"
#include "dirac_bvp/fredholm.hpp"
#include "dirac_bvp/io.hpp"
#include "dirac_bvp/parallel.hpp"
#include "dirac_bvp/poincare.hpp"
#include "dirac_bvp/spectral.hpp"
#include "dirac_bvp/torus.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace dbvp;

namespace {

struct Options {
    std::uint64_t seed = 42;
    int threads = 0;
    std::string input;
    std::string out;
    std::string csv;
    std::string refine = "16,32,64";
    double eta_slack = 1.0;
    std::string criteria;
    // poincare
    std::string kind;
    int n = 3;
    std::string ratio = "2pi";
    int grid = 4096;
    std::string bc = "logneumann";
};

std::vector<int> parse_int_list(const std::string& text, const std::string& flag) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw Error(ErrorKind::ConfigError, flag + ": cannot parse '" + item + "'");
        }
    }
    return out;
}

Json load_config(const Options& opt) {
    if (opt.input.empty()) throw Error(ErrorKind::ConfigError, "--input: a problem file is required");
    Json root = load_json_file(opt.input);
    check_schema_version(ConfigNode(root, ""));
    return root;
}

// Writes the report and returns the exit status.
int finish(const Options& opt, Json report) {
    const bool ok = all_inequalities_hold(report);
    report["all_checks_hold"] = ok;
    const std::string text = report.dump(2) + "\n";
    if (opt.out.empty()) {
        std::cout << text;
    } else {
        write_text_file(opt.out, text);
    }
    return ok ? 0 : 1;
}

Json header(const std::string& command, const Options& opt) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = command;
    j["seed"] = opt.seed;
    return j;
}

int cmd_spectrum(const Options& opt) {
    const Json root = load_config(opt);
    const ConfigNode node(root, "");
    const SpectrumSetup spectrum = spectrum_from_config(node.at("spectrum"));
    Json report = header("spectrum", opt);
    Json lambdas = Json::array();
    for (const auto& m : spectrum.modes) lambdas.push_back(m.lambda);
    report["eigenvalues"] = lambdas;
    if (node.has("kappa")) {
        const double delta = node.number_or("delta", 1.0);
        std::optional<std::vector<int>> hat;
        if (node.has("lambda_hat")) hat = node.at("lambda_hat").int_list();
        report["partition"] = partition_json(
            SpectralPartition::build(spectrum.modes, node.at("kappa").number(), delta, hat));
    }
    return finish(opt, report);
}

int cmd_solve(const Options& opt) {
    const Json root = load_config(opt);
    const ModelSetup setup = model_from_config(ConfigNode(root, ""), opt.seed);
    const SolveReport rep = solve_model(setup.problem);
    Json report = header("solve", opt);
    report["partition"] = partition_json(setup.problem.bc.partition);
    report["k_bound"] = setup.problem.bc.k_bound;
    report["solve"] = solve_report_json(rep);
    if (setup.chiral) {
        report["chiral"]["kernel_distance"] = setup.chiral->kernel_distance;
        report["chiral"]["checks"] =
            Json::array({inequality("kernel_distance", setup.chiral->kernel_distance, 1e-10)});
    }
    if (!opt.csv.empty()) write_text_file(opt.csv, field_csv(rep.u));
    return finish(opt, report);
}

int cmd_perturbed(const Options& opt) {
    const Json root = load_config(opt);
    const ConfigNode node(root, "");
    const ModelSetup setup = model_from_config(node, opt.seed);
    const Perturbation b = perturbation_from_config(
        node.at("perturbation"), setup.problem.f.grid,
        static_cast<Eigen::Index>(setup.problem.bc.partition.size()));
    const double tol = node.number_or("tol", 1e-10);
    const int max_iter = node.integer_or("max_iter", 200);
    const IterationReport rep = solve_perturbed(setup.problem, b, tol, max_iter);
    Json report = header("perturbed", opt);
    report["partition"] = partition_json(setup.problem.bc.partition);
    report["iteration"] = iteration_report_json(rep);
    if (!opt.csv.empty()) write_text_file(opt.csv, field_csv(rep.u));
    return finish(opt, report);
}

int cmd_torus(const Options& opt) {
    const Json root = load_config(opt);
    const TorusSetup setup = torus_from_config(ConfigNode(root, ""), opt.seed);
    Json report = header("torus", opt);
    report["eta"] = setup.op0.eta;
    const InversionReport inv = invert_constant(setup.f, setup.op0);
    const double ratio = std::sqrt(h1_norm_sq(inv.u)) * setup.op0.eta / std::sqrt(l2_norm_sq(setup.f));
    report["constant"]["min_singular_value"] = inv.min_singular_value;
    report["constant"]["max_condition"] = inv.max_condition;
    report["constant"]["checks"] = Json::array({
        inequality("multiplier_bound", ratio, std::sqrt(5.0)),
        inequality("symbol_lower_bound_excess", inv.multiplier_excess, 1e-9),
    });
    const VariableSolveReport rep =
        solve_variable(setup.f, setup.coeffs, setup.op0, setup.tol, setup.max_iter, setup.b_fraction, opt.eta_slack);
    Json v;
    v["iterations"] = rep.iterations;
    v["converged"] = rep.converged;
    v["b0_norm"] = rep.b0_norm;
    v["b0_adjoint_norm"] = rep.b0_adjoint_norm;
    v["guard"] = rep.guard;
    v["step_norms"] = to_json(rep.step_norms);
    v["contraction_ratios"] = to_json(rep.contraction_ratios);
    v["residual_l2"] = rep.residual_l2;
    v["h1_norm"] = rep.h1_norm;
    v["apriori_constant"] = rep.apriori_constant;
    v["checks"] = Json::array({
        inequality("b0_guard", rep.b0_norm, rep.guard),
        inequality("apriori_estimate", rep.h1_norm, rep.apriori_rhs),
    });
    report["variable"] = v;
    if (!opt.csv.empty()) {
        std::vector<std::vector<double>> rows;
        for (int idx = 0; idx < rep.u.lattice_size(); ++idx) {
            const Wavevector k = rep.u.wavevector(idx);
            for (int a = 0; a < rep.u.components; ++a) {
                const auto c = rep.u.coeffs[static_cast<std::size_t>(idx)](a);
                rows.push_back({double(k[0]), double(k[1]), double(a), c.real(), c.imag()});
            }
        }
        write_text_file(opt.csv, to_csv({"k1", "k2", "component", "re", "im"}, rows));
    }
    return finish(opt, report);
}

int cmd_fredholm(const Options& opt) {
    const Json root = load_config(opt);
    const ConfigNode node(root, "");
    const ModelSetup setup = model_from_config(node, opt.seed);
    const bool degenerate = node.boolean_or("degenerate", false);
    const auto n = static_cast<Eigen::Index>(setup.problem.bc.partition.size());
    Json report = header("fredholm", opt);
    Json levels = Json::array();
    Json checks = Json::array();
    std::optional<Eigen::Index> first_index;
    for (int cells : parse_int_list(opt.refine, "--refine")) {
        const Grid grid = make_grid(setup.problem.bc.partition.delta(), cells);
        std::optional<Perturbation> b;
        if (node.has("perturbation")) b = perturbation_from_config(node.at("perturbation"), grid, n);
        const DiscreteSystem sys = assemble(setup.problem.bc, b ? &*b : nullptr, cells, degenerate);
        const KernelPair kp = kernel_and_cokernel(sys);
        Json level;
        level["cells"] = cells;
        level["dim_kernel"] = kp.kernel.dim();
        level["dim_cokernel"] = kp.cokernel.dim();
        level["index"] = kp.index();
        if (kp.cokernel.dim() > 0) {
            const AdjointTraces tr = adjoint_traces(sys, kp.cokernel);
            checks.push_back(inequality("adjoint_left_residual_M" + std::to_string(cells), tr.left_residual, 1e-8));
            checks.push_back(inequality("adjoint_right_residual_M" + std::to_string(cells), tr.right_residual, 1e-8));
        }
        // Problem data at the same grid: f resampled only when the grid matches.
        if (cells == setup.problem.f.grid.cells) {
            const SolvabilityReport sr =
                solvability_check(sys, kp.cokernel, sys.rhs(setup.problem.f, setup.problem.bc.sigma));
            level["data_solvable"] = sr.solvable;
            level["data_residual_against_cokernel"] = sr.residual_against_cokernel;
            level["data_lsq_residual"] = sr.lsq_residual;
            checks.push_back(inequality("verdict_disagreement_M" + std::to_string(cells),
                                        sr.solvable == sr.lsq_consistent ? 0.0 : 1.0, 0.0));
        }
        if (!first_index) first_index = kp.index();
        checks.push_back(inequality("index_change_M" + std::to_string(cells),
                                    std::abs(double(kp.index() - *first_index)), 0.0));
        levels.push_back(level);
    }
    report["levels"] = levels;
    report["checks"] = checks;
    return finish(opt, report);
}

int cmd_poincare(const Options& opt) {
    RayleighProblem p;
    Json root;
    if (!opt.input.empty()) {
        root = load_config(opt);
        p = rayleigh_from_config(ConfigNode(root, ""));
    } else {
        root["kind"] = opt.kind;
        root["n"] = opt.n;
        root["ratio"] = opt.ratio;
        root["grid"] = opt.grid;
        root["bc"] = opt.bc;
        p = rayleigh_from_config(ConfigNode(root, ""));
    }
    const bool hardy = p.kind == RayleighKind::Hardy;
    const double computed = hardy ? hardy_rayleigh_min(p) : mckean_rayleigh_min(p);
    const double oracle = log_substitution_value(p);
    const double floor = weight_floor(p.kind, p.n).coefficient;
    Json report = header("poincare", opt);
    report["kind"] = hardy ? "hardy" : "mckean";
    report["n"] = p.n;
    report["log_ratio"] = p.log_length();
    report["grid"] = p.points;
    report["computed_minimum"] = computed;
    report["oracle"] = oracle;
    report["gap"] = computed - oracle;
    report["floor"] = floor;
    report["checks"] = Json::array({
        inequality("relative_gap", std::abs(computed - oracle) / oracle, 0.01),
        inequality("floor_violation", floor - 1e-8 - computed, 0.0),
    });
    return finish(opt, report);
}

int cmd_verify_all(const Options& opt) {
    const std::vector<int> which = opt.criteria.empty() ? std::vector<int>{} : parse_int_list(opt.criteria, "--criteria");
    const AcceptanceRun run = run_acceptance(opt.seed, thread_count(), which);
    for (const auto& r : run.results) std::cerr << summary_line(r) << "\n";
    const std::string text = acceptance_json(run, opt.seed).dump(2) + "\n";
    if (opt.out.empty()) {
        std::cout << text;
    } else {
        write_text_file(opt.out, text);
    }
    return run.passed() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral boundary value problem solvers and property checks"};
    app.require_subcommand(1);
    Options opt;
    app.add_option("--seed", opt.seed, "Seed for every random draw")->capture_default_str();
    app.add_option("--threads", opt.threads, "Worker threads (default: DIRAC_BVP_THREADS or 1)");
    app.add_option("--out", opt.out, "Report file (default: stdout)");

    auto with_input = [&](CLI::App* sub) {
        sub->add_option("--input,--config", opt.input, "Problem file (JSON)");
        sub->add_option("--out", opt.out, "Report file (default: stdout)");
        sub->add_option("--seed", opt.seed, "Seed for every random draw");
        sub->add_option("--threads", opt.threads, "Worker threads");
        return sub;
    };
    CLI::App* spectrum = with_input(app.add_subcommand("spectrum", "Eigen-decomposition and partition"));
    CLI::App* solve = with_input(app.add_subcommand("solve", "Model problem solve"));
    solve->add_option("--csv", opt.csv, "Write the solution field as CSV");
    CLI::App* perturbed = with_input(app.add_subcommand("perturbed", "Perturbation iteration"));
    perturbed->add_option("--csv", opt.csv, "Write the solution field as CSV");
    CLI::App* torus = with_input(app.add_subcommand("torus", "Torus interior solves"));
    torus->add_option("--eta-slack", opt.eta_slack, "Multiplier on the eta/3 guard")->capture_default_str();
    torus->add_option("--csv", opt.csv, "Write Fourier coefficients as CSV");
    CLI::App* fredholm = with_input(app.add_subcommand("fredholm", "Kernel, cokernel and index"));
    fredholm->add_option("--refine", opt.refine, "Comma-separated cell counts")->capture_default_str();
    CLI::App* poincare = with_input(app.add_subcommand("poincare", "Weighted Rayleigh minima"));
    poincare->add_option("--kind", opt.kind, "hardy or mckean");
    poincare->add_option("--n", opt.n, "Dimension")->capture_default_str();
    poincare->add_option("--ratio", opt.ratio, "Log ratio, e.g. 2pi")->capture_default_str();
    poincare->add_option("--grid", opt.grid, "Grid nodes")->capture_default_str();
    poincare->add_option("--bc", opt.bc, "mckean outer end: logneumann or natural")->capture_default_str();
    CLI::App* verify = app.add_subcommand("verify-all", "Run the acceptance suite");
    verify->add_option("--seed", opt.seed, "Seed for every random draw");
    verify->add_option("--threads", opt.threads, "Worker threads");
    verify->add_option("--out", opt.out, "Report file (default: stdout)");
    verify->add_option("--criteria", opt.criteria, "Comma-separated subset, e.g. 1,3");

    CLI11_PARSE(app, argc, argv);

    try {
        if (opt.threads < 0) throw Error(ErrorKind::ConfigError, "--threads: must be positive");
        if (opt.threads > 0) set_thread_count(opt.threads);
        if (spectrum->parsed()) return cmd_spectrum(opt);
        if (solve->parsed()) return cmd_solve(opt);
        if (perturbed->parsed()) return cmd_perturbed(opt);
        if (torus->parsed()) return cmd_torus(opt);
        if (fredholm->parsed()) return cmd_fredholm(opt);
        if (poincare->parsed()) {
            if (opt.input.empty() && opt.kind.empty()) throw Error(ErrorKind::ConfigError, "--kind: required without --input");
            return cmd_poincare(opt);
        }
        if (verify->parsed()) return cmd_verify_all(opt);
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
