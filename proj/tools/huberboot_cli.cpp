// huberboot: Huber regression with multiplier-bootstrap inference.
//
// Single-run commands (fit, calibrate, ci, mtest) emit JSON; simulation
// commands (sim-coverage, sim-mtest) emit CSV. Diagnostics go to stderr,
// data to --output or stdout. Exit codes: 0 success, 1 numerical or data
// failure, 2 usage error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "huberboot/bootstrap.hpp"
#include "huberboot/calibration.hpp"
#include "huberboot/errors.hpp"
#include "huberboot/io.hpp"
#include "huberboot/multitest.hpp"
#include "huberboot/parallel.hpp"
#include "huberboot/simulate.hpp"
#include "huberboot/solver.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using nlohmann::json;
using namespace huberboot;

struct CliOptions {
    std::string command;
    std::string input;
    std::string output = "-";
    std::string response = "y";
    bool add_intercept = false;
    double tau = 0.0;
    std::string tau_mode;  // simple | adaptive | fixed; empty means command default
    double t = 0.0;        // 0 means log n
    int order = 0;         // 0 means command default
    std::vector<double> alphas;
    int B = 0;  // 0 means command default
    std::string weights = "gaussian";
    std::uint64_t seed = 0;
    int threads = 1;
    double scale = 1.0;
    std::string preset;
    bool inflate_scales = false;

    std::string noise = "gaussian";
    std::string design = "isotropic";
    std::string theta_pattern = "spaced";
    std::vector<std::string> methods;
    long n = 100;
    long d = 5;
    long m = 1000;
    long s = 5;
    double gamma = 3.0;
    int reps = 1000;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

WeightScheme parse_weights(const std::string& name) {
    WeightScheme scheme;
    if (name == "gaussian")
        scheme.kind = WeightKind::Gaussian;
    else if (name == "bernoulli")
        scheme.kind = WeightKind::Bernoulli;
    else if (name == "mix")
        scheme.kind = WeightKind::BerGaussMix;
    else
        throw UsageError("unknown --weights value: " + name);
    return scheme;
}

CoverageMethod parse_method(const std::string& name) {
    if (name == "huber" || name == "huber-simple" || name == "boot-huber")
        return CoverageMethod::HuberSimple;
    if (name == "huber-adaptive" || name == "adaptive" || name == "boot-huber-adaptive")
        return CoverageMethod::HuberAdaptive;
    if (name == "huber-fixed" || name == "fixed" || name == "boot-huber-fixed")
        return CoverageMethod::HuberFixed;
    if (name == "ols" || name == "boot-ols")
        return CoverageMethod::BootOls;
    throw UsageError("unknown method: " + name);
}

ThetaPattern parse_theta_pattern(const std::string& name) {
    if (name == "spaced" || name == "equally-spaced") return ThetaPattern::EquallySpaced;
    if (name == "bernoulli" || name == "ber") return ThetaPattern::BernoulliHalf;
    throw UsageError("unknown --theta-pattern value: " + name);
}

json config_json(const CliOptions& opt) {
    json cfg;
    cfg["command"] = opt.command;
    if (!opt.input.empty()) cfg["input"] = opt.input;
    cfg["output"] = opt.output;
    cfg["seed"] = opt.seed;
    cfg["threads"] = opt.threads;
    if (!opt.tau_mode.empty()) cfg["tau_mode"] = opt.tau_mode;
    if (opt.tau > 0.0) cfg["tau"] = opt.tau;
    if (opt.t > 0.0) cfg["t"] = opt.t;
    if (opt.order > 0) cfg["order"] = opt.order;
    if (opt.B > 0) cfg["b_replications"] = opt.B;
    if (!opt.alphas.empty()) cfg["alpha"] = opt.alphas;
    cfg["weights"] = opt.weights;
    if (!opt.preset.empty()) cfg["preset"] = opt.preset;
    return cfg;
}

// Streams the payload to --output ("-" is stdout). Returns through the
// normal exit path so destructors flush.
void emit(const CliOptions& opt, const std::string& payload) {
    if (opt.output == "-" || opt.output.empty()) {
        std::cout << payload;
        return;
    }
    std::ofstream os(opt.output, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open output file: " + opt.output);
    os << payload;
}

void emit_json(const CliOptions& opt, json& body) {
    body["version"] = kVersion;
    body["seed"] = opt.seed;
    body["config"] = config_json(opt);
    emit(opt, body.dump(2) + "\n");
}

Dataset load_input(const CliOptions& opt) {
    if (opt.input.empty()) throw UsageError(opt.command + " requires --input");
    CsvTable table = load_csv_file(opt.input);
    return dataset_from_table(table, opt.response, opt.add_intercept);
}

double default_t(const CliOptions& opt, Eigen::Index n) {
    return opt.t > 0.0 ? opt.t : std::log(static_cast<double>(n));
}

// Resolves tau for fit/ci according to --tau-mode. Returns the tau and an
// optional warm start from the adaptive path.
double resolve_tau(const CliOptions& opt, const Dataset& data, int default_order,
                   std::optional<Eigen::VectorXd>* warm, json* detail) {
    std::string mode = opt.tau_mode;
    if (mode.empty()) mode = opt.tau > 0.0 ? "fixed" : "simple";

    if (mode == "fixed") {
        if (!(opt.tau > 0.0)) throw UsageError("--tau-mode fixed requires --tau > 0");
        (*detail)["tau_mode"] = "fixed";
        return opt.tau;
    }
    if (mode == "simple") {
        double tau = simple_tau_rule(data, TauPurpose::Bootstrap);
        if (!(tau > 0.0))
            throw degenerate_data_error("simple tau rule degenerate: residuals vanish");
        (*detail)["tau_mode"] = "simple";
        return tau;
    }
    if (mode == "adaptive") {
        IrlsConfig ic;
        ic.t = default_t(opt, data.n());
        ic.order = opt.order > 0 ? opt.order : default_order;
        IrlsResult res = irls_fit(data, ic);
        if (res.degenerate)
            throw degenerate_data_error("adaptive calibration degenerate: residuals vanish");
        if (!res.converged)
            throw convergence_error("adaptive calibration did not converge");
        (*detail)["tau_mode"] = "adaptive";
        (*detail)["irls_iterations"] = res.iterations;
        (*detail)["t"] = ic.t;
        (*detail)["order"] = ic.order;
        *warm = res.theta;
        return res.tau;
    }
    throw UsageError("unknown --tau-mode value: " + mode);
}

int cmd_fit(const CliOptions& opt) {
    Dataset data = load_input(opt);
    json body;
    std::optional<Eigen::VectorXd> warm;
    double tau = resolve_tau(opt, data, 2, &warm, &body);
    FitResult fit = fit_huber(data, tau, {}, nullptr, warm ? &*warm : nullptr);
    body["command"] = "fit";
    body["n"] = data.n();
    body["d"] = data.d();
    body["tau"] = tau;
    body["theta"] = std::vector<double>(fit.theta.data(), fit.theta.data() + fit.theta.size());
    body["objective"] = fit.objective;
    body["grad_norm"] = fit.grad_norm;
    body["iterations"] = fit.iterations;
    body["converged"] = fit.converged;
    emit_json(const_cast<CliOptions&>(opt), body);
    return 0;
}

int cmd_calibrate(const CliOptions& opt) {
    Dataset data = load_input(opt);
    json body;
    body["command"] = "calibrate";
    body["n"] = data.n();
    body["d"] = data.d();
    std::string mode = opt.tau_mode.empty() ? "simple" : opt.tau_mode;
    if (mode == "simple") {
        body["tau_mode"] = "simple";
        body["tau_bootstrap"] = simple_tau_rule(data, TauPurpose::Bootstrap);
        body["tau_estimation"] = simple_tau_rule(data, TauPurpose::Estimation);
    } else if (mode == "adaptive") {
        IrlsConfig ic;
        ic.t = default_t(opt, data.n());
        ic.order = opt.order > 0 ? opt.order : 4;
        IrlsResult res = irls_fit(data, ic);
        body["tau_mode"] = "adaptive";
        body["t"] = ic.t;
        body["order"] = ic.order;
        body["tau"] = res.tau;
        body["theta"] = std::vector<double>(res.theta.data(), res.theta.data() + res.theta.size());
        body["iterations"] = res.iterations;
        body["converged"] = res.converged;
        body["degenerate"] = res.degenerate;
    } else {
        throw UsageError("calibrate supports --tau-mode simple or adaptive");
    }
    emit_json(const_cast<CliOptions&>(opt), body);
    return 0;
}

int cmd_ci(const CliOptions& opt) {
    Dataset data = load_input(opt);
    json body;
    std::optional<Eigen::VectorXd> warm;
    double tau = resolve_tau(opt, data, 4, &warm, &body);

    BootstrapConfig bc;
    bc.B = opt.B > 0 ? opt.B : 2000;
    bc.scheme = parse_weights(opt.weights);
    bc.alpha = opt.alphas.empty() ? 0.1 : opt.alphas.front();
    bc.seed = opt.seed;
    bc.tau = tau;
    bc.threads = opt.threads;
    ConfidenceSet set = run_ci(data, bc);

    body["command"] = "ci";
    body["n"] = data.n();
    body["d"] = data.d();
    body["tau"] = tau;
    body["b_replications"] = bc.B;
    body["failed_replications"] = set.failed_replications;
    body["theta"] = std::vector<double>(set.theta_hat.data(),
                                        set.theta_hat.data() + set.theta_hat.size());
    json thresholds = json::object();
    std::vector<double> alphas = opt.alphas.empty() ? std::vector<double>{0.1} : opt.alphas;
    for (double a : alphas) thresholds[format_full(a)] = bootstrap_threshold(set.excess_samples, a);
    body["alpha"] = alphas;
    body["threshold"] = thresholds;
    emit_json(const_cast<CliOptions&>(opt), body);
    return 0;
}

int cmd_mtest(const CliOptions& opt) {
    if (opt.input.empty()) throw UsageError("mtest requires --input");
    CsvTable table = load_csv_file(opt.input);
    PanelData panel = panel_from_table(table, opt.response);

    MTestConfig mc;
    mc.B = opt.B > 0 ? opt.B : 500;
    mc.alpha = opt.alphas.empty() ? 0.1 : opt.alphas.front();
    mc.scheme = parse_weights(opt.weights);
    mc.seed = opt.seed;
    mc.threads = opt.threads;
    mc.inflate_scales = opt.inflate_scales;
    std::string mode = opt.tau_mode.empty() ? "adaptive" : opt.tau_mode;
    if (mode == "adaptive") {
        mc.tau_rule = MTestTauRule::CubeRoot;
    } else if (mode == "simple") {
        mc.tau_rule = MTestTauRule::Simple;
    } else if (mode == "fixed") {
        if (!(opt.tau > 0.0)) throw UsageError("--tau-mode fixed requires --tau > 0");
        mc.tau_rule = MTestTauRule::Fixed;
        mc.fixed_taus = Eigen::VectorXd::Constant(panel.m(), opt.tau);
    } else {
        throw UsageError("unknown --tau-mode value: " + mode);
    }

    MTestResult res = run_mtest(panel, mc);
    json body;
    body["command"] = "mtest";
    body["n"] = panel.n();
    body["s"] = panel.s();
    body["m"] = panel.m();
    body["alpha"] = mc.alpha;
    body["b_replications"] = mc.B;
    body["mu_hat"] = std::vector<double>(res.mu_hat.data(), res.mu_hat.data() + res.mu_hat.size());
    body["tau"] = std::vector<double>(res.taus.data(), res.taus.data() + res.taus.size());
    body["p_values"] = res.p_values;
    std::vector<int> rejected_idx;
    for (std::size_t k = 0; k < res.rejected.size(); ++k)
        if (res.rejected[k]) rejected_idx.push_back(static_cast<int>(k));
    body["rejected"] = rejected_idx;
    body["k_threshold"] = res.k_threshold;
    body["p_cut"] = res.p_cut;
    emit_json(const_cast<CliOptions&>(opt), body);
    return 0;
}

struct PresetError : UsageError {
    using UsageError::UsageError;
};

// Preset grids are plain data: each row of the tables becomes reachable
// with one flag. --scale multiplies replications only.
void apply_coverage_preset(const std::string& name, CoverageSpec* spec) {
    auto noise_from_suffix = [](const std::string& suffix) {
        if (suffix == "tnu") return NoiseModel::student_t(3.5);
        return parse_noise(suffix);
    };
    if (name.rfind("table1-", 0) == 0) {
        spec->noise = noise_from_suffix(name.substr(7));
        spec->design = DesignModel::isotropic();
        spec->n = 100;
        spec->d = 5;
        spec->B = 2000;
        spec->replications = 1000;
        spec->alphas = {0.05, 0.10, 0.15, 0.20, 0.25};
        spec->methods = {CoverageMethod::HuberSimple, CoverageMethod::BootOls};
        spec->theta_pattern = ThetaPattern::EquallySpaced;
        return;
    }
    if (name == "table5-logn" || name.rfind("table5-logn", 0) == 0) {
        double sigma = 2.0;
        if (name.size() > 11) sigma = std::stod(name.substr(11));
        spec->noise = NoiseModel::lognormal(sigma);
        spec->design = DesignModel::isotropic();
        spec->n = 200;
        spec->d = 5;
        spec->B = 2000;
        spec->replications = 1000;
        spec->alphas = {0.01, 0.03, 0.05, 0.10, 0.13};
        spec->methods = {CoverageMethod::HuberAdaptive, CoverageMethod::HuberSimple,
                         CoverageMethod::BootOls};
        spec->theta_pattern = ThetaPattern::EquallySpaced;
        return;
    }
    if (name.rfind("table9-", 0) == 0) {
        spec->noise = noise_from_suffix(name.substr(7));
        spec->design = DesignModel::uniform_corr(0.5);
        spec->n = 200;
        spec->d = 5;
        spec->B = 2000;
        spec->replications = 1000;
        spec->alphas = {0.05, 0.10, 0.15, 0.20, 0.25};
        spec->methods = {CoverageMethod::HuberSimple, CoverageMethod::BootOls};
        spec->theta_pattern = ThetaPattern::BernoulliHalf;
        return;
    }
    throw PresetError("unknown sim-coverage preset: " + name);
}

void apply_mtest_preset(const std::string& name, MTestSimSpec* spec) {
    if (name.rfind("table11-", 0) == 0) {
        spec->noise = parse_noise(name.substr(8));
        spec->n = 100;
        spec->s = 5;
        spec->m = 1000;
        spec->gamma = 3.0;
        spec->B = 500;
        spec->replications = 1000;
        spec->alphas = {0.05, 0.10, 0.15, 0.20, 0.25};
        return;
    }
    throw PresetError("unknown sim-mtest preset: " + name);
}

int cmd_sim_coverage(const CliOptions& opt, const CLI::App& app) {
    CoverageSpec spec;
    spec.alphas = {0.05, 0.10, 0.15, 0.20, 0.25};
    spec.methods = {CoverageMethod::HuberSimple, CoverageMethod::BootOls};
    if (!opt.preset.empty()) apply_coverage_preset(opt.preset, &spec);

    if (app.count("--noise")) spec.noise = parse_noise(opt.noise);
    if (app.count("--design")) spec.design = parse_design(opt.design);
    if (app.count("--theta-pattern")) spec.theta_pattern = parse_theta_pattern(opt.theta_pattern);
    if (app.count("--n")) spec.n = opt.n;
    if (app.count("--d")) spec.d = opt.d;
    if (app.count("--B")) spec.B = opt.B;
    if (app.count("--reps")) spec.replications = opt.reps;
    if (app.count("--alpha")) spec.alphas = opt.alphas;
    if (app.count("--method")) {
        spec.methods.clear();
        for (const std::string& name : opt.methods) spec.methods.push_back(parse_method(name));
    }
    if (app.count("--tau")) spec.fixed_tau = opt.tau;
    spec.weights = parse_weights(opt.weights);
    spec.seed = opt.seed;
    spec.threads = opt.threads;
    spec.replications = std::max(1, static_cast<int>(std::lround(spec.replications * opt.scale)));

    std::ostringstream diag;
    diag << "sim-coverage: noise=" << noise_name(spec.noise) << " design="
         << design_name(spec.design) << " n=" << spec.n << " d=" << spec.d
         << " B=" << spec.B << " reps=" << spec.replications << " seed=" << spec.seed
         << " threads=" << spec.threads;
    std::cerr << diag.str() << '\n';

    CoverageReport report = coverage_experiment(spec);
    std::ostringstream os;
    write_coverage_csv(report, os);
    emit(opt, os.str());
    return 0;
}

int cmd_sim_mtest(const CliOptions& opt, const CLI::App& app) {
    MTestSimSpec spec;
    spec.alphas = {0.05, 0.10, 0.15, 0.20, 0.25};
    if (!opt.preset.empty()) apply_mtest_preset(opt.preset, &spec);

    if (app.count("--noise")) spec.noise = parse_noise(opt.noise);
    if (app.count("--n")) spec.n = opt.n;
    if (app.count("--s")) spec.s = opt.s;
    if (app.count("--m")) spec.m = opt.m;
    if (app.count("--gamma")) spec.gamma = opt.gamma;
    if (app.count("--B")) spec.B = opt.B;
    if (app.count("--reps")) spec.replications = opt.reps;
    if (app.count("--alpha")) spec.alphas = opt.alphas;
    spec.weights = parse_weights(opt.weights);
    spec.seed = opt.seed;
    spec.threads = opt.threads;
    spec.replications = std::max(1, static_cast<int>(std::lround(spec.replications * opt.scale)));

    std::cerr << "sim-mtest: noise=" << noise_name(spec.noise) << " n=" << spec.n
              << " s=" << spec.s << " m=" << spec.m << " gamma=" << spec.gamma
              << " B=" << spec.B << " reps=" << spec.replications
              << " seed=" << spec.seed << " threads=" << spec.threads << '\n';

    MTestSimReport report = mtest_experiment(spec);
    std::ostringstream os;
    write_mtest_csv(report, os);
    emit(opt, os.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CliOptions opt;
    CLI::App app{"Huber regression with multiplier-bootstrap inference"};
    app.set_config("--config", "", "flat key=value config file; flags take precedence");
    app.get_config_formatter_base()->comment('#');

    app.add_option("command", opt.command, "fit | calibrate | ci | mtest | sim-coverage | sim-mtest")
        ->required()
        ->check(CLI::IsMember(
            {"fit", "calibrate", "ci", "mtest", "sim-coverage", "sim-mtest"}));
    app.add_option("--input", opt.input, "input CSV path");
    app.add_option("--output", opt.output, "output path, '-' for stdout");
    app.add_option("--response", opt.response,
                   "response column name (single run) or prefix (mtest panel)");
    app.add_flag("--add-intercept", opt.add_intercept, "prepend a ones column to the design");
    app.add_option("--tau", opt.tau, "fixed robustification parameter");
    app.add_option("--tau-mode", opt.tau_mode, "simple | adaptive | fixed");
    app.add_option("--t", opt.t, "calibration tail parameter (default log n)");
    app.add_option("--order", opt.order, "censored-equation order")->check(CLI::IsMember({2, 4}));
    app.add_option("--alpha", opt.alphas, "nominal level(s), repeatable");
    app.add_option("--B", opt.B, "bootstrap replications");
    app.add_option("--weights", opt.weights, "gaussian | bernoulli | mix");
    app.add_option("--seed", opt.seed, "RNG seed, echoed in all outputs");
    app.add_option("--threads", opt.threads, "worker threads (0 = all cores)")
        ->envname("HUBERBOOT_THREADS");
    app.add_option("--scale", opt.scale, "replication budget multiplier for sim commands");
    app.add_option("--preset", opt.preset, "named experiment grid, e.g. table1-t3.5");
    app.add_flag("--inflate-scales", opt.inflate_scales, "apply the 1.2 factor to mtest scales");

    app.add_option("--noise", opt.noise, "noise model, e.g. gaussian, t3.5, logn2");
    app.add_option("--design", opt.design, "design model: isotropic, toeplitz0.9, uniform0.5");
    app.add_option("--theta-pattern", opt.theta_pattern, "spaced | bernoulli");
    app.add_option("--method", opt.methods, "coverage methods, repeatable");
    app.add_option("--n", opt.n, "sample size");
    app.add_option("--d", opt.d, "design dimension");
    app.add_option("--m", opt.m, "hypothesis count");
    app.add_option("--s", opt.s, "covariate count");
    app.add_option("--gamma", opt.gamma, "signal strength multiplier");
    app.add_option("--reps", opt.reps, "Monte Carlo replications");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    opt.threads = resolve_threads(opt.threads);

    try {
        if (opt.command == "fit") return cmd_fit(opt);
        if (opt.command == "calibrate") return cmd_calibrate(opt);
        if (opt.command == "ci") return cmd_ci(opt);
        if (opt.command == "mtest") return cmd_mtest(opt);
        if (opt.command == "sim-coverage") return cmd_sim_coverage(opt, app);
        if (opt.command == "sim-mtest") return cmd_sim_mtest(opt, app);
        throw UsageError("unknown command: " + opt.command);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
