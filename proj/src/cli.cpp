#include "voltvar/cli.hpp"

#include "voltvar/ac_validation.hpp"
#include "voltvar/errors.hpp"
#include "voltvar/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace voltvar {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& ctx) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError(ctx + ": unknown key '" + it.key() + "'");
}

StepSchedule parse_schedule(const json& j, const std::string& ctx) {
    require_keys(j, {"base", "decay"}, ctx);
    return {j.at("base").get<double>(), j.at("decay").get<double>()};
}

} // namespace

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    try {
        require_keys(j,
                     {"format", "feeder", "scenarios", "output_dir", "beta", "gamma",
                      "epsilon", "v_low", "v_high", "iterations", "mu_z", "mu_lambda",
                      "z_init", "equilibrium_tol", "param_stall_tol", "alpha_min",
                      "batch_size", "seed", "scenario_count", "profile", "rules",
                      "histogram_bins", "execution"},
                     path);
        if (j.value("format", "") != "voltvar-config-v1")
            throw ConfigError(path + ": expected format 'voltvar-config-v1'");
        RunConfig cfg;
        cfg.feeder_path = j.value("feeder", "");
        cfg.scenarios_path = j.value("scenarios", "");
        cfg.output_dir = j.value("output_dir", ".");
        TrainerConfig& t = cfg.trainer;
        t.beta = j.value("beta", t.beta);
        t.gamma = j.value("gamma", t.gamma);
        t.epsilon = j.value("epsilon", t.epsilon);
        t.v_low = j.value("v_low", t.v_low);
        t.v_high = j.value("v_high", t.v_high);
        t.max_iterations = j.value("iterations", t.max_iterations);
        if (j.contains("mu_z"))
            t.mu_z = parse_schedule(j.at("mu_z"), path + ": mu_z");
        if (j.contains("mu_lambda"))
            t.mu_lambda = parse_schedule(j.at("mu_lambda"), path + ": mu_lambda");
        if (j.contains("z_init")) {
            const json& zi = j.at("z_init");
            require_keys(zi, {"v_bar", "delta", "sigma", "alpha"}, path + ": z_init");
            t.z_init.v_bar = zi.value("v_bar", t.z_init.v_bar);
            t.z_init.delta = zi.value("delta", t.z_init.delta);
            t.z_init.sigma = zi.value("sigma", t.z_init.sigma);
            t.z_init.alpha = zi.value("alpha", t.z_init.alpha);
        }
        t.eq_tol = j.value("equilibrium_tol", t.eq_tol);
        t.param_stall_tol = j.value("param_stall_tol", t.param_stall_tol);
        t.alpha_min = j.value("alpha_min", t.alpha_min);
        t.batch_size = j.value("batch_size", t.batch_size);
        t.seed = j.value("seed", t.seed);
        if (j.contains("execution")) {
            const std::string ex = j.at("execution").get<std::string>();
            if (ex == "serial")
                t.policy = ExecutionPolicy::serial;
            else if (ex == "parallel")
                t.policy = ExecutionPolicy::parallel;
            else
                throw ConfigError(path + ": execution must be 'serial' or 'parallel'");
        }
        cfg.scenario_count = j.value("scenario_count", cfg.scenario_count);
        cfg.profile = j.value("profile", cfg.profile);
        if (j.contains("rules"))
            cfg.rule_specs = j.at("rules").get<std::vector<std::string>>();
        cfg.histogram_bins = j.value("histogram_bins", cfg.histogram_bins);
        t.validate();
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

namespace {

FeederModel load_feeder(const RunConfig& cfg) {
    if (cfg.feeder_path.empty())
        throw ConfigError("no feeder file given (flag --feeder or config key 'feeder')");
    return FeederModel::from_json_file(cfg.feeder_path);
}

ScenarioSet load_scenarios(const RunConfig& cfg, int n_expected) {
    if (cfg.scenarios_path.empty())
        throw ConfigError("no scenario file given (flag --scenarios or config key 'scenarios')");
    ScenarioSet set = load(cfg.scenarios_path);
    if (set.n != n_expected) {
        std::ostringstream os;
        os << cfg.scenarios_path << ": scenario width " << set.n
           << " does not match feeder bus count " << n_expected;
        throw ConfigError(os.str());
    }
    return set;
}

void ensure_output_dir(const RunConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec)
        throw IoError("cannot create output directory: " + cfg.output_dir);
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (fs::path(cfg.output_dir) / name).string();
}

struct NamedRules {
    std::string label;
    RuleSet rules;
};

NamedRules resolve_rules(const std::string& spec, const GridModel& model) {
    std::vector<int> buses;
    for (int b : model.der_buses())
        buses.push_back(b + 1);
    if (spec == "none")
        return {"none", RuleSet::flat(buses)};
    if (spec == "default")
        return {"default", RuleSet::defaults(buses, model.q_hat())};
    RuleSet rs = RuleSet::load_csv(spec);
    if (rs.buses() != buses)
        throw ConfigError(spec + ": rule buses do not match the feeder's DER buses");
    return {fs::path(spec).stem().string(), rs};
}

std::vector<NamedRules> resolve_all_rules(const RunConfig& cfg, const GridModel& model) {
    if (cfg.rule_specs.empty())
        throw ConfigError("no rules given (flag --rules: 'none', 'default', or a CSV path)");
    std::vector<NamedRules> out;
    for (const std::string& spec : cfg.rule_specs)
        out.push_back(resolve_rules(spec, model));
    return out;
}

} // namespace

void cmd_build_model(const RunConfig& cfg) {
    FeederModel feeder = load_feeder(cfg);
    GridModel model = GridModel::build(feeder);
    ensure_output_dir(cfg);

    auto write_matrix = [&](const std::string& name, const Mat& m) {
        std::ofstream out(out_path(cfg, name));
        if (!out)
            throw IoError("cannot write " + name);
        out << "# voltvar-matrix-v1\n";
        for (int i = 0; i < m.rows(); ++i)
            for (int j = 0; j < m.cols(); ++j)
                out << format_double(m(i, j)) << (j + 1 == m.cols() ? '\n' : ',');
    };
    write_matrix("R.csv", model.R());
    write_matrix("X.csv", model.X());

    json summary;
    summary["format"] = "voltvar-model-summary-v1";
    summary["buses"] = model.n() + 1;
    summary["v0"] = model.v0();
    std::vector<int> der;
    for (int b : model.der_buses())
        der.push_back(b + 1);
    summary["der_buses"] = der;
    std::vector<double> qh(model.q_hat().data(), model.q_hat().data() + model.n_der());
    summary["q_hat"] = qh;
    write_text_file(out_path(cfg, "model_summary.json"), summary.dump(2) + "\n");
    std::cout << "wrote R.csv, X.csv, model_summary.json to " << cfg.output_dir << "\n";
}

void cmd_gen_scenarios(const RunConfig& cfg) {
    FeederModel feeder = load_feeder(cfg);
    if (cfg.scenarios_path.empty())
        throw ConfigError("gen-scenarios needs --scenarios (output path)");
    ScenarioSet set = generate_synthetic(feeder, cfg.scenario_count, cfg.trainer.seed,
                                         profile_from_name(cfg.profile));
    save(set, cfg.scenarios_path);
    std::cout << "wrote " << set.size() << " scenarios to " << cfg.scenarios_path << "\n";
}

void cmd_design(const RunConfig& cfg) {
    FeederModel feeder = load_feeder(cfg);
    GridModel model = GridModel::build(feeder);
    ScenarioSet set = load_scenarios(cfg, model.n());
    ensure_output_dir(cfg);

    DesignResult result = run_ord(cfg.trainer, model, set.items);

    result.rules.save_csv(out_path(cfg, "rules.csv"));
    write_metrics_csv(out_path(cfg, "metrics.csv"), result.history);
    write_violation_csv(out_path(cfg, "design_violations.csv"), result.final_hard,
                        result.final_soft);
    std::ostringstream label;
    label << "designed beta=" << cfg.trainer.beta;
    SummaryRow row{label.str(), result.final_loss, result.final_hard.maxCoeff()};
    write_summary_csv(out_path(cfg, "summary.csv"), std::span<const SummaryRow>(&row, 1));

    std::cout << label.str() << ": loss " << result.final_loss << ", worst hard violation "
              << row.worst_hard << ", iterations " << result.iterations
              << (result.converged ? " (converged)" : " (iteration budget)") << "\n";
}

void cmd_evaluate(const RunConfig& cfg) {
    FeederModel feeder = load_feeder(cfg);
    GridModel model = GridModel::build(feeder);
    ScenarioSet set = load_scenarios(cfg, model.n());
    ensure_output_dir(cfg);

    const ChanceConfig chance = cfg.trainer.chance();
    EquilibriumOptions eq_opts = cfg.trainer.equilibrium_options();
    eq_opts.max_iterations = 2000; // arbitrary rules may sit outside the margin

    std::vector<SummaryRow> rows;
    for (const NamedRules& nr : resolve_all_rules(cfg, model)) {
        StabilityReport stab = check_stability(nr.rules, model, cfg.trainer.epsilon);
        if (!stab.inner_ok)
            std::cerr << "note: rules '" << nr.label
                      << "' sit outside the inner stability set (spectral norm "
                      << stab.spectral_norm << ")\n";
        std::vector<EquilibriumResult> eqs =
            equilibria_batch(nr.rules, model, set.items, eq_opts, cfg.trainer.policy);
        Vec hard = empirical_violation(eqs, chance, ViolationMode::hard, model.n());
        Vec soft = empirical_violation(eqs, chance, ViolationMode::soft, model.n());
        const double loss = average_loss(model, set.items, eqs);
        rows.push_back({nr.label, loss, hard.maxCoeff()});
        write_violation_csv(out_path(cfg, "violations_" + nr.label + ".csv"), hard, soft);

        std::vector<double> samples;
        samples.reserve(static_cast<std::size_t>(model.n()) * eqs.size());
        for (const EquilibriumResult& eq : eqs)
            for (int b = 0; b < model.n(); ++b)
                samples.push_back(eq.v_star(b));
        Histogram h = histogram(samples, 0.9, 1.1, cfg.histogram_bins);
        write_histogram_csv(out_path(cfg, "histogram_" + nr.label + ".csv"), h);
        std::cout << nr.label << ": loss " << loss << ", worst hard violation "
                  << hard.maxCoeff() << "\n";
    }
    write_summary_csv(out_path(cfg, "eval_summary.csv"), rows);
}

void cmd_validate_ac(const RunConfig& cfg) {
    FeederModel feeder = load_feeder(cfg);
    GridModel model = GridModel::build(feeder);
    ScenarioSet set = load_scenarios(cfg, model.n());
    ensure_output_dir(cfg);

    EquilibriumOptions eq_opts = cfg.trainer.equilibrium_options();

    std::ofstream out(out_path(cfg, "ac_errors.csv"));
    if (!out)
        throw IoError("cannot write ac_errors.csv");
    out << "# voltvar-ac-errors-v1\n";
    out << "label,mean_abs,max_abs,worst_ac_mismatch\n";
    for (const NamedRules& nr : resolve_all_rules(cfg, model)) {
        std::vector<EquilibriumResult> lin =
            equilibria_batch(nr.rules, model, set.items, eq_opts, cfg.trainer.policy);
        std::vector<EquilibriumResult> ac;
        double worst_mismatch = 0.0;
        for (const Scenario& s : set.items) {
            ac.push_back(ac_equilibrium(nr.rules, feeder, s, eq_opts));
            Vec q_inj = s.q_tilde + ac.back().q_star;
            AcSolution check = ac_power_flow(feeder, s.p_tilde, q_inj);
            worst_mismatch = std::max(worst_mismatch, check.max_mismatch);
        }
        VoltageErrorStats stats = model_error(std::span<const EquilibriumResult>(lin),
                                              std::span<const EquilibriumResult>(ac));
        out << nr.label << ',' << format_double(stats.mean_abs) << ','
            << format_double(stats.max_abs) << ',' << format_double(worst_mismatch)
            << '\n';
        std::cout << nr.label << ": mean |v_lin - v_ac| " << stats.mean_abs << ", max "
                  << stats.max_abs << "\n";
    }
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Volt/VAR rule design toolkit for radial feeders"};
    app.require_subcommand(1);

    std::string config_path;
    RunConfig cli_overrides;
    bool have_beta = false, have_seed = false, have_iters = false, have_count = false,
         have_profile = false, have_bins = false, have_serial = false;
    double beta = 0.05;
    std::uint64_t seed = 1;
    int iterations = 1000, count = 80, bins = 50;
    std::string feeder, scenarios, outdir, profile;
    std::vector<std::string> rules;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file (voltvar-config-v1)");
        sub->add_option("--feeder", feeder, "feeder JSON file");
        sub->add_option("--scenarios", scenarios, "scenario CSV file");
        sub->add_option("--out", outdir, "output directory");
        sub->add_option("--beta", beta, "violation budget")->each([&](const std::string&) {
            have_beta = true;
        });
        sub->add_option("--seed", seed, "random seed")->each([&](const std::string&) {
            have_seed = true;
        });
        sub->add_option("--iterations", iterations, "iteration budget")
            ->each([&](const std::string&) { have_iters = true; });
        sub->add_flag("--serial", have_serial, "run scenario batches serially");
        return sub;
    };

    CLI::App* c_build = add_common(app.add_subcommand("build-model",
                                                      "write sensitivity matrices"));
    CLI::App* c_gen = add_common(
        app.add_subcommand("gen-scenarios", "generate a synthetic scenario set"));
    c_gen->add_option("--count", count, "number of scenarios")
        ->each([&](const std::string&) { have_count = true; });
    c_gen->add_option("--profile", profile, "high_solar | evening_peak | mixed")
        ->each([&](const std::string&) { have_profile = true; });
    CLI::App* c_design =
        add_common(app.add_subcommand("design", "optimize Volt/VAR rules"));
    CLI::App* c_eval = add_common(
        app.add_subcommand("evaluate", "losses, violations, voltage histograms"));
    c_eval->add_option("--rules", rules, "'none', 'default', or rules CSV (repeatable)");
    c_eval->add_option("--bins", bins, "histogram bins")->each([&](const std::string&) {
        have_bins = true;
    });
    CLI::App* c_ac = add_common(
        app.add_subcommand("validate-ac", "compare linearized and AC equilibria"));
    c_ac->add_option("--rules", rules, "'none', 'default', or rules CSV (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty())
            cfg = load_run_config(config_path);
        if (!feeder.empty())
            cfg.feeder_path = feeder;
        if (!scenarios.empty())
            cfg.scenarios_path = scenarios;
        if (!outdir.empty())
            cfg.output_dir = outdir;
        if (have_beta)
            cfg.trainer.beta = beta;
        if (have_seed)
            cfg.trainer.seed = seed;
        if (have_iters)
            cfg.trainer.max_iterations = iterations;
        if (have_count)
            cfg.scenario_count = count;
        if (have_profile)
            cfg.profile = profile;
        if (have_bins)
            cfg.histogram_bins = bins;
        if (have_serial)
            cfg.trainer.policy = ExecutionPolicy::serial;
        if (!rules.empty())
            cfg.rule_specs = rules;
        cfg.trainer.validate();

        if (c_build->parsed())
            cmd_build_model(cfg);
        else if (c_gen->parsed())
            cmd_gen_scenarios(cfg);
        else if (c_design->parsed())
            cmd_design(cfg);
        else if (c_eval->parsed())
            cmd_evaluate(cfg);
        else if (c_ac->parsed())
            cmd_validate_ac(cfg);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 2;
    } catch (const FeederError& e) {
        std::cerr << "feeder error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}

} // namespace voltvar
