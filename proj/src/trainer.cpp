#include "voltvar/trainer.hpp"

#include "voltvar/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace voltvar {

double StepSchedule::at(int k) const {
    return base * std::pow(decay, k);
}

EquilibriumOptions TrainerConfig::equilibrium_options() const {
    EquilibriumOptions opts;
    opts.tol = eq_tol;
    opts.epsilon = epsilon;
    return opts;
}

void TrainerConfig::validate() const {
    chance().validate();
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw ConfigError("trainer: epsilon must lie in (0,1)");
    if (max_iterations < 1)
        throw ConfigError("trainer: iteration budget must be >= 1");
    if (!(mu_z.base > 0.0) || !(mu_lambda.base > 0.0))
        throw ConfigError("trainer: step sizes must be positive");
    if (!(mu_z.decay > 0.0 && mu_z.decay <= 1.0)
        || !(mu_lambda.decay > 0.0 && mu_lambda.decay <= 1.0))
        throw ConfigError("trainer: step decays must lie in (0,1]");
    if (!(eq_tol > 0.0) || !(param_stall_tol > 0.0))
        throw ConfigError("trainer: tolerances must be positive");
    if (batch_size < 0)
        throw ConfigError("trainer: batch size must be >= 0");
}

Vec primal_update(const Vec& z, const Vec& lambda, const GridModel& model,
                  std::span<const Scenario> scenarios, const TrainerConfig& cfg,
                  double mu_z_k) {
    RuleSet rules = RuleSet::from_flat(z, [&] {
        std::vector<int> buses;
        for (int b : model.der_buses())
            buses.push_back(b + 1);
        return buses;
    }());
    LagrangianValue lg = lagrangian_batch(rules, lambda, model, scenarios, cfg.chance(),
                                          cfg.equilibrium_options(), true, cfg.policy);
    Vec stepped = z - mu_z_k * lg.gradient;
    TransformedPoint tp = to_transformed(stepped, cfg.alpha_min);
    FeasibleSetSpec spec = FeasibleSetSpec::from_model(model, cfg.epsilon);
    TransformedPoint proj = project_feasible(tp, spec);
    return from_transformed(proj);
}

Vec dual_update(const Vec& lambda, const Vec& soft_violation, double beta, double mu) {
    if (lambda.size() != soft_violation.size())
        throw NumericalError("dual_update: dimension mismatch");
    if ((lambda.array() < 0.0).any())
        throw NumericalError("dual_update: multipliers must be nonnegative");
    return (lambda.array() + mu * (soft_violation.array() - beta)).max(0.0).matrix();
}

DesignResult run_ord(const TrainerConfig& cfg, const GridModel& model,
                     std::span<const Scenario> scenarios) {
    cfg.validate();
    if (scenarios.empty())
        throw ConfigError("run_ord: at least one scenario required");
    if (model.n_der() == 0)
        throw ConfigError("run_ord: the feeder has no DERs to design rules for");

    std::vector<int> buses;
    for (int b : model.der_buses())
        buses.push_back(b + 1);

    const int n = model.n();
    const int s_count = static_cast<int>(scenarios.size());
    const ChanceConfig chance = cfg.chance();
    const EquilibriumOptions eq_opts = cfg.equilibrium_options();
    const FeasibleSetSpec spec = FeasibleSetSpec::from_model(model, cfg.epsilon);

    RuleParams init{cfg.z_init.v_bar, cfg.z_init.alpha, cfg.z_init.delta,
                    cfg.z_init.sigma};
    Vec z = RuleSet::uniform(buses, init).flatten();
    Vec lambda = Vec::Zero(n);

    // Deterministic scenario order for optional mini-batching.
    std::vector<int> perm(scenarios.size());
    std::iota(perm.begin(), perm.end(), 0);
    if (cfg.batch_size > 0 && cfg.batch_size < s_count) {
        std::mt19937_64 rng(cfg.seed);
        for (std::size_t i = perm.size(); i > 1; --i)
            std::swap(perm[i - 1], perm[rng() % i]);
    }

    DesignResult result;
    std::vector<Scenario> minibatch;
    for (int k = 0; k < cfg.max_iterations; ++k) {
        const double mu_z_k = cfg.mu_z.at(k);
        const double mu_l_k = cfg.mu_lambda.at(k);

        std::span<const Scenario> grad_scenarios = scenarios;
        if (cfg.batch_size > 0 && cfg.batch_size < s_count) {
            minibatch.clear();
            for (int j = 0; j < cfg.batch_size; ++j)
                minibatch.push_back(
                    scenarios[perm[(k * cfg.batch_size + j) % s_count]]);
            grad_scenarios = minibatch;
        }

        Vec z_next = primal_update(z, lambda, model, grad_scenarios, cfg, mu_z_k);

        RuleSet rules_next = RuleSet::from_flat(z_next, buses);
        std::vector<EquilibriumResult> eqs =
            equilibria_batch(rules_next, model, scenarios, eq_opts, cfg.policy);
        Vec soft = empirical_violation(eqs, chance, ViolationMode::soft, n);
        Vec hard = empirical_violation(eqs, chance, ViolationMode::hard, n);
        const double loss = average_loss(model, scenarios, eqs);

        lambda = dual_update(lambda, soft, cfg.beta, mu_l_k);
        result.lambda_trajectory.push_back(lambda);

        IterationRecord rec;
        rec.k = k;
        rec.loss = loss;
        rec.worst_hard = hard.maxCoeff();
        rec.worst_soft = soft.maxCoeff();
        rec.lambda_inf = lambda.lpNorm<Eigen::Infinity>();
        rec.mu_z = mu_z_k;
        rec.mu_lambda = mu_l_k;
        result.history.push_back(rec);

        const double stall = (z_next - z).lpNorm<Eigen::Infinity>();
        z = z_next;
        result.iterations = k + 1;
        result.final_loss = loss;
        result.final_hard = hard;
        result.final_soft = soft;
        if (stall < cfg.param_stall_tol
            && rec.worst_hard <= cfg.beta + 1.0 / static_cast<double>(s_count)) {
            result.converged = true;
            break;
        }
    }

    result.rules = RuleSet::from_flat(z, buses);
    if (!result.rules.validate_1547(model.q_hat()).empty())
        throw NumericalError("run_ord: projected rules left the 1547 box");
    if (!check_stability(result.rules, model, cfg.epsilon).inner_ok)
        throw NumericalError("run_ord: projected rules left the stability set");
    return result;
}

DesignResult run_ord(const TrainerConfig& cfg, const FeederModel& feeder,
                     const ScenarioSet& scenarios) {
    GridModel model = GridModel::build(feeder);
    return run_ord(cfg, model, std::span<const Scenario>(scenarios.items));
}

} // namespace voltvar
