#include "voltvar/objective.hpp"

#include "voltvar/errors.hpp"

#include <cmath>

namespace voltvar {

void ChanceConfig::validate() const {
    if (!(v_low < v_high))
        throw ConfigError("chance band requires v_low < v_high");
    if (!(beta > 0.0 && beta <= 1.0))
        throw ConfigError("beta must lie in (0, 1]");
    if (!(gamma > 0.0))
        throw ConfigError("gamma must be positive");
}

double step(double x) {
    return x >= 0.0 ? 1.0 : 0.0;
}

namespace {
inline double logistic_abs(double x_abs, double gamma) {
    return 1.0 / (1.0 + std::exp(-x_abs / gamma));
}
} // namespace

double logistic(double x, double gamma) {
    const double u = logistic_abs(std::abs(x), gamma);
    return x >= 0.0 ? u : 1.0 - u;
}

double logistic_derivative(double x, double gamma) {
    // u(1-u) is even in x; evaluate on |x| so both sides agree bit-for-bit.
    const double u = logistic_abs(std::abs(x), gamma);
    return u * (1.0 - u) / gamma;
}

double band_indicator(double v, const ChanceConfig& cfg) {
    const double d = v - cfg.v_ref();
    const double rad = cfg.radius();
    return logistic(d * d - rad * rad, cfg.gamma);
}

Vec empirical_violation(std::span<const EquilibriumResult> equilibria,
                        const ChanceConfig& cfg, ViolationMode mode, int n_buses) {
    if (equilibria.empty())
        throw NumericalError("empirical_violation: at least one scenario required");
    Vec acc = Vec::Zero(n_buses);
    const double v_ref = cfg.v_ref();
    const double rad2 = cfg.radius() * cfg.radius();
    for (const EquilibriumResult& eq : equilibria) {
        for (int n = 0; n < n_buses; ++n) {
            const double d = eq.v_star(n) - v_ref;
            const double arg = d * d - rad2;
            acc(n) += mode == ViolationMode::hard ? step(arg) : logistic(arg, cfg.gamma);
        }
    }
    return acc / static_cast<double>(equilibria.size());
}

Vec empirical_violation(const RuleSet& rules, const GridModel& model,
                        std::span<const Scenario> scenarios, const ChanceConfig& cfg,
                        ViolationMode mode, const EquilibriumOptions& opts) {
    std::vector<EquilibriumResult> eqs;
    eqs.reserve(scenarios.size());
    for (const Scenario& s : scenarios)
        eqs.push_back(equilibrium(rules, model, s, opts));
    return empirical_violation(std::span<const EquilibriumResult>(eqs), cfg, mode,
                               model.n());
}

double average_loss(const GridModel& model, std::span<const Scenario> scenarios,
                    std::span<const EquilibriumResult> equilibria) {
    if (scenarios.size() != equilibria.size() || scenarios.empty())
        throw NumericalError("average_loss: scenario/equilibrium mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < scenarios.size(); ++i)
        acc += model.approx_losses(equilibria[i].q_star, scenarios[i]);
    return acc / static_cast<double>(scenarios.size());
}

double average_loss(const RuleSet& rules, const GridModel& model,
                    std::span<const Scenario> scenarios, const EquilibriumOptions& opts) {
    if (scenarios.empty())
        throw NumericalError("average_loss: at least one scenario required");
    std::vector<EquilibriumResult> eqs;
    eqs.reserve(scenarios.size());
    for (const Scenario& s : scenarios)
        eqs.push_back(equilibrium(rules, model, s, opts));
    return average_loss(model, scenarios, eqs);
}

} // namespace voltvar
