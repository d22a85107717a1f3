#include "voltvar/batch.hpp"

#include "voltvar/errors.hpp"

#include <exception>

namespace voltvar {

namespace {

// Runs fn(i) for every scenario index, serially or under OpenMP. The first
// captured exception (lowest index) is rethrown after the join so failures
// are independent of the schedule.
template <typename Fn>
void for_each_scenario(std::size_t count, ExecutionPolicy policy, Fn&& fn) {
    std::vector<std::exception_ptr> errors(count);
    if (policy == ExecutionPolicy::serial) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < static_cast<long long>(count); ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const std::exception_ptr& e : errors)
        if (e)
            std::rethrow_exception(e);
}

} // namespace

std::vector<EquilibriumResult> equilibria_batch(const RuleSet& rules,
                                                const GridModel& model,
                                                std::span<const Scenario> scenarios,
                                                const EquilibriumOptions& opts,
                                                ExecutionPolicy policy) {
    std::vector<EquilibriumResult> out(scenarios.size());
    for_each_scenario(scenarios.size(), policy, [&](std::size_t i) {
        out[i] = equilibrium(rules, model, scenarios[i], opts);
    });
    return out;
}

LagrangianValue lagrangian_batch(const RuleSet& rules, const Vec& lambda,
                                 const GridModel& model,
                                 std::span<const Scenario> scenarios,
                                 const ChanceConfig& cfg, const EquilibriumOptions& opts,
                                 bool with_gradient, ExecutionPolicy policy) {
    if (scenarios.empty())
        throw NumericalError("lagrangian_batch: at least one scenario required");
    if (lambda.size() != model.n())
        throw NumericalError("lagrangian_batch: lambda must have one entry per bus");
    if ((lambda.array() < 0.0).any())
        throw NumericalError("lagrangian_batch: lambda must be entrywise nonnegative");

    std::vector<ScenarioEval> slots(scenarios.size());
    for_each_scenario(scenarios.size(), policy, [&](std::size_t i) {
        slots[i] = eval_scenario(rules, model, scenarios[i], cfg, opts,
                                 with_gradient ? &lambda : nullptr);
    });

    const int n = model.n();
    const int m = model.n_der();
    const double s_count = static_cast<double>(scenarios.size());
    LagrangianValue out;
    out.constraint_terms = Vec::Zero(n);
    if (with_gradient)
        out.gradient = Vec::Zero(4 * m);
    for (const ScenarioEval& ev : slots) {
        out.loss_term += ev.loss;
        out.constraint_terms += ev.indicators;
        if (with_gradient)
            out.gradient += ev.gradient;
    }
    out.loss_term /= s_count;
    out.constraint_terms /= s_count;
    if (with_gradient)
        out.gradient /= s_count;
    out.total = out.loss_term;
    for (int i = 0; i < n; ++i)
        out.total += lambda(i) * (out.constraint_terms(i) - cfg.beta);
    return out;
}

} // namespace voltvar
