#include "voltvar/autodiff.hpp"

#include "voltvar/errors.hpp"

#include <sstream>

namespace voltvar {

ScenarioEval eval_scenario(const RuleSet& rules, const GridModel& model,
                           const Scenario& s, const ChanceConfig& cfg,
                           const EquilibriumOptions& opts, const Vec* lambda) {
    const int n = model.n();
    const int m = model.n_der();

    Tape tape;
    EquilibriumResult eq = equilibrium(rules, model, s, opts, &tape);

    ScenarioEval ev;
    ev.iterations = eq.iterations;
    ev.loss = model.approx_losses(eq.q_star, s);
    ev.indicators.resize(n);
    const double v_ref = cfg.v_ref();
    const double rad2 = cfg.radius() * cfg.radius();
    for (int i = 0; i < n; ++i) {
        const double d = eq.v_star(i) - v_ref;
        ev.indicators(i) = logistic(d * d - rad2, cfg.gamma);
    }
    if (!lambda)
        return ev;
    if (lambda->size() != n)
        throw NumericalError("eval_scenario: lambda must have one entry per bus");

    // Head adjoint on the final injections: loss head 2 R (q* + q~) plus the
    // constraint head chained through v* = X q* + v~.
    Vec head_v(n);
    for (int i = 0; i < n; ++i) {
        const double d = eq.v_star(i) - v_ref;
        head_v(i) =
            (*lambda)(i)*logistic_derivative(d * d - rad2, cfg.gamma) * 2.0 * d;
    }
    Vec loss_head_full = 2.0 * (model.R() * (eq.q_star + s.q_tilde));
    Vec q_adj(m);
    for (int i = 0; i < m; ++i)
        q_adj(i) = loss_head_full(model.der_buses()[i]);
    q_adj += model.x_cols_der().transpose() * head_v;

    Vec g_vbar = Vec::Zero(m), g_alpha = Vec::Zero(m), g_delta = Vec::Zero(m),
        g_sigma = Vec::Zero(m);
    Vec v_adj(m);
    const int steps = static_cast<int>(tape.v_der.size());
    for (int t = steps - 1; t >= 0; --t) {
        const Vec& v = tape.v_der[t];
        for (int i = 0; i < m; ++i) {
            const RuleParams::Partials p = rules.rule(i).partials(v(i));
            const double a = q_adj(i);
            g_vbar(i) += a * p.dv_bar;
            g_alpha(i) += a * p.dalpha;
            g_delta(i) += a * p.ddelta;
            g_sigma(i) += a * p.dsigma;
            v_adj(i) = a * p.dv;
        }
        if (t > 0)
            q_adj = model.x_der().transpose() * v_adj;
    }

    ev.gradient.resize(4 * m);
    ev.gradient << g_vbar, g_alpha, g_delta, g_sigma;
    if (!ev.gradient.allFinite()) {
        std::ostringstream os;
        os << "non-finite gradient after " << eq.iterations << " unrolled steps";
        throw NumericalError(os.str());
    }
    return ev;
}

namespace {

LagrangianValue reduce(const RuleSet& rules, const Vec& lambda, const GridModel& model,
                       std::span<const Scenario> scenarios, const ChanceConfig& cfg,
                       const EquilibriumOptions& opts, bool with_grad) {
    if (scenarios.empty())
        throw NumericalError("lagrangian: at least one scenario required");
    if (lambda.size() != model.n())
        throw NumericalError("lagrangian: lambda must have one entry per bus");
    if ((lambda.array() < 0.0).any())
        throw NumericalError("lagrangian: lambda must be entrywise nonnegative");

    const int n = model.n();
    const int m = model.n_der();
    const double s_count = static_cast<double>(scenarios.size());

    LagrangianValue out;
    out.constraint_terms = Vec::Zero(n);
    if (with_grad)
        out.gradient = Vec::Zero(4 * m);
    for (const Scenario& s : scenarios) {
        ScenarioEval ev =
            eval_scenario(rules, model, s, cfg, opts, with_grad ? &lambda : nullptr);
        out.loss_term += ev.loss;
        out.constraint_terms += ev.indicators;
        if (with_grad)
            out.gradient += ev.gradient;
    }
    out.loss_term /= s_count;
    out.constraint_terms /= s_count;
    if (with_grad)
        out.gradient /= s_count;

    out.total = out.loss_term;
    for (int i = 0; i < n; ++i)
        out.total += lambda(i) * (out.constraint_terms(i) - cfg.beta);
    return out;
}

} // namespace

LagrangianValue lagrangian(const RuleSet& rules, const Vec& lambda,
                           const GridModel& model, std::span<const Scenario> scenarios,
                           const ChanceConfig& cfg, const EquilibriumOptions& opts) {
    return reduce(rules, lambda, model, scenarios, cfg, opts, false);
}

LagrangianValue lagrangian_gradient(const RuleSet& rules, const Vec& lambda,
                                    const GridModel& model,
                                    std::span<const Scenario> scenarios,
                                    const ChanceConfig& cfg,
                                    const EquilibriumOptions& opts) {
    return reduce(rules, lambda, model, scenarios, cfg, opts, true);
}

} // namespace voltvar
