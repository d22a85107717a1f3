#pragma once

#include "voltvar/dynamics.hpp"
#include "voltvar/objective.hpp"

#include <span>

namespace voltvar {

struct LagrangianValue {
    double total = 0.0;
    double loss_term = 0.0;
    Vec constraint_terms; // per bus: (1/S) sum_s g_n(z; theta_s)
    Vec gradient;         // over z = [v_bar; alpha; delta; sigma], empty if not requested
};

/// Per-scenario forward pass: equilibrium, loss, band indicators, and (when
/// lambda is supplied) the reverse-mode gradient of
/// loss + sum_n lambda_n g_n with respect to z.
struct ScenarioEval {
    double loss = 0.0;
    Vec indicators; // g_n per bus
    Vec gradient;   // 4M, empty when not requested
    int iterations = 0;
};

ScenarioEval eval_scenario(const RuleSet& rules, const GridModel& model,
                           const Scenario& s, const ChanceConfig& cfg,
                           const EquilibriumOptions& opts, const Vec* lambda);

/// L(z; lambda) value only.
LagrangianValue lagrangian(const RuleSet& rules, const Vec& lambda,
                           const GridModel& model, std::span<const Scenario> scenarios,
                           const ChanceConfig& cfg, const EquilibriumOptions& opts = {});

/// L(z; lambda) with its gradient over z, back-propagated through the
/// recorded unrolled iterations of every scenario.
LagrangianValue lagrangian_gradient(const RuleSet& rules, const Vec& lambda,
                                    const GridModel& model,
                                    std::span<const Scenario> scenarios,
                                    const ChanceConfig& cfg,
                                    const EquilibriumOptions& opts = {});

} // namespace voltvar
