#pragma once

#include "voltvar/autodiff.hpp"
#include "voltvar/dynamics.hpp"
#include "voltvar/objective.hpp"

#include <span>
#include <vector>

namespace voltvar {

/// serial runs scenarios in a plain loop (the reference path); parallel
/// fans them out across OpenMP threads. Both fill per-scenario slots and
/// reduce in scenario order, so results are bit-identical.
enum class ExecutionPolicy { serial, parallel };

std::vector<EquilibriumResult> equilibria_batch(const RuleSet& rules,
                                                const GridModel& model,
                                                std::span<const Scenario> scenarios,
                                                const EquilibriumOptions& opts,
                                                ExecutionPolicy policy);

/// Scenario-parallel Lagrangian evaluation; gradient included when
/// with_gradient is set. Matches the serial reference in autodiff.cpp
/// bit-for-bit.
LagrangianValue lagrangian_batch(const RuleSet& rules, const Vec& lambda,
                                 const GridModel& model,
                                 std::span<const Scenario> scenarios,
                                 const ChanceConfig& cfg, const EquilibriumOptions& opts,
                                 bool with_gradient, ExecutionPolicy policy);

} // namespace voltvar
