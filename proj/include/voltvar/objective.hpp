#pragma once

#include "voltvar/dynamics.hpp"
#include "voltvar/grid_model.hpp"
#include "voltvar/rules.hpp"

#include <span>
#include <vector>

namespace voltvar {

/// Voltage band and surrogate sharpness for the chance constraints.
struct ChanceConfig {
    double v_low = 0.97;
    double v_high = 1.03;
    double beta = 0.05;   // allowed violation probability, (0, 1]
    double gamma = 1e-4;  // logistic sharpness

    double v_ref() const { return 0.5 * (v_low + v_high); }
    double radius() const { return 0.5 * (v_high - v_low); }
    void validate() const;
};

/// Unit step, with step(0) = 1.
double step(double x);

/// 1 / (1 + exp(-x/gamma)), saturating without overflow. Built symmetric so
/// logistic(x) + logistic(-x) == 1 exactly.
double logistic(double x, double gamma);
double logistic_derivative(double x, double gamma);

/// Smooth out-of-band indicator u~((v - v_ref)^2 - radius^2).
double band_indicator(double v, const ChanceConfig& cfg);

enum class ViolationMode { hard, soft };

/// Per-bus average of band-violation indicators over the equilibria of all
/// scenarios. hard counts the step; soft uses the logistic surrogate.
Vec empirical_violation(const RuleSet& rules, const GridModel& model,
                        std::span<const Scenario> scenarios, const ChanceConfig& cfg,
                        ViolationMode mode, const EquilibriumOptions& opts = {});

/// Same over precomputed equilibria.
Vec empirical_violation(std::span<const EquilibriumResult> equilibria,
                        const ChanceConfig& cfg, ViolationMode mode, int n_buses);

double average_loss(const RuleSet& rules, const GridModel& model,
                    std::span<const Scenario> scenarios,
                    const EquilibriumOptions& opts = {});

double average_loss(const GridModel& model, std::span<const Scenario> scenarios,
                    std::span<const EquilibriumResult> equilibria);

} // namespace voltvar
