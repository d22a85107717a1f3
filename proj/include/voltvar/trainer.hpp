#pragma once

#include "voltvar/batch.hpp"
#include "voltvar/grid_model.hpp"
#include "voltvar/objective.hpp"
#include "voltvar/projection.hpp"
#include "voltvar/rules.hpp"
#include "voltvar/scenarios.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace voltvar {

struct StepSchedule {
    double base = 0.0;
    double decay = 1.0;
    double at(int k) const;
};

struct RuleInit {
    double v_bar = 1.0;
    double delta = 0.01;
    double sigma = 0.03;
    double alpha = 1.5;
};

struct TrainerConfig {
    double beta = 0.05;
    double gamma = 1e-4;
    double epsilon = 0.5; // stability margin
    double v_low = 0.97;
    double v_high = 1.03;
    int max_iterations = 1000;
    StepSchedule mu_z{0.001, 0.99};
    StepSchedule mu_lambda{0.0015, 0.99};
    RuleInit z_init;
    double eq_tol = 1e-7;
    double param_stall_tol = 1e-6;
    double alpha_min = 1e-6;   // slope clamp ahead of the reciprocal transform
    int batch_size = 0;        // 0: full batch for the primal gradient
    std::uint64_t seed = 1;
    ExecutionPolicy policy = ExecutionPolicy::parallel;

    ChanceConfig chance() const { return {v_low, v_high, beta, gamma}; }
    EquilibriumOptions equilibrium_options() const;
    void validate() const;
};

struct IterationRecord {
    int k = 0;
    double loss = 0.0;
    double worst_hard = 0.0;
    double worst_soft = 0.0;
    double lambda_inf = 0.0;
    double mu_z = 0.0;
    double mu_lambda = 0.0;
};

struct DesignResult {
    RuleSet rules;
    std::vector<Vec> lambda_trajectory;
    std::vector<IterationRecord> history;
    bool converged = false;
    int iterations = 0;
    double final_loss = 0.0;
    Vec final_hard;
    Vec final_soft;
};

/// One projected-gradient descent step on the rules: gradient, slope clamp,
/// reciprocal transform, projection, back transform.
Vec primal_update(const Vec& z, const Vec& lambda, const GridModel& model,
                  std::span<const Scenario> scenarios, const TrainerConfig& cfg,
                  double mu_z_k);

/// Projected ascent on the multipliers from the soft per-bus violations.
Vec dual_update(const Vec& lambda, const Vec& soft_violation, double beta, double mu);

DesignResult run_ord(const TrainerConfig& cfg, const GridModel& model,
                     std::span<const Scenario> scenarios);
DesignResult run_ord(const TrainerConfig& cfg, const FeederModel& feeder,
                     const ScenarioSet& scenarios);

} // namespace voltvar
