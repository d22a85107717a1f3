#pragma once

#include "voltvar/grid_model.hpp"
#include "voltvar/rules.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace voltvar {

struct StabilityReport {
    bool spectral_ok = false; // ||diag(alpha) X_der||_2 <= 1 - epsilon
    bool inner_ok = false;    // linear sufficient conditions
    double spectral_norm = 0.0;
    double worst_row_gap = 0.0;    // max_n (X alpha)_n - (1 - eps)
    double worst_alpha_gap = 0.0;  // max_n alpha_n - (1 - eps)/rowsum_n
};

StabilityReport check_stability(const RuleSet& rules, const GridModel& model, double epsilon);

/// Smallest unroll depth T with (1-eps)^T * 2||q_hat||_2 <= eps1.
int depth_bound(const Vec& q_hat, double epsilon, double epsilon1);

/// Iteration trace recorded during an unrolled forward solve; consumed by
/// the reverse-mode sweep. Ramp masks are the strict-activation bits of the
/// four ReLUs per DER at each step.
struct Tape {
    std::vector<Vec> v_der;                      // v^t at DER buses, t = 0..T-1
    std::vector<Vec> q_der;                      // q^t at DER buses, t = 0..T
    std::vector<std::vector<std::uint8_t>> masks; // per step, per DER
};

struct EquilibriumOptions {
    int max_iterations = 0;  // 0: derive from depth_bound (floor 64)
    double tol = 1e-7;       // 2-norm stall threshold between iterates
    double epsilon = 0.5;    // stability margin used for the depth bound
    std::optional<Vec> q_init; // per-DER start, default zero
    bool throw_on_max = true;  // false: return converged=false at the cap
};

struct EquilibriumResult {
    Vec q_star;   // full length N, zero off DER buses
    Vec v_star;   // full length N
    int iterations = 0;
    double residual = 0.0; // inf-norm of the last iterate difference
    bool converged = false;
    std::vector<double> step_norms; // 2-norm trajectory ||q^{t+1} - q^t||
};

/// Runs v^t = X q^t + v~, q^{t+1} = f(v^t) from q_init until the 2-norm
/// between iterates drops below tol. Throws DivergenceError (with the
/// step-norm trajectory) when the cap is reached first.
EquilibriumResult equilibrium(const RuleSet& rules, const GridModel& model,
                              const Scenario& s, const EquilibriumOptions& opts = {},
                              Tape* tape = nullptr);

} // namespace voltvar
