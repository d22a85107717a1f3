#pragma once

#include "voltvar/dynamics.hpp"
#include "voltvar/feeder.hpp"
#include "voltvar/grid_model.hpp"
#include "voltvar/rules.hpp"

#include <complex>
#include <span>
#include <vector>

namespace voltvar {

struct AcOptions {
    double tol = 1e-9;   // max complex power mismatch, pu
    int max_sweeps = 200;
};

struct AcSolution {
    std::vector<std::complex<double>> v; // buses 1..N
    bool converged = false;
    int iterations = 0;
    double max_mismatch = 0.0;

    /// Squared magnitudes, the scale shared with the linearized model.
    Vec squared_magnitudes() const;
};

/// Backward/forward sweep for radial feeders. Injections are signed
/// (loads negative). The slack magnitude is sqrt(v0) so that squared
/// magnitudes reproduce the linearized model's flat profile exactly at
/// zero loading.
AcSolution ac_power_flow(const FeederModel& feeder, const Vec& p_inj, const Vec& q_inj,
                         const AcOptions& opts = {});

/// Closed-loop equilibrium with rules fed by exact AC voltages
/// (squared magnitudes), iterated from q = 0.
EquilibriumResult ac_equilibrium(const RuleSet& rules, const FeederModel& feeder,
                                 const Scenario& s, const EquilibriumOptions& opts = {},
                                 const AcOptions& ac_opts = {});

struct VoltageErrorStats {
    double mean_abs = 0.0;
    double max_abs = 0.0;
};

VoltageErrorStats model_error(const EquilibriumResult& lin, const EquilibriumResult& ac);
VoltageErrorStats model_error(std::span<const EquilibriumResult> lin,
                              std::span<const EquilibriumResult> ac);

} // namespace voltvar
