#pragma once

#include "voltvar/grid_model.hpp"
#include "voltvar/linalg.hpp"

namespace voltvar {

/// Rule parameters in the convexifying coordinates: slopes replaced by
/// their reciprocals c_n = 1/alpha_n.
struct TransformedPoint {
    Vec v_bar, c, delta, sigma;

    int size() const { return static_cast<int>(v_bar.size()); }
    Vec stack() const;                 // [v_bar; c; delta; sigma]
    static TransformedPoint unstack(const Vec& y);
};

/// alpha -> c = 1/alpha. Slopes at or below zero are rejected unless
/// alpha_min > 0 is supplied, in which case they are clamped first.
TransformedPoint to_transformed(const Vec& z, double alpha_min = 0.0);
Vec from_transformed(const TransformedPoint& p);

/// Data defining the transformed feasible set: the four 1547 boxes plus the
/// linearized stability conditions on the DER-restricted X.
struct FeasibleSetSpec {
    Mat x_der;      // M x M, symmetric positive entries
    double epsilon = 0.5;
    Vec q_hat;      // per DER

    static FeasibleSetSpec from_model(const GridModel& model, double epsilon);
    void validate() const;

    int m() const { return static_cast<int>(q_hat.size()); }
    /// Row-sum lower bounds on c from the per-slope stability condition.
    Vec c_lower() const;
};

struct ProjectionOptions {
    double gap_tol = 1e-11;      // barrier duality-gap target before polishing
    double feas_tol = 1e-8;      // guaranteed constraint satisfaction
    int max_newton = 80;         // per centering step
    bool polish = true;          // active-set KKT refinement
};

/// Euclidean projection of p onto the transformed feasible set, accurate to
/// first-order optimality. Distances are measured in the transformed
/// coordinates.
TransformedPoint project_feasible(const TransformedPoint& p, const FeasibleSetSpec& spec,
                                  const ProjectionOptions& opts = {});

/// Worst signed constraint value at p (<= 0 means feasible).
double max_constraint_violation(const TransformedPoint& p, const FeasibleSetSpec& spec);

} // namespace voltvar
