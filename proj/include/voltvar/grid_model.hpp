#pragma once

#include "voltvar/feeder.hpp"
#include "voltvar/linalg.hpp"

#include <vector>

namespace voltvar {

/// One loading snapshot: net active injections and uncontrollable reactive
/// injections at buses 1..N (loads enter with negative sign).
struct Scenario {
    Vec p_tilde;
    Vec q_tilde;
};

/// Linearized feeder plant: v = X q + R p + v0 1 on squared-magnitude
/// voltages, with R[n][m] = 2 * sum of resistances on the common path from
/// the substation to buses n and m (and likewise X). Immutable after build;
/// safe for concurrent reads.
class GridModel {
public:
    static GridModel build(const FeederModel& feeder);

    int n() const { return static_cast<int>(r_.rows()); }
    const Mat& R() const { return r_; }
    const Mat& X() const { return x_; }
    double v0() const { return v0_; }

    /// 0-based indices into 1..N (bus b maps to index b-1), ascending.
    const std::vector<int>& der_buses() const { return der_; }
    int n_der() const { return static_cast<int>(der_.size()); }
    const Vec& q_hat() const { return q_hat_; }

    /// X restricted to DER rows and columns (closed-loop coupling).
    const Mat& x_der() const { return x_der_; }
    /// Full-height X columns at DER buses (maps DER injections to all buses).
    const Mat& x_cols_der() const { return x_cols_der_; }

    /// v~(theta) = R p~ + X q~ + v0 1.
    Vec uncompensated_voltage(const Scenario& s) const;

    /// Quadratic loss proxy (q + q~)' R (q + q~) + p~' R p~ for a
    /// full-length injection vector q.
    double approx_losses(const Vec& q_full, const Scenario& s) const;

    /// Same with q given at DER buses only (zero elsewhere).
    double approx_losses_der(const Vec& q_der, const Scenario& s) const;

    Vec embed_der(const Vec& q_der) const;

private:
    Mat r_, x_, x_der_, x_cols_der_;
    double v0_ = 1.0;
    std::vector<int> der_;
    Vec q_hat_;
};

} // namespace voltvar
