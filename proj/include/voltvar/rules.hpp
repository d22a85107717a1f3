#pragma once

#include "voltvar/linalg.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace voltvar {

/// One bus's droop curve: zero inside the deadband [v_bar-delta, v_bar+delta],
/// slope -alpha on the ramps, clamped at -/+ q_bar beyond v_bar +/- sigma.
/// q_bar is derived, q_bar = alpha * (sigma - delta).
struct RuleParams {
    double v_bar = 1.0;
    double alpha = 0.0;
    double delta = 0.0;
    double sigma = 0.0;

    double q_bar() const { return alpha * (sigma - delta); }

    double eval_piecewise(double v) const;
    double eval_relu(double v) const;

    /// Local derivatives of the ReLU form at voltage v, holding the other
    /// arguments fixed. Ramp kinks use the convention rho'(0) = 0, so a ramp
    /// is active iff its argument is strictly positive.
    struct Partials {
        double dv = 0.0;
        double dv_bar = 0.0;
        double dalpha = 0.0;
        double ddelta = 0.0;
        double dsigma = 0.0;
        std::uint8_t mask = 0; // bits: v-vb-d>0, v-vb-s>0, vb-d-v>0, vb-s-v>0
    };
    Partials partials(double v) const;
};

/// alpha = q_bar / (sigma - delta). Throws on sigma <= delta.
double slope_from(double q_bar, double delta, double sigma);

struct Violation {
    int bus = 0;               // feeder bus id
    std::string constraint;    // e.g. "delta <= 0.03"
    double margin = 0.0;       // amount by which the constraint is violated
};

/// Per-DER rules, ordered by ascending DER bus id. Flattens to
/// z = [v_bar...; alpha...; delta...; sigma...].
class RuleSet {
public:
    RuleSet() = default;
    RuleSet(std::vector<int> buses, std::vector<RuleParams> rules);

    int size() const { return static_cast<int>(rules_.size()); }
    const std::vector<int>& buses() const { return buses_; }
    const RuleParams& rule(int i) const { return rules_[i]; }
    std::vector<RuleParams>& rules() { return rules_; }
    const std::vector<RuleParams>& rules() const { return rules_; }

    Vec flatten() const;
    static RuleSet from_flat(const Vec& z, const std::vector<int>& buses);

    /// Uniform parameters at every DER bus.
    static RuleSet uniform(const std::vector<int>& buses, const RuleParams& p);
    /// IEEE-recommended defaults: v_bar=1, delta=0.02, sigma=0.08, q_bar=q_hat.
    static RuleSet defaults(const std::vector<int>& buses, const Vec& q_hat);
    /// All-zero slopes (open loop).
    static RuleSet flat(const std::vector<int>& buses);

    /// Standard-shape checks (2a)-(2d); empty result means compliant.
    std::vector<Violation> validate_1547(const Vec& q_hat) const;

    void save_csv(const std::string& path) const;
    static RuleSet load_csv(const std::string& path);

private:
    std::vector<int> buses_;   // feeder bus ids, ascending
    std::vector<RuleParams> rules_;
};

} // namespace voltvar
