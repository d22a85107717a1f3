#include "voltvar/dynamics.hpp"

#include "voltvar/errors.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace voltvar {

StabilityReport check_stability(const RuleSet& rules, const GridModel& model,
                                double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw NumericalError("check_stability: epsilon must lie in (0,1)");
    const int m = model.n_der();
    if (rules.size() != m)
        throw NumericalError("check_stability: rule count does not match DER count");
    Vec alpha(m);
    for (int i = 0; i < m; ++i)
        alpha(i) = rules.rule(i).alpha;

    StabilityReport rep;
    const double bound = 1.0 - epsilon;
    Mat ax = alpha.asDiagonal() * model.x_der();
    rep.spectral_norm = m == 0 ? 0.0 : ax.jacobiSvd().singularValues()(0);
    rep.spectral_ok = rep.spectral_norm <= bound;

    Vec row_image = model.x_der() * alpha;
    Vec row_sums = model.x_der().rowwise().sum();
    rep.worst_row_gap = m == 0 ? -bound : (row_image.array() - bound).maxCoeff();
    rep.worst_alpha_gap =
        m == 0 ? -bound : (alpha.array() - bound / row_sums.array()).maxCoeff();
    rep.inner_ok = rep.worst_row_gap <= 0.0 && rep.worst_alpha_gap <= 0.0;
    return rep;
}

int depth_bound(const Vec& q_hat, double epsilon, double epsilon1) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw NumericalError("depth_bound: epsilon must lie in (0,1)");
    if (!(epsilon1 > 0.0))
        throw NumericalError("depth_bound: epsilon1 must be positive");
    const double reach = 2.0 * q_hat.norm();
    if (reach <= epsilon1)
        return 0;
    return static_cast<int>(
        std::ceil((std::log(reach) - std::log(epsilon1)) / -std::log1p(-epsilon)));
}

EquilibriumResult equilibrium(const RuleSet& rules, const GridModel& model,
                              const Scenario& s, const EquilibriumOptions& opts,
                              Tape* tape) {
    const int m = model.n_der();
    if (rules.size() != m)
        throw NumericalError("equilibrium: rule count does not match DER count");
    if (!(opts.tol > 0.0))
        throw NumericalError("equilibrium: tol must be positive");

    int max_t = opts.max_iterations;
    if (max_t <= 0)
        max_t = std::max(depth_bound(model.q_hat(), opts.epsilon, opts.tol), 64);

    const Vec vt_full = model.uncompensated_voltage(s);
    Vec vt_der(m);
    for (int i = 0; i < m; ++i)
        vt_der(i) = vt_full(model.der_buses()[i]);

    Vec q = opts.q_init ? *opts.q_init : Vec::Zero(m);
    if (q.size() != m)
        throw NumericalError("equilibrium: q_init dimension does not match DER count");

    if (tape) {
        *tape = Tape{};
        tape->q_der.push_back(q);
    }

    EquilibriumResult res;
    Vec v(m), q_next(m);
    for (int t = 0; t < max_t; ++t) {
        v = model.x_der() * q + vt_der;
        std::vector<std::uint8_t> mask_row;
        if (tape)
            mask_row.resize(m);
        for (int i = 0; i < m; ++i) {
            q_next(i) = rules.rule(i).eval_relu(v(i));
            if (tape)
                mask_row[i] = rules.rule(i).partials(v(i)).mask;
        }
        const double step2 = (q_next - q).norm();
        res.step_norms.push_back(step2);
        res.residual = (q_next - q).lpNorm<Eigen::Infinity>();
        if (tape) {
            tape->v_der.push_back(v);
            tape->q_der.push_back(q_next);
            tape->masks.push_back(std::move(mask_row));
        }
        q = q_next;
        res.iterations = t + 1;
        if (step2 < opts.tol) {
            res.converged = true;
            break;
        }
    }
    if (!res.converged && opts.throw_on_max) {
        std::ostringstream os;
        os << "Volt/VAR iteration did not settle within " << max_t
           << " steps (last step 2-norm " << res.step_norms.back() << ")";
        throw DivergenceError(os.str(), res.step_norms);
    }
    res.q_star = model.embed_der(q);
    res.v_star = model.x_cols_der() * q + vt_full;
    return res;
}

} // namespace voltvar
