#include "voltvar/ac_validation.hpp"

#include "voltvar/errors.hpp"

#include <cmath>
#include <sstream>

namespace voltvar {

using Cplx = std::complex<double>;

Vec AcSolution::squared_magnitudes() const {
    Vec u(static_cast<int>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
        u(static_cast<int>(i)) = std::norm(v[i]);
    return u;
}

namespace {

struct SweepTopology {
    std::vector<int> bfs_order;      // buses 1..N, root-first
    std::vector<int> parent;         // per bus
    std::vector<Cplx> z_up;          // impedance of the line toward the parent
    std::vector<std::vector<int>> children;

    explicit SweepTopology(const FeederModel& feeder) {
        const int nb = feeder.n_buses;
        std::vector<std::vector<std::pair<int, int>>> adj(nb);
        for (std::size_t i = 0; i < feeder.lines.size(); ++i) {
            adj[feeder.lines[i].from].push_back({feeder.lines[i].to, (int)i});
            adj[feeder.lines[i].to].push_back({feeder.lines[i].from, (int)i});
        }
        parent.assign(nb, -1);
        z_up.assign(nb, Cplx(0, 0));
        children.assign(nb, {});
        std::vector<char> seen(nb, 0);
        std::vector<int> queue{0};
        seen[0] = 1;
        for (std::size_t h = 0; h < queue.size(); ++h) {
            int b = queue[h];
            if (b != 0)
                bfs_order.push_back(b);
            for (auto [other, li] : adj[b])
                if (!seen[other]) {
                    seen[other] = 1;
                    parent[other] = b;
                    z_up[other] = Cplx(feeder.lines[li].r, feeder.lines[li].x);
                    children[b].push_back(other);
                    queue.push_back(other);
                }
        }
    }
};

} // namespace

AcSolution ac_power_flow(const FeederModel& feeder, const Vec& p_inj, const Vec& q_inj,
                         const AcOptions& opts) {
    feeder.validate();
    const int n = feeder.n();
    if (p_inj.size() != n || q_inj.size() != n)
        throw NumericalError("ac_power_flow: injection dimension does not match feeder");
    if (!p_inj.allFinite() || !q_inj.allFinite())
        throw NumericalError("ac_power_flow: injections must be finite");

    SweepTopology topo(feeder);
    const Cplx v_root(std::sqrt(feeder.v0), 0.0);
    std::vector<Cplx> v(feeder.n_buses, v_root);
    std::vector<Cplx> inj(feeder.n_buses, Cplx(0, 0));
    for (int b = 1; b <= n; ++b)
        inj[b] = Cplx(p_inj(b - 1), q_inj(b - 1));

    std::vector<Cplx> branch(feeder.n_buses, Cplx(0, 0)); // current toward bus b

    AcSolution sol;
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        // Backward: aggregate currents from the leaves.
        for (auto it = topo.bfs_order.rbegin(); it != topo.bfs_order.rend(); ++it) {
            const int b = *it;
            Cplx j = -std::conj(inj[b] / v[b]);
            for (int c : topo.children[b])
                j += branch[c];
            branch[b] = j;
        }
        // Forward: propagate voltage drops from the substation.
        for (int b : topo.bfs_order) {
            v[b] = v[topo.parent[b]] - topo.z_up[b] * branch[b];
            if (std::abs(v[b]) < 0.5) {
                std::ostringstream os;
                os << "ac_power_flow: voltage collapse at bus " << b << " (|v|="
                   << std::abs(v[b]) << ")";
                throw DivergenceError(os.str(), {});
            }
        }
        // Power mismatch against the voltages just computed.
        double mismatch = 0.0;
        for (int b = 1; b <= n; ++b) {
            Cplx i_away = (v[b] - v[topo.parent[b]]) / topo.z_up[b];
            for (int c : topo.children[b])
                i_away += (v[b] - v[c]) / topo.z_up[c];
            mismatch = std::max(mismatch, std::abs(inj[b] - v[b] * std::conj(i_away)));
        }
        sol.iterations = sweep + 1;
        sol.max_mismatch = mismatch;
        if (mismatch <= opts.tol) {
            sol.converged = true;
            break;
        }
    }
    if (!sol.converged) {
        std::ostringstream os;
        os << "ac_power_flow: sweep did not converge in " << opts.max_sweeps
           << " iterations (mismatch " << sol.max_mismatch << ")";
        throw DivergenceError(os.str(), {sol.max_mismatch});
    }
    sol.v.assign(v.begin() + 1, v.end());
    return sol;
}

EquilibriumResult ac_equilibrium(const RuleSet& rules, const FeederModel& feeder,
                                 const Scenario& s, const EquilibriumOptions& opts,
                                 const AcOptions& ac_opts) {
    const int n = feeder.n();
    std::vector<int> der_bus;
    for (const Der& d : feeder.ders)
        der_bus.push_back(d.bus);
    std::sort(der_bus.begin(), der_bus.end());
    const int m = static_cast<int>(der_bus.size());
    if (rules.size() != m)
        throw NumericalError("ac_equilibrium: rule count does not match DER count");

    const int max_t = opts.max_iterations > 0 ? opts.max_iterations : 300;
    Vec q = opts.q_init ? *opts.q_init : Vec::Zero(m);

    EquilibriumResult res;
    Vec u;
    for (int t = 0; t < max_t; ++t) {
        Vec q_inj = s.q_tilde;
        for (int i = 0; i < m; ++i)
            q_inj(der_bus[i] - 1) += q(i);
        AcSolution sol = ac_power_flow(feeder, s.p_tilde, q_inj, ac_opts);
        u = sol.squared_magnitudes();
        Vec q_next(m);
        for (int i = 0; i < m; ++i)
            q_next(i) = rules.rule(i).eval_relu(u(der_bus[i] - 1));
        const double step2 = (q_next - q).norm();
        res.step_norms.push_back(step2);
        res.residual = (q_next - q).lpNorm<Eigen::Infinity>();
        q = q_next;
        res.iterations = t + 1;
        if (step2 < opts.tol) {
            res.converged = true;
            break;
        }
    }
    if (!res.converged && opts.throw_on_max)
        throw DivergenceError("ac_equilibrium: rule iteration did not settle",
                              res.step_norms);
    res.q_star = Vec::Zero(n);
    for (int i = 0; i < m; ++i)
        res.q_star(der_bus[i] - 1) = q(i);
    res.v_star = u;
    return res;
}

VoltageErrorStats model_error(const EquilibriumResult& lin, const EquilibriumResult& ac) {
    std::vector<EquilibriumResult> a{lin}, b{ac};
    return model_error(std::span<const EquilibriumResult>(a),
                       std::span<const EquilibriumResult>(b));
}

VoltageErrorStats model_error(std::span<const EquilibriumResult> lin,
                              std::span<const EquilibriumResult> ac) {
    if (lin.size() != ac.size() || lin.empty())
        throw NumericalError("model_error: mismatched result batches");
    VoltageErrorStats stats;
    long count = 0;
    for (std::size_t i = 0; i < lin.size(); ++i) {
        if (lin[i].v_star.size() != ac[i].v_star.size())
            throw NumericalError("model_error: voltage dimension mismatch");
        for (int b = 0; b < lin[i].v_star.size(); ++b) {
            const double e = std::abs(lin[i].v_star(b) - ac[i].v_star(b));
            stats.mean_abs += e;
            stats.max_abs = std::max(stats.max_abs, e);
            ++count;
        }
    }
    stats.mean_abs /= static_cast<double>(count);
    return stats;
}

} // namespace voltvar
