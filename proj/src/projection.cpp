#include "voltvar/projection.hpp"

#include "voltvar/errors.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace voltvar {

Vec TransformedPoint::stack() const {
    const int m = size();
    Vec y(4 * m);
    y << v_bar, c, delta, sigma;
    return y;
}

TransformedPoint TransformedPoint::unstack(const Vec& y) {
    const int m = static_cast<int>(y.size()) / 4;
    TransformedPoint p;
    p.v_bar = y.segment(0, m);
    p.c = y.segment(m, m);
    p.delta = y.segment(2 * m, m);
    p.sigma = y.segment(3 * m, m);
    return p;
}

TransformedPoint to_transformed(const Vec& z, double alpha_min) {
    const int m = static_cast<int>(z.size()) / 4;
    if (z.size() != 4 * m || m == 0)
        throw NumericalError("to_transformed: expected a 4M parameter vector");
    TransformedPoint p;
    p.v_bar = z.segment(0, m);
    p.delta = z.segment(2 * m, m);
    p.sigma = z.segment(3 * m, m);
    p.c.resize(m);
    for (int i = 0; i < m; ++i) {
        double a = z(m + i);
        if (a <= 0.0) {
            if (alpha_min <= 0.0) {
                std::ostringstream os;
                os << "to_transformed: nonpositive slope " << a << " at DER " << i;
                throw NumericalError(os.str());
            }
            a = alpha_min;
        }
        p.c(i) = 1.0 / a;
    }
    return p;
}

Vec from_transformed(const TransformedPoint& p) {
    const int m = p.size();
    Vec z(4 * m);
    for (int i = 0; i < m; ++i) {
        if (!(p.c(i) > 0.0))
            throw NumericalError("from_transformed: c must be entrywise positive");
        z(i) = p.v_bar(i);
        z(m + i) = 1.0 / p.c(i);
        z(2 * m + i) = p.delta(i);
        z(3 * m + i) = p.sigma(i);
    }
    return z;
}

FeasibleSetSpec FeasibleSetSpec::from_model(const GridModel& model, double epsilon) {
    FeasibleSetSpec spec;
    spec.x_der = model.x_der();
    spec.epsilon = epsilon;
    spec.q_hat = model.q_hat();
    spec.validate();
    return spec;
}

void FeasibleSetSpec::validate() const {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw ConfigError("feasible set: epsilon must lie in (0,1)");
    const int md = m();
    if (x_der.rows() != md || x_der.cols() != md)
        throw ConfigError("feasible set: X must be square over the DER buses");
    if ((x_der.array() <= 0.0).any())
        throw ConfigError("infeasible feasible-set specification: X entries must be positive");
    if (!x_der.isApprox(x_der.transpose(), 1e-12))
        throw ConfigError("feasible set: X must be symmetric");
    if ((q_hat.array() <= 0.0).any())
        throw ConfigError("infeasible feasible-set specification: q_hat must be positive");
}

Vec FeasibleSetSpec::c_lower() const {
    return x_der.rowwise().sum() / (1.0 - epsilon);
}

namespace {

// Constraint layout, bus-major: 8 linear rows per bus followed by the M
// coupled rows sum_m X[n][m]/c_m <= 1-eps. Indices into y = [v_bar; c;
// delta; sigma].
struct ConstraintSystem {
    const FeasibleSetSpec& spec;
    int m;
    Vec cl;
    double bound; // 1 - epsilon

    explicit ConstraintSystem(const FeasibleSetSpec& s)
        : spec(s), m(s.m()), cl(s.c_lower()), bound(1.0 - s.epsilon) {}

    int total() const { return 9 * m; }

    // g_i(y) <= 0; returns +inf-laden values when c <= 0.
    Vec values(const Vec& y) const {
        Vec g(total());
        const double inf = std::numeric_limits<double>::infinity();
        for (int n = 0; n < m; ++n) {
            const double vb = y(n), c = y(m + n), d = y(2 * m + n), s = y(3 * m + n);
            double* row = g.data() + 8 * n;
            row[0] = 0.95 - vb;
            row[1] = vb - 1.05;
            row[2] = -d;
            row[3] = d - 0.03;
            row[4] = d + 0.02 - s;
            row[5] = s - 0.18;
            row[6] = s - d - spec.q_hat(n) * c;
            row[7] = cl(n) - c;
        }
        for (int n = 0; n < m; ++n) {
            double acc = -bound;
            for (int j = 0; j < m; ++j) {
                const double cj = y(m + j);
                if (!(cj > 0.0)) {
                    acc = inf;
                    break;
                }
                acc += spec.x_der(n, j) / cj;
            }
            g(8 * m + n) = acc;
        }
        return g;
    }

    // Sparse gradient of one constraint; the coupled rows are dense in c.
    void add_gradient(int idx, const Vec& y, double weight, Vec& out) const {
        if (idx < 8 * m) {
            const int n = idx / 8;
            switch (idx % 8) {
            case 0: out(n) -= weight; break;
            case 1: out(n) += weight; break;
            case 2: out(2 * m + n) -= weight; break;
            case 3: out(2 * m + n) += weight; break;
            case 4: out(2 * m + n) += weight; out(3 * m + n) -= weight; break;
            case 5: out(3 * m + n) += weight; break;
            case 6:
                out(3 * m + n) += weight;
                out(2 * m + n) -= weight;
                out(m + n) -= weight * spec.q_hat(n);
                break;
            case 7: out(m + n) -= weight; break;
            }
        } else {
            const int n = idx - 8 * m;
            for (int j = 0; j < m; ++j) {
                const double cj = y(m + j);
                out(m + j) += weight * (-spec.x_der(n, j) / (cj * cj));
            }
        }
    }

    Vec gradient(int idx, const Vec& y) const {
        Vec g = Vec::Zero(4 * m);
        add_gradient(idx, y, 1.0, g);
        return g;
    }

    // weight * Hessian of constraint idx (zero for the linear rows).
    void add_hessian(int idx, const Vec& y, double weight, Mat& out) const {
        if (idx < 8 * m)
            return;
        const int n = idx - 8 * m;
        for (int j = 0; j < m; ++j) {
            const double cj = y(m + j);
            out(m + j, m + j) += weight * 2.0 * spec.x_der(n, j) / (cj * cj * cj);
        }
    }

    bool strictly_feasible(const Vec& y) const {
        return (values(y).array() < 0.0).all();
    }
};

// Strictly interior start: clamp the separable blocks into their boxes and
// lift c until the coupled rows have slack.
Vec interior_start(const TransformedPoint& p, const ConstraintSystem& cs) {
    const int m = cs.m;
    Vec y(4 * m);
    for (int n = 0; n < m; ++n) {
        y(n) = std::clamp(p.v_bar(n), 0.95 + 1e-3, 1.05 - 1e-3);
        const double d = std::clamp(p.delta(n), 1e-4, 0.03 - 1e-4);
        y(2 * m + n) = d;
        y(3 * m + n) = std::clamp(p.sigma(n), d + 0.02 + 1e-4, 0.18 - 1e-4);
    }
    for (int n = 0; n < m; ++n) {
        const double d = y(2 * m + n), s = y(3 * m + n);
        double c = std::max({p.c(n), cs.cl(n) * (1.0 + 1e-3),
                             (s - d) / cs.spec.q_hat(n) * (1.0 + 1e-3), 1e-12});
        y(m + n) = c;
    }
    double scale = 1.0;
    for (int n = 0; n < m; ++n) {
        double h = -cs.bound;
        for (int j = 0; j < m; ++j)
            h += cs.spec.x_der(n, j) / y(m + j);
        scale = std::max(scale, (h + cs.bound) / (cs.bound * (1.0 - 1e-3)));
    }
    if (scale > 1.0)
        y.segment(m, m) *= scale;
    return y;
}

struct BarrierEval {
    double value = 0.0;
    Vec grad;
    Mat hess;
    bool interior = false;
};

BarrierEval barrier(const ConstraintSystem& cs, const Vec& y) {
    BarrierEval ev;
    const Vec g = cs.values(y);
    if (!(g.array() < 0.0).all())
        return ev;
    ev.interior = true;
    const int dim = static_cast<int>(y.size());
    ev.grad = Vec::Zero(dim);
    ev.hess = Mat::Zero(dim, dim);
    for (int i = 0; i < cs.total(); ++i) {
        const double slack = -g(i);
        ev.value -= std::log(slack);
        cs.add_gradient(i, y, 1.0 / slack, ev.grad);
        Vec gi = cs.gradient(i, y);
        ev.hess.noalias() += gi * gi.transpose() / (slack * slack);
        cs.add_hessian(i, y, 1.0 / slack, ev.hess);
    }
    return ev;
}

// Damped Newton on t*||y - p||^2 + barrier(y).
void center(const ConstraintSystem& cs, const Vec& p, double t, Vec& y, int max_newton) {
    const int dim = static_cast<int>(y.size());
    for (int it = 0; it < max_newton; ++it) {
        BarrierEval ev = barrier(cs, y);
        if (!ev.interior)
            throw NumericalError("projection: interior-point iterate left the domain");
        const double f = t * (y - p).squaredNorm() + ev.value;
        Vec grad = 2.0 * t * (y - p) + ev.grad;
        Mat hess = ev.hess;
        hess.diagonal().array() += 2.0 * t;
        Vec d = hess.ldlt().solve(-grad);
        const double dec = -grad.dot(d);
        if (!(dec > 0.0))
            break;
        if (dec * 0.5 <= 1e-12 * (1.0 + std::abs(f)))
            break;
        double stepsize = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            Vec cand = y + stepsize * d;
            if (cs.strictly_feasible(cand)) {
                BarrierEval ec = barrier(cs, cand);
                const double fc = t * (cand - p).squaredNorm() + ec.value;
                if (fc <= f - 1e-4 * stepsize * dec) {
                    y = cand;
                    accepted = true;
                    break;
                }
            }
            stepsize *= 0.5;
        }
        if (!accepted)
            break;
    }
}

// Newton iteration on the KKT system of min ||y-p||^2 s.t. g_A(y) = 0.
bool polish_active_set(const ConstraintSystem& cs, const Vec& p,
                       const std::vector<int>& active, Vec& y, Vec& nu) {
    const int dim = static_cast<int>(y.size());
    const int na = static_cast<int>(active.size());
    nu = Vec::Zero(na);
    for (int it = 0; it < 40; ++it) {
        Vec r1 = 2.0 * (y - p);
        Mat h = Mat::Zero(dim, dim);
        h.diagonal().array() = 2.0;
        Mat ga(na, dim);
        Vec r2(na);
        const Vec g = cs.values(y);
        for (int a = 0; a < na; ++a) {
            const int idx = active[a];
            Vec gi = cs.gradient(idx, y);
            ga.row(a) = gi.transpose();
            r1 += nu(a) * gi;
            cs.add_hessian(idx, y, nu(a), h);
            r2(a) = g(idx);
        }
        const double res = std::max(r1.lpNorm<Eigen::Infinity>(),
                                    na ? r2.lpNorm<Eigen::Infinity>() : 0.0);
        if (res <= 1e-12)
            return true;
        Mat kkt = Mat::Zero(dim + na, dim + na);
        kkt.topLeftCorner(dim, dim) = h;
        if (na) {
            kkt.topRightCorner(dim, na) = ga.transpose();
            kkt.bottomLeftCorner(na, dim) = ga;
        }
        Vec rhs(dim + na);
        rhs << -r1, -r2;
        Eigen::FullPivLU<Mat> lu(kkt);
        if (!lu.isInvertible())
            return false;
        Vec d = lu.solve(rhs);
        double stepsize = 1.0;
        // keep c positive; everything else is unconstrained here
        for (int ls = 0; ls < 50; ++ls) {
            Vec cand = y + stepsize * d.head(dim);
            if ((cand.segment(cs.m, cs.m).array() > 0.0).all())
                break;
            stepsize *= 0.5;
        }
        y += stepsize * d.head(dim);
        nu += stepsize * d.tail(na);
    }
    return false;
}

} // namespace

double max_constraint_violation(const TransformedPoint& p, const FeasibleSetSpec& spec) {
    ConstraintSystem cs(spec);
    return cs.values(p.stack()).maxCoeff();
}

TransformedPoint project_feasible(const TransformedPoint& p, const FeasibleSetSpec& spec,
                                  const ProjectionOptions& opts) {
    spec.validate();
    const int m = spec.m();
    if (p.size() != m || p.delta.size() != m || p.sigma.size() != m || p.c.size() != m)
        throw NumericalError("project_feasible: point/spec dimension mismatch");
    ConstraintSystem cs(spec);
    const Vec target = p.stack();

    Vec y = interior_start(p, cs);
    double t = 1.0;
    const double total = static_cast<double>(cs.total());
    while (true) {
        center(cs, target, t, y, opts.max_newton);
        if (total / t <= opts.gap_tol)
            break;
        t *= 10.0;
    }

    if (opts.polish) {
        // Central-path multiplier estimates classify the active set.
        const double slack_cut = std::sqrt(total / t) * 10.0;
        Vec g = cs.values(y);
        std::vector<int> active;
        for (int i = 0; i < cs.total(); ++i)
            if (-g(i) <= slack_cut)
                active.push_back(i);
        Vec yp = y, nu;
        for (int round = 0; round < 6; ++round) {
            if (!polish_active_set(cs, target, active, yp, nu)) {
                yp = y;
                break;
            }
            // Drop constraints whose multipliers came out negative, add any
            // newly violated ones; stop when the KKT sign pattern is clean.
            bool changed = false;
            std::vector<int> next;
            for (std::size_t a = 0; a < active.size(); ++a) {
                if (nu(static_cast<int>(a)) >= -1e-9)
                    next.push_back(active[a]);
                else
                    changed = true;
            }
            Vec gp = cs.values(yp);
            for (int i = 0; i < cs.total(); ++i) {
                if (gp(i) > 1e-11
                    && std::find(next.begin(), next.end(), i) == next.end()) {
                    next.push_back(i);
                    changed = true;
                }
            }
            std::sort(next.begin(), next.end());
            if (!changed)
                break;
            active = std::move(next);
            yp = y;
        }
        Vec gp = cs.values(yp);
        if (gp.maxCoeff() <= opts.feas_tol)
            y = yp;
    }

    return TransformedPoint::unstack(y);
}

} // namespace voltvar
