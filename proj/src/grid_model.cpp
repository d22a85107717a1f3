#include "voltvar/grid_model.hpp"

#include "voltvar/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <sstream>

namespace voltvar {

GridModel GridModel::build(const FeederModel& feeder) {
    feeder.validate();
    const int n = feeder.n();

    // Orient lines away from the substation.
    std::vector<std::vector<std::pair<int, int>>> adj(n + 1); // bus -> (other, line idx)
    for (std::size_t i = 0; i < feeder.lines.size(); ++i) {
        adj[feeder.lines[i].from].push_back({feeder.lines[i].to, static_cast<int>(i)});
        adj[feeder.lines[i].to].push_back({feeder.lines[i].from, static_cast<int>(i)});
    }
    std::vector<int> parent(n + 1, -1), order;
    std::vector<double> cum_r(n + 1, 0.0), cum_x(n + 1, 0.0);
    std::vector<int> depth(n + 1, 0);
    std::vector<int> stack{0};
    std::vector<char> seen(n + 1, 0);
    seen[0] = 1;
    while (!stack.empty()) {
        int b = stack.back();
        stack.pop_back();
        order.push_back(b);
        for (auto [other, li] : adj[b]) {
            if (seen[other])
                continue;
            seen[other] = 1;
            parent[other] = b;
            cum_r[other] = cum_r[b] + feeder.lines[li].r;
            cum_x[other] = cum_x[b] + feeder.lines[li].x;
            depth[other] = depth[b] + 1;
            stack.push_back(other);
        }
    }

    auto lca = [&](int a, int b) {
        while (depth[a] > depth[b]) a = parent[a];
        while (depth[b] > depth[a]) b = parent[b];
        while (a != b) { a = parent[a]; b = parent[b]; }
        return a;
    };

    GridModel m;
    m.v0_ = feeder.v0;
    m.r_.resize(n, n);
    m.x_.resize(n, n);
    for (int a = 1; a <= n; ++a)
        for (int b = a; b <= n; ++b) {
            int c = lca(a, b);
            m.r_(a - 1, b - 1) = m.r_(b - 1, a - 1) = 2.0 * cum_r[c];
            m.x_(a - 1, b - 1) = m.x_(b - 1, a - 1) = 2.0 * cum_x[c];
        }

    Eigen::SelfAdjointEigenSolver<Mat> es(m.x_, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Mat> er(m.r_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 0.0 || er.eigenvalues().minCoeff() <= 0.0) {
        std::ostringstream os;
        os << "sensitivity matrices are not positive definite (min eig R="
           << er.eigenvalues().minCoeff() << ", X=" << es.eigenvalues().minCoeff() << ")";
        throw FeederError(os.str());
    }

    for (const Der& d : feeder.ders)
        m.der_.push_back(d.bus - 1);
    std::vector<std::size_t> perm(m.der_.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::sort(perm.begin(), perm.end(),
              [&](std::size_t a, std::size_t b) { return m.der_[a] < m.der_[b]; });
    std::vector<int> sorted;
    m.q_hat_.resize(static_cast<int>(perm.size()));
    for (std::size_t i = 0; i < perm.size(); ++i) {
        sorted.push_back(m.der_[perm[i]]);
        m.q_hat_(static_cast<int>(i)) = feeder.ders[perm[i]].q_hat;
    }
    m.der_ = std::move(sorted);

    const int md = static_cast<int>(m.der_.size());
    m.x_der_.resize(md, md);
    m.x_cols_der_.resize(n, md);
    for (int j = 0; j < md; ++j) {
        m.x_cols_der_.col(j) = m.x_.col(m.der_[j]);
        for (int i = 0; i < md; ++i)
            m.x_der_(i, j) = m.x_(m.der_[i], m.der_[j]);
    }
    return m;
}

Vec GridModel::uncompensated_voltage(const Scenario& s) const {
    if (s.p_tilde.size() != n() || s.q_tilde.size() != n())
        throw NumericalError("scenario dimension does not match model");
    return r_ * s.p_tilde + x_ * s.q_tilde + Vec::Constant(n(), v0_);
}

double GridModel::approx_losses(const Vec& q_full, const Scenario& s) const {
    if (q_full.size() != n() || s.p_tilde.size() != n() || s.q_tilde.size() != n())
        throw NumericalError("injection dimension does not match model");
    Vec qt = q_full + s.q_tilde;
    return qt.dot(r_ * qt) + s.p_tilde.dot(r_ * s.p_tilde);
}

double GridModel::approx_losses_der(const Vec& q_der, const Scenario& s) const {
    return approx_losses(embed_der(q_der), s);
}

Vec GridModel::embed_der(const Vec& q_der) const {
    if (q_der.size() != n_der())
        throw NumericalError("DER injection dimension does not match model");
    Vec q = Vec::Zero(n());
    for (int i = 0; i < n_der(); ++i)
        q(der_[i]) = q_der(i);
    return q;
}

} // namespace voltvar
