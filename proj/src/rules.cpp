#include "voltvar/rules.hpp"

#include "voltvar/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace voltvar {

double RuleParams::eval_piecewise(double v) const {
    const double d = v - v_bar;
    const double qb = q_bar();
    if (std::abs(d) <= delta)
        return 0.0;
    if (d >= sigma)
        return -qb;
    if (d <= -sigma)
        return qb;
    return d > 0.0 ? -alpha * (d - delta) : -alpha * (d + delta);
}

namespace {
inline double ramp(double x) { return x > 0.0 ? x : 0.0; }
} // namespace

double RuleParams::eval_relu(double v) const {
    // ramps share the offset v - v_bar so the rule stays exactly odd
    const double d = v - v_bar;
    return -alpha * ramp(d - delta) + alpha * ramp(d - sigma) + alpha * ramp(-d - delta)
         - alpha * ramp(-d - sigma);
}

RuleParams::Partials RuleParams::partials(double v) const {
    const double d = v - v_bar;
    const double a1 = d - delta;
    const double a2 = d - sigma;
    const double a3 = -d - delta;
    const double a4 = -d - sigma;
    const double u1 = a1 > 0.0 ? 1.0 : 0.0;
    const double u2 = a2 > 0.0 ? 1.0 : 0.0;
    const double u3 = a3 > 0.0 ? 1.0 : 0.0;
    const double u4 = a4 > 0.0 ? 1.0 : 0.0;
    Partials p;
    p.mask = static_cast<std::uint8_t>((u1 > 0) | ((u2 > 0) << 1) | ((u3 > 0) << 2)
                                       | ((u4 > 0) << 3));
    p.dv = -alpha * (u1 - u2 + u3 - u4);
    p.dv_bar = -p.dv;
    p.dalpha = -ramp(a1) + ramp(a2) + ramp(a3) - ramp(a4);
    p.ddelta = alpha * (u1 - u3);
    p.dsigma = alpha * (-u2 + u4);
    return p;
}

double slope_from(double q_bar, double delta, double sigma) {
    if (!(sigma > delta))
        throw NumericalError("slope_from: sigma must exceed delta");
    if (q_bar < 0.0)
        throw NumericalError("slope_from: q_bar must be >= 0");
    return q_bar / (sigma - delta);
}

RuleSet::RuleSet(std::vector<int> buses, std::vector<RuleParams> rules)
    : buses_(std::move(buses)), rules_(std::move(rules)) {
    if (buses_.size() != rules_.size())
        throw NumericalError("RuleSet: one rule per DER bus required");
    if (!std::is_sorted(buses_.begin(), buses_.end()))
        throw NumericalError("RuleSet: DER buses must be ascending");
}

Vec RuleSet::flatten() const {
    const int m = size();
    Vec z(4 * m);
    for (int i = 0; i < m; ++i) {
        z(i) = rules_[i].v_bar;
        z(m + i) = rules_[i].alpha;
        z(2 * m + i) = rules_[i].delta;
        z(3 * m + i) = rules_[i].sigma;
    }
    return z;
}

RuleSet RuleSet::from_flat(const Vec& z, const std::vector<int>& buses) {
    const int m = static_cast<int>(buses.size());
    if (z.size() != 4 * m)
        throw NumericalError("RuleSet::from_flat: parameter vector must have length 4M");
    std::vector<RuleParams> rules(m);
    for (int i = 0; i < m; ++i)
        rules[i] = {z(i), z(m + i), z(2 * m + i), z(3 * m + i)};
    return RuleSet(buses, std::move(rules));
}

RuleSet RuleSet::uniform(const std::vector<int>& buses, const RuleParams& p) {
    return RuleSet(buses, std::vector<RuleParams>(buses.size(), p));
}

RuleSet RuleSet::defaults(const std::vector<int>& buses, const Vec& q_hat) {
    std::vector<RuleParams> rules(buses.size());
    for (std::size_t i = 0; i < buses.size(); ++i)
        rules[i] = {1.0, slope_from(q_hat(static_cast<int>(i)), 0.02, 0.08), 0.02, 0.08};
    return RuleSet(buses, std::move(rules));
}

RuleSet RuleSet::flat(const std::vector<int>& buses) {
    return uniform(buses, RuleParams{1.0, 0.0, 0.01, 0.08});
}

std::vector<Violation> RuleSet::validate_1547(const Vec& q_hat) const {
    std::vector<Violation> out;
    auto check = [&](int i, bool ok, const char* what, double margin) {
        if (!ok)
            out.push_back({buses_[i], what, margin});
    };
    for (int i = 0; i < size(); ++i) {
        const RuleParams& p = rules_[i];
        check(i, p.v_bar >= 0.95, "v_bar >= 0.95", 0.95 - p.v_bar);
        check(i, p.v_bar <= 1.05, "v_bar <= 1.05", p.v_bar - 1.05);
        check(i, p.delta >= 0.0, "delta >= 0", -p.delta);
        check(i, p.delta <= 0.03, "delta <= 0.03", p.delta - 0.03);
        check(i, p.sigma >= p.delta + 0.02, "sigma >= delta + 0.02",
              p.delta + 0.02 - p.sigma);
        check(i, p.sigma <= 0.18, "sigma <= 0.18", p.sigma - 0.18);
        const double qb = p.q_bar();
        check(i, qb >= 0.0, "q_bar >= 0", -qb);
        check(i, qb <= q_hat(i), "q_bar <= q_hat", qb - q_hat(i));
    }
    return out;
}

void RuleSet::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write rules file: " + path);
    out << "# voltvar-rules-v1\n";
    out << "bus,v_bar,delta,sigma,alpha,q_bar\n";
    char buf[256];
    for (int i = 0; i < size(); ++i) {
        const RuleParams& p = rules_[i];
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", buses_[i],
                      p.v_bar, p.delta, p.sigma, p.alpha, p.q_bar());
        out << buf;
    }
}

RuleSet RuleSet::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open rules file: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("# voltvar-rules-v1", 0) != 0)
        throw IoError(path + ": missing voltvar-rules-v1 header");
    std::getline(in, line); // column header
    std::vector<int> buses;
    std::vector<RuleParams> rules;
    int row = 2;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty())
            continue;
        std::istringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ','))
            fields.push_back(field);
        if (fields.size() != 6) {
            std::ostringstream os;
            os << path << ": row " << row << " has " << fields.size()
               << " fields, expected 6";
            throw IoError(os.str());
        }
        buses.push_back(std::stoi(fields[0]));
        RuleParams p;
        p.v_bar = std::stod(fields[1]);
        p.delta = std::stod(fields[2]);
        p.sigma = std::stod(fields[3]);
        p.alpha = std::stod(fields[4]);
        rules.push_back(p);
    }
    return RuleSet(std::move(buses), std::move(rules));
}

} // namespace voltvar
