#include "voltvar/feeder.hpp"

#include "voltvar/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace voltvar {

using nlohmann::json;

double default_q_hat(double p_hat) {
    return std::sqrt(1.1 * 1.1 - 1.0) * p_hat;
}

void FeederModel::validate() const {
    if (n_buses < 2)
        throw FeederError("feeder needs at least a substation and one bus");
    const int n = n_buses;
    if (static_cast<int>(lines.size()) != n - 1) {
        std::ostringstream os;
        os << "feeder with " << n << " buses must have " << (n - 1) << " lines, got "
           << lines.size();
        throw FeederError(os.str());
    }
    std::vector<std::vector<int>> adj(n);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const Line& l = lines[i];
        std::ostringstream where;
        where << "line " << i << " (" << l.from << "-" << l.to << ")";
        if (l.from < 0 || l.from >= n || l.to < 0 || l.to >= n || l.from == l.to)
            throw FeederError(where.str() + ": invalid endpoints");
        if (!(l.r > 0.0) || !std::isfinite(l.r))
            throw FeederError(where.str() + ": resistance must be > 0");
        if (!(l.x > 0.0) || !std::isfinite(l.x))
            throw FeederError(where.str() + ": reactance must be > 0");
        adj[l.from].push_back(static_cast<int>(i));
        adj[l.to].push_back(static_cast<int>(i));
    }
    // N lines on N+1 buses form a tree iff every bus is reachable from bus 0.
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
        int b = stack.back();
        stack.pop_back();
        for (int li : adj[b]) {
            int other = lines[li].from == b ? lines[li].to : lines[li].from;
            if (!seen[other]) {
                seen[other] = 1;
                stack.push_back(other);
            }
        }
    }
    for (int b = 0; b < n; ++b)
        if (!seen[b]) {
            std::ostringstream os;
            os << "non-tree topology: bus " << b << " is not connected to the substation";
            throw FeederError(os.str());
        }
    std::set<int> der_buses;
    for (const Der& d : ders) {
        std::ostringstream where;
        where << "DER at bus " << d.bus;
        if (d.bus < 1 || d.bus >= n)
            throw FeederError(where.str() + ": bus out of range");
        if (!(d.q_hat > 0.0))
            throw FeederError(where.str() + ": q_hat must be > 0");
        if (!der_buses.insert(d.bus).second)
            throw FeederError(where.str() + ": duplicate DER bus");
    }
    if (!(v0 > 0.0) || !std::isfinite(v0))
        throw FeederError("substation voltage v0 must be positive");
    if (!nominal_load.empty() && static_cast<int>(nominal_load.size()) != n)
        throw FeederError("nominal_load must list one value per bus (including bus 0)");
}

namespace {

void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& ctx) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw IoError(ctx + ": unknown key '" + it.key() + "'");
}

} // namespace

FeederModel FeederModel::from_json_text(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(origin + ": " + e.what());
    }
    try {
        require_keys(j, {"format", "name", "v0", "buses", "lines", "ders", "loads"}, origin);
        if (j.value("format", "") != "voltvar-feeder-v1")
            throw IoError(origin + ": expected format 'voltvar-feeder-v1'");
        FeederModel f;
        f.name = j.value("name", "");
        f.v0 = j.at("v0").get<double>();
        const auto& buses = j.at("buses");
        f.n_buses = static_cast<int>(buses.size());
        for (int i = 0; i < f.n_buses; ++i)
            if (buses[i].get<int>() != i)
                throw IoError(origin + ": buses must be the contiguous ids 0..N");
        for (const auto& jl : j.at("lines")) {
            require_keys(jl, {"from", "to", "r", "x"}, origin + ": line");
            f.lines.push_back({jl.at("from").get<int>(), jl.at("to").get<int>(),
                               jl.at("r").get<double>(), jl.at("x").get<double>()});
        }
        if (j.contains("ders"))
            for (const auto& jd : j.at("ders")) {
                require_keys(jd, {"bus", "p_hat", "q_hat"}, origin + ": der");
                Der d;
                d.bus = jd.at("bus").get<int>();
                d.p_hat = jd.at("p_hat").get<double>();
                d.q_hat = jd.contains("q_hat") ? jd.at("q_hat").get<double>()
                                               : default_q_hat(d.p_hat);
                f.ders.push_back(d);
            }
        if (j.contains("loads")) {
            f.nominal_load.assign(f.n_buses, 0.0);
            for (const auto& jl : j.at("loads")) {
                require_keys(jl, {"bus", "p_nom"}, origin + ": load");
                int b = jl.at("bus").get<int>();
                if (b < 0 || b >= f.n_buses)
                    throw IoError(origin + ": load bus out of range");
                f.nominal_load[b] = jl.at("p_nom").get<double>();
            }
        }
        f.validate();
        return f;
    } catch (const json::exception& e) {
        throw IoError(origin + ": " + e.what());
    }
}

FeederModel FeederModel::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open feeder file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str(), path);
}

} // namespace voltvar
