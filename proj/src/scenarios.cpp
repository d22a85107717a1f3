#include "voltvar/scenarios.hpp"

#include "voltvar/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace voltvar {

using nlohmann::json;

Profile profile_from_name(const std::string& name) {
    if (name == "high_solar") return Profile::high_solar;
    if (name == "evening_peak") return Profile::evening_peak;
    if (name == "mixed") return Profile::mixed;
    throw ConfigError("unknown scenario profile: " + name);
}

std::string profile_name(Profile p) {
    switch (p) {
    case Profile::high_solar: return "high_solar";
    case Profile::evening_peak: return "evening_peak";
    case Profile::mixed: return "mixed";
    }
    return "?";
}

namespace {

// mt19937_64 output is pinned by the standard; mapping to doubles by hand
// keeps generated sets identical across toolchains.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Slowly varying shape in [0,1]: a random three-mode Fourier mix, clipped.
struct SmoothShape {
    double a[3], f[3], ph[3];

    static SmoothShape draw(std::mt19937_64& rng) {
        SmoothShape s;
        const double base_freq[3] = {0.5, 1.0, 2.0};
        for (int j = 0; j < 3; ++j) {
            s.a[j] = uniform(rng, 0.05, 0.25);
            s.f[j] = base_freq[j] * uniform(rng, 0.5, 1.5);
            s.ph[j] = uniform(rng, 0.0, 1.0);
        }
        return s;
    }

    double at(double pos) const { // pos in [0,1)
        double w = 0.5;
        for (int j = 0; j < 3; ++j)
            w += a[j] * std::sin(2.0 * M_PI * (f[j] * pos + ph[j]));
        return std::clamp(w, 0.0, 1.0);
    }
};

struct ProfileRanges {
    double load_lo, load_hi;  // load shape envelope within [0.3, 1]
    double irr_lo, irr_hi;    // common solar irradiance envelope
};

ProfileRanges ranges_for(Profile p) {
    switch (p) {
    case Profile::high_solar: return {0.30, 0.62, 0.86, 1.0};
    case Profile::evening_peak: return {0.60, 1.0, 0.0, 0.0};
    case Profile::mixed: return {0.30, 1.0, 0.25, 0.85};
    }
    return {0.3, 1.0, 0.0, 0.0};
}

} // namespace

ScenarioSet generate_synthetic(const FeederModel& feeder, int s_count,
                               std::uint64_t seed, Profile profile) {
    feeder.validate();
    if (s_count < 1)
        throw ConfigError("scenario count must be >= 1");
    const int n = feeder.n();
    const ProfileRanges pr = ranges_for(profile);

    std::mt19937_64 rng(seed);
    std::vector<SmoothShape> load_shape(n + 1);
    for (int b = 1; b <= n; ++b)
        load_shape[b] = SmoothShape::draw(rng);
    SmoothShape irradiance = SmoothShape::draw(rng);
    std::vector<SmoothShape> cloud(feeder.ders.size());
    for (auto& c : cloud)
        c = SmoothShape::draw(rng);

    std::vector<double> nominal = feeder.nominal_load;
    if (nominal.empty())
        nominal.assign(feeder.n_buses, 0.0);

    ScenarioSet set;
    set.n = n;
    set.seed = seed;
    set.profile = profile_name(profile);
    set.source = "synthetic";
    set.items.resize(s_count);
    for (int s = 0; s < s_count; ++s) {
        const double pos = static_cast<double>(s) / static_cast<double>(s_count);
        Vec p = Vec::Zero(n), q = Vec::Zero(n);
        for (int b = 1; b <= n; ++b) {
            if (nominal[b] <= 0.0) {
                uniform01(rng); // keep the stream aligned across feeders
                continue;
            }
            const double u = pr.load_lo + (pr.load_hi - pr.load_lo) * load_shape[b].at(pos);
            const double p_load = nominal[b] * u;
            const double pf = uniform(rng, 0.9, 1.0);
            p(b - 1) -= p_load;
            q(b - 1) -= p_load * std::tan(std::acos(pf));
        }
        const double irr = pr.irr_lo + (pr.irr_hi - pr.irr_lo) * irradiance.at(pos);
        for (std::size_t d = 0; d < feeder.ders.size(); ++d) {
            const double dip = 1.0 - 0.25 * cloud[d].at(pos);
            p(feeder.ders[d].bus - 1) += feeder.ders[d].p_hat * irr * dip;
        }
        set.items[s] = Scenario{std::move(p), std::move(q)};
    }
    return set;
}

void save(const ScenarioSet& set, const std::string& path) {
    if (set.items.empty())
        throw IoError("refusing to save an empty scenario set");
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write scenario file: " + path);
    const int n = set.n;
    out << "# voltvar-scenarios-v1\n";
    for (int i = 0; i < n; ++i)
        out << "p_" << (i + 1) << ",";
    for (int i = 0; i < n; ++i)
        out << "q_" << (i + 1) << (i + 1 == n ? "" : ",");
    out << "\n";
    char buf[64];
    for (const Scenario& sc : set.items) {
        for (int i = 0; i < 2 * n; ++i) {
            const double v = i < n ? sc.p_tilde(i) : sc.q_tilde(i - n);
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << buf << (i + 1 == 2 * n ? '\n' : ',');
        }
    }
    json meta;
    meta["format"] = "voltvar-scenario-meta-v1";
    meta["n"] = set.n;
    meta["s"] = set.size();
    meta["seed"] = set.seed;
    meta["profile"] = set.profile;
    meta["source"] = set.source;
    std::ofstream mout(path + ".meta.json");
    if (mout)
        mout << meta.dump(2) << "\n";
}

ScenarioSet load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open scenario file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "# voltvar-scenarios-v1")
        throw IoError(path + ": missing voltvar-scenarios-v1 header");
    if (!std::getline(in, line))
        throw IoError(path + ": missing column header");
    const auto cols = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
    if (cols % 2 != 0)
        throw IoError(path + ": expected an even column count (p block then q block)");
    const int n = cols / 2;

    ScenarioSet set;
    set.n = n;
    set.source = path;
    int row = 2;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty())
            continue;
        Vec p(n), q(n);
        const char* ptr = line.c_str();
        for (int i = 0; i < 2 * n; ++i) {
            char* end = nullptr;
            const double v = std::strtod(ptr, &end);
            if (end == ptr) {
                std::ostringstream os;
                os << path << ": row " << row << ": cannot parse field " << (i + 1);
                throw IoError(os.str());
            }
            (i < n ? p(i) : q(i - n)) = v;
            ptr = end;
            if (i + 1 < 2 * n) {
                if (*ptr != ',') {
                    std::ostringstream os;
                    os << path << ": row " << row << " has too few fields (expected "
                       << 2 * n << ")";
                    throw IoError(os.str());
                }
                ++ptr;
            }
        }
        if (*ptr != '\0') {
            std::ostringstream os;
            os << path << ": row " << row << " has trailing fields (expected " << 2 * n
               << ")";
            throw IoError(os.str());
        }
        set.items.push_back(Scenario{std::move(p), std::move(q)});
    }
    if (set.items.empty())
        throw IoError(path + ": no scenario rows");

    std::ifstream min(path + ".meta.json");
    if (min) {
        try {
            json meta = json::parse(min);
            set.seed = meta.value("seed", 0ULL);
            set.profile = meta.value("profile", "");
            set.source = meta.value("source", path);
        } catch (const json::exception&) {
            // metadata is advisory; a bad sidecar never fails the load
        }
    }
    return set;
}

} // namespace voltvar
