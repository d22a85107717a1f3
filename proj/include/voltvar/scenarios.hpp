#pragma once

#include "voltvar/feeder.hpp"
#include "voltvar/grid_model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace voltvar {

enum class Profile { high_solar, evening_peak, mixed };

Profile profile_from_name(const std::string& name);
std::string profile_name(Profile p);

/// A batch of loading snapshots plus provenance.
struct ScenarioSet {
    std::vector<Scenario> items;
    int n = 0;
    std::uint64_t seed = 0;
    std::string profile; // empty when loaded without metadata
    std::string source;  // "synthetic" or originating file

    int size() const { return static_cast<int>(items.size()); }
};

/// Seeded synthetic scenario batch: per-bus smooth load shapes in [0.3, 1]
/// of nominal, lagging power factors drawn from [0.9, 1], and solar
/// injection at DER buses scaled by profile. Same inputs, same output.
ScenarioSet generate_synthetic(const FeederModel& feeder, int s_count,
                               std::uint64_t seed, Profile profile);

void save(const ScenarioSet& set, const std::string& path);
ScenarioSet load(const std::string& path);

} // namespace voltvar
