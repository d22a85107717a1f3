#pragma once

#include <string>
#include <vector>

namespace voltvar {

struct Line {
    int from = 0;
    int to = 0;
    double r = 0.0; // pu
    double x = 0.0; // pu
};

struct Der {
    int bus = 0;
    double p_hat = 0.0; // peak active rating, pu
    double q_hat = 0.0; // reactive capability, pu (default 0.46 * p_hat)
};

/// Radial feeder description. Bus 0 is the substation; buses 1..N carry
/// loads and (optionally) DERs. Voltages follow the LinDistFlow
/// squared-magnitude convention in pu, numerically close to magnitude
/// near 1 pu.
struct FeederModel {
    int n_buses = 0; // N + 1, including the substation
    std::vector<Line> lines;
    double v0 = 1.0;
    std::vector<Der> ders;
    // Nominal active load per bus (pu, magnitudes). Used by the scenario
    // generator; zero-filled when the feeder file lists no loads.
    std::vector<double> nominal_load;
    std::string name;

    int n() const { return n_buses - 1; }

    /// Throws FeederError naming the offending line or DER when the
    /// description is not a connected tree with positive impedances.
    void validate() const;

    static FeederModel from_json_file(const std::string& path);
    static FeederModel from_json_text(const std::string& text, const std::string& origin);
};

/// Reactive capability implied by a 10% oversized kVA rating.
double default_q_hat(double p_hat);

} // namespace voltvar
