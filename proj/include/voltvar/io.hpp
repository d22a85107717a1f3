#pragma once

#include "voltvar/linalg.hpp"
#include "voltvar/trainer.hpp"

#include <span>
#include <string>
#include <vector>

namespace voltvar {

/// Shortest round-trip decimal form; identical bytes for identical doubles.
std::string format_double(double v);

void write_metrics_csv(const std::string& path, std::span<const IterationRecord> history);

struct SummaryRow {
    std::string label;
    double avg_loss = 0.0;
    double worst_hard = 0.0;
};
void write_summary_csv(const std::string& path, std::span<const SummaryRow> rows);

/// Per-bus rows: bus, hard, soft.
void write_violation_csv(const std::string& path, const Vec& hard, const Vec& soft);

struct Histogram {
    double lo = 0.0, hi = 0.0;
    std::vector<long> counts;
};
/// Equal-width bins over [lo, hi]; samples outside land in the end bins so
/// counts always sum to the sample count.
Histogram histogram(std::span<const double> samples, double lo, double hi, int bins);
void write_histogram_csv(const std::string& path, const Histogram& h);

void write_text_file(const std::string& path, const std::string& content);

} // namespace voltvar
