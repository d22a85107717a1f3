#include "voltvar/io.hpp"

#include "voltvar/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace voltvar {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_metrics_csv(const std::string& path, std::span<const IterationRecord> history) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write metrics file: " + path);
    out << "# voltvar-metrics-v1\n";
    out << "k,loss,worst_hard,worst_soft,lambda_inf,mu_z,mu_lambda\n";
    for (const IterationRecord& r : history)
        out << r.k << ',' << format_double(r.loss) << ',' << format_double(r.worst_hard)
            << ',' << format_double(r.worst_soft) << ',' << format_double(r.lambda_inf)
            << ',' << format_double(r.mu_z) << ',' << format_double(r.mu_lambda) << '\n';
}

void write_summary_csv(const std::string& path, std::span<const SummaryRow> rows) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write summary file: " + path);
    out << "# voltvar-summary-v1\n";
    out << "label,avg_loss,worst_hard_violation\n";
    for (const SummaryRow& r : rows)
        out << r.label << ',' << format_double(r.avg_loss) << ','
            << format_double(r.worst_hard) << '\n';
}

void write_violation_csv(const std::string& path, const Vec& hard, const Vec& soft) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write violation file: " + path);
    out << "# voltvar-violations-v1\n";
    out << "bus,hard,soft\n";
    for (int i = 0; i < hard.size(); ++i)
        out << (i + 1) << ',' << format_double(hard(i)) << ',' << format_double(soft(i))
            << '\n';
}

Histogram histogram(std::span<const double> samples, double lo, double hi, int bins) {
    if (bins < 1 || !(hi > lo))
        throw ConfigError("histogram: need bins >= 1 and hi > lo");
    Histogram h;
    h.lo = lo;
    h.hi = hi;
    h.counts.assign(bins, 0);
    const double width = (hi - lo) / bins;
    for (double v : samples) {
        int idx = static_cast<int>(std::floor((v - lo) / width));
        idx = std::clamp(idx, 0, bins - 1);
        ++h.counts[idx];
    }
    return h;
}

void write_histogram_csv(const std::string& path, const Histogram& h) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write histogram file: " + path);
    out << "# voltvar-histogram-v1\n";
    out << "bin_lo,bin_hi,count\n";
    const double width = (h.hi - h.lo) / static_cast<double>(h.counts.size());
    for (std::size_t i = 0; i < h.counts.size(); ++i)
        out << format_double(h.lo + width * static_cast<double>(i)) << ','
            << format_double(h.lo + width * static_cast<double>(i + 1)) << ','
            << h.counts[i] << '\n';
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write file: " + path);
    out << content;
}

} // namespace voltvar
