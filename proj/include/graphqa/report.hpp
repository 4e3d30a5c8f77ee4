#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "graphqa/eval.hpp"

namespace graphqa {

struct CaseStats {
    std::string label;               // "A" / "B" / "C"
    std::size_t n_scored = 0;
    std::size_t n_failed = 0;
    std::array<std::size_t, 4> histogram{};  // counts for scores 0..3
    double mean = 0.0;
    double score3_pct = 0.0;
    double score2_pct = 0.0;
    double low_quality_pct = 0.0;            // score <= 1
    std::optional<double> delta_vs_a;        // rounded to 2 decimals
    double lat_mean = 0.0;
    double lat_median = 0.0;
    double lat_min = 0.0;
    double lat_max = 0.0;
    double lat_total_min = 0.0;
    std::optional<double> speedup_vs_a;      // rounded to 1 decimal
    double mean_answer_chars = 0.0;
};

struct CategoryCell {
    std::size_t n = 0;
    double mean = 0.0;
};

struct BenchmarkReport {
    std::vector<CaseStats> cases;  // case-label order A, B, C
    // category -> case label -> stats
    std::map<std::string, std::map<std::string, CategoryCell>> by_category;
};

// Aggregates judged rows; failed rows are excluded from every mean and
// reported via n_failed. Throws on an empty record set.
BenchmarkReport aggregate(const std::vector<EvalRecord>& records);

const CaseStats* find_case(const BenchmarkReport& report, std::string_view label);

// Human-readable tables: overall, latency, score distribution, by category.
std::string render_report_text(const BenchmarkReport& report);

// Machine-readable JSON with the same content.
std::string render_report_json(const BenchmarkReport& report);

// Four CSV files written under the prefix: <prefix>_overall.csv,
// <prefix>_latency.csv, <prefix>_distribution.csv, <prefix>_by_category.csv.
void write_report_csv(const BenchmarkReport& report, const std::string& prefix);

// Re-parses write_report_csv output; used to verify the CSV round-trips.
BenchmarkReport parse_report_csv(const std::string& prefix);

}  // namespace graphqa
