#include "graphqa/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "graphqa/csv.hpp"

namespace graphqa {

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

double round_to(double v, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::round(v * scale) / scale;
}

struct LatencySummary {
    double mean = 0, median = 0, min = 0, max = 0, total_min = 0;
};

LatencySummary summarize_latencies(std::vector<double> values) {
    LatencySummary s;
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    double total = 0;
    for (double v : values) total += v;
    s.mean = total / static_cast<double>(values.size());
    const std::size_t n = values.size();
    s.median = n % 2 == 1 ? values[n / 2]
                          : (values[n / 2 - 1] + values[n / 2]) / 2.0;
    s.min = values.front();
    s.max = values.back();
    s.total_min = total / 60.0;
    return s;
}

}  // namespace

BenchmarkReport aggregate(const std::vector<EvalRecord>& records) {
    if (records.empty()) throw std::invalid_argument("no records to aggregate");

    BenchmarkReport report;
    for (std::string_view label : {"A", "B", "C"}) {
        CaseStats stats;
        stats.label = std::string(label);

        std::vector<double> latencies;
        double char_total = 0;
        std::size_t score_total = 0;
        bool present = false;

        for (const auto& r : records) {
            if (to_string(r.case_label) != label) continue;
            present = true;
            if (!r.error.empty() || !r.verdict) {
                ++stats.n_failed;
                continue;
            }
            ++stats.n_scored;
            const int s = r.verdict->score;
            if (s < 0 || s > 3) {
                throw std::invalid_argument("score out of range in records");
            }
            ++stats.histogram[static_cast<std::size_t>(s)];
            score_total += static_cast<std::size_t>(s);
            latencies.push_back(r.latency_s);
            char_total += static_cast<double>(r.answer_chars);

            auto& cell = report.by_category[r.category][stats.label];
            cell.mean += static_cast<double>(s);  // running sum; divided below
            ++cell.n;
        }
        if (!present) continue;

        if (stats.n_scored > 0) {
            const auto n = static_cast<double>(stats.n_scored);
            stats.mean = static_cast<double>(score_total) / n;
            stats.score3_pct = 100.0 * static_cast<double>(stats.histogram[3]) / n;
            stats.score2_pct = 100.0 * static_cast<double>(stats.histogram[2]) / n;
            stats.low_quality_pct =
                100.0 * static_cast<double>(stats.histogram[0] + stats.histogram[1]) / n;
            stats.mean_answer_chars = char_total / n;
        }
        const LatencySummary lat = summarize_latencies(std::move(latencies));
        stats.lat_mean = lat.mean;
        stats.lat_median = lat.median;
        stats.lat_min = lat.min;
        stats.lat_max = lat.max;
        stats.lat_total_min = lat.total_min;
        report.cases.push_back(std::move(stats));
    }

    for (auto& [cat, row] : report.by_category) {
        for (auto& [label, cell] : row) {
            if (cell.n > 0) cell.mean /= static_cast<double>(cell.n);
        }
    }

    const CaseStats* a = find_case(report, "A");
    for (auto& stats : report.cases) {
        if (!a || a->n_scored == 0) continue;
        if (stats.label != "A") {
            stats.delta_vs_a = round_to(stats.mean - a->mean, 2);
        }
        if (stats.lat_mean > 0.0 && a->lat_mean > 0.0) {
            stats.speedup_vs_a = round_to(a->lat_mean / stats.lat_mean, 1);
        }
    }
    return report;
}

const CaseStats* find_case(const BenchmarkReport& report, std::string_view label) {
    for (const auto& c : report.cases) {
        if (c.label == label) return &c;
    }
    return nullptr;
}

std::string render_report_text(const BenchmarkReport& report) {
    std::string out;
    char buf[256];

    out += "== Overall ==\n";
    out += "case      n  failed   mean  delta   sc3%   sc2%  lowq%  lat_mean_s  speedup  mean_chars\n";
    for (const auto& c : report.cases) {
        std::snprintf(buf, sizeof(buf),
                      "%-4s %6zu %7zu %6.2f %6s %6.1f %6.1f %6.1f %11.2f %8s %11.1f\n",
                      c.label.c_str(), c.n_scored, c.n_failed, c.mean,
                      c.delta_vs_a ? fmt("%+.2f", *c.delta_vs_a).c_str() : "---",
                      c.score3_pct, c.score2_pct, c.low_quality_pct, c.lat_mean,
                      c.speedup_vs_a ? (fmt("%.1f", *c.speedup_vs_a) + "x").c_str()
                                     : "---",
                      c.mean_answer_chars);
        out += buf;
    }

    out += "\n== Latency (s) ==\n";
    out += "case    mean  median     min     max  total_min\n";
    for (const auto& c : report.cases) {
        std::snprintf(buf, sizeof(buf), "%-4s %7.1f %7.1f %7.1f %7.1f %10.1f\n",
                      c.label.c_str(), c.lat_mean, c.lat_median, c.lat_min, c.lat_max,
                      c.lat_total_min);
        out += buf;
    }

    out += "\n== Score distribution ==\n";
    out += "case  score0  score1  score2  score3\n";
    for (const auto& c : report.cases) {
        std::snprintf(buf, sizeof(buf), "%-4s %7zu %7zu %7zu %7zu\n", c.label.c_str(),
                      c.histogram[0], c.histogram[1], c.histogram[2], c.histogram[3]);
        out += buf;
    }

    out += "\n== By category ==\n";
    out += "category          case      n   mean\n";
    for (const auto& [cat, row] : report.by_category) {
        for (const auto& [label, cell] : row) {
            std::snprintf(buf, sizeof(buf), "%-17s %-4s %6zu %6.2f\n", cat.c_str(),
                          label.c_str(), cell.n, cell.mean);
            out += buf;
        }
    }
    return out;
}

std::string render_report_json(const BenchmarkReport& report) {
    nlohmann::json j;
    j["cases"] = nlohmann::json::array();
    for (const auto& c : report.cases) {
        nlohmann::json jc;
        jc["case"] = c.label;
        jc["n"] = c.n_scored;
        jc["failed"] = c.n_failed;
        jc["mean"] = c.mean;
        if (c.delta_vs_a) jc["delta_vs_a"] = *c.delta_vs_a;
        jc["histogram"] = c.histogram;
        jc["score3_pct"] = c.score3_pct;
        jc["score2_pct"] = c.score2_pct;
        jc["low_quality_pct"] = c.low_quality_pct;
        jc["latency"] = {{"mean_s", c.lat_mean},   {"median_s", c.lat_median},
                         {"min_s", c.lat_min},     {"max_s", c.lat_max},
                         {"total_min", c.lat_total_min}};
        if (c.speedup_vs_a) jc["speedup_vs_a"] = *c.speedup_vs_a;
        jc["mean_answer_chars"] = c.mean_answer_chars;
        j["cases"].push_back(std::move(jc));
    }
    j["by_category"] = nlohmann::json::object();
    for (const auto& [cat, row] : report.by_category) {
        for (const auto& [label, cell] : row) {
            j["by_category"][cat][label] = {{"n", cell.n}, {"mean", cell.mean}};
        }
    }
    return j.dump(2);
}

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

}  // namespace

void write_report_csv(const BenchmarkReport& report, const std::string& prefix) {
    std::string overall =
        "case,n,failed,mean,delta_vs_a,score3_pct,score2_pct,low_quality_pct,"
        "mean_latency_s,speedup_vs_a,mean_answer_chars\n";
    for (const auto& c : report.cases) {
        overall += c.label + "," + std::to_string(c.n_scored) + "," +
                   std::to_string(c.n_failed) + "," + fmt("%.2f", c.mean) + "," +
                   (c.delta_vs_a ? fmt("%+.2f", *c.delta_vs_a) : "") + "," +
                   fmt("%.1f", c.score3_pct) + "," + fmt("%.1f", c.score2_pct) + "," +
                   fmt("%.1f", c.low_quality_pct) + "," + fmt("%.3f", c.lat_mean) + "," +
                   (c.speedup_vs_a ? fmt("%.1f", *c.speedup_vs_a) : "") + "," +
                   fmt("%.1f", c.mean_answer_chars) + "\n";
    }
    write_file(prefix + "_overall.csv", overall);

    std::string latency = "case,mean_s,median_s,min_s,max_s,total_min\n";
    for (const auto& c : report.cases) {
        latency += c.label + "," + fmt("%.3f", c.lat_mean) + "," +
                   fmt("%.3f", c.lat_median) + "," + fmt("%.3f", c.lat_min) + "," +
                   fmt("%.3f", c.lat_max) + "," + fmt("%.1f", c.lat_total_min) + "\n";
    }
    write_file(prefix + "_latency.csv", latency);

    std::string dist = "case,score0,score1,score2,score3\n";
    for (const auto& c : report.cases) {
        dist += c.label;
        for (std::size_t s = 0; s < 4; ++s) dist += "," + std::to_string(c.histogram[s]);
        dist += "\n";
    }
    write_file(prefix + "_distribution.csv", dist);

    std::string bycat = "category,case,n,mean\n";
    for (const auto& [cat, row] : report.by_category) {
        for (const auto& [label, cell] : row) {
            bycat += cat + "," + label + "," + std::to_string(cell.n) + "," +
                     fmt("%.2f", cell.mean) + "\n";
        }
    }
    write_file(prefix + "_by_category.csv", bycat);
}

BenchmarkReport parse_report_csv(const std::string& prefix) {
    BenchmarkReport report;

    const CsvTable overall = read_csv_file(prefix + "_overall.csv");
    for (const auto& row : overall.rows) {
        CaseStats c;
        c.label = row.fields[0];
        c.n_scored = std::stoull(row.fields[1]);
        c.n_failed = std::stoull(row.fields[2]);
        c.mean = std::stod(row.fields[3]);
        if (!row.fields[4].empty()) c.delta_vs_a = std::stod(row.fields[4]);
        c.score3_pct = std::stod(row.fields[5]);
        c.score2_pct = std::stod(row.fields[6]);
        c.low_quality_pct = std::stod(row.fields[7]);
        c.lat_mean = std::stod(row.fields[8]);
        if (!row.fields[9].empty()) c.speedup_vs_a = std::stod(row.fields[9]);
        c.mean_answer_chars = std::stod(row.fields[10]);
        report.cases.push_back(std::move(c));
    }

    const CsvTable latency = read_csv_file(prefix + "_latency.csv");
    for (const auto& row : latency.rows) {
        for (auto& c : report.cases) {
            if (c.label != row.fields[0]) continue;
            c.lat_mean = std::stod(row.fields[1]);
            c.lat_median = std::stod(row.fields[2]);
            c.lat_min = std::stod(row.fields[3]);
            c.lat_max = std::stod(row.fields[4]);
            c.lat_total_min = std::stod(row.fields[5]);
        }
    }

    const CsvTable dist = read_csv_file(prefix + "_distribution.csv");
    for (const auto& row : dist.rows) {
        for (auto& c : report.cases) {
            if (c.label != row.fields[0]) continue;
            for (std::size_t s = 0; s < 4; ++s) {
                c.histogram[s] = std::stoull(row.fields[s + 1]);
            }
        }
    }

    const CsvTable bycat = read_csv_file(prefix + "_by_category.csv");
    for (const auto& row : bycat.rows) {
        report.by_category[row.fields[0]][row.fields[1]] =
            CategoryCell{std::stoull(row.fields[2]), std::stod(row.fields[3])};
    }
    return report;
}

}  // namespace graphqa
