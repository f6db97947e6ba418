#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "stocbo/errors.hpp"
#include "stocbo/metrics.hpp"

namespace stocbo {

// One CSV line. Summary rows carry a fitted slope; their error_mean holds the fitted constant
// exp(intercept) and scale_value is empty.
struct ReportRow {
  std::string experiment;
  std::string objective;
  std::string pipeline;
  std::optional<double> t;
  std::string scale_name;
  std::optional<double> scale_value;
  std::optional<double> p_or_thr;
  std::optional<double> error_mean;
  std::optional<double> q15;
  std::optional<double> q85;
  std::optional<double> slope;
};

struct FitSummary {
  std::string label;
  RateFit fit;
};

struct SuccessCell {
  std::string objective;
  std::string pipeline;
  std::size_t n = 0;
  double thr = 0.0;
  double rate = 0.0;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
  std::vector<FitSummary> fits;  // final-time fits, one per curve
  std::vector<SuccessCell> success;
  std::size_t cells = 0;                // replication cells evaluated
  std::size_t ordering_violations = 0;  // cells with W_1 > W_2
  std::vector<double> final_consensus;  // single runs only

  const RateFit* fit(std::string_view label) const {
    for (const auto& f : fits)
      if (f.label == label) return &f.fit;
    return nullptr;
  }
  const SuccessCell* success_cell(std::string_view objective, std::string_view pipeline, std::size_t n,
                                  double thr) const {
    for (const auto& c : success)
      if (c.objective == objective && c.pipeline == pipeline && c.n == n && c.thr == thr) return &c;
    return nullptr;
  }
};

inline constexpr std::string_view kCsvHeader =
    "experiment,objective,pipeline,t,scale_name,scale_value,p_or_thr,error_mean,q15,q85,slope";

// Shortest round-trip decimal form.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void write_csv(const ExperimentReport& report, std::ostream& out) {
  auto num = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  out << kCsvHeader << '\n';
  for (const auto& r : report.rows) {
    out << r.experiment << ',' << r.objective << ',' << r.pipeline << ',' << num(r.t) << ',' << r.scale_name << ','
        << num(r.scale_value) << ',' << num(r.p_or_thr) << ',' << num(r.error_mean) << ',' << num(r.q15) << ','
        << num(r.q85) << ',' << num(r.slope) << '\n';
  }
}

inline void emit_csv(const ExperimentReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_csv(report, out);
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace stocbo
