#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "stocbo/report.hpp"

using namespace stocbo;

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

ExperimentReport sample_report() {
  ExperimentReport r;
  r.rows.push_back({"test1-saa", "ackley-like", "SAA", 7.0, "M", 100.0, std::nullopt, 0.0123, 0.01, 0.015, std::nullopt});
  r.rows.push_back({"test1-saa", "ackley-like", "SAA", 7.0, "M_fit", std::nullopt, std::nullopt, 0.1, std::nullopt,
                    std::nullopt, -0.4987654321});
  r.rows.push_back({"test4", "utility-d2", "Quadrature", 7.0, "N", 1000.0, 0.25, 0.97, std::nullopt, std::nullopt,
                    std::nullopt});
  return r;
}

}  // namespace

TEST(Csv, EmptyReportIsHeaderOnly) {
  std::ostringstream out;
  write_csv(ExperimentReport{}, out);
  EXPECT_EQ(out.str(), std::string(kCsvHeader) + "\n");
}

TEST(Csv, RoundTrip) {
  const auto report = sample_report();
  std::ostringstream out;
  write_csv(report, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kCsvHeader);
  for (const auto& row : report.rows) {
    ASSERT_TRUE(std::getline(in, line));
    const auto cells = split(line);
    ASSERT_EQ(cells.size(), 11u) << line;
    EXPECT_EQ(cells[0], row.experiment);
    EXPECT_EQ(cells[1], row.objective);
    EXPECT_EQ(cells[2], row.pipeline);
    EXPECT_EQ(cells[4], row.scale_name);
    auto check = [](const std::string& cell, const std::optional<double>& v) {
      if (v) {
        EXPECT_EQ(std::stod(cell), *v);
      } else {
        EXPECT_TRUE(cell.empty());
      }
    };
    check(cells[3], row.t);
    check(cells[5], row.scale_value);
    check(cells[6], row.p_or_thr);
    check(cells[7], row.error_mean);
    check(cells[8], row.q15);
    check(cells[9], row.q85);
    check(cells[10], row.slope);
  }
  EXPECT_FALSE(std::getline(in, line));
}

TEST(Csv, ShortestRoundTripNumbers) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(100.0), "100");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Csv, FileOutputIsByteIdentical) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto a = (dir / "stocbo_report_a.csv").string(), b = (dir / "stocbo_report_b.csv").string();
  emit_csv(sample_report(), a);
  emit_csv(sample_report(), b);
  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_FALSE(slurp(a).empty());
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

TEST(Csv, UnwritablePathNamesThePath) {
  const std::string path = "/nonexistent-dir/sub/out.csv";
  try {
    emit_csv(sample_report(), path);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find(path), std::string::npos);
  }
}

TEST(Report, Lookups) {
  ExperimentReport r;
  r.fits.push_back({"W1", RateFit{-0.5, 0.1, {}}});
  r.success.push_back({"utility-d1", "SAA", 100, 0.25, 0.9});
  ASSERT_NE(r.fit("W1"), nullptr);
  EXPECT_EQ(r.fit("W1")->slope, -0.5);
  EXPECT_EQ(r.fit("W2"), nullptr);
  ASSERT_NE(r.success_cell("utility-d1", "SAA", 100, 0.25), nullptr);
  EXPECT_EQ(r.success_cell("utility-d1", "SAA", 100, 0.1), nullptr);
}
