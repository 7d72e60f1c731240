#include "gems/harness/report.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace gems::harness {
namespace {

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

constexpr const char* kCsvHeader = "environment,method,num_seeds,mean,ci_half_width,rank,p_value,significant";

}  // namespace

std::vector<ReportRow> build_report(const std::vector<RunRecord>& runs, double alpha) {
  std::map<std::string, std::map<std::string, std::vector<double>>> groups;
  for (const auto& r : runs) {
    if (r.test_returns.empty()) throw std::invalid_argument("report: run without test returns");
    groups[r.environment][r.method].push_back(r.test_mean());
  }
  std::vector<ReportRow> out;
  for (const auto& [env, methods] : groups) {
    std::vector<ReportRow> rows;
    for (const auto& [method, samples] : methods) {
      const ConfidenceInterval ci = confidence_interval(samples);
      ReportRow row;
      row.environment = env;
      row.method = method;
      row.num_seeds = static_cast<int>(samples.size());
      row.mean = ci.mean;
      row.half_width = ci.half_width;
      rows.push_back(row);
    }
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) { return a.mean > b.mean; });
    const auto& best = methods.at(rows.front().method);
    bool beats_all = rows.size() > 1;
    double worst_p = rows.size() > 1 ? 0.0 : 1.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      rows[i].rank = static_cast<int>(i) + 1;
      if (i == 0) continue;
      const auto& samples = methods.at(rows[i].method);
      if (samples.size() >= 2 && best.size() >= 2) {
        rows[i].p_value = welch_t_test(best, samples).p;
      }
      worst_p = std::max(worst_p, rows[i].p_value);
      beats_all = beats_all && rows[i].mean < rows.front().mean && rows[i].p_value < alpha;
    }
    rows.front().p_value = worst_p;
    rows.front().significant = beats_all;
    out.insert(out.end(), rows.begin(), rows.end());
  }
  return out;
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.environment << ',' << r.method << ',' << r.num_seeds << ',' << format_double(r.mean) << ','
        << format_double(r.half_width) << ',' << r.rank << ',' << format_double(r.p_value) << ','
        << (r.significant ? 1 : 0) << '\n';
  }
}

std::vector<ReportRow> read_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw std::runtime_error("report csv: bad header");
  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 8) throw std::runtime_error("report csv: expected 8 columns");
    ReportRow r;
    r.environment = cells[0];
    r.method = cells[1];
    r.num_seeds = std::stoi(cells[2]);
    r.mean = std::stod(cells[3]);
    r.half_width = std::stod(cells[4]);
    r.rank = std::stoi(cells[5]);
    r.p_value = std::stod(cells[6]);
    r.significant = cells[7] == "1";
    rows.push_back(r);
  }
  return rows;
}

void write_report_text(std::ostream& out, const std::vector<ReportRow>& rows) {
  std::size_t width = 6;
  for (const auto& r : rows) width = std::max(width, r.method.size());
  std::string env;
  char buf[256];
  for (const auto& r : rows) {
    if (r.environment != env) {
      env = r.environment;
      out << "== " << env << " ==\n";
    }
    const char* mark = r.rank == 1 ? "  best" : r.rank == 2 ? "  2nd" : "";
    std::snprintf(buf, sizeof buf, "  %-*s  %9.2f +- %7.2f  (n=%d)%s%s\n", static_cast<int>(width), r.method.c_str(),
                  r.mean, r.half_width, r.num_seeds, mark, r.significant ? " *" : "");
    out << buf;
  }
}

}  // namespace gems::harness
