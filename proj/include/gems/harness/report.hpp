#pragma once

// Results table: one row per (environment, method)
// with mean test return over seeds and its confidence interval. Within an
// environment rank 1 and 2 are marked; the best method gets a "*" when it is
// significantly better (Welch p < alpha) than every other method.

#include "gems/harness/experiment.hpp"
#include "gems/harness/stats.hpp"

namespace gems::harness {

struct ReportRow {
  std::string environment;
  std::string method;
  int num_seeds = 0;
  double mean = 0.0;
  double half_width = 0.0;
  int rank = 0;             // 1 = best within the environment
  double p_value = 1.0;     // vs the best; for the best, the largest p vs any other
  bool significant = false;  // best row only: beats every other method

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

/// Rows sorted by environment, then by descending mean (ties by method name).
/// Each run contributes its mean test return as one sample.
std::vector<ReportRow> build_report(const std::vector<RunRecord>& runs, double alpha = 0.05);

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);
std::vector<ReportRow> read_report_csv(std::istream& in);
/// Fixed-width text table.
void write_report_text(std::ostream& out, const std::vector<ReportRow>& rows);

}  // namespace gems::harness
