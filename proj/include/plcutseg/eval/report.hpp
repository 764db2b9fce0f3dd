#pragma once

#include <string>
#include <vector>

namespace plcutseg::eval {

struct ReportCell {
  double mdice = 0.0;
  double iou = 0.0;
};

/// Results grid: one row per method variant (and label level), one cell pair
/// (mDICE, IoU) per dataset column. Scores are stored as fractions in [0,1].
struct ReportGrid {
  std::vector<std::string> row_labels;
  std::vector<std::string> datasets;
  std::vector<std::vector<ReportCell>> cells;  // [row][dataset]

  /// Ragged or empty grids, and labels containing the CSV delimiter or
  /// newlines, are hard errors.
  void validate() const;
};

/// Aligned text table; scores rendered as percentages with two decimals.
std::string render_report(const ReportGrid& grid);

/// Machine-readable companion, comma-separated with full-precision values.
std::string render_report_csv(const ReportGrid& grid);

/// Inverse of render_report_csv; round-trips values exactly.
ReportGrid parse_report_csv(const std::string& text);

}  // namespace plcutseg::eval
