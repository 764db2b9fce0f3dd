#include "plcutseg/eval/report.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "plcutseg/common.hpp"

namespace plcutseg::eval {

namespace {

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v * 100.0);
  return buf;
}

std::string full_precision(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void check_label(const std::string& s) {
  require(!s.empty(), "report labels must be non-empty");
  require(s.find(',') == std::string::npos && s.find('\n') == std::string::npos,
          "report label contains a delimiter: " + s);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

void ReportGrid::validate() const {
  require(!row_labels.empty() && !datasets.empty(), "report grid must be non-empty");
  require(cells.size() == row_labels.size(), "report grid: one cell row per row label required");
  for (const auto& row : cells)
    require(row.size() == datasets.size(), "report grid is ragged");
  for (const auto& l : row_labels) check_label(l);
  for (const auto& d : datasets) check_label(d);
}

std::string render_report(const ReportGrid& grid) {
  grid.validate();
  const std::size_t rows = grid.row_labels.size();
  const std::size_t cols = grid.datasets.size();

  std::vector<std::string> headers;
  headers.push_back("method");
  for (const auto& d : grid.datasets) {
    headers.push_back(d + " mDICE");
    headers.push_back(d + " IoU");
  }
  std::vector<std::vector<std::string>> body(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    body[r].push_back(grid.row_labels[r]);
    for (std::size_t c = 0; c < cols; ++c) {
      body[r].push_back(percent(grid.cells[r][c].mdice));
      body[r].push_back(percent(grid.cells[r][c].iou));
    }
  }

  std::vector<std::size_t> widths(headers.size());
  for (std::size_t c = 0; c < headers.size(); ++c) {
    widths[c] = headers[c].size();
    for (const auto& row : body) widths[c] = std::max(widths[c], row[c].size());
  }

  std::ostringstream out;
  auto emit_row = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << " | ";
      if (c == 0)
        out << row[c] << std::string(widths[c] - row[c].size(), ' ');
      else
        out << std::string(widths[c] - row[c].size(), ' ') << row[c];
    }
    out << '\n';
  };
  emit_row(headers);
  std::size_t total = 0;
  for (std::size_t c = 0; c < widths.size(); ++c) total += widths[c] + (c ? 3 : 0);
  out << std::string(total, '-') << '\n';
  for (const auto& row : body) emit_row(row);
  return out.str();
}

std::string render_report_csv(const ReportGrid& grid) {
  grid.validate();
  std::ostringstream out;
  out << "method";
  for (const auto& d : grid.datasets) out << ',' << d << " mDICE," << d << " IoU";
  out << '\n';
  for (std::size_t r = 0; r < grid.row_labels.size(); ++r) {
    out << grid.row_labels[r];
    for (const auto& cell : grid.cells[r])
      out << ',' << full_precision(cell.mdice) << ',' << full_precision(cell.iou);
    out << '\n';
  }
  return out.str();
}

ReportGrid parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  expect(static_cast<bool>(std::getline(in, line)), "report csv: missing header");
  auto header = split_csv_line(line);
  expect(header.size() >= 3 && (header.size() - 1) % 2 == 0 && header[0] == "method",
         "report csv: malformed header");

  ReportGrid grid;
  const std::string mdice_suffix = " mDICE", iou_suffix = " IoU";
  for (std::size_t c = 1; c < header.size(); c += 2) {
    const std::string& md = header[c];
    const std::string& io = header[c + 1];
    expect(md.size() > mdice_suffix.size() &&
               md.compare(md.size() - mdice_suffix.size(), mdice_suffix.size(), mdice_suffix) == 0,
           "report csv: expected mDICE column, got: " + md);
    const std::string ds = md.substr(0, md.size() - mdice_suffix.size());
    expect(io == ds + iou_suffix, "report csv: expected '" + ds + iou_suffix + "', got: " + io);
    grid.datasets.push_back(ds);
  }

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    expect(fields.size() == header.size(), "report csv: row width mismatch: " + line);
    grid.row_labels.push_back(fields[0]);
    std::vector<ReportCell> row;
    for (std::size_t c = 1; c < fields.size(); c += 2) {
      char* end = nullptr;
      ReportCell cell;
      cell.mdice = std::strtod(fields[c].c_str(), &end);
      expect(end && *end == '\0', "report csv: bad number: " + fields[c]);
      cell.iou = std::strtod(fields[c + 1].c_str(), &end);
      expect(end && *end == '\0', "report csv: bad number: " + fields[c + 1]);
      row.push_back(cell);
    }
    grid.cells.push_back(std::move(row));
  }
  grid.validate();
  return grid;
}

}  // namespace plcutseg::eval
