#ifndef MAGNNETO_REPORT_H_
#define MAGNNETO_REPORT_H_

#include <string>
#include <string_view>
#include <vector>

namespace magnneto {

// Every CSV the CLI emits has a fixed, documented header.
enum class ReportKind { kTrainLog, kEvalResults, kEvalCdf, kEvalSummary, kCompare, kOverhead };

ReportKind ParseReportKind(const std::string& name);
std::string ReportKindName(ReportKind kind);
const std::string& ReportHeader(ReportKind kind);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Plain comma-separated values, no quoting.
CsvTable ParseCsv(std::string_view text);

// Checks the header and the type of every field against the schema; returns
// the number of data rows. Throws Error(kParse) naming the offending line.
size_t CheckReport(ReportKind kind, std::string_view text);

}  // namespace magnneto

#endif  // MAGNNETO_REPORT_H_
