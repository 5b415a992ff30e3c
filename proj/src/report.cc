#include "magnneto/report.h"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <map>

#include "magnneto/common.h"

namespace magnneto {
namespace {

enum class Field { kInt, kReal, kText };

struct Schema {
  std::string header;
  std::vector<Field> fields;
};

const std::map<ReportKind, Schema>& Schemas() {
  using F = Field;
  static const std::map<ReportKind, Schema> schemas = {
      {ReportKind::kTrainLog,
       {"iteration,mean_reward,best_maxutil,actor_loss,critic_loss,entropy",
        {F::kInt, F::kReal, F::kReal, F::kReal, F::kReal, F::kReal}}},
      {ReportKind::kEvalResults,
       {"tm,mode,default_maxutil,best_maxutil,improvement_pct,wall_ms,flag",
        {F::kText, F::kText, F::kReal, F::kReal, F::kReal, F::kReal, F::kText}}},
      {ReportKind::kEvalCdf,
       {"mode,rank,improvement_pct,cdf", {F::kText, F::kInt, F::kReal, F::kReal}}},
      {ReportKind::kEvalSummary,
       {"mode,count,excluded,mean_improvement_pct,median_improvement_pct,mean_best_maxutil,"
        "beats_default_fraction",
        {F::kText, F::kInt, F::kInt, F::kReal, F::kReal, F::kReal, F::kReal}}},
      {ReportKind::kCompare,
       {"tm,optimizer,max_util,improvement_pct,wall_ms",
        {F::kText, F::kText, F::kReal, F::kReal, F::kReal}}},
      {ReportKind::kOverhead,
       {"link,bytes_hidden,bytes_logits,total_MB,MB_per_s",
        {F::kInt, F::kReal, F::kReal, F::kReal, F::kReal}}},
  };
  return schemas;
}

std::vector<std::string> SplitLine(std::string_view line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool ValidField(Field f, const std::string& s) {
  switch (f) {
    case Field::kInt: {
      long long v;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      return !s.empty() && ec == std::errc() && p == s.data() + s.size();
    }
    case Field::kReal: {
      if (s == "nan") return true;  // flagged rows carry undefined values
      char* end = nullptr;
      std::strtod(s.c_str(), &end);
      return !s.empty() && end == s.c_str() + s.size();
    }
    case Field::kText:
      return s.find_first_of(",\n") == std::string::npos;
  }
  return false;
}

}  // namespace

ReportKind ParseReportKind(const std::string& name) {
  for (const auto& [kind, schema] : Schemas()) {
    if (ReportKindName(kind) == name) return kind;
  }
  throw Error(ErrorKind::kValidation, "unknown report kind '" + name + "'");
}

std::string ReportKindName(ReportKind kind) {
  switch (kind) {
    case ReportKind::kTrainLog: return "train-log";
    case ReportKind::kEvalResults: return "eval-results";
    case ReportKind::kEvalCdf: return "eval-cdf";
    case ReportKind::kEvalSummary: return "eval-summary";
    case ReportKind::kCompare: return "compare";
    case ReportKind::kOverhead: return "overhead";
  }
  return "unknown";
}

const std::string& ReportHeader(ReportKind kind) { return Schemas().at(kind).header; }

CsvTable ParseCsv(std::string_view text) {
  CsvTable table;
  size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    if (line.empty()) continue;
    if (first) {
      table.header = SplitLine(line);
      first = false;
    } else {
      table.rows.push_back(SplitLine(line));
    }
  }
  return table;
}

size_t CheckReport(ReportKind kind, std::string_view text) {
  const Schema& schema = Schemas().at(kind);
  const CsvTable table = ParseCsv(text);
  if (table.header != SplitLine(schema.header)) {
    throw Error(ErrorKind::kParse, ReportKindName(kind) + ": header mismatch, expected '" +
                                       schema.header + "' at line 1");
  }
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = " at line " + std::to_string(r + 2);
    if (row.size() != schema.fields.size()) {
      throw Error(ErrorKind::kParse, ReportKindName(kind) + ": expected " +
                                         std::to_string(schema.fields.size()) + " fields" + where);
    }
    for (size_t c = 0; c < row.size(); ++c) {
      if (!ValidField(schema.fields[c], row[c])) {
        throw Error(ErrorKind::kParse, ReportKindName(kind) + ": bad value '" + row[c] +
                                           "' in column " + table.header[c] + where);
      }
    }
  }
  return table.rows.size();
}

}  // namespace magnneto
