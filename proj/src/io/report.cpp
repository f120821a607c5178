#include <sstream>

#include <json.hpp>

#include "json_util.hpp"
#include "shadowrank/io.hpp"

namespace shadowrank {

using nlohmann::json;

ReportFormat parse_report_format(std::string_view name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  throw DataError("unknown report format '" + std::string(name) + "'");
}

std::string emit_report(const EvaluationReport& report, ReportFormat format) {
  if (format == ReportFormat::kJson) {
    json rows = json::array();
    for (const auto& r : report.rows) {
      rows.push_back({{"strategy", strategy_label(r.strategy)},
                      {"n_users", r.n_users},
                      {"compliance_probability", r.compliance_probability},
                      {"mean_utility", r.mean_utility},
                      {"latency_p50_ms", r.latency.p50},
                      {"latency_p95_ms", r.latency.p95},
                      {"latency_p99_ms", r.latency.p99},
                      {"latency_max_ms", r.latency.max}});
    }
    return json{{"strategies", rows}}.dump(2) + "\n";
  }
  std::ostringstream out;
  out.precision(17);
  out << "strategy,n_users,compliance_probability,mean_utility,latency_p50_ms,latency_p95_ms,"
         "latency_p99_ms,latency_max_ms\n";
  for (const auto& r : report.rows) {
    out << strategy_label(r.strategy) << ',' << r.n_users << ',' << r.compliance_probability << ','
        << r.mean_utility << ',' << r.latency.p50 << ',' << r.latency.p95 << ',' << r.latency.p99 << ','
        << r.latency.max << '\n';
  }
  return out.str();
}

EvaluationReport parse_report_json(std::string_view text) {
  const detail::Where at{"<report>", 0, ""};
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw at.error(std::string("parse error: ") + e.what());
  }
  const json& rows = detail::field(j, "strategies", at);
  if (!rows.is_array()) throw at.sub("strategies").error("expected an array");
  EvaluationReport report;
  for (const auto& row : rows) {
    StrategyReport r;
    r.strategy = parse_strategy(detail::get_string(detail::field(row, "strategy", at), at));
    r.n_users = detail::get_size(detail::field(row, "n_users", at), at);
    r.compliance_probability = detail::get_number(detail::field(row, "compliance_probability", at), at);
    r.mean_utility = detail::get_number(detail::field(row, "mean_utility", at), at);
    r.latency.p50 = detail::get_number(detail::field(row, "latency_p50_ms", at), at);
    r.latency.p95 = detail::get_number(detail::field(row, "latency_p95_ms", at), at);
    r.latency.p99 = detail::get_number(detail::field(row, "latency_p99_ms", at), at);
    r.latency.max = detail::get_number(detail::field(row, "latency_max_ms", at), at);
    report.rows.push_back(r);
  }
  return report;
}

}  // namespace shadowrank
