#include "edgerec/session_log.hpp"

namespace edgerec {

LogReadStats for_each_log_line(const std::string& path,
                               const std::function<void(const LogLine&)>& fn) {
  std::ifstream in(path);
  EDGEREC_CHECK(in.good(), "cannot open log file: " + path);
  LogReadStats stats;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++stats.lines;
    LogLine parsed;
    try {
      parsed = LogLine::from_json(nlohmann::json::parse(line));
    } catch (const std::exception&) {
      ++stats.skipped;
      continue;
    }
    fn(parsed);
  }
  return stats;
}

std::vector<LogLine> read_session_log(const std::string& path, LogReadStats* stats) {
  std::vector<LogLine> lines;
  LogReadStats s = for_each_log_line(path, [&](const LogLine& l) { lines.push_back(l); });
  if (stats) *stats = s;
  return lines;
}

}  // namespace edgerec
