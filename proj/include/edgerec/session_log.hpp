#pragma once

#include <cstdint>
#include <functional>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgerec/common.hpp"

namespace edgerec {

// Line-delimited, self-describing records: ts, user, kind, payload.
// Kinds: meta, page, event, behavior, trigger, rerank.
struct LogLine {
  std::int64_t ts = 0;
  int user = 0;
  std::string kind;
  nlohmann::json data;

  nlohmann::json to_json() const {
    return {{"ts", ts}, {"user", user}, {"kind", kind}, {"data", data}};
  }
  static LogLine from_json(const nlohmann::json& j) {
    LogLine l;
    l.ts = j.at("ts").get<std::int64_t>();
    l.user = j.at("user").get<int>();
    l.kind = j.at("kind").get<std::string>();
    l.data = j.at("data");
    return l;
  }
};

class LogSink {
 public:
  virtual ~LogSink() = default;
  virtual void write(const LogLine& line) = 0;
};

class FileLogSink : public LogSink {
 public:
  explicit FileLogSink(const std::string& path) : out_(path) {
    EDGEREC_CHECK(out_.good(), "cannot open log file for writing: " + path);
  }
  void write(const LogLine& line) override { out_ << line.to_json().dump() << '\n'; }
  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

class VectorLogSink : public LogSink {
 public:
  void write(const LogLine& line) override { lines.push_back(line); }
  std::vector<LogLine> lines;
};

struct LogReadStats {
  std::size_t lines = 0;
  std::size_t skipped = 0;  // malformed lines
};

// Streams a log file through the visitor; malformed lines are counted and
// skipped rather than aborting the read.
LogReadStats for_each_log_line(const std::string& path,
                               const std::function<void(const LogLine&)>& fn);

std::vector<LogLine> read_session_log(const std::string& path, LogReadStats* stats = nullptr);

}  // namespace edgerec
