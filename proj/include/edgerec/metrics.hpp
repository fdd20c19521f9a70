#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgerec/config.hpp"

namespace edgerec {

// Probability that a random positive outscores a random negative; tied pairs
// count one half. Throws on one-class input.
double auc(const std::vector<int>& labels, const Vec& scores);

struct RequestEval {
  std::vector<int> labels;
  Vec scores;
  int impressions = 0;  // defaults to labels.size() when 0
};

// Impression-weighted average of per-request AUC. Requests whose labels are
// all one class are excluded from numerator and denominator; throws when
// nothing remains.
double gauc(const std::vector<RequestEval>& requests);

struct MetricsReport {
  std::string arm;            // "baseline" or "model"
  std::string model_version;
  std::string config_hash;
  long long users = 0;
  long long pv = 0;
  long long clicks = 0;
  double ctr = 0.0;
  double gmv_proxy = 0.0;
  long long pages = 0;
  long long triggers = 0;
  long long reranks = 0;   // serves that ran the model on a nonempty suffix
  long long reorders = 0;
  double triggers_per_page = 0.0;
  double reranks_per_page = 0.0;
  double reorders_per_page = 0.0;
  std::vector<long long> pv_by_position;     // 1..page_size
  std::vector<long long> click_by_position;
  std::optional<double> gauc_value;
  long long gauc_requests = 0;
  long long gauc_excluded = 0;  // one-class or unexposed requests
  std::size_t malformed_lines = 0;

  double position_ctr(int pos_1based) const;
  // Mean CTR over an inclusive 1-based position range.
  double range_ctr(int lo, int hi) const;

  nlohmann::json to_json() const;
  std::string to_text() const;   // human-readable summary
  std::string to_table() const;  // machine-readable per-position csv
};

MetricsReport report_from_log(const std::string& log_path, int page_size);

}  // namespace edgerec
