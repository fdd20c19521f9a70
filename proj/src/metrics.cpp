#include "edgerec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "edgerec/session_log.hpp"

namespace edgerec {

double auc(const std::vector<int>& labels, const Vec& scores) {
  EDGEREC_CHECK(labels.size() == scores.size(), "auc: labels/scores length mismatch");
  std::size_t n = labels.size();
  std::size_t pos = 0;
  for (int y : labels) {
    EDGEREC_CHECK(y == 0 || y == 1, "auc: labels must be 0 or 1");
    pos += std::size_t(y);
  }
  std::size_t neg = n - pos;
  EDGEREC_CHECK(pos > 0 && neg > 0, "auc undefined for one-class input");

  // Rank statistic with mean ranks for ties.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    double mean_rank = 0.5 * double(i + 1 + j);  // ranks are 1-based
    for (std::size_t t = i; t < j; ++t)
      if (labels[idx[t]]) pos_rank_sum += mean_rank;
    i = j;
  }
  return (pos_rank_sum - 0.5 * double(pos) * double(pos + 1)) / (double(pos) * double(neg));
}

double gauc(const std::vector<RequestEval>& requests) {
  double num = 0.0, den = 0.0;
  for (const auto& r : requests) {
    EDGEREC_CHECK(r.labels.size() == r.scores.size(), "gauc: labels/scores length mismatch");
    std::size_t pos = 0;
    for (int y : r.labels) pos += std::size_t(y);
    if (r.labels.empty() || pos == 0 || pos == r.labels.size()) continue;  // AUC undefined
    double w = r.impressions > 0 ? double(r.impressions) : double(r.labels.size());
    num += w * auc(r.labels, r.scores);
    den += w;
  }
  EDGEREC_CHECK(den > 0.0, "gauc undefined: no request with both classes");
  return num / den;
}

double MetricsReport::position_ctr(int pos) const {
  if (pos < 1 || pos > int(pv_by_position.size()) || pv_by_position[pos - 1] == 0) return 0.0;
  return double(click_by_position[pos - 1]) / double(pv_by_position[pos - 1]);
}

double MetricsReport::range_ctr(int lo, int hi) const {
  long long pv_sum = 0, ck = 0;
  for (int p = lo; p <= hi && p <= int(pv_by_position.size()); ++p) {
    pv_sum += pv_by_position[p - 1];
    ck += click_by_position[p - 1];
  }
  return pv_sum ? double(ck) / double(pv_sum) : 0.0;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j{{"arm", arm},
                   {"model_version", model_version},
                   {"config_hash", config_hash},
                   {"users", users},
                   {"pv", pv},
                   {"click", clicks},
                   {"ctr", ctr},
                   {"gmv_proxy", gmv_proxy},
                   {"pages", pages},
                   {"triggers", triggers},
                   {"reranks", reranks},
                   {"reorders", reorders},
                   {"triggers_per_page", triggers_per_page},
                   {"reranks_per_page", reranks_per_page},
                   {"reorders_per_page", reorders_per_page},
                   {"pv_by_position", pv_by_position},
                   {"click_by_position", click_by_position},
                   {"gauc_requests", gauc_requests},
                   {"gauc_excluded", gauc_excluded},
                   {"malformed_lines", malformed_lines}};
  if (gauc_value) j["gauc"] = *gauc_value;
  return j;
}

std::string MetricsReport::to_text() const {
  std::ostringstream os;
  os << "EdgeRec session report (" << arm << ")\n";
  os << "  config_hash=" << config_hash;
  if (!model_version.empty()) os << " model_version=" << model_version;
  os << " users=" << users << "\n";
  os << "  PV=" << pv << " CLICK=" << clicks << " CTR=" << ctr << " GMV-proxy=" << gmv_proxy
     << "\n";
  os << "  pages=" << pages << " triggers/page=" << triggers_per_page
     << " reranks/page=" << reranks_per_page << " reorders/page=" << reorders_per_page << "\n";
  if (gauc_value)
    os << "  GAUC=" << *gauc_value << " (requests=" << gauc_requests
       << ", excluded=" << gauc_excluded << ")\n";
  else
    os << "  GAUC=n/a (no scored requests)\n";
  os << "  CTR by position: 1-5=" << range_ctr(1, 5) << " 40-50=" << range_ctr(40, 50) << "\n";
  return os.str();
}

std::string MetricsReport::to_table() const {
  std::ostringstream os;
  os << "position,pv,click,ctr\n";
  for (std::size_t p = 0; p < pv_by_position.size(); ++p) {
    os << (p + 1) << ',' << pv_by_position[p] << ',' << click_by_position[p] << ','
       << position_ctr(int(p + 1)) << "\n";
  }
  return os.str();
}

namespace {

struct Impression {
  std::size_t request = 0;  // index into requests
  std::int64_t item = 0;
  double score = 0.0;
};

struct OpenRequest {
  std::unordered_map<std::int64_t, double> scores;  // by item, empty if unscored
  bool scored = false;
};

struct UserTrace {
  std::vector<OpenRequest> requests;
  int current = -1;  // most recent rerank with candidates
  std::vector<Impression> impressions;
  std::unordered_set<std::int64_t> clicked;
};

}  // namespace

MetricsReport report_from_log(const std::string& log_path, int page_size) {
  MetricsReport rep;
  rep.pv_by_position.assign(std::size_t(page_size), 0);
  rep.click_by_position.assign(std::size_t(page_size), 0);

  std::unordered_map<std::int64_t, double> price_by_item;
  std::unordered_map<std::int64_t, int> pos_by_user_item_hash;  // last exposure position
  std::unordered_map<int, UserTrace> traces;
  std::unordered_set<int> users_seen;

  auto stats = for_each_log_line(log_path, [&](const LogLine& line) {
    if (line.user >= 0) users_seen.insert(line.user);
    if (line.kind == "meta") {
      rep.arm = line.data.value("arm", rep.arm);
      rep.model_version = line.data.value("model_version", rep.model_version);
      rep.config_hash = line.data.value("config_hash", rep.config_hash);
      return;
    }
    if (line.kind == "page") {
      rep.pages += 1;
      traces[line.user].current = -1;  // fresh pool: exposures no longer attributable
      for (const auto& it : line.data.at("items")) {
        price_by_item[it.at("attrs").at("id").get<std::int64_t>()] = it.value("price", 0.0);
      }
      return;
    }
    if (line.kind == "trigger") {
      rep.triggers += 1;
      return;
    }
    if (line.kind == "rerank") {
      if (line.data.value("noop", false)) return;
      auto& tr = traces[line.user];
      OpenRequest req;
      if (line.data.contains("scores")) {
        req.scored = true;
        const auto& cands = line.data.at("candidates");
        const auto& scores = line.data.at("scores");
        for (std::size_t i = 0; i < cands.size(); ++i)
          req.scores[cands[i].get<std::int64_t>()] = scores[i].get<double>();
      } else {
        for (const auto& c : line.data.at("candidates")) req.scores[c.get<std::int64_t>()] = 0.0;
      }
      if (line.data.value("ran_model", false)) {
        rep.reranks += 1;
        if (line.data.value("reordered", false)) rep.reorders += 1;
      }
      tr.requests.push_back(std::move(req));
      tr.current = int(tr.requests.size()) - 1;
      return;
    }
    if (line.kind != "event") return;

    const std::string ev = line.data.at("event").get<std::string>();
    const std::int64_t item = line.data.at("item").get<std::int64_t>();
    auto& tr = traces[line.user];
    if (ev == "expose") {
      rep.pv += 1;
      int pos = line.data.at("pos").get<int>();
      if (pos >= 1 && pos <= page_size) rep.pv_by_position[pos - 1] += 1;
      pos_by_user_item_hash[(std::int64_t(line.user) << 32) ^ item] = pos;
      if (tr.current >= 0) {
        auto& req = tr.requests[tr.current];
        auto it = req.scores.find(item);
        if (it != req.scores.end())
          tr.impressions.push_back({std::size_t(tr.current), item, it->second});
      }
    } else if (ev == "click") {
      rep.clicks += 1;
      tr.clicked.insert(item);
      auto it = pos_by_user_item_hash.find((std::int64_t(line.user) << 32) ^ item);
      if (it != pos_by_user_item_hash.end() && it->second >= 1 && it->second <= page_size)
        rep.click_by_position[it->second - 1] += 1;
    } else if (ev == "pageview_action") {
      const auto& flags = line.data.at("flags");
      if (flags.size() > 1 && flags[1].get<int>() == 1) {
        auto p = price_by_item.find(item);
        rep.gmv_proxy += p == price_by_item.end() ? 0.0 : p->second;
      }
    }
  });
  rep.malformed_lines = stats.skipped;
  rep.users = (long long)users_seen.size();
  EDGEREC_CHECK(rep.pv > 0, "metrics undefined: log contains no exposures");

  rep.ctr = double(rep.clicks) / double(rep.pv);
  if (rep.pages) {
    rep.triggers_per_page = double(rep.triggers) / double(rep.pages);
    rep.reranks_per_page = double(rep.reranks) / double(rep.pages);
    rep.reorders_per_page = double(rep.reorders) / double(rep.pages);
  }

  // GAUC over scored requests: label = clicked before session end.
  std::vector<RequestEval> evals;
  bool any_scored = false;
  for (auto& [user, tr] : traces) {
    std::vector<RequestEval> per_req(tr.requests.size());
    std::vector<bool> scored(tr.requests.size());
    for (std::size_t r = 0; r < tr.requests.size(); ++r) scored[r] = tr.requests[r].scored;
    for (const auto& imp : tr.impressions) {
      if (!scored[imp.request]) continue;
      per_req[imp.request].labels.push_back(tr.clicked.count(imp.item) ? 1 : 0);
      per_req[imp.request].scores.push_back(imp.score);
    }
    for (auto& re : per_req) {
      if (re.labels.empty()) continue;
      any_scored = true;
      std::size_t pos = 0;
      for (int y : re.labels) pos += std::size_t(y);
      if (pos == 0 || pos == re.labels.size()) {
        rep.gauc_excluded += 1;
        continue;
      }
      rep.gauc_requests += 1;
      evals.push_back(std::move(re));
    }
  }
  if (any_scored && !evals.empty()) rep.gauc_value = gauc(evals);
  return rep;
}

}  // namespace edgerec
