#include "edgerec/edge_runtime.hpp"

#include <algorithm>

namespace edgerec {

namespace {
const char* kEventNames[] = {"expose", "scroll", "click", "delete", "pageview_action",
                             "leave_detail"};
const char* kTriggerNames[] = {"click", "delete", "exposures"};
}  // namespace

const char* event_kind_name(EventKind k) { return kEventNames[int(k)]; }

EventKind event_kind_from_name(const std::string& s) {
  for (int i = 0; i < 6; ++i)
    if (s == kEventNames[i]) return EventKind(i);
  fail("unknown event kind: " + s);
}

const char* trigger_kind_name(Trigger::Kind k) { return kTriggerNames[int(k)]; }

EdgeRuntime::EdgeRuntime(const Config& cfg, std::shared_ptr<const EdgeRecModel> device_model,
                         std::string model_version, const CloudRs* cloud, LogSink* log)
    : cfg_(cfg), model_(std::move(device_model)), version_(std::move(model_version)),
      cloud_(cloud), log_(log) {
  if (model_) encoder_ = std::make_unique<BehaviorEncoder>(model_.get());
}

EdgeRuntime::UserState& EdgeRuntime::state(int user) { return users_[user]; }

const EdgeRuntime::UserState& EdgeRuntime::state(int user) const {
  auto it = users_.find(user);
  EDGEREC_CHECK(it != users_.end(), "unknown user " + std::to_string(user));
  return it->second;
}

void EdgeRuntime::log(std::int64_t ts, int user, const std::string& kind, nlohmann::json data) {
  if (!log_) return;
  LogLine line;
  line.ts = ts;
  line.user = user;
  line.kind = kind;
  line.data = std::move(data);
  log_->write(line);
}

bool EdgeRuntime::ensure_page(int user, std::int64_t ts,
                              const std::function<UserProfile(int)>& profile_source) {
  UserState& st = state(user);
  if (st.has_page && st.exposed_in_page < cfg_.page_size && st.exposed < int(st.display.size()))
    return false;

  PageResponse resp =
      cloud_->page(profile_source(user), version_, st.page_index + 1, st.session_exposed);
  EDGEREC_CHECK(!resp.candidates.empty(), "cloud returned an empty page");

  st.page_index += 1;
  st.pool.clear();
  st.display.clear();
  st.exposed = 0;
  st.exposed_in_page = 0;
  st.has_page = true;
  st.served_version = resp.served_version;
  if (model_ && resp.fallback) st.rerank_on = false;  // never score in a mismatched space

  nlohmann::json items = nlohmann::json::array();
  for (std::size_t i = 0; i < resp.candidates.size(); ++i) {
    const auto& c = resp.candidates[i];
    KnownItem ki;
    ki.attrs = c.attrs;
    if (!c.rows.empty())
      ki.features = encode_item_from_rows(c.rows, c.attrs.scores, cfg_.features);
    st.session_items[c.attrs.item_id] = ki;
    st.pool.push_back(std::move(ki));
    st.display.push_back(int(i));
    items.push_back({{"attrs", c.attrs.to_json()}, {"price", c.price}});
  }
  counters_.pages += 1;
  log(ts, user, "page",
      {{"page_index", st.page_index},
       {"requested_version", version_},
       {"served_version", resp.served_version},
       {"fallback", resp.fallback},
       {"rerank_enabled", model_ != nullptr && st.rerank_on},
       {"items", std::move(items)}});
  return true;
}

std::optional<std::int64_t> EdgeRuntime::peek_next_item(int user) const {
  const UserState& st = state(user);
  if (!st.has_page || st.exposed >= int(st.display.size()) ||
      st.exposed_in_page >= cfg_.page_size)
    return std::nullopt;
  return st.pool[st.display[st.exposed]].attrs.item_id;
}

void EdgeRuntime::append_record(UserState& st, int user, BehaviorKind kind, std::int64_t ts,
                                const ItemAttributes& attrs, const Vec& item_features,
                                const nlohmann::json& action_json, const Vec& action_features) {
  log(ts, user, "behavior",
      {{"bkind", behavior_kind_name(kind)}, {"attrs", attrs.to_json()}, {"action", action_json}});
  if (!encoder_ || item_features.empty()) return;  // no device model: log only
  BehaviorRecord rec;
  rec.kind = kind;
  rec.ts = ts;
  rec.attrs = attrs;
  rec.item_features = item_features;
  rec.action_features = action_features;
  encoder_->append(st.ctx, rec);
}

void EdgeRuntime::finalize_exposure(UserState& st, int user, std::int64_t item_id, std::int64_t ts,
                                    DeleteReason reason) {
  auto it = st.open_exposures.find(item_id);
  if (it == st.open_exposures.end()) return;
  OpenExposure open = it->second;
  st.open_exposures.erase(it);
  st.open_order.erase(std::find(st.open_order.begin(), st.open_order.end(), item_id));

  ExposureAction a = open.action;
  a.exposure_duration_ms = std::max<std::int64_t>(0, ts - open.start_ts);
  a.delete_reason = reason;
  // Decay is measured from the exposure start to encode time; records are
  // encoded exactly once, when finalized.
  a.expose_decay_ms = std::max<std::int64_t>(0, ts - open.start_ts);

  const KnownItem& ki = st.session_items.at(item_id);
  Vec action_vec = encoder_ ? encode_exposure_action(a, cfg_.features) : Vec{};
  append_record(st, user, BehaviorKind::kIe, ts, ki.attrs, ki.features, a.to_json(), action_vec);
}

void EdgeRuntime::flush_open_exposures(UserState& st, int user, std::int64_t ts) {
  std::vector<std::int64_t> order = st.open_order;  // exposure start order
  for (std::int64_t id : order) finalize_exposure(st, user, id, ts, DeleteReason::kNone);
}

std::optional<Trigger> EdgeRuntime::ingest_event(const Event& ev) {
  UserState& st = state(ev.user);
  EDGEREC_CHECK(ev.ts >= st.last_ts, "events must arrive in timestamp order");
  st.last_ts = ev.ts;
  EDGEREC_CHECK(st.session_items.count(ev.item_id),
                "event references unknown item " + std::to_string(ev.item_id));

  nlohmann::json data{{"event", event_kind_name(ev.kind)}, {"item", ev.item_id}};
  std::optional<Trigger> trig;

  switch (ev.kind) {
    case EventKind::kExpose: {
      EDGEREC_CHECK(st.has_page && st.exposed < int(st.display.size()),
                    "expose with exhausted page cache");
      std::int64_t next = st.pool[st.display[st.exposed]].attrs.item_id;
      EDGEREC_CHECK(next == ev.item_id, "expose out of display order");
      st.exposed += 1;
      st.exposed_in_page += 1;
      st.session_exposed.insert(ev.item_id);
      OpenExposure open;
      open.start_ts = ev.ts;
      open.action.exposure_count = 1;
      st.open_exposures[ev.item_id] = open;
      st.open_order.push_back(ev.item_id);
      st.exposures_since_trigger += 1;
      counters_.exposures += 1;
      data["page_index"] = st.page_index;
      data["pos"] = st.exposed_in_page;  // 1-based display position in page
      if (st.exposures_since_trigger >= cfg_.k_expose)
        trig = Trigger{Trigger::Kind::kExposures, ev.ts};
      break;
    }
    case EventKind::kScroll: {
      auto it = st.open_exposures.find(ev.item_id);
      if (it != st.open_exposures.end()) {
        ExposureAction& a = it->second.action;
        a.scroll_speed_max = std::max(a.scroll_speed_max, ev.scroll_speed);
        a.scroll_duration_max_ms = std::max(a.scroll_duration_max_ms, ev.scroll_duration_ms);
        a.scroll_count += 1;
        data["speed"] = ev.scroll_speed;
        data["duration"] = ev.scroll_duration_ms;
        finalize_exposure(st, ev.user, ev.item_id, ev.ts, DeleteReason::kNone);
      }
      break;
    }
    case EventKind::kClick: {
      EDGEREC_CHECK(st.session_exposed.count(ev.item_id), "click on unexposed item");
      st.clicked.insert(ev.item_id);
      st.open_pageview = {ev.item_id, OpenPageView{ev.ts, PageViewAction{}}};
      trig = Trigger{Trigger::Kind::kClick, ev.ts};
      break;
    }
    case EventKind::kDelete: {
      EDGEREC_CHECK(st.session_exposed.count(ev.item_id), "delete of unexposed item");
      data["reason"] = delete_reason_name(ev.reason);
      if (st.open_exposures.count(ev.item_id)) {
        finalize_exposure(st, ev.user, ev.item_id, ev.ts, ev.reason);
      } else {
        // Long press after the exposure record closed: emit a minimal record
        // carrying the feedback.
        ExposureAction a;
        a.exposure_count = 1;
        a.delete_reason = ev.reason;
        const KnownItem& ki = st.session_items.at(ev.item_id);
        Vec av = encoder_ ? encode_exposure_action(a, cfg_.features) : Vec{};
        append_record(st, ev.user, BehaviorKind::kIe, ev.ts, ki.attrs, ki.features, a.to_json(),
                      av);
      }
      trig = Trigger{Trigger::Kind::kDelete, ev.ts};
      break;
    }
    case EventKind::kPageviewAction: {
      EDGEREC_CHECK(st.open_pageview && st.open_pageview->first == ev.item_id,
                    "pageview action without an open page view");
      auto& flags = st.open_pageview->second.action.flags;
      for (int i = 0; i < 10; ++i) flags[i] = flags[i] | ev.flags[i];
      data["flags"] = ev.flags;
      break;
    }
    case EventKind::kLeaveDetail: {
      EDGEREC_CHECK(st.open_pageview && st.open_pageview->first == ev.item_id,
                    "leave_detail without an open page view");
      OpenPageView open = st.open_pageview->second;
      st.open_pageview.reset();
      PageViewAction a = open.action;
      a.ipv_duration_ms = std::max<std::int64_t>(0, ev.ts - open.click_ts);
      a.ipv_decay_ms = std::max<std::int64_t>(0, ev.ts - open.click_ts);
      const KnownItem& ki = st.session_items.at(ev.item_id);
      Vec av = encoder_ ? encode_pageview_action(a, cfg_.features) : Vec{};
      append_record(st, ev.user, BehaviorKind::kIpv, ev.ts, ki.attrs, ki.features, a.to_json(),
                    av);
      break;
    }
  }

  log(ev.ts, ev.user, "event", std::move(data));

  if (trig) {
    st.exposures_since_trigger = 0;
    flush_open_exposures(st, ev.user, ev.ts);
    counters_.triggers += 1;
    log(ev.ts, ev.user, "trigger", {{"tkind", trigger_kind_name(trig->kind)}});
  }
  return trig;
}

RerankResult EdgeRuntime::serve_trigger(int user, const Trigger& trigger) {
  UserState& st = state(user);
  RerankResult res;
  res.user = user;
  res.trigger_kind = trigger.kind;
  res.serve_ts = trigger.ts + cfg_.serve_delay_ms;
  res.request_id = "u" + std::to_string(user) + "-r" + std::to_string(st.request_seq++);

  // Unexposed suffix in initial cloud order (pool order), regardless of any
  // previous rerank of the display list.
  std::vector<int> suffix(st.display.begin() + st.exposed, st.display.end());
  std::vector<int> initial = suffix;
  std::sort(initial.begin(), initial.end());

  nlohmann::json exposed_ids = nlohmann::json::array();
  for (int i = 0; i < st.exposed; ++i)
    exposed_ids.push_back(st.pool[st.display[i]].attrs.item_id);

  nlohmann::json line{{"request_id", res.request_id},
                      {"tkind", trigger_kind_name(trigger.kind)},
                      {"trigger_ts", trigger.ts},
                      {"page_index", st.page_index},
                      {"exposed", std::move(exposed_ids)}};

  if (initial.empty()) {
    counters_.noop_serves += 1;
    line["noop"] = true;
    line["ran_model"] = false;
    log(res.serve_ts, user, "rerank", std::move(line));
    return res;
  }

  nlohmann::json cand_ids = nlohmann::json::array();
  for (int idx : initial) cand_ids.push_back(st.pool[idx].attrs.item_id);
  line["candidates"] = cand_ids;

  const bool can_run = model_ != nullptr && st.rerank_on && !st.pool[initial[0]].features.empty();
  if (can_run) {
    std::vector<Candidate> cands;
    cands.reserve(initial.size());
    for (int idx : initial) cands.push_back({st.pool[idx].attrs.item_id, st.pool[idx].features});
    BehaviorContext snap = BehaviorEncoder::snapshot(st.ctx);
    res.scored = rerank(*model_, cands, snap);
    res.ran_model = true;
    counters_.reranks += 1;

    std::vector<int> new_suffix;
    new_suffix.reserve(res.scored.size());
    for (const auto& sc : res.scored) new_suffix.push_back(initial[sc.initial_rank]);
    res.reordered = new_suffix != suffix;
    if (res.reordered) counters_.reorders += 1;
    std::copy(new_suffix.begin(), new_suffix.end(), st.display.begin() + st.exposed);

    nlohmann::json scores = nlohmann::json::array(), order = nlohmann::json::array();
    for (const auto& sc : res.scored) order.push_back(sc.item_id);
    // Scores aligned with the initial candidate order.
    std::vector<double> by_initial(res.scored.size());
    for (const auto& sc : res.scored) by_initial[sc.initial_rank] = sc.score;
    for (double s : by_initial) scores.push_back(s);
    line["order"] = std::move(order);
    line["scores"] = std::move(scores);
  }
  line["ran_model"] = res.ran_model;
  line["reordered"] = res.reordered;
  line["noop"] = false;
  log(res.serve_ts, user, "rerank", std::move(line));
  return res;
}

bool EdgeRuntime::rerank_enabled(int user) const {
  const UserState& st = state(user);
  return model_ != nullptr && st.rerank_on;
}

const BehaviorContext& EdgeRuntime::context(int user) const { return state(user).ctx; }

BehaviorContext EdgeRuntime::snapshot(int user) const {
  return BehaviorEncoder::snapshot(state(user).ctx);
}

nlohmann::json EdgeRuntime::save_context(int user) const {
  return behavior_context_to_json(state(user).ctx);
}

void EdgeRuntime::load_context(int user, const nlohmann::json& j) {
  state(user).ctx = behavior_context_from_json(j);
}

}  // namespace edgerec
