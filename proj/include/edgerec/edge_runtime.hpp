#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "edgerec/cloud_rs.hpp"
#include "edgerec/crban.hpp"
#include "edgerec/hubsm.hpp"
#include "edgerec/session_log.hpp"

namespace edgerec {

enum class EventKind { kExpose, kScroll, kClick, kDelete, kPageviewAction, kLeaveDetail };

const char* event_kind_name(EventKind k);
EventKind event_kind_from_name(const std::string& s);

struct Event {
  std::int64_t ts = 0;
  int user = 0;
  EventKind kind = EventKind::kExpose;
  std::int64_t item_id = 0;
  double scroll_speed = 0.0;            // kScroll
  std::int64_t scroll_duration_ms = 0;  // kScroll
  DeleteReason reason = DeleteReason::kNone;  // kDelete
  std::array<int, 10> flags{};          // kPageviewAction
};

struct Trigger {
  enum class Kind { kClick, kDelete, kExposures };
  Kind kind = Kind::kClick;
  std::int64_t ts = 0;
};

const char* trigger_kind_name(Trigger::Kind k);

struct RerankResult {
  std::string request_id;
  int user = 0;
  Trigger::Kind trigger_kind = Trigger::Kind::kClick;
  std::int64_t serve_ts = 0;
  bool ran_model = false;
  bool reordered = false;
  std::vector<ScoredCandidate> scored;  // empty on no-op
};

// Client Native + Model Serving for a set of users: candidate cache, behavior
// store, trigger strategy and display-list management. Behavior encoding is
// incremental; reranking works on a snapshot of the encodings.
class EdgeRuntime {
 public:
  EdgeRuntime(const Config& cfg, std::shared_ptr<const EdgeRecModel> device_model,
              std::string model_version, const CloudRs* cloud, LogSink* log);

  // Fetches a fresh page when the cache is empty or the paging boundary was
  // reached. Returns true if a page request happened.
  bool ensure_page(int user, std::int64_t ts,
                   const std::function<UserProfile(int)>& profile_source);

  // Next item the UI would expose, or nullopt when the cache is exhausted.
  std::optional<std::int64_t> peek_next_item(int user) const;

  // Applies one user event; may emit a trigger. Events of one user must be
  // ingested in non-decreasing timestamp order.
  std::optional<Trigger> ingest_event(const Event& ev);

  // Runs the model-serving path for a trigger (asynchronously, i.e. at
  // trigger.ts + serve_delay_ms) and rewrites the unexposed display suffix.
  RerankResult serve_trigger(int user, const Trigger& trigger);

  bool rerank_enabled(int user) const;
  const BehaviorContext& context(int user) const;
  BehaviorContext snapshot(int user) const;

  // On-device persistence of the per-user behavior database.
  nlohmann::json save_context(int user) const;
  void load_context(int user, const nlohmann::json& j);

  struct Counters {
    std::int64_t pages = 0;
    std::int64_t exposures = 0;
    std::int64_t triggers = 0;
    std::int64_t reranks = 0;     // serve calls with a nonempty suffix and a model
    std::int64_t reorders = 0;    // reranks that changed the display order
    std::int64_t noop_serves = 0;
  };
  const Counters& counters() const { return counters_; }

 private:
  struct OpenExposure {
    std::int64_t start_ts = 0;
    ExposureAction action;
  };
  struct OpenPageView {
    std::int64_t click_ts = 0;
    PageViewAction action;
  };
  struct KnownItem {
    ItemAttributes attrs;
    Vec features;
  };
  struct UserState {
    // Current page pool, initial-rank order; display maps to pool indices.
    std::vector<KnownItem> pool;
    std::vector<int> display;
    int exposed = 0;
    int page_index = -1;
    bool has_page = false;
    bool rerank_on = true;
    std::string served_version;

    BehaviorContext ctx;
    std::map<std::int64_t, OpenExposure> open_exposures;  // ordered by item id
    std::vector<std::int64_t> open_order;                 // exposure start order
    std::optional<std::pair<std::int64_t, OpenPageView>> open_pageview;
    std::unordered_map<std::int64_t, KnownItem> session_items;
    std::unordered_set<std::int64_t> session_exposed;
    std::unordered_set<std::int64_t> clicked;
    int exposures_since_trigger = 0;
    int exposed_in_page = 0;
    std::int64_t last_ts = -1;
    int request_seq = 0;
  };

  UserState& state(int user);
  const UserState& state(int user) const;
  void finalize_exposure(UserState& st, int user, std::int64_t item_id, std::int64_t ts,
                         DeleteReason reason);
  void flush_open_exposures(UserState& st, int user, std::int64_t ts);
  void append_record(UserState& st, int user, BehaviorKind kind, std::int64_t ts,
                     const ItemAttributes& attrs, const Vec& item_features,
                     const nlohmann::json& action_json, const Vec& action_features);
  void log(std::int64_t ts, int user, const std::string& kind, nlohmann::json data);

  Config cfg_;
  std::shared_ptr<const EdgeRecModel> model_;
  std::unique_ptr<BehaviorEncoder> encoder_;
  std::string version_;
  const CloudRs* cloud_;
  LogSink* log_;
  std::map<int, UserState> users_;
  Counters counters_;
};

}  // namespace edgerec
