#include <doctest.h>

#include <future>
#include <set>

#include "edgerec/edge_runtime.hpp"
#include "test_util.hpp"

using namespace edgerec;

namespace {

struct Fixture {
  Config cfg = testutil::tiny_config();
  std::shared_ptr<Catalog> catalog;
  std::unique_ptr<CloudRs> cloud;
  std::shared_ptr<EdgeRecModel> full;
  std::shared_ptr<const EdgeRecModel> device;
  VectorLogSink sink;
  std::unique_ptr<EdgeRuntime> edge;
  UserProfile profile;

  explicit Fixture(bool with_model = true, const std::string& client_version = "v1") {
    catalog = std::make_shared<Catalog>(Catalog::generate(cfg, 1));
    cloud = std::make_unique<CloudRs>(cfg, catalog, 1);
    full = std::make_shared<EdgeRecModel>(testutil::tiny_model(cfg));
    cloud->publish_version(full->embedding_bundle_json("v1"));
    if (with_model)
      device = std::make_shared<EdgeRecModel>(
          EdgeRecModel::from_bundle_json(full->device_bundle_json("v1")));
    edge = std::make_unique<EdgeRuntime>(cfg, device, with_model ? client_version : "",
                                         cloud.get(), &sink);
    profile.user = 0;
    profile.category_affinity.assign(std::size_t(cfg.features.category_vocab), 0.0);
  }

  std::function<UserProfile(int)> profiles() {
    return [this](int) { return profile; };
  }

  Event expose_next(std::int64_t ts) {
    edge->ensure_page(0, ts, profiles());
    auto item = edge->peek_next_item(0);
    REQUIRE(item.has_value());
    Event ev;
    ev.ts = ts;
    ev.user = 0;
    ev.kind = EventKind::kExpose;
    ev.item_id = *item;
    return ev;
  }

  std::int64_t last_item() {
    for (auto it = sink.lines.rbegin(); it != sink.lines.rend(); ++it)
      if (it->kind == "event") return it->data["item"].get<std::int64_t>();
    FAIL("no event line in the log");
    return 0;
  }

  int count_lines(const std::string& kind) {
    int n = 0;
    for (const auto& l : sink.lines) n += l.kind == kind;
    return n;
  }
};

}  // namespace

TEST_CASE("fresh user gets a full cache with nothing exposed") {
  Fixture f;
  CHECK(f.edge->ensure_page(0, 100, f.profiles()));
  CHECK_FALSE(f.edge->ensure_page(0, 101, f.profiles()));  // already cached
  CHECK(f.count_lines("page") == 1);
  auto& page = f.sink.lines.back();
  CHECK(page.data["items"].size() == std::size_t(f.cfg.return_count));
  CHECK(page.data["rerank_enabled"] == true);
  CHECK(f.edge->peek_next_item(0).has_value());
  CHECK(f.edge->counters().exposures == 0);
}

TEST_CASE("trigger strategy: click immediate, exposures at threshold, delete") {
  Fixture f;  // k_expose = 4
  std::int64_t ts = 1000;
  std::int64_t clicked = 0;

  for (int i = 0; i < 3; ++i) {
    auto trig = f.edge->ingest_event(f.expose_next(ts));
    CHECK_FALSE(trig.has_value());
    clicked = f.last_item();
    ts += 100;
  }
  // click fires immediately and resets the no-click counter
  Event click;
  click.ts = ts;
  click.user = 0;
  click.kind = EventKind::kClick;
  click.item_id = clicked;
  auto trig = f.edge->ingest_event(click);
  REQUIRE(trig.has_value());
  CHECK(trig->kind == Trigger::Kind::kClick);
  ts += 100;

  Event leave;
  leave.ts = ts;
  leave.user = 0;
  leave.kind = EventKind::kLeaveDetail;
  leave.item_id = clicked;
  CHECK_FALSE(f.edge->ingest_event(leave).has_value());
  CHECK(f.count_lines("behavior") >= 1);  // IPV record appended
  ts += 100;

  // counter was reset: three more exposures stay quiet, the fourth triggers
  std::int64_t last = 0;
  for (int i = 0; i < 3; ++i) {
    CHECK_FALSE(f.edge->ingest_event(f.expose_next(ts)).has_value());
    last = f.last_item();
    ts += 100;
  }
  auto trig2 = f.edge->ingest_event(f.expose_next(ts));
  REQUIRE(trig2.has_value());
  CHECK(trig2->kind == Trigger::Kind::kExposures);
  last = f.last_item();
  ts += 100;

  Event del;
  del.ts = ts;
  del.user = 0;
  del.kind = EventKind::kDelete;
  del.item_id = last;
  del.reason = DeleteReason::kNotInterested;
  auto trig3 = f.edge->ingest_event(del);
  REQUIRE(trig3.has_value());
  CHECK(trig3->kind == Trigger::Kind::kDelete);
  bool found = false;
  for (const auto& l : f.sink.lines)
    if (l.kind == "behavior" && l.data["bkind"] == "IE" &&
        l.data["action"]["del"] == "not_interested")
      found = true;
  CHECK(found);
}

TEST_CASE("serve_trigger reranks the unexposed suffix only") {
  Fixture f;
  std::int64_t ts = 1000;
  for (int i = 0; i < 3; ++i) {
    f.edge->ingest_event(f.expose_next(ts));
    ts += 50;
  }
  Trigger trig{Trigger::Kind::kClick, ts};
  RerankResult res = f.edge->serve_trigger(0, trig);
  CHECK(res.ran_model);
  CHECK(res.serve_ts == ts + f.cfg.serve_delay_ms);
  CHECK(int(res.scored.size()) == f.cfg.return_count - 3);

  const auto& line = f.sink.lines.back();
  REQUIRE(line.kind == "rerank");
  CHECK(line.data["exposed"].size() == 3);
  CHECK(line.data["candidates"].size() == res.scored.size());
  CHECK(line.data["order"].size() == res.scored.size());
  std::set<std::int64_t> cand_set, order_set;
  for (const auto& c : line.data["candidates"]) cand_set.insert(c.get<std::int64_t>());
  for (const auto& c : line.data["order"]) order_set.insert(c.get<std::int64_t>());
  CHECK(cand_set == order_set);  // permutation

  // a second serve with no intervening behavior gives the identical ordering
  RerankResult res2 = f.edge->serve_trigger(0, {Trigger::Kind::kClick, ts + 10});
  REQUIRE(res2.scored.size() == res.scored.size());
  for (std::size_t i = 0; i < res.scored.size(); ++i) {
    CHECK(res2.scored[i].item_id == res.scored[i].item_id);
    CHECK(res2.scored[i].score == res.scored[i].score);
  }
  CHECK_FALSE(res2.reordered);  // display already in that order

  const auto& line2 = f.sink.lines.back();
  CHECK(line2.data["exposed"] == line.data["exposed"]);  // prefix immutable
}

TEST_CASE("page boundary refreshes the pool") {
  Fixture f;
  std::int64_t ts = 100;
  for (int i = 0; i < f.cfg.page_size; ++i) {  // page_size=5 < return_count=10
    f.edge->ingest_event(f.expose_next(ts));
    ts += 10;
  }
  CHECK(f.edge->ensure_page(0, ts, f.profiles()));
  CHECK(f.count_lines("page") == 2);
  CHECK(f.edge->counters().pages == 2);
}

TEST_CASE("version fallback disables reranking, display keeps cloud order") {
  Fixture f(true, "v9");  // cloud only has v1
  std::int64_t ts = 100;
  f.edge->ingest_event(f.expose_next(ts));
  CHECK_FALSE(f.edge->rerank_enabled(0));
  RerankResult res = f.edge->serve_trigger(0, {Trigger::Kind::kClick, ts + 5});
  CHECK_FALSE(res.ran_model);
  CHECK_FALSE(res.reordered);
  const auto& line = f.sink.lines.back();
  CHECK(line.data["ran_model"] == false);
  CHECK(line.data.contains("candidates"));  // still a training seed
  CHECK_FALSE(line.data.contains("scores"));
}

TEST_CASE("baseline arm logs behaviors and candidates without a model") {
  Fixture f(false);
  std::int64_t ts = 100;
  f.edge->ingest_event(f.expose_next(ts));
  Event sc;
  sc.ts = ts + 40;
  sc.user = 0;
  sc.kind = EventKind::kScroll;
  sc.item_id = f.last_item();
  sc.scroll_speed = 800;
  sc.scroll_duration_ms = 200;
  f.edge->ingest_event(sc);
  CHECK(f.count_lines("behavior") == 1);
  RerankResult res = f.edge->serve_trigger(0, {Trigger::Kind::kExposures, ts + 50});
  CHECK_FALSE(res.ran_model);
  CHECK(f.sink.lines.back().data.contains("candidates"));
  CHECK(f.edge->counters().reorders == 0);
}

TEST_CASE("a rerank in flight is unaffected by concurrent appends") {
  Fixture f;
  std::int64_t ts = 100;
  for (int i = 0; i < 4; ++i) {
    f.edge->ingest_event(f.expose_next(ts));
    std::int64_t item = f.last_item();
    Event sc;
    sc.ts = ts + 20;
    sc.user = 0;
    sc.kind = EventKind::kScroll;
    sc.item_id = item;
    sc.scroll_speed = 500 + 100 * i;
    sc.scroll_duration_ms = 100;
    f.edge->ingest_event(sc);
    ts += 50;
  }

  BehaviorContext snap = f.edge->snapshot(0);
  auto make_cands = [&] {
    std::vector<Candidate> cs;
    for (int i = 0; i < 5; ++i) {
      const CatalogItem& it = f.catalog->item(i);
      ItemAttributes attrs = it.attrs;
      attrs.scores = {0.5, 0.5};
      cs.push_back({attrs.item_id, f.full->embed_item(attrs)});
    }
    return cs;
  };

  // score against the snapshot while the main thread keeps appending
  auto fut = std::async(std::launch::async,
                        [&] { return rerank(*f.device, make_cands(), snap); });
  for (int i = 0; i < 4; ++i) {
    f.edge->ingest_event(f.expose_next(ts));
    ts += 50;
  }
  auto concurrent = fut.get();
  auto serial = rerank(*f.device, make_cands(), snap);
  REQUIRE(concurrent.size() == serial.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(concurrent[i].item_id == serial[i].item_id);
    CHECK(concurrent[i].score == serial[i].score);
  }
}

TEST_CASE("context persistence round trips through the runtime") {
  Fixture f;
  std::int64_t ts = 100;
  for (int i = 0; i < 3; ++i) {
    f.edge->ingest_event(f.expose_next(ts));
    std::int64_t item = f.last_item();
    Event sc;
    sc.ts = ts + 20;
    sc.user = 0;
    sc.kind = EventKind::kScroll;
    sc.item_id = item;
    sc.scroll_speed = 900;
    sc.scroll_duration_ms = 150;
    f.edge->ingest_event(sc);
    ts += 60;
  }
  nlohmann::json saved = f.edge->save_context(0);
  BehaviorContext before = f.edge->snapshot(0);
  f.edge->load_context(0, saved);
  CHECK(f.edge->snapshot(0) == before);
}

TEST_CASE("events referencing unknown items are rejected") {
  Fixture f;
  f.edge->ensure_page(0, 100, f.profiles());
  Event ev;
  ev.ts = 101;
  ev.user = 0;
  ev.kind = EventKind::kClick;
  ev.item_id = 424242;
  CHECK_THROWS(f.edge->ingest_event(ev));

  Event stale;
  stale.ts = 50;  // timestamps must not go backwards
  stale.user = 0;
  stale.kind = EventKind::kExpose;
  stale.item_id = *f.edge->peek_next_item(0);
  CHECK_THROWS(f.edge->ingest_event(stale));
}
