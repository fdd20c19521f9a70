#include "edgerec/evalsim.hpp"

#include <algorithm>
#include <cmath>

namespace edgerec {

SyntheticUser SyntheticUser::create(int user, const Config& cfg, std::uint64_t seed) {
  SyntheticUser u;
  u.profile.user = user;
  const int C = cfg.features.category_vocab;
  u.profile.category_affinity.assign(C, 0.0);
  Rng rng = stream_rng(seed, "user_affinity", user);
  for (int c = 0; c < C; ++c) u.profile.category_affinity[c] = 0.1 * rng.normal();
  for (int i = 0; i < cfg.liked_categories; ++i)
    u.profile.category_affinity[rng.below(std::uint64_t(C))] += cfg.affinity_scale;
  for (int i = 0; i < cfg.disliked_categories; ++i)
    u.profile.category_affinity[rng.below(std::uint64_t(C))] -= cfg.affinity_scale;
  u.boost.assign(C, 0.0);
  u.fatigue.assign(C, 0.0);
  u.suppression.assign(C, 0.0);
  return u;
}

namespace {

double clip(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

struct UserSim {
  const Config& cfg;
  std::uint64_t seed;
  SyntheticUser user;
  EdgeRuntime& edge;
  const Catalog& catalog;
  std::int64_t ts = 1000;
  int page_pos_counter = 0;

  struct PendingClick {
    std::int64_t item = 0;
    int remaining = 0;  // exposures until the user scrolls back and clicks
  };
  std::vector<PendingClick> pending;

  void serve(const std::optional<Trigger>& trig) {
    if (trig) edge.serve_trigger(user.profile.user, *trig);
  }

  void bump(Rng& rng) { ts += 30 + std::int64_t(rng.u01() * 170.0); }

  // The click plus the detail-page visit; engagement feeds the category boost.
  void fire_click(std::int64_t item_id) {
    const int uid = user.profile.user;
    const CatalogItem* item = catalog.by_id(item_id);
    const int cat = item->attrs.category_id;
    Rng rng = stream_rng(seed, "ipv", uid, item_id);

    Event ck;
    ck.ts = ts;
    ck.user = uid;
    ck.kind = EventKind::kClick;
    ck.item_id = item_id;
    serve(edge.ingest_event(ck));

    double aff = user.profile.category_affinity[cat];
    double eng = sigmoid(0.9 * clip(aff + cfg.quality_weight * item->quality, -2.0, 2.0) +
                         0.4 * rng.normal());
    std::array<int, 10> flags{};
    flags[0] = rng.bernoulli(0.38 * eng);                           // cart
    flags[1] = rng.bernoulli(0.14 * eng * (flags[0] ? 1.3 : 1.0));  // buy
    flags[2] = rng.bernoulli(0.22 * eng);                           // favorite
    flags[3] = rng.bernoulli(0.12 * eng);                           // comment
    flags[4] = rng.bernoulli(0.30 * eng);                           // select_sku
    flags[5] = rng.bernoulli(0.05 * eng);                           // wdj
    flags[6] = rng.bernoulli(0.06 * eng);                           // wangwang
    flags[7] = rng.bernoulli(0.45 * eng);                           // detail
    flags[8] = rng.bernoulli(0.16 * eng);                           // shop
    flags[9] = rng.bernoulli(0.10 * eng);                           // recommendation
    std::int64_t ipv_dwell =
        std::int64_t(clip(std::exp(std::log(8000.0) + 0.6 * eng + 0.5 * rng.normal()), 500.0,
                          120000.0));

    if (std::any_of(flags.begin(), flags.end(), [](int f) { return f != 0; })) {
      Event pa;
      pa.ts = ts + ipv_dwell / 2;
      pa.user = uid;
      pa.kind = EventKind::kPageviewAction;
      pa.item_id = item_id;
      pa.flags = flags;
      serve(edge.ingest_event(pa));
    }
    Event ld;
    ld.ts = ts + ipv_dwell;
    ld.user = uid;
    ld.kind = EventKind::kLeaveDetail;
    ld.item_id = item_id;
    serve(edge.ingest_event(ld));
    ts = ld.ts;
    bump(rng);

    user.boost[cat] += 1.0 + 0.5 * flags[0] + 1.0 * flags[1] + 0.3 * flags[2];
  }

  void fire_due_clicks() {
    for (auto& p : pending) p.remaining -= 1;
    std::vector<PendingClick> still;
    for (const auto& p : pending) {
      if (p.remaining <= 0)
        fire_click(p.item);
      else
        still.push_back(p);
    }
    pending = std::move(still);
  }

  void run() {
    const int uid = user.profile.user;
    Rng len_rng = stream_rng(seed, "session_len", uid);
    double cont = 1.0 - 1.0 / std::max(1.0, cfg.mean_exposures);
    int session_len = 5;
    while (session_len < cfg.max_exposures && len_rng.u01() < cont) ++session_len;

    auto profile_source = [this](int) { return user.profile; };

    for (int step = 0; step < session_len; ++step) {
      edge.ensure_page(uid, ts, profile_source);
      auto next = edge.peek_next_item(uid);
      if (!next) break;  // catalog exhausted
      const CatalogItem* item = catalog.by_id(*next);
      EDGEREC_CHECK(item != nullptr, "simulator lost a catalog item");
      const int cat = item->attrs.category_id;

      Event ex;
      ex.ts = ts;
      ex.user = uid;
      ex.kind = EventKind::kExpose;
      ex.item_id = *next;
      serve(edge.ingest_event(ex));

      // Ground-truth click propensity: stable affinity + quality, shifted by
      // the planted in-session dynamics and a position drift.
      const int page_pos = page_pos_counter;  // 0-based, tracks the runtime's page position
      double logit = cfg.base_click_logit + user.profile.category_affinity[cat] +
                     cfg.quality_weight * item->quality + cfg.boost_strength * user.boost[cat] -
                     cfg.fatigue_strength * user.fatigue[cat] -
                     cfg.delete_suppression * user.suppression[cat] -
                     cfg.position_penalty * double(page_pos) / double(cfg.page_size);
      double p_click = sigmoid(logit);
      double interest = clip(logit - cfg.base_click_logit, -2.0, 2.0);

      Rng beh = stream_rng(seed, "behave", uid, *next);
      bool clicked = beh.u01() < p_click;
      std::int64_t dwell =
          std::int64_t(clip(std::exp(std::log(500.0) + 0.35 * interest + 0.4 * beh.normal()),
                            80.0, 20000.0));

      if (clicked) {
        // Users often keep scrolling for a while before coming back to click,
        // so clicks land at arbitrary offsets inside later rerank windows.
        double u = beh.u01();
        double u2 = std::max(1e-12, beh.u01());
        int defer = u < 0.15 ? 0 : 1 + std::min(19, int(-5.0 * std::log(u2)));
        if (defer == 0) {
          ts += dwell;
          fire_click(*next);
        } else {
          Event sc;
          sc.ts = ts + dwell;
          sc.user = uid;
          sc.kind = EventKind::kScroll;
          sc.item_id = *next;
          sc.scroll_speed = (200.0 + 700.0 * sigmoid(-0.8 * interest)) * std::exp(0.25 * beh.normal());
          sc.scroll_duration_ms = 100 + std::int64_t(beh.u01() * 500.0);
          serve(edge.ingest_event(sc));
          ts = sc.ts;
          bump(beh);
          pending.push_back({*next, defer});
        }
      } else {
        double p_delete = (user.fatigue[cat] > 2.0 || user.profile.category_affinity[cat] < -0.5)
                              ? cfg.delete_bored_prob
                              : cfg.delete_base_prob;
        if (beh.u01() < p_delete) {
          Event del;
          del.ts = ts + dwell;
          del.user = uid;
          del.kind = EventKind::kDelete;
          del.item_id = *next;
          del.reason = user.fatigue[cat] > 2.0 ? DeleteReason::kSeenSimilar
                       : item->quality < -1.0  ? DeleteReason::kPoorQuality
                       : user.profile.category_affinity[cat] < -0.5
                           ? DeleteReason::kNotInterested
                           : DeleteReason::kOther;
          serve(edge.ingest_event(del));
          user.suppression[cat] += 1.0;
          ts = del.ts;
          bump(beh);
        } else {
          Event sc;
          sc.ts = ts + dwell;
          sc.user = uid;
          sc.kind = EventKind::kScroll;
          sc.item_id = *next;
          sc.scroll_speed =
              (200.0 + 1400.0 * sigmoid(-0.8 * interest)) * std::exp(0.25 * beh.normal());
          sc.scroll_duration_ms = 100 + std::int64_t(beh.u01() * 500.0);
          serve(edge.ingest_event(sc));
          ts = sc.ts;
          bump(beh);
        }
      }

      fire_due_clicks();

      // Per-exposure-step decay, then charge fatigue for this category.
      for (double& f : user.fatigue) f *= cfg.fatigue_decay;
      for (double& b : user.boost) b *= cfg.boost_decay;
      for (double& s : user.suppression) s *= 0.995;
      user.fatigue[cat] += 1.0;
      page_pos_counter = (page_pos_counter + 1) % cfg.page_size;
    }

    // Session close: the user clicks anything still on the mental list.
    for (const auto& p : pending) fire_click(p.item);
    pending.clear();
  }
};

}  // namespace

SimResult simulate(const Config& cfg, std::shared_ptr<const EdgeRecModel> device_model,
                   const std::string& model_version, const CloudRs* cloud,
                   const std::string& log_path, std::uint64_t seed) {
  FileLogSink sink(log_path);
  {
    LogLine meta;
    meta.ts = 0;
    meta.user = -1;
    meta.kind = "meta";
    meta.data = {{"arm", device_model ? "model" : "baseline"},
                 {"model_version", model_version},
                 {"config_hash", cfg.hash()},
                 {"seed", seed}};
    sink.write(meta);
  }

  EdgeRuntime edge(cfg, device_model, model_version, cloud, &sink);
  for (int u = 0; u < cfg.users; ++u) {
    UserSim us{cfg, seed, SyntheticUser::create(u, cfg, seed), edge, cloud->catalog()};
    us.run();
  }
  sink.flush();

  SimResult res;
  res.log_path = log_path;
  res.report = report_from_log(log_path, cfg.page_size);
  return res;
}

SimResult simulate_standalone(const Config& cfg, const EdgeRecModel* full_model,
                              const std::string& model_version, const std::string& log_path,
                              std::uint64_t seed) {
  auto catalog = std::make_shared<Catalog>(Catalog::generate(cfg, seed));
  CloudRs cloud(cfg, catalog, seed);
  std::shared_ptr<const EdgeRecModel> device;
  std::string version;
  if (full_model) {
    EDGEREC_CHECK(full_model->has_embeddings(), "simulate needs the monolithic model");
    version = model_version.empty() ? "v1" : model_version;
    cloud.publish_version(full_model->embedding_bundle_json(version));
    auto dev = std::make_shared<EdgeRecModel>(
        EdgeRecModel::from_bundle_json(full_model->device_bundle_json(version)));
    device = std::move(dev);
  }
  return simulate(cfg, device, version, &cloud, log_path, seed);
}

}  // namespace edgerec
