#include "edgerec/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "edgerec/crban.hpp"
#include "edgerec/hubsm.hpp"
#include "edgerec/metrics.hpp"

namespace edgerec {

std::size_t Dataset::sample_count() const {
  std::size_t n = 0;
  for (const auto& r : requests) n += r.targets.size();
  return n;
}

// ---------------------------------------------------------------------------
// Sample construction

namespace {

struct PendingImpression {
  std::size_t request = 0;  // index into user's requests
  int cand = 0;
  std::int64_t item = 0;
};

struct UserWalk {
  UserBehaviors behaviors;
  std::unordered_map<std::int64_t, ItemAttributes> items;  // from page lines
  std::vector<TrainRequest> requests;
  std::vector<std::unordered_map<std::int64_t, int>> request_items;  // id -> cand index
  std::vector<PendingImpression> impressions;
  std::unordered_set<std::int64_t> clicked;
  int current = -1;  // last rerank with candidates; -1 after a page refresh
};

}  // namespace

Dataset build_samples(const std::string& log_path, const Config& cfg) {
  Dataset ds;
  std::map<int, UserWalk> walks;

  ds.log_stats = for_each_log_line(log_path, [&](const LogLine& line) {
    try {
      if (line.kind == "page") {
        auto& w = walks[line.user];
        w.current = -1;
        for (const auto& it : line.data.at("items")) {
          ItemAttributes attrs = ItemAttributes::from_json(it.at("attrs"));
          w.items[attrs.item_id] = std::move(attrs);
        }
      } else if (line.kind == "behavior") {
        auto& w = walks[line.user];
        EncodedBehavior b;
        b.ts = line.ts;
        b.attrs = ItemAttributes::from_json(line.data.at("attrs"));
        if (line.data.at("bkind").get<std::string>() == "IE") {
          b.kind = BehaviorKind::kIe;
          b.action = encode_exposure_action(ExposureAction::from_json(line.data.at("action")),
                                            cfg.features);
          w.behaviors.ie.push_back(std::move(b));
        } else {
          b.kind = BehaviorKind::kIpv;
          b.action = encode_pageview_action(PageViewAction::from_json(line.data.at("action")),
                                            cfg.features);
          w.behaviors.ipv.push_back(std::move(b));
        }
      } else if (line.kind == "rerank") {
        if (line.data.value("noop", false)) return;
        auto& w = walks[line.user];
        TrainRequest req;
        req.user = line.user;
        req.serve_ts = line.ts;
        req.request_id = line.data.at("request_id").get<std::string>();
        std::unordered_map<std::int64_t, int> index;
        for (const auto& cj : line.data.at("candidates")) {
          std::int64_t id = cj.get<std::int64_t>();
          auto found = w.items.find(id);
          EDGEREC_CHECK(found != w.items.end(), "rerank references unknown candidate");
          index[id] = int(req.candidates.size());
          req.candidates.push_back(found->second);
        }
        req.ie_hi = int(w.behaviors.ie.size());
        req.ipv_hi = int(w.behaviors.ipv.size());
        w.requests.push_back(std::move(req));
        w.request_items.push_back(std::move(index));
        w.current = int(w.requests.size()) - 1;
      } else if (line.kind == "event") {
        auto& w = walks[line.user];
        const std::string ev = line.data.at("event").get<std::string>();
        std::int64_t item = line.data.at("item").get<std::int64_t>();
        if (ev == "expose") {
          if (w.current >= 0) {
            const auto& index = w.request_items[w.current];
            auto it = index.find(item);
            if (it != index.end())
              w.impressions.push_back({std::size_t(w.current), it->second, item});
          }
        } else if (ev == "click") {
          w.clicked.insert(item);
        }
      }
    } catch (const std::exception&) {
      ++ds.malformed_records;
    }
  });

  for (auto& [user, w] : walks) {
    for (const auto& imp : w.impressions) {
      w.requests[imp.request].targets.push_back(
          {imp.cand, w.clicked.count(imp.item) ? 1 : 0});
    }
    for (auto& req : w.requests) {
      if (req.targets.empty()) continue;  // candidate never exposed: no samples
      ds.requests.push_back(std::move(req));
    }
    ds.behaviors[user] = std::move(w.behaviors);
  }
  std::stable_sort(ds.requests.begin(), ds.requests.end(), [](const auto& a, const auto& b) {
    return a.user != b.user ? a.user < b.user : a.serve_ts < b.serve_ts;
  });
  return ds;
}

std::size_t count_leakage_violations(const Dataset& ds, const Config& cfg) {
  std::size_t bad = 0;
  for (const auto& req : ds.requests) {
    const auto& beh = ds.behaviors.at(req.user);
    int ie_lo = std::max(0, req.ie_hi - cfg.max_ie);
    int ipv_lo = std::max(0, req.ipv_hi - cfg.max_ipv);
    for (int i = ie_lo; i < req.ie_hi; ++i)
      if (beh.ie[i].ts >= req.serve_ts) ++bad;
    for (int i = ipv_lo; i < req.ipv_hi; ++i)
      if (beh.ipv[i].ts >= req.serve_ts) ++bad;
  }
  return bad;
}

// ---------------------------------------------------------------------------
// Per-request graph

namespace {

// Embeds p1..p6 through the model's trainable tables and appends raw scores.
Vec embed_item_train(const EdgeRecModel& model, const ItemAttributes& attrs,
                     std::array<int, 6>* idx_out) {
  const auto& fc = model.config().features;
  auto specs = fc.tables();
  Vec out;
  out.reserve(fc.item_dim());
  for (int t = 0; t < 6; ++t) {
    int idx = attrs.index(t);
    EDGEREC_CHECK(idx >= 0 && idx < specs[t].vocab, "vocabulary index out of range");
    if (idx_out) (*idx_out)[t] = idx;
    const nn::Param* p = model.embeddings()[t];
    const double* row = p->value.data() + std::size_t(idx) * specs[t].dim;
    out.insert(out.end(), row, row + specs[t].dim);
  }
  out.insert(out.end(), attrs.scores.begin(), attrs.scores.end());
  return out;
}

void embed_item_backward(const EdgeRecModel& model, const std::array<int, 6>& idx,
                         const double* dp) {
  const auto& fc = model.config().features;
  auto specs = fc.tables();
  std::size_t off = 0;
  for (int t = 0; t < 6; ++t) {
    nn::Param* p = model.embeddings()[t];
    double* g = p->grad.data() + std::size_t(idx[t]) * specs[t].dim;
    for (int j = 0; j < specs[t].dim; ++j) g[j] += dp[off + j];
    off += std::size_t(specs[t].dim);
  }
  // raw score slice carries no trainable parameters
}

struct BranchRun {
  std::vector<Vec> action_in, item_in;
  std::vector<std::array<int, 6>> emb_idx;
  nn::GruSeqCache a_cache, p_cache;
  std::vector<Vec> a_out, p_out, a_final, p_final;
  std::vector<Vec> keys, values, kproj;
  int count = 0;
};

void run_branch(const EdgeRecModel& model, const std::vector<EncodedBehavior>& stream, int hi,
                int max_len, bool is_ie, bool with_cache, BranchRun& br) {
  const int lo = std::max(0, hi - max_len);
  br.count = hi - lo;
  if (br.count <= 0) return;

  const bool huism = model.is_huism();
  for (int i = lo; i < hi; ++i) {
    std::array<int, 6> idx{};
    Vec p = embed_item_train(model, stream[i].attrs, &idx);
    br.emb_idx.push_back(idx);
    if (huism) {
      Vec joint;
      joint.reserve(stream[i].action.size() + p.size());
      joint.insert(joint.end(), stream[i].action.begin(), stream[i].action.end());
      joint.insert(joint.end(), p.begin(), p.end());
      br.item_in.push_back(std::move(joint));
    } else {
      br.action_in.push_back(stream[i].action);
      br.item_in.push_back(std::move(p));
    }
  }

  const nn::GruStack& item_stack = is_ie ? model.ie_item() : model.ipv_item();
  nn::gru_sequence_forward(item_stack, br.item_in, {}, br.p_out, br.p_final,
                           with_cache ? &br.p_cache : nullptr);
  if (huism) {
    br.keys = br.p_out;
    br.values = br.p_out;
  } else {
    const nn::GruStack& action_stack = is_ie ? model.ie_action() : model.ipv_action();
    nn::gru_sequence_forward(action_stack, br.action_in, {}, br.a_out, br.a_final,
                             with_cache ? &br.a_cache : nullptr);
    br.keys = br.p_out;
    br.values.resize(br.p_out.size());
    for (std::size_t t = 0; t < br.p_out.size(); ++t) {
      Vec fused;
      fused.reserve(br.a_out[t].size() + br.p_out[t].size());
      fused.insert(fused.end(), br.a_out[t].begin(), br.a_out[t].end());
      fused.insert(fused.end(), br.p_out[t].begin(), br.p_out[t].end());
      br.values[t] = std::move(fused);
    }
  }
  const nn::Attention& at = is_ie ? model.attn_ie() : model.attn_ipv();
  br.kproj.assign(br.keys.size(), Vec(at.att, 0.0));
  for (std::size_t j = 0; j < br.keys.size(); ++j) {
    for (int i = 0; i < at.att; ++i) {
      const double* w = at.Wk->value.data() + std::size_t(i) * at.k_dim;
      double acc = 0.0;
      for (int c = 0; c < at.k_dim; ++c) acc += w[c] * br.keys[j][c];
      br.kproj[j][i] = acc;
    }
  }
}

void branch_backward(const EdgeRecModel& model, bool is_ie, BranchRun& br,
                     std::vector<Vec>& d_keys, std::vector<Vec>& d_values) {
  if (br.count <= 0) return;
  const int H = model.config().gru_hidden;
  if (model.is_huism()) {
    // keys == values == joint encodings
    for (int t = 0; t < br.count; ++t)
      for (int i = 0; i < H; ++i) d_keys[t][i] += d_values[t][i];
    const nn::GruStack& stack = is_ie ? model.ie_item() : model.ipv_item();
    std::vector<Vec> dx = nn::gru_sequence_backward(stack, br.p_cache, d_keys);
    const int action_dim = int(br.item_in[0].size()) - model.config().features.item_dim();
    for (int t = 0; t < br.count; ++t)
      embed_item_backward(model, br.emb_idx[t], dx[t].data() + action_dim);
    return;
  }
  std::vector<Vec> d_a(br.count, Vec(H, 0.0)), d_p(br.count, Vec(H, 0.0));
  for (int t = 0; t < br.count; ++t) {
    for (int i = 0; i < H; ++i) {
      d_a[t][i] = d_values[t][i];
      d_p[t][i] = d_values[t][H + i] + d_keys[t][i];
    }
  }
  const nn::GruStack& action_stack = is_ie ? model.ie_action() : model.ipv_action();
  const nn::GruStack& item_stack = is_ie ? model.ie_item() : model.ipv_item();
  nn::gru_sequence_backward(action_stack, br.a_cache, d_a);  // raw action features: no input grad use
  std::vector<Vec> dxp = nn::gru_sequence_backward(item_stack, br.p_cache, d_p);
  for (int t = 0; t < br.count; ++t) embed_item_backward(model, br.emb_idx[t], dxp[t].data());
}

struct RequestRun {
  double loss_sum = 0.0;
  int samples = 0;
  Vec scores;  // per target
};

RequestRun run_request(EdgeRecModel& model, const Dataset& ds, const TrainRequest& req,
                       bool backward) {
  const auto& mcfg = model.config();
  const int H = mcfg.gru_hidden;
  RequestRun out;

  // Candidate encoder over the initial-cloud-order list.
  std::vector<Vec> cand_in(req.candidates.size());
  std::vector<std::array<int, 6>> cand_idx(req.candidates.size());
  for (std::size_t i = 0; i < req.candidates.size(); ++i)
    cand_in[i] = embed_item_train(model, req.candidates[i], &cand_idx[i]);

  nn::GruSeqCache cnd_cache;
  std::vector<Vec> cnd_out, cnd_final;
  Vec s;
  if (model.has_candidate_encoder()) {
    nn::gru_sequence_forward(model.cnd(), cand_in, {}, cnd_out, cnd_final,
                             backward ? &cnd_cache : nullptr);
    s = cnd_out.back();
  }

  const auto& beh = ds.behaviors.at(req.user);
  BranchRun ie, ipv;
  if (model.has_ie()) run_branch(model, beh.ie, req.ie_hi, mcfg.max_ie, true, backward, ie);
  if (model.has_ipv()) run_branch(model, beh.ipv, req.ipv_hi, mcfg.max_ipv, false, backward, ipv);

  // Gradient buffers shared across the request's targets.
  std::vector<Vec> d_cnd(cnd_out.size(), Vec(H, 0.0));
  std::vector<Vec> d_ie_keys(ie.count, Vec(H, 0.0)), d_ie_values(ie.count, Vec(model.value_dim(), 0.0));
  std::vector<Vec> d_ipv_keys(ipv.count, Vec(H, 0.0)),
      d_ipv_values(ipv.count, Vec(model.value_dim(), 0.0));

  const auto layout = model.mlp_layout();
  for (const auto& tgt : req.targets) {
    const Vec& q = model.has_candidate_encoder() ? cnd_out[tgt.cand] : cand_in[tgt.cand];
    Vec c_ie, c_ipv;
    nn::AttentionCache ie_cache, ipv_cache;
    if (model.has_ie()) {
      c_ie = nn::attention_forward(model.attn_ie(), q, ie.keys, ie.values, &ie.kproj, nullptr,
                                   &ie_cache);
      if (ie.count == 0) c_ie.assign(model.value_dim(), 0.0);
    }
    if (model.has_ipv()) {
      c_ipv = nn::attention_forward(model.attn_ipv(), q, ipv.keys, ipv.values, &ipv.kproj,
                                    nullptr, &ipv_cache);
      if (ipv.count == 0) c_ipv.assign(model.value_dim(), 0.0);
    }
    Vec mlp_in = model.assemble_mlp_input(c_ie, c_ipv, q, s);
    nn::MlpCache mlp_cache;
    double z = nn::mlp_forward(model.mlp(), mlp_in, backward ? &mlp_cache : nullptr);
    double p = sigmoid(z);
    out.loss_sum += nn::bce_loss(p, tgt.label);
    out.samples += 1;
    out.scores.push_back(p);

    if (!backward) continue;
    double dz = nn::bce_dlogit(p, tgt.label);
    Vec d_in = nn::mlp_backward(model.mlp(), mlp_cache, dz);

    Vec dq(q.size(), 0.0);
    if (model.has_ie()) {
      Vec dc(d_in.begin() + layout.c_ie, d_in.begin() + layout.c_ie + model.value_dim());
      Vec dq_part;
      nn::attention_backward(model.attn_ie(), ie_cache, q, ie.keys, ie.values, dc, dq_part,
                             &d_ie_keys, &d_ie_values);
      for (std::size_t i = 0; i < dq.size(); ++i) dq[i] += dq_part[i];
    }
    if (model.has_ipv()) {
      Vec dc(d_in.begin() + layout.c_ipv, d_in.begin() + layout.c_ipv + model.value_dim());
      Vec dq_part;
      nn::attention_backward(model.attn_ipv(), ipv_cache, q, ipv.keys, ipv.values, dc, dq_part,
                             &d_ipv_keys, &d_ipv_values);
      for (std::size_t i = 0; i < dq.size(); ++i) dq[i] += dq_part[i];
    }
    // Candidate segment of the MLP input.
    if (model.has_candidate_encoder()) {
      for (int i = 0; i < H; ++i) dq[i] += d_in[layout.cand + i];
      for (std::size_t i = 0; i < dq.size(); ++i) d_cnd[tgt.cand][i] += dq[i];
      for (int i = 0; i < H; ++i) d_cnd.back()[i] += d_in[layout.s + i];
    } else {
      const int Dp = mcfg.features.item_dim();
      for (int i = 0; i < Dp; ++i) dq[i] += d_in[layout.cand + i];
      embed_item_backward(model, cand_idx[tgt.cand], dq.data());
    }
  }

  if (backward) {
    if (model.has_candidate_encoder()) {
      std::vector<Vec> dx = nn::gru_sequence_backward(model.cnd(), cnd_cache, d_cnd);
      for (std::size_t i = 0; i < dx.size(); ++i)
        embed_item_backward(model, cand_idx[i], dx[i].data());
    }
    if (model.has_ie()) branch_backward(model, true, ie, d_ie_keys, d_ie_values);
    if (model.has_ipv()) branch_backward(model, false, ipv, d_ipv_keys, d_ipv_values);
  }
  return out;
}

}  // namespace

Vec score_request(const EdgeRecModel& model, const Dataset& ds, const TrainRequest& req) {
  return run_request(const_cast<EdgeRecModel&>(model), ds, req, false).scores;
}

double request_loss(EdgeRecModel& model, const Dataset& ds, const TrainRequest& req,
                    bool backward) {
  return run_request(model, ds, req, backward).loss_sum;
}

double evaluate_gauc(const EdgeRecModel& model, const Dataset& ds,
                     const std::vector<const TrainRequest*>& requests) {
  std::vector<RequestEval> evals;
  for (const TrainRequest* req : requests) {
    Vec scores = score_request(model, ds, *req);
    RequestEval re;
    re.scores = scores;
    for (const auto& t : req->targets) re.labels.push_back(t.label);
    evals.push_back(std::move(re));
  }
  try {
    return gauc(evals);
  } catch (const std::exception&) {
    return 0.5;  // undefined on this split
  }
}

TrainResult train(const Dataset& ds, Variant variant, const Config& cfg, std::uint64_t seed) {
  EDGEREC_CHECK(!ds.requests.empty() && ds.sample_count() > 0, "training set is empty");

  // Validation split: the last fraction of sessions in log order.
  std::vector<int> users;
  for (const auto& [u, _] : ds.behaviors) users.push_back(u);
  std::sort(users.begin(), users.end());
  std::size_t val_users = std::size_t(std::ceil(cfg.val_fraction * double(users.size())));
  val_users = std::min(val_users, users.size());
  std::unordered_set<int> val_set(users.end() - val_users, users.end());

  std::vector<const TrainRequest*> train_reqs, val_reqs;
  for (const auto& r : ds.requests)
    (val_set.count(r.user) ? val_reqs : train_reqs).push_back(&r);
  EDGEREC_CHECK(!train_reqs.empty(), "no training requests after validation split");

  auto model = std::make_shared<EdgeRecModel>(
      EdgeRecModel::build(ModelConfig::from(cfg, variant), seed));

  TrainResult res;
  for (const auto* r : train_reqs) res.train_samples += r->targets.size();
  for (const auto* r : val_reqs) res.val_samples += r->targets.size();

  nn::AdamConfig adam;
  adam.lr = cfg.learning_rate;
  long adam_t = 0;

  std::vector<Vec> best_values;
  double best_gauc = -1.0;
  int best_epoch = 0, since_best = 0;

  std::vector<std::size_t> order(train_reqs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng shuffle_rng = stream_rng(seed, "epoch_shuffle", epoch);
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    double loss_sum = 0.0;
    std::size_t n = 0, batch_n = 0;
    model->params().zero_grads();
    for (std::size_t oi : order) {
      RequestRun rr = run_request(*model, ds, *train_reqs[oi], true);
      loss_sum += rr.loss_sum;
      n += std::size_t(rr.samples);
      batch_n += std::size_t(rr.samples);
      if (int(batch_n) >= cfg.batch_size) {
        nn::adam_step(model->params(), adam, ++adam_t, 1.0 / double(batch_n));
        batch_n = 0;
      }
    }
    if (batch_n > 0) nn::adam_step(model->params(), adam, ++adam_t, 1.0 / double(batch_n));

    double train_loss = loss_sum / double(std::max<std::size_t>(1, n));
    if (!std::isfinite(train_loss)) {
      nn::check_finite(model->params(), true, false);
      fail("training diverged: non-finite loss");
    }
    double val_gauc = evaluate_gauc(*model, ds, val_reqs);
    // Train GAUC over a fixed subsample, enough for the curve at low cost.
    std::vector<const TrainRequest*> probe(
        train_reqs.begin(),
        train_reqs.begin() + std::min<std::size_t>(train_reqs.size(), 400));
    double train_gauc = evaluate_gauc(*model, ds, probe);
    res.history.push_back({epoch, train_loss, train_gauc, val_gauc});

    if (val_gauc > best_gauc) {
      best_gauc = val_gauc;
      best_epoch = epoch;
      since_best = 0;
      best_values.clear();
      for (const auto& p : model->params().all()) best_values.push_back(p->value);
    } else {
      since_best += 1;
      if (since_best > cfg.patience) break;
    }
  }

  // Restore the best epoch.
  if (!best_values.empty()) {
    std::size_t i = 0;
    for (const auto& p : model->params().all()) p->value = best_values[i++];
  }
  res.model = std::move(model);
  res.best_epoch = best_epoch;
  res.best_val_gauc = best_gauc;
  return res;
}

// ---------------------------------------------------------------------------

ExportPaths split_and_export(const EdgeRecModel& model, const std::string& version,
                             const std::string& out_dir, CloudRs* cloud) {
  EDGEREC_CHECK(model.has_embeddings(), "split requires the monolithic model");
  std::filesystem::create_directories(out_dir);
  ExportPaths paths;
  paths.bundle = out_dir + "/bundle_" + version + ".json";
  paths.device = out_dir + "/device_" + version + ".json";
  paths.embeddings = out_dir + "/embeddings_" + version + ".json";

  auto dump = [](const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    EDGEREC_CHECK(out.good(), "cannot write " + path);
    out << j.dump(1) << '\n';
  };
  dump(paths.bundle, model.to_bundle_json(version));
  dump(paths.device, model.device_bundle_json(version));
  nlohmann::json emb = model.embedding_bundle_json(version);
  dump(paths.embeddings, emb);
  if (cloud) cloud->publish_version(emb);
  return paths;
}

ReplayStats replay_scores(const std::string& log_path, const EdgeRecModel& full_model,
                          const Config& cfg) {
  EDGEREC_CHECK(full_model.has_embeddings(), "replay needs the monolithic model");
  ReplayStats stats;

  struct ReplayUser {
    BehaviorContext ctx;
    std::unordered_map<std::int64_t, ItemAttributes> items;
    bool version_ok = true;
  };
  std::unordered_map<int, ReplayUser> users;
  BehaviorEncoder encoder(&full_model);

  for_each_log_line(log_path, [&](const LogLine& line) {
    if (line.kind == "page") {
      auto& u = users[line.user];
      for (const auto& it : line.data.at("items")) {
        ItemAttributes attrs = ItemAttributes::from_json(it.at("attrs"));
        u.items[attrs.item_id] = std::move(attrs);
      }
      return;
    }
    if (line.kind == "behavior") {
      auto& u = users[line.user];
      BehaviorRecord rec;
      rec.ts = line.ts;
      rec.attrs = ItemAttributes::from_json(line.data.at("attrs"));
      rec.item_features = full_model.embed_item(rec.attrs);
      if (line.data.at("bkind").get<std::string>() == "IE") {
        rec.kind = BehaviorKind::kIe;
        rec.action_features =
            encode_exposure_action(ExposureAction::from_json(line.data.at("action")), cfg.features);
      } else {
        rec.kind = BehaviorKind::kIpv;
        rec.action_features =
            encode_pageview_action(PageViewAction::from_json(line.data.at("action")), cfg.features);
      }
      encoder.append(u.ctx, rec);
      return;
    }
    if (line.kind != "rerank" || line.data.value("noop", false) ||
        !line.data.contains("scores"))
      return;

    auto& u = users[line.user];
    std::vector<Candidate> cands;
    for (const auto& cj : line.data.at("candidates")) {
      std::int64_t id = cj.get<std::int64_t>();
      auto it = u.items.find(id);
      if (it == u.items.end()) {
        stats.requests_skipped += 1;
        return;
      }
      cands.push_back({id, full_model.embed_item(it->second)});
    }
    auto scored = rerank(full_model, cands, BehaviorEncoder::snapshot(u.ctx));
    const auto& logged = line.data.at("scores");
    stats.requests_checked += 1;
    std::vector<double> by_initial(scored.size());
    for (const auto& sc : scored) by_initial[sc.initial_rank] = sc.score;
    for (std::size_t i = 0; i < by_initial.size(); ++i) {
      double diff = std::abs(by_initial[i] - logged[i].get<double>());
      stats.max_abs_diff = std::max(stats.max_abs_diff, diff);
      if (diff != 0.0) stats.score_mismatches += 1;
    }
  });
  return stats;
}

}  // namespace edgerec
