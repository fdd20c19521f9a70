#include "edgerec/hubsm.hpp"

#include <algorithm>

namespace edgerec {

namespace {

Vec stack_step(const nn::GruStack& stack, const Vec& x, std::vector<Vec>& state) {
  const int H = stack.hidden;
  if (state.empty()) state.assign(stack.layers.size(), Vec(H, 0.0));
  Vec cur = x;
  for (std::size_t l = 0; l < stack.layers.size(); ++l) {
    Vec next(H);
    nn::gru_layer_step(stack.layers[l], cur.data(), state[l].data(), next.data());
    state[l] = std::move(next);
    cur = state[l];
  }
  return cur;
}

nlohmann::json seq_to_json(const SequenceContext& s) {
  nlohmann::json j;
  auto dump_rows = [](const auto& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) arr.push_back(vec_to_text(r));
    return arr;
  };
  j["keys"] = dump_rows(s.keys);
  j["values"] = dump_rows(s.values);
  j["action_state"] = dump_rows(s.action_state);
  j["item_state"] = dump_rows(s.item_state);
  j["appended"] = s.appended;
  j["last_ts"] = s.last_ts;
  return j;
}

SequenceContext seq_from_json(const nlohmann::json& j) {
  SequenceContext s;
  auto load_deque = [](const nlohmann::json& arr) {
    std::deque<Vec> out;
    for (const auto& r : arr) out.push_back(vec_from_text(r.get<std::string>()));
    return out;
  };
  auto load_rows = [](const nlohmann::json& arr) {
    std::vector<Vec> out;
    for (const auto& r : arr) out.push_back(vec_from_text(r.get<std::string>()));
    return out;
  };
  s.keys = load_deque(j.at("keys"));
  s.values = load_deque(j.at("values"));
  s.action_state = load_rows(j.at("action_state"));
  s.item_state = load_rows(j.at("item_state"));
  s.appended = j.at("appended").get<std::int64_t>();
  s.last_ts = j.at("last_ts").get<std::int64_t>();
  return s;
}

}  // namespace

bool BehaviorContext::operator==(const BehaviorContext& other) const {
  auto eq = [](const SequenceContext& a, const SequenceContext& b) {
    return a.keys == b.keys && a.values == b.values && a.action_state == b.action_state &&
           a.item_state == b.item_state && a.appended == b.appended;
  };
  return eq(ie, other.ie) && eq(ipv, other.ipv);
}

nlohmann::json BehaviorContext::to_json() const {
  return {{"ie", seq_to_json(ie)}, {"ipv", seq_to_json(ipv)}};
}

BehaviorContext BehaviorContext::from_json(const nlohmann::json& j) {
  BehaviorContext c;
  c.ie = seq_from_json(j.at("ie"));
  c.ipv = seq_from_json(j.at("ipv"));
  return c;
}

void BehaviorEncoder::append(BehaviorContext& ctx, const BehaviorRecord& rec) const {
  const auto& cfg = model_->config();
  const bool is_ie = rec.kind == BehaviorKind::kIe;
  if (is_ie && !model_->has_ie()) return;
  if (!is_ie && !model_->has_ipv()) return;

  SequenceContext& seq = is_ie ? ctx.ie : ctx.ipv;
  const int max_len = is_ie ? cfg.max_ie : cfg.max_ipv;
  EDGEREC_CHECK(int(rec.item_features.size()) == cfg.features.item_dim(),
                "behavior item feature width mismatch (model/version skew)");

  if (model_->is_huism()) {
    // Single encoder over the joint (action, item) features; Key = Value.
    Vec joint;
    joint.reserve(rec.action_features.size() + rec.item_features.size());
    joint.insert(joint.end(), rec.action_features.begin(), rec.action_features.end());
    joint.insert(joint.end(), rec.item_features.begin(), rec.item_features.end());
    const nn::GruStack& stack = is_ie ? model_->ie_item() : model_->ipv_item();
    EDGEREC_CHECK(int(joint.size()) == stack.input_dim, "joint feature width mismatch");
    Vec enc = stack_step(stack, joint, seq.item_state);
    seq.keys.push_back(enc);
    seq.values.push_back(std::move(enc));
  } else {
    const nn::GruStack& action_stack = is_ie ? model_->ie_action() : model_->ipv_action();
    const nn::GruStack& item_stack = is_ie ? model_->ie_item() : model_->ipv_item();
    EDGEREC_CHECK(int(rec.action_features.size()) == action_stack.input_dim,
                  "action feature width mismatch (model/version skew)");
    Vec a_enc = stack_step(action_stack, rec.action_features, seq.action_state);
    Vec p_enc = stack_step(item_stack, rec.item_features, seq.item_state);
    Vec fused;
    fused.reserve(a_enc.size() + p_enc.size());
    fused.insert(fused.end(), a_enc.begin(), a_enc.end());
    fused.insert(fused.end(), p_enc.begin(), p_enc.end());
    seq.keys.push_back(std::move(p_enc));
    seq.values.push_back(std::move(fused));
  }

  if (int(seq.keys.size()) > max_len) {
    seq.keys.pop_front();
    seq.values.pop_front();
  }
  seq.appended += 1;
  seq.last_ts = rec.ts;
}

BehaviorContext BehaviorEncoder::encode_batch(const std::vector<BehaviorRecord>& records) const {
  BehaviorContext ctx;
  std::int64_t prev_ie = INT64_MIN, prev_ipv = INT64_MIN;
  for (const auto& rec : records) {
    std::int64_t& prev = rec.kind == BehaviorKind::kIe ? prev_ie : prev_ipv;
    EDGEREC_CHECK(rec.ts >= prev, "encode_batch: records out of time order");
    prev = rec.ts;
    append(ctx, rec);
  }
  return ctx;
}

nlohmann::json behavior_context_to_json(const BehaviorContext& ctx) { return ctx.to_json(); }

BehaviorContext behavior_context_from_json(const nlohmann::json& j) {
  return BehaviorContext::from_json(j);
}

}  // namespace edgerec
