#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgerec/features.hpp"
#include "edgerec/model.hpp"

namespace edgerec {

enum class BehaviorKind { kIe, kIpv };

inline const char* behavior_kind_name(BehaviorKind k) { return k == BehaviorKind::kIe ? "IE" : "IPV"; }

// A finalized interaction ready for encoding: the item as the device saw it
// (feature vector resolved from cloud-shipped embedding rows) plus the action
// features frozen at encode time.
struct BehaviorRecord {
  BehaviorKind kind = BehaviorKind::kIe;
  std::int64_t ts = 0;
  ItemAttributes attrs;
  Vec item_features;    // p vector
  Vec action_features;  // a_IE or a_IPV vector
};

// Live encodings for one of the two behavior sequences. keys holds the item
// encodings (attention Key), values the fused encodings (attention Value);
// for HUBSM values[t] = concat(action_enc[t], item_enc[t]). Recurrent states
// outlive window eviction, which is what makes appends O(1).
struct SequenceContext {
  std::deque<Vec> keys;
  std::deque<Vec> values;
  std::vector<Vec> action_state;  // per layer; unused by HUISM
  std::vector<Vec> item_state;    // per layer; the joint state for HUISM
  std::int64_t appended = 0;
  std::int64_t last_ts = 0;

  int valid_length() const { return int(keys.size()); }
};

struct BehaviorContext {
  SequenceContext ie, ipv;

  bool operator==(const BehaviorContext& other) const;
  nlohmann::json to_json() const;
  static BehaviorContext from_json(const nlohmann::json& j);
};

// Binds model parameters and window limits; the context itself is plain data
// so snapshots are value copies.
class BehaviorEncoder {
 public:
  explicit BehaviorEncoder(const EdgeRecModel* model) : model_(model) {}

  // One O(1) update: a GRU step per stack, plus window bookkeeping.
  void append(BehaviorContext& ctx, const BehaviorRecord& rec) const;

  // Fold of append over an empty context; records must be time-ordered.
  BehaviorContext encode_batch(const std::vector<BehaviorRecord>& records) const;

  static BehaviorContext snapshot(const BehaviorContext& ctx) { return ctx; }

  const EdgeRecModel* model() const { return model_; }

 private:
  const EdgeRecModel* model_;
};

// On-device persistence of a user's context (survives restarts).
nlohmann::json behavior_context_to_json(const BehaviorContext& ctx);
BehaviorContext behavior_context_from_json(const nlohmann::json& j);

}  // namespace edgerec
