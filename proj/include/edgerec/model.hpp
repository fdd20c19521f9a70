#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgerec/config.hpp"
#include "edgerec/features.hpp"
#include "edgerec/nn.hpp"

namespace edgerec {

enum class Variant {
  kDnnRank,
  kDlcm,
  kCrbanHubsmIe,
  kCrbanHubsmIpv,
  kCrbanHuismIeIpv,
  kCrbanHubsmIeIpv,
};

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);
const std::vector<std::string>& variant_names();

struct ModelConfig {
  FeatureConfig features;
  Variant variant = Variant::kCrbanHubsmIeIpv;
  int gru_layers = 2;
  int gru_hidden = 16;
  int attn_hidden = 16;
  std::vector<int> mlp_hidden{32, 32};
  int max_ie = 64;
  int max_ipv = 32;
  int max_candidates = 100;

  static ModelConfig from(const Config& cfg, Variant v);
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// The full reranking model. Parameter names carry their serving role:
//   emb.*      embedding matrices, kept on cloud after the split
//   behavior.* user-behavior sequence encoders (on device)
//   rerank.*   candidate encoder, behavior attention, MLP head (on device)
// A device-side instance is built without the emb.* tensors.
class EdgeRecModel {
 public:
  static EdgeRecModel build(const ModelConfig& cfg, std::uint64_t init_seed,
                            bool with_embeddings = true);

  const ModelConfig& config() const { return cfg_; }
  Variant variant() const { return cfg_.variant; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }

  bool has_embeddings() const { return with_embeddings_; }
  bool has_candidate_encoder() const { return cfg_.variant != Variant::kDnnRank; }
  bool has_ie() const {
    return cfg_.variant == Variant::kCrbanHubsmIe || cfg_.variant == Variant::kCrbanHubsmIeIpv ||
           cfg_.variant == Variant::kCrbanHuismIeIpv;
  }
  bool has_ipv() const {
    return cfg_.variant == Variant::kCrbanHubsmIpv || cfg_.variant == Variant::kCrbanHubsmIeIpv ||
           cfg_.variant == Variant::kCrbanHuismIeIpv;
  }
  bool is_huism() const { return cfg_.variant == Variant::kCrbanHuismIeIpv; }

  // Width of the fused behavior encoding used as attention Value.
  int value_dim() const { return is_huism() ? cfg_.gru_hidden : 2 * cfg_.gru_hidden; }
  int mlp_input_dim() const;

  const std::array<nn::Param*, 6>& embeddings() const { return emb_; }
  EmbeddingTables embedding_tables() const;
  Vec embed_item(const ItemAttributes& attrs) const;

  const nn::GruStack& ie_action() const { return ie_action_; }
  const nn::GruStack& ie_item() const { return ie_item_; }
  const nn::GruStack& ipv_action() const { return ipv_action_; }
  const nn::GruStack& ipv_item() const { return ipv_item_; }
  const nn::GruStack& cnd() const { return cnd_; }
  const nn::Attention& attn_ie() const { return attn_ie_; }
  const nn::Attention& attn_ipv() const { return attn_ipv_; }
  const nn::Mlp& mlp() const { return mlp_; }

  // Deterministic layout [c_ie; c_ipv; cand_enc; s] restricted to the branches
  // the variant owns (raw item features stand in for cand_enc on DNN-rank).
  Vec assemble_mlp_input(const Vec& c_ie, const Vec& c_ipv, const Vec& cand_enc,
                         const Vec& s) const;
  // Offsets of the four segments inside the assembled input, -1 when absent.
  struct MlpLayout {
    int c_ie = -1, c_ipv = -1, cand = -1, s = -1;
  };
  MlpLayout mlp_layout() const;

  // Bundle serialization: {"manifest": ..., "tensors": [...]}.
  nlohmann::json to_bundle_json(const std::string& version) const;
  static EdgeRecModel from_bundle_json(const nlohmann::json& j);

  // Same model without the emb.* tensors (what ships to the device).
  nlohmann::json device_bundle_json(const std::string& version) const;
  // Embedding matrices only (what the cloud key-value store holds).
  nlohmann::json embedding_bundle_json(const std::string& version) const;

  static std::string bundle_version(const nlohmann::json& bundle);

 private:
  ModelConfig cfg_;
  bool with_embeddings_ = true;
  nn::ParamStore store_;
  std::array<nn::Param*, 6> emb_{};
  nn::GruStack ie_action_, ie_item_, ipv_action_, ipv_item_, cnd_;
  nn::Attention attn_ie_{}, attn_ipv_{};
  nn::Mlp mlp_;
};

// Reassembles a monolithic bundle from the device part and the embedding part.
nlohmann::json merge_split_bundles(const nlohmann::json& device_part,
                                   const nlohmann::json& embedding_part);

}  // namespace edgerec
