#include "edgerec/model.hpp"

#include <algorithm>

namespace edgerec {

namespace {
const char* kVariantNames[] = {
    "DNN-rank",            "DLCM",
    "CRBAN+HUBSM(IE)",     "CRBAN+HUBSM(IPV)",
    "CRBAN+HUISM(IE&IPV)", "CRBAN+HUBSM(IE&IPV)",
};
}  // namespace

const char* variant_name(Variant v) { return kVariantNames[int(v)]; }

Variant variant_from_name(const std::string& name) {
  for (int i = 0; i < 6; ++i)
    if (name == kVariantNames[i]) return Variant(i);
  std::string all;
  for (int i = 0; i < 6; ++i) {
    if (i) all += ", ";
    all += kVariantNames[i];
  }
  fail("unknown variant '" + name + "'; valid names: " + all);
}

const std::vector<std::string>& variant_names() {
  static const std::vector<std::string> names(kVariantNames, kVariantNames + 6);
  return names;
}

ModelConfig ModelConfig::from(const Config& cfg, Variant v) {
  ModelConfig m;
  m.features = cfg.features;
  m.variant = v;
  m.gru_layers = cfg.gru_layers;
  m.gru_hidden = cfg.gru_hidden;
  m.attn_hidden = cfg.attn_hidden;
  m.mlp_hidden = cfg.mlp_hidden;
  m.max_ie = cfg.max_ie;
  m.max_ipv = cfg.max_ipv;
  m.max_candidates = cfg.max_candidates;
  return m;
}

nlohmann::json ModelConfig::to_json() const {
  return {{"variant", variant_name(variant)},
          {"gru_layers", gru_layers},
          {"gru_hidden", gru_hidden},
          {"attn_hidden", attn_hidden},
          {"mlp_hidden", mlp_hidden},
          {"max_ie", max_ie},
          {"max_ipv", max_ipv},
          {"max_candidates", max_candidates},
          {"features", features.to_json()}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig m;
  m.variant = variant_from_name(j.at("variant").get<std::string>());
  m.gru_layers = j.at("gru_layers").get<int>();
  m.gru_hidden = j.at("gru_hidden").get<int>();
  m.attn_hidden = j.at("attn_hidden").get<int>();
  m.mlp_hidden = j.at("mlp_hidden").get<std::vector<int>>();
  m.max_ie = j.at("max_ie").get<int>();
  m.max_ipv = j.at("max_ipv").get<int>();
  m.max_candidates = j.at("max_candidates").get<int>();
  m.features = FeatureConfig::from_json(j.at("features"));
  return m;
}

int EdgeRecModel::mlp_input_dim() const {
  const int H = cfg_.gru_hidden;
  switch (cfg_.variant) {
    case Variant::kDnnRank: return cfg_.features.item_dim();
    case Variant::kDlcm: return 2 * H;
    case Variant::kCrbanHubsmIe:
    case Variant::kCrbanHubsmIpv: return 2 * H + 2 * H;
    case Variant::kCrbanHuismIeIpv: return H + H + 2 * H;
    case Variant::kCrbanHubsmIeIpv: return 2 * H + 2 * H + 2 * H;
  }
  fail("bad variant");
}

EdgeRecModel::MlpLayout EdgeRecModel::mlp_layout() const {
  MlpLayout lay;
  const int H = cfg_.gru_hidden;
  int off = 0;
  if (has_ie()) {
    lay.c_ie = off;
    off += value_dim();
  }
  if (has_ipv()) {
    lay.c_ipv = off;
    off += value_dim();
  }
  lay.cand = off;
  off += has_candidate_encoder() ? H : cfg_.features.item_dim();
  if (has_candidate_encoder()) {
    lay.s = off;
  }
  return lay;
}

Vec EdgeRecModel::assemble_mlp_input(const Vec& c_ie, const Vec& c_ipv, const Vec& cand_enc,
                                     const Vec& s) const {
  Vec in;
  in.reserve(mlp_input_dim());
  if (has_ie()) in.insert(in.end(), c_ie.begin(), c_ie.end());
  if (has_ipv()) in.insert(in.end(), c_ipv.begin(), c_ipv.end());
  in.insert(in.end(), cand_enc.begin(), cand_enc.end());
  if (has_candidate_encoder()) in.insert(in.end(), s.begin(), s.end());
  EDGEREC_CHECK(int(in.size()) == mlp_input_dim(), "assembled MLP input has wrong width");
  return in;
}

EdgeRecModel EdgeRecModel::build(const ModelConfig& cfg, std::uint64_t init_seed,
                                 bool with_embeddings) {
  EdgeRecModel m;
  m.cfg_ = cfg;
  m.with_embeddings_ = with_embeddings;

  const auto& fc = cfg.features;
  if (with_embeddings) {
    auto specs = fc.tables();
    for (std::size_t i = 0; i < specs.size(); ++i)
      m.emb_[i] = m.store_.add_matrix("emb." + specs[i].name, specs[i].vocab, specs[i].dim);
  }

  const int H = cfg.gru_hidden, L = cfg.gru_layers, A = cfg.attn_hidden;
  const int Dp = fc.item_dim();
  const int Die = fc.exposure_action_dim();
  const int Dipv = fc.pageview_action_dim();

  const bool hubsm = m.has_ie() || m.has_ipv();
  if (m.is_huism()) {
    m.ie_item_ = nn::make_gru_stack(m.store_, "behavior.ie_joint", Die + Dp, H, L);
    m.ipv_item_ = nn::make_gru_stack(m.store_, "behavior.ipv_joint", Dipv + Dp, H, L);
  } else if (hubsm) {
    if (m.has_ie()) {
      m.ie_action_ = nn::make_gru_stack(m.store_, "behavior.ie_action", Die, H, L);
      m.ie_item_ = nn::make_gru_stack(m.store_, "behavior.ie_item", Dp, H, L);
    }
    if (m.has_ipv()) {
      m.ipv_action_ = nn::make_gru_stack(m.store_, "behavior.ipv_action", Dipv, H, L);
      m.ipv_item_ = nn::make_gru_stack(m.store_, "behavior.ipv_item", Dp, H, L);
    }
  }
  if (m.has_candidate_encoder()) m.cnd_ = nn::make_gru_stack(m.store_, "rerank.cnd", Dp, H, L);
  if (m.has_ie()) m.attn_ie_ = nn::make_attention(m.store_, "rerank.attn_ie", H, H, A);
  if (m.has_ipv()) m.attn_ipv_ = nn::make_attention(m.store_, "rerank.attn_ipv", H, H, A);
  m.mlp_ = nn::make_mlp(m.store_, "rerank.mlp", m.mlp_input_dim(), cfg.mlp_hidden);

  m.store_.init(init_seed);
  return m;
}

EmbeddingTables EdgeRecModel::embedding_tables() const {
  EDGEREC_CHECK(with_embeddings_, "device model carries no embedding tables");
  std::vector<Tensor> tabs;
  for (const auto* p : emb_) tabs.push_back(Tensor(p->shape(), p->value));
  return EmbeddingTables(cfg_.features, std::move(tabs));
}

Vec EdgeRecModel::embed_item(const ItemAttributes& attrs) const {
  EDGEREC_CHECK(with_embeddings_, "device model cannot embed raw attributes");
  auto specs = cfg_.features.tables();
  Vec out;
  out.reserve(cfg_.features.item_dim());
  for (std::size_t t = 0; t < specs.size(); ++t) {
    int idx = attrs.index(int(t));
    EDGEREC_CHECK(idx >= 0 && idx < specs[t].vocab,
                  "embedding row missing for table " + specs[t].name);
    const double* r = emb_[t]->value.data() + std::size_t(idx) * specs[t].dim;
    out.insert(out.end(), r, r + specs[t].dim);
  }
  EDGEREC_CHECK(int(attrs.scores.size()) == cfg_.features.score_count, "score count mismatch");
  out.insert(out.end(), attrs.scores.begin(), attrs.scores.end());
  return out;
}

namespace {

nlohmann::json manifest_json(const ModelConfig& cfg, const std::string& version,
                             bool includes_embeddings) {
  nlohmann::json man = cfg.to_json();
  man["version"] = version;
  man["gru_convention"] = "h' = (1-z)*h + z*htilde";
  man["value_format"] = "decimal, 17 significant digits";
  man["includes_embeddings"] = includes_embeddings;
  return man;
}

}  // namespace

nlohmann::json EdgeRecModel::to_bundle_json(const std::string& version) const {
  nlohmann::json j;
  j["manifest"] = manifest_json(cfg_, version, with_embeddings_);
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& p : store_.all())
    tensors.push_back(tensor_to_json(p->name, Tensor(p->shape(), p->value)));
  j["tensors"] = tensors;
  return j;
}

nlohmann::json EdgeRecModel::device_bundle_json(const std::string& version) const {
  nlohmann::json j;
  j["manifest"] = manifest_json(cfg_, version, false);
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& p : store_.all()) {
    if (p->name.rfind("emb.", 0) == 0) continue;
    tensors.push_back(tensor_to_json(p->name, Tensor(p->shape(), p->value)));
  }
  j["tensors"] = tensors;
  return j;
}

nlohmann::json EdgeRecModel::embedding_bundle_json(const std::string& version) const {
  EDGEREC_CHECK(with_embeddings_, "no embeddings to export");
  nlohmann::json j;
  j["manifest"] = manifest_json(cfg_, version, true);
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& p : store_.all()) {
    if (p->name.rfind("emb.", 0) != 0) continue;
    tensors.push_back(tensor_to_json(p->name, Tensor(p->shape(), p->value)));
  }
  j["tensors"] = tensors;
  return j;
}

EdgeRecModel EdgeRecModel::from_bundle_json(const nlohmann::json& j) {
  const auto& man = j.at("manifest");
  ModelConfig cfg = ModelConfig::from_json(man);
  bool with_emb = man.at("includes_embeddings").get<bool>();
  EdgeRecModel m = build(cfg, 0, with_emb);

  std::size_t filled = 0;
  for (const auto& tj : j.at("tensors")) {
    std::string name;
    Tensor t = tensor_from_json(tj, &name);
    nn::Param* p = m.store_.find(name);
    EDGEREC_CHECK(p != nullptr, "bundle tensor not part of this variant: " + name);
    EDGEREC_CHECK(t.size() == p->size(), "bundle tensor size mismatch: " + name);
    p->value = t.data;
    ++filled;
  }
  EDGEREC_CHECK(filled == m.store_.all().size(), "bundle is missing tensors");
  return m;
}

std::string EdgeRecModel::bundle_version(const nlohmann::json& bundle) {
  return bundle.at("manifest").at("version").get<std::string>();
}

nlohmann::json merge_split_bundles(const nlohmann::json& device_part,
                                   const nlohmann::json& embedding_part) {
  EDGEREC_CHECK(device_part.at("manifest").at("version") ==
                    embedding_part.at("manifest").at("version"),
                "split parts have different versions");
  nlohmann::json merged = device_part;
  merged["manifest"]["includes_embeddings"] = true;
  for (const auto& t : embedding_part.at("tensors")) merged["tensors"].push_back(t);
  return merged;
}

}  // namespace edgerec
