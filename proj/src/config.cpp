#include "edgerec/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace edgerec {

int FeatureConfig::exposure_action_dim() const {
  // e1..e5 bucketized, e6 delete one-hot, e7 bucketized.
  return int(exposure_duration_ms.size() + 1) + int(exposure_count.size() + 1) +
         int(scroll_speed.size() + 1) + int(scroll_duration_ms.size() + 1) +
         int(scroll_count.size() + 1) + delete_reason_count + int(expose_decay_ms.size() + 1);
}

int FeatureConfig::pageview_action_dim() const {
  // d1 bucketized, d2..d11 binary, d12 bucketized.
  return int(ipv_duration_ms.size() + 1) + 10 + int(ipv_decay_ms.size() + 1);
}

int FeatureConfig::item_dim() const {
  return category_dim + brand_dim + gender_dim + price_dim + age_dim + bc_dim + score_count;
}

std::vector<FeatureConfig::TableSpec> FeatureConfig::tables() const {
  return {{"category", category_vocab, category_dim}, {"brand", brand_vocab, brand_dim},
          {"gender", gender_vocab, gender_dim},       {"price_level", price_vocab, price_dim},
          {"age_level", age_vocab, age_dim},          {"bc_type", bc_vocab, bc_dim}};
}

nlohmann::json FeatureConfig::to_json() const {
  nlohmann::json j;
  j["buckets"] = {{"exposure_duration_ms", exposure_duration_ms},
                  {"exposure_count", exposure_count},
                  {"scroll_speed", scroll_speed},
                  {"scroll_duration_ms", scroll_duration_ms},
                  {"scroll_count", scroll_count},
                  {"expose_decay_ms", expose_decay_ms},
                  {"ipv_duration_ms", ipv_duration_ms},
                  {"ipv_decay_ms", ipv_decay_ms}};
  j["delete_reason_count"] = delete_reason_count;
  nlohmann::json tabs = nlohmann::json::array();
  for (const auto& t : tables()) tabs.push_back({{"name", t.name}, {"vocab", t.vocab}, {"dim", t.dim}});
  j["tables"] = tabs;
  j["score_count"] = score_count;
  return j;
}

FeatureConfig FeatureConfig::from_json(const nlohmann::json& j) {
  FeatureConfig fc;
  const auto& b = j.at("buckets");
  fc.exposure_duration_ms = b.at("exposure_duration_ms").get<std::vector<double>>();
  fc.exposure_count = b.at("exposure_count").get<std::vector<double>>();
  fc.scroll_speed = b.at("scroll_speed").get<std::vector<double>>();
  fc.scroll_duration_ms = b.at("scroll_duration_ms").get<std::vector<double>>();
  fc.scroll_count = b.at("scroll_count").get<std::vector<double>>();
  fc.expose_decay_ms = b.at("expose_decay_ms").get<std::vector<double>>();
  fc.ipv_duration_ms = b.at("ipv_duration_ms").get<std::vector<double>>();
  fc.ipv_decay_ms = b.at("ipv_decay_ms").get<std::vector<double>>();
  fc.delete_reason_count = j.at("delete_reason_count").get<int>();
  fc.score_count = j.at("score_count").get<int>();
  for (const auto& t : j.at("tables")) {
    const std::string name = t.at("name").get<std::string>();
    int vocab = t.at("vocab").get<int>(), dim = t.at("dim").get<int>();
    if (name == "category") fc.category_vocab = vocab, fc.category_dim = dim;
    else if (name == "brand") fc.brand_vocab = vocab, fc.brand_dim = dim;
    else if (name == "gender") fc.gender_vocab = vocab, fc.gender_dim = dim;
    else if (name == "price_level") fc.price_vocab = vocab, fc.price_dim = dim;
    else if (name == "age_level") fc.age_vocab = vocab, fc.age_dim = dim;
    else if (name == "bc_type") fc.bc_vocab = vocab, fc.bc_dim = dim;
    else fail("unknown embedding table in manifest: " + name);
  }
  return fc;
}

namespace {

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s.push_back(',');
    s += format_g17(v[i]);
  }
  return s;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s.push_back(',');
    s += std::to_string(v[i]);
  }
  return s;
}

std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) v.push_back(std::strtod(tok.c_str(), nullptr));
  }
  return v;
}

std::vector<int> split_ints(const std::string& s) {
  std::vector<int> v;
  for (double d : split_doubles(s)) v.push_back(int(d));
  return v;
}

struct Entry {
  std::function<std::string(const Config&)> get;
  std::function<void(Config&, const std::string&)> set;
};

using Registry = std::vector<std::pair<std::string, Entry>>;

const Registry& registry() {
  static const Registry reg = [] {
    Registry r;
    auto add_int = [&r](const std::string& k, int Config::*f) {
      r.push_back({k, {[f](const Config& c) { return std::to_string(c.*f); },
                       [f](Config& c, const std::string& v) { c.*f = std::atoi(v.c_str()); }}});
    };
    auto add_dbl = [&r](const std::string& k, double Config::*f) {
      r.push_back({k, {[f](const Config& c) { return format_g17(c.*f); },
                       [f](Config& c, const std::string& v) { c.*f = std::strtod(v.c_str(), nullptr); }}});
    };
    auto add_buckets = [&r](const std::string& k, std::vector<double> FeatureConfig::*f) {
      r.push_back({k, {[f](const Config& c) { return join_doubles(c.features.*f); },
                       [f](Config& c, const std::string& v) { c.features.*f = split_doubles(v); }}});
    };
    auto add_fc_int = [&r](const std::string& k, int FeatureConfig::*f) {
      r.push_back({k, {[f](const Config& c) { return std::to_string(c.features.*f); },
                       [f](Config& c, const std::string& v) { c.features.*f = std::atoi(v.c_str()); }}});
    };

    add_int("max_ie", &Config::max_ie);
    add_int("max_ipv", &Config::max_ipv);
    add_int("max_candidates", &Config::max_candidates);
    add_int("page_size", &Config::page_size);
    add_int("return_count", &Config::return_count);
    add_int("k_expose", &Config::k_expose);
    add_int("serve_delay_ms", &Config::serve_delay_ms);
    add_int("gru_layers", &Config::gru_layers);
    add_int("gru_hidden", &Config::gru_hidden);
    add_int("attn_hidden", &Config::attn_hidden);
    r.push_back({"mlp_hidden",
                 {[](const Config& c) { return join_ints(c.mlp_hidden); },
                  [](Config& c, const std::string& v) { c.mlp_hidden = split_ints(v); }}});
    add_int("batch_size", &Config::batch_size);
    add_dbl("learning_rate", &Config::learning_rate);
    add_int("max_epochs", &Config::max_epochs);
    add_int("patience", &Config::patience);
    add_dbl("val_fraction", &Config::val_fraction);
    add_int("catalog_items", &Config::catalog_items);
    add_int("retention", &Config::retention);
    add_dbl("cloud_noise", &Config::cloud_noise);
    add_dbl("recall_sharpness", &Config::recall_sharpness);
    add_int("users", &Config::users);
    add_dbl("mean_exposures", &Config::mean_exposures);
    add_int("max_exposures", &Config::max_exposures);
    add_dbl("base_click_logit", &Config::base_click_logit);
    add_dbl("affinity_scale", &Config::affinity_scale);
    add_int("liked_categories", &Config::liked_categories);
    add_int("disliked_categories", &Config::disliked_categories);
    add_dbl("quality_weight", &Config::quality_weight);
    add_dbl("position_penalty", &Config::position_penalty);
    add_dbl("boost_strength", &Config::boost_strength);
    add_dbl("boost_decay", &Config::boost_decay);
    add_dbl("fatigue_strength", &Config::fatigue_strength);
    add_dbl("fatigue_decay", &Config::fatigue_decay);
    add_dbl("delete_base_prob", &Config::delete_base_prob);
    add_dbl("delete_bored_prob", &Config::delete_bored_prob);
    add_dbl("delete_suppression", &Config::delete_suppression);
    r.push_back({"seed",
                 {[](const Config& c) { return std::to_string(c.seed); },
                  [](Config& c, const std::string& v) { c.seed = std::strtoull(v.c_str(), nullptr, 10); }}});

    add_buckets("buckets.exposure_duration_ms", &FeatureConfig::exposure_duration_ms);
    add_buckets("buckets.exposure_count", &FeatureConfig::exposure_count);
    add_buckets("buckets.scroll_speed", &FeatureConfig::scroll_speed);
    add_buckets("buckets.scroll_duration_ms", &FeatureConfig::scroll_duration_ms);
    add_buckets("buckets.scroll_count", &FeatureConfig::scroll_count);
    add_buckets("buckets.expose_decay_ms", &FeatureConfig::expose_decay_ms);
    add_buckets("buckets.ipv_duration_ms", &FeatureConfig::ipv_duration_ms);
    add_buckets("buckets.ipv_decay_ms", &FeatureConfig::ipv_decay_ms);
    add_fc_int("vocab.category", &FeatureConfig::category_vocab);
    add_fc_int("vocab.brand", &FeatureConfig::brand_vocab);
    add_fc_int("vocab.gender", &FeatureConfig::gender_vocab);
    add_fc_int("vocab.price_level", &FeatureConfig::price_vocab);
    add_fc_int("vocab.age_level", &FeatureConfig::age_vocab);
    add_fc_int("vocab.bc_type", &FeatureConfig::bc_vocab);
    add_fc_int("emb.category", &FeatureConfig::category_dim);
    add_fc_int("emb.brand", &FeatureConfig::brand_dim);
    add_fc_int("emb.gender", &FeatureConfig::gender_dim);
    add_fc_int("emb.price_level", &FeatureConfig::price_dim);
    add_fc_int("emb.age_level", &FeatureConfig::age_dim);
    add_fc_int("emb.bc_type", &FeatureConfig::bc_dim);
    add_fc_int("score_count", &FeatureConfig::score_count);

    std::sort(r.begin(), r.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return r;
  }();
  return reg;
}

const Entry* find_entry(const std::string& key) {
  const auto& reg = registry();
  auto it = std::lower_bound(reg.begin(), reg.end(), key,
                             [](const auto& e, const std::string& k) { return e.first < k; });
  if (it == reg.end() || it->first != key) return nullptr;
  return &it->second;
}

}  // namespace

void Config::set(const std::string& key, const std::string& value) {
  const Entry* e = find_entry(key);
  EDGEREC_CHECK(e != nullptr, "unknown config key: " + key);
  e->set(*this, value);
}

std::string Config::get(const std::string& key) const {
  const Entry* e = find_entry(key);
  EDGEREC_CHECK(e != nullptr, "unknown config key: " + key);
  return e->get(*this);
}

const std::vector<std::string>& Config::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& [key, _] : registry()) out.push_back(key);
    return out;
  }();
  return k;
}

void Config::load_file(const std::string& path) {
  std::ifstream in(path);
  EDGEREC_CHECK(in.good(), "cannot open config file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto eq = line.find('=');
    EDGEREC_CHECK(eq != std::string::npos,
                  path + ":" + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void Config::apply_env() {
  for (const auto& key : keys()) {
    std::string env = "EDGEREC_";
    for (char c : key) env.push_back(c == '.' ? '_' : char(std::toupper(c)));
    if (const char* v = std::getenv(env.c_str())) set(key, v);
  }
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& key : keys()) {
    out += key;
    out.push_back('=');
    out += get(key);
    out.push_back('\n');
  }
  return out;
}

std::string Config::hash() const {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)hash_str(canonical()));
  return buf;
}

nlohmann::json Config::to_json() const {
  nlohmann::json j;
  for (const auto& key : keys()) j[key] = get(key);
  return j;
}

}  // namespace edgerec
