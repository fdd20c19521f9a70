#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "edgerec/common.hpp"

namespace edgerec {

// Feature-space definition shared by encoders, trainer and the published
// bundle manifest. Bucket fields hold strictly ascending boundaries; a value
// maps to one of |boundaries|+1 one-hot positions.
struct FeatureConfig {
  std::vector<double> exposure_duration_ms{100, 300, 1000, 3000, 10000, 30000, 100000, 300000};
  std::vector<double> exposure_count{1, 2, 3, 5, 8, 13, 21, 34};
  std::vector<double> scroll_speed{50, 100, 200, 400, 800, 1600, 3200, 6400};
  std::vector<double> scroll_duration_ms{50, 100, 200, 400, 800, 1600, 3200, 6400};
  std::vector<double> scroll_count{1, 2, 3, 5, 8, 13, 21, 34};
  std::vector<double> expose_decay_ms{1000, 3000, 10000, 30000, 100000, 300000, 1000000, 3000000};
  std::vector<double> ipv_duration_ms{1000, 3000, 8000, 20000, 50000, 120000, 300000, 600000};
  std::vector<double> ipv_decay_ms{1000, 3000, 10000, 30000, 100000, 300000, 1000000, 3000000};
  int delete_reason_count = 5;  // none, not_interested, seen_similar, poor_quality, other

  // Item side: six embedded id features plus raw score passthrough.
  int category_vocab = 50, brand_vocab = 200, gender_vocab = 3, price_vocab = 8, age_vocab = 8,
      bc_vocab = 3;
  int category_dim = 8, brand_dim = 8, gender_dim = 4, price_dim = 4, age_dim = 4, bc_dim = 4;
  int score_count = 2;

  int exposure_action_dim() const;
  int pageview_action_dim() const;
  int item_dim() const;

  struct TableSpec {
    std::string name;
    int vocab;
    int dim;
  };
  std::vector<TableSpec> tables() const;

  nlohmann::json to_json() const;
  static FeatureConfig from_json(const nlohmann::json& j);
};

// Flat key=value configuration for the whole system. Every key can be set in
// a config file, overridden by an EDGEREC_<KEY> environment variable (dots
// become underscores, upper case), then by CLI flags.
struct Config {
  FeatureConfig features;

  // Sequence limits: the behavior windows and the candidate list cap.
  int max_ie = 64;       // m
  int max_ipv = 32;      // n
  int max_candidates = 100;  // k

  // Edge runtime.
  int page_size = 50;
  int return_count = 100;
  int k_expose = 8;        // no-click exposures between forced reranks
  int serve_delay_ms = 1;   // reranking runs asynchronously, just after the trigger

  // Network sizes (desk profile; profiles/paper.conf carries the paper's).
  int gru_layers = 2;
  int gru_hidden = 16;
  int attn_hidden = 16;
  std::vector<int> mlp_hidden{32, 32};

  // Trainer.
  int batch_size = 256;
  double learning_rate = 0.005;
  int max_epochs = 12;
  int patience = 2;
  double val_fraction = 0.1;

  // Cloud.
  int catalog_items = 10000;
  int retention = 3;
  double cloud_noise = 0.5;
  double recall_sharpness = 0.8;

  // Simulator (synthetic users with planted structure).
  int users = 2000;
  double mean_exposures = 30;
  int max_exposures = 120;
  double base_click_logit = -3.0;
  double affinity_scale = 1.6;
  int liked_categories = 3;
  int disliked_categories = 3;
  double quality_weight = 1.0;
  double position_penalty = 1.0;
  double boost_strength = 2.5;
  double boost_decay = 0.95;
  double fatigue_strength = 0.9;
  double fatigue_decay = 0.9;
  double delete_base_prob = 0.004;
  double delete_bored_prob = 0.03;
  double delete_suppression = 1.0;

  std::uint64_t seed = 1;

  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  void load_file(const std::string& path);
  void apply_env();

  std::string canonical() const;        // sorted key=value lines
  std::string hash() const;             // hex of FNV-1a over canonical()
  nlohmann::json to_json() const;
};

}  // namespace edgerec
