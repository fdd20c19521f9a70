#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "edgerec/crban.hpp"
#include "edgerec/evalsim.hpp"
#include "edgerec/trainer.hpp"
#include "test_util.hpp"

using namespace edgerec;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() / "edgerec_tests";
  fs::create_directories(dir);
  return (dir / (name + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++)))
      .string();
}

std::string tiny_baseline_log(const Config& cfg, std::uint64_t seed) {
  std::string path = temp_path("log") + ".jsonl";
  simulate_standalone(cfg, nullptr, "", path, seed);
  return path;
}

Config trainer_config() {
  Config cfg = testutil::tiny_config();
  cfg.users = 120;
  cfg.mean_exposures = 14;
  cfg.batch_size = 64;
  cfg.max_epochs = 3;
  cfg.patience = 3;
  return cfg;
}

}  // namespace

TEST_CASE("build_samples: labeling, attribution, leakage") {
  Config cfg = trainer_config();
  std::string log = tiny_baseline_log(cfg, 5);
  Dataset ds = build_samples(log, cfg);

  REQUIRE(!ds.requests.empty());
  REQUIRE(ds.sample_count() > 0);
  CHECK(ds.log_stats.skipped == 0);
  CHECK(ds.malformed_records == 0);

  std::size_t positives = 0;
  for (const auto& req : ds.requests) {
    CHECK(!req.targets.empty());  // requests without exposed candidates are dropped
    CHECK(!req.candidates.empty());
    for (const auto& t : req.targets) {
      CHECK(t.cand >= 0);
      CHECK(t.cand < int(req.candidates.size()));
      positives += std::size_t(t.label);
    }
  }
  CHECK(positives > 0);
  CHECK(positives < ds.sample_count());

  // no behavior record in any window at or after its trigger timestamp
  CHECK(count_leakage_violations(ds, cfg) == 0);
}

TEST_CASE("build_samples skips malformed lines with a counter") {
  Config cfg = trainer_config();
  cfg.users = 20;
  std::string log = tiny_baseline_log(cfg, 7);
  std::string broken = temp_path("broken") + ".jsonl";
  {
    std::ifstream in(log);
    std::ofstream out(broken);
    std::string line;
    int i = 0;
    while (std::getline(in, line)) {
      out << line << '\n';
      if (++i % 17 == 0) out << "{this is not json\n";
      if (i % 23 == 0) out << R"({"ts": 1, "user": 0, "kind": "event", "data": {}})" << '\n';
    }
  }
  Dataset ds = build_samples(broken, cfg);
  CHECK(ds.log_stats.skipped > 0);            // unparseable lines
  CHECK(ds.malformed_records > 0);            // parseable but structurally broken
  CHECK(ds.sample_count() > 0);
}

TEST_CASE("untrained model starts at ln 2 loss") {
  Config cfg = trainer_config();
  cfg.users = 30;
  Dataset ds = build_samples(tiny_baseline_log(cfg, 9), cfg);
  EdgeRecModel m = testutil::tiny_model(cfg);

  double loss = 0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < std::min<std::size_t>(ds.requests.size(), 20); ++r) {
    Vec scores = score_request(m, ds, ds.requests[r]);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      loss += nn::bce_loss(scores[i], ds.requests[r].targets[i].label);
      ++n;
    }
  }
  CHECK(loss / double(n) == doctest::Approx(std::log(2.0)).epsilon(0.02));
}

TEST_CASE("training reduces the loss and is seed-deterministic") {
  Config cfg = trainer_config();
  Dataset ds = build_samples(tiny_baseline_log(cfg, 11), cfg);

  TrainResult a = train(ds, Variant::kCrbanHubsmIeIpv, cfg, 42);
  REQUIRE(a.history.size() >= 2);
  CHECK(a.history[0].train_loss > a.history[1].train_loss);  // learnable synthetic set
  for (const auto& e : a.history) {
    CHECK(std::isfinite(e.train_loss));
    CHECK(e.val_gauc >= 0.0);
    CHECK(e.val_gauc <= 1.0);
  }

  TrainResult b = train(ds, Variant::kCrbanHubsmIeIpv, cfg, 42);
  CHECK(a.model->to_bundle_json("v1").dump() == b.model->to_bundle_json("v1").dump());

  TrainResult c = train(ds, Variant::kCrbanHubsmIeIpv, cfg, 43);
  CHECK(a.model->to_bundle_json("v1").dump() != c.model->to_bundle_json("v1").dump());
}

TEST_CASE("IE-only variant is invariant to the IPV context") {
  Config cfg = trainer_config();
  cfg.users = 40;
  Dataset ds = build_samples(tiny_baseline_log(cfg, 13), cfg);
  EdgeRecModel m = testutil::tiny_model(cfg, Variant::kCrbanHubsmIe);

  Dataset stripped = ds;
  for (auto& [u, beh] : stripped.behaviors) beh.ipv.clear();
  for (auto& req : stripped.requests) req.ipv_hi = 0;

  for (std::size_t r = 0; r < std::min<std::size_t>(ds.requests.size(), 25); ++r) {
    Vec with_ipv = score_request(m, ds, ds.requests[r]);
    Vec without = score_request(m, stripped, stripped.requests[r]);
    CHECK(with_ipv == without);
  }
}

TEST_CASE("gradients flow: training improves DNN-rank over its untrained init") {
  Config cfg = trainer_config();
  cfg.users = 100;
  cfg.max_epochs = 6;
  Dataset ds = build_samples(tiny_baseline_log(cfg, 15), cfg);
  std::vector<const TrainRequest*> reqs;
  for (const auto& r : ds.requests) reqs.push_back(&r);

  EdgeRecModel untrained = testutil::tiny_model(cfg, Variant::kDnnRank, 1);
  double before = evaluate_gauc(untrained, ds, reqs);
  TrainResult res = train(ds, Variant::kDnnRank, cfg, 1);
  double after = evaluate_gauc(*res.model, ds, reqs);
  CHECK(after > before);
  CHECK(after > 0.5);
}

TEST_CASE("split export, cloud publish, and device-path equivalence") {
  Config cfg = trainer_config();
  cfg.users = 40;
  std::string log = tiny_baseline_log(cfg, 17);
  Dataset ds = build_samples(log, cfg);
  TrainResult res = train(ds, Variant::kCrbanHubsmIeIpv, cfg, 3);
  const EdgeRecModel& mono = *res.model;

  auto catalog = std::make_shared<Catalog>(Catalog::generate(cfg, 17));
  CloudRs cloud(cfg, catalog, 17);
  std::string out = temp_path("export");
  ExportPaths paths = split_and_export(mono, "v5", out, &cloud);
  CHECK(fs::exists(paths.bundle));
  CHECK(fs::exists(paths.device));
  CHECK(fs::exists(paths.embeddings));
  CHECK(cloud.store().newest()->version == "v5");

  std::ifstream in(paths.device);
  EdgeRecModel device = EdgeRecModel::from_bundle_json(nlohmann::json::parse(in));
  CHECK_FALSE(device.has_embeddings());

  // device part + cloud-resolved rows == monolithic model, bit for bit
  UserProfile u;
  u.user = 7;
  u.category_affinity.assign(std::size_t(cfg.features.category_vocab), 0.1);
  PageResponse page = cloud.page(u, "v5", 0, {});
  std::vector<Candidate> via_rows, via_model;
  for (const auto& c : page.candidates) {
    via_rows.push_back({c.attrs.item_id, encode_item_from_rows(c.rows, c.attrs.scores, cfg.features)});
    via_model.push_back({c.attrs.item_id, mono.embed_item(c.attrs)});
  }
  BehaviorContext empty;
  auto device_scores = rerank(device, via_rows, empty);
  auto mono_scores = rerank(mono, via_model, empty);
  REQUIRE(device_scores.size() == mono_scores.size());
  for (std::size_t i = 0; i < device_scores.size(); ++i) {
    CHECK(device_scores[i].item_id == mono_scores[i].item_id);
    CHECK(device_scores[i].score == mono_scores[i].score);  // bit-identical
  }
}

TEST_CASE("replay reproduces logged scores exactly") {
  Config cfg = trainer_config();
  cfg.users = 40;
  Dataset ds = build_samples(tiny_baseline_log(cfg, 19), cfg);
  TrainResult res = train(ds, Variant::kCrbanHubsmIeIpv, cfg, 5);

  std::string model_log = temp_path("model_log") + ".jsonl";
  simulate_standalone(cfg, res.model.get(), "v1", model_log, 19);

  ReplayStats stats = replay_scores(model_log, *res.model, cfg);
  CHECK(stats.requests_checked > 0);
  CHECK(stats.score_mismatches == 0);
  CHECK(stats.max_abs_diff == 0.0);
}
