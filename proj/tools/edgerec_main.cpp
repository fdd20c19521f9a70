#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "edgerec/evalsim.hpp"
#include "edgerec/trainer.hpp"

namespace fs = std::filesystem;
using namespace edgerec;

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> sets;
};

Config load_config(const CommonOpts& c) {
  Config cfg;
  if (!c.config_path.empty()) cfg.load_file(c.config_path);
  cfg.apply_env();
  for (const auto& kv : c.sets) {
    auto eq = kv.find('=');
    EDGEREC_CHECK(eq != std::string::npos, "--set expects key=value, got: " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  EDGEREC_CHECK(in.good(), "cannot open " + path);
  return nlohmann::json::parse(in);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  EDGEREC_CHECK(out.good(), "cannot write " + path);
  out << text;
}

void write_report(const std::string& out_dir, const MetricsReport& rep) {
  write_text(out_dir + "/report.txt", rep.to_text());
  write_text(out_dir + "/positions.csv", rep.to_table());
  write_text(out_dir + "/report.json", rep.to_json().dump(1) + "\n");
}

int cmd_simulate(const CommonOpts& common, const std::string& model_path, int users,
                 std::uint64_t seed, bool seed_set, const std::string& out_dir) {
  Config cfg = load_config(common);
  if (users >= 0) cfg.users = users;
  if (seed_set) cfg.seed = seed;
  fs::create_directories(out_dir);

  std::unique_ptr<EdgeRecModel> model;
  std::string version;
  if (!model_path.empty()) {
    model = std::make_unique<EdgeRecModel>(EdgeRecModel::from_bundle_json(read_json(model_path)));
    version = read_json(model_path)["manifest"]["version"].get<std::string>();
  }
  SimResult res = simulate_standalone(cfg, model.get(), version,
                                      out_dir + "/session_log.jsonl", cfg.seed);
  write_report(out_dir, res.report);
  std::cout << res.report.to_text();
  std::cout << "log: " << res.log_path << "\n";
  return 0;
}

int cmd_train(const CommonOpts& common, const std::string& variant_name,
              const std::string& log_path, const std::string& out_dir,
              const std::string& version, std::uint64_t seed, bool seed_set) {
  Config cfg = load_config(common);
  if (seed_set) cfg.seed = seed;
  Variant variant = variant_from_name(variant_name);
  fs::create_directories(out_dir);

  Dataset ds = build_samples(log_path, cfg);
  std::cout << "dataset: " << ds.requests.size() << " requests, " << ds.sample_count()
            << " samples (" << ds.log_stats.skipped + ds.malformed_records
            << " malformed lines skipped)\n";

  TrainResult res = train(ds, variant, cfg, cfg.seed);
  std::ostringstream curve;
  curve << "epoch,train_loss,train_gauc,val_gauc\n";
  for (const auto& e : res.history) {
    std::cout << "epoch " << e.epoch << ": train_loss=" << e.train_loss
              << " train_gauc=" << e.train_gauc << " val_gauc=" << e.val_gauc << "\n";
    curve << e.epoch << ',' << e.train_loss << ',' << e.train_gauc << ',' << e.val_gauc << "\n";
  }
  std::cout << "best epoch " << res.best_epoch << " val_gauc=" << res.best_val_gauc << "\n";
  write_text(out_dir + "/training_curve.csv", curve.str());

  ExportPaths paths = split_and_export(*res.model, version, out_dir, nullptr);
  std::cout << "bundle: " << paths.bundle << "\ndevice: " << paths.device
            << "\nembeddings: " << paths.embeddings << "\n";
  return 0;
}

int cmd_eval(const CommonOpts& common, const std::string& log_path,
             const std::vector<std::string>& model_paths, int users, std::uint64_t seed,
             bool seed_set, const std::string& report_dir) {
  Config cfg = load_config(common);
  if (users >= 0) cfg.users = users;
  if (seed_set) cfg.seed = seed;
  if (!report_dir.empty()) fs::create_directories(report_dir);

  if (!log_path.empty()) {
    MetricsReport rep = report_from_log(log_path, cfg.page_size);
    std::cout << rep.to_text();
    if (!report_dir.empty()) write_report(report_dir, rep);
    for (const auto& mp : model_paths) {
      EdgeRecModel model = EdgeRecModel::from_bundle_json(read_json(mp));
      ReplayStats rs = replay_scores(log_path, model, cfg);
      std::cout << "replay[" << mp << "]: checked=" << rs.requests_checked
                << " skipped=" << rs.requests_skipped << " mismatches=" << rs.score_mismatches
                << " max_abs_diff=" << rs.max_abs_diff << "\n";
      EDGEREC_CHECK(rs.score_mismatches == 0, "replay found score mismatches");
    }
    return 0;
  }

  EDGEREC_CHECK(!model_paths.empty(), "eval needs --log and/or --model");
  std::ostringstream table;
  table << "variant,gauc,ctr,pv,click,reranks_per_page\n";
  std::cout << "Overall performances (fresh simulation, users=" << cfg.users
            << " seed=" << cfg.seed << ")\n";
  for (const auto& mp : model_paths) {
    EdgeRecModel model = EdgeRecModel::from_bundle_json(read_json(mp));
    std::string version = read_json(mp)["manifest"]["version"].get<std::string>();
    std::string tmp = (report_dir.empty() ? fs::temp_directory_path().string() : report_dir) +
                      "/eval_" + std::to_string(hash_str(mp) % 100000) + ".jsonl";
    SimResult res = simulate_standalone(cfg, &model, version, tmp, cfg.seed);
    std::string name = variant_name(model.variant());
    std::string g = res.report.gauc_value ? format_g17(*res.report.gauc_value) : "n/a";
    std::cout << "  " << name << ": GAUC=" << g << " CTR=" << res.report.ctr << "\n";
    table << name << ',' << g << ',' << res.report.ctr << ',' << res.report.pv << ','
          << res.report.clicks << ',' << res.report.reranks_per_page << "\n";
  }
  if (!report_dir.empty()) write_text(report_dir + "/variants.csv", table.str());
  std::cout << table.str();
  return 0;
}

int cmd_explain(const CommonOpts& common, const std::string& model_path,
                const std::string& log_path, const std::string& request_id,
                std::int64_t candidate_id) {
  Config cfg = load_config(common);
  EdgeRecModel model = EdgeRecModel::from_bundle_json(read_json(model_path));
  BehaviorEncoder encoder(&model);

  struct Beh {
    std::string kind;
    ItemAttributes attrs;
    nlohmann::json action;
  };
  struct UserState {
    BehaviorContext ctx;
    std::vector<Beh> ie, ipv;
    std::unordered_map<std::int64_t, ItemAttributes> items;
  };
  std::unordered_map<int, UserState> users;
  bool found = false;

  for_each_log_line(log_path, [&](const LogLine& line) {
    if (found) return;
    if (line.kind == "page") {
      auto& u = users[line.user];
      for (const auto& it : line.data.at("items")) {
        ItemAttributes attrs = ItemAttributes::from_json(it.at("attrs"));
        u.items[attrs.item_id] = std::move(attrs);
      }
    } else if (line.kind == "behavior") {
      auto& u = users[line.user];
      BehaviorRecord rec;
      rec.ts = line.ts;
      rec.attrs = ItemAttributes::from_json(line.data.at("attrs"));
      rec.item_features = model.embed_item(rec.attrs);
      Beh b{line.data.at("bkind").get<std::string>(), rec.attrs, line.data.at("action")};
      if (b.kind == "IE") {
        rec.kind = BehaviorKind::kIe;
        rec.action_features =
            encode_exposure_action(ExposureAction::from_json(b.action), cfg.features);
        u.ie.push_back(std::move(b));
      } else {
        rec.kind = BehaviorKind::kIpv;
        rec.action_features =
            encode_pageview_action(PageViewAction::from_json(b.action), cfg.features);
        u.ipv.push_back(std::move(b));
      }
      encoder.append(u.ctx, rec);
    } else if (line.kind == "rerank" && !line.data.value("noop", false) &&
               line.data.at("request_id").get<std::string>() == request_id) {
      found = true;
      auto& u = users[line.user];
      std::vector<Candidate> cands;
      int target = -1;
      for (const auto& cj : line.data.at("candidates")) {
        std::int64_t id = cj.get<std::int64_t>();
        if (id == candidate_id) target = int(cands.size());
        cands.push_back({id, model.embed_item(u.items.at(id))});
      }
      EDGEREC_CHECK(target >= 0, "candidate not part of this request");
      CandidateEncoding enc = encode_candidates(model, cands);
      ScoredCandidate sc = score_candidate(model, target, cands, enc, u.ctx);

      auto describe = [](const Beh& b) {
        std::ostringstream os;
        os << "item " << b.attrs.item_id << " cat=" << b.attrs.category_id
           << " brand=" << b.attrs.brand_id;
        if (b.kind == "IE") {
          os << " dur=" << b.action.at("dur").get<std::int64_t>() << "ms"
             << " scroll=" << b.action.at("sspeed").get<double>() << "px/s"
             << " del=" << b.action.at("del").get<std::string>();
        } else {
          static const char* names[10] = {"cart", "buy", "favorite", "comment", "sku",
                                          "wdj",  "ww",  "detail",   "shop",    "rec"};
          os << " dur=" << b.action.at("dur").get<std::int64_t>() << "ms acts=";
          bool any = false;
          const auto& flags = b.action.at("flags");
          for (int i = 0; i < 10; ++i)
            if (flags[i].get<int>()) {
              os << (any ? "," : "") << names[i];
              any = true;
            }
          if (!any) os << "none";
        }
        return os.str();
      };

      std::cout << "request " << request_id << " user " << line.user << " trigger "
                << line.data.at("tkind").get<std::string>() << "\n";
      std::cout << "candidate item " << candidate_id << " (cat="
                << u.items.at(candidate_id).category_id << ") score=" << sc.score << "\n";

      auto print_branch = [&](const char* name, const Vec& w, const std::vector<Beh>& all) {
        std::cout << name << " attention";
        if (w.empty()) {
          std::cout << ": (empty context)\n";
          return;
        }
        double sum = 0;
        for (double x : w) sum += x;
        std::cout << " over " << w.size() << " behaviors (weight sum " << sum << "):\n";
        // The context window holds the last |w| records of the stream.
        std::size_t off = all.size() - w.size();
        for (std::size_t j = 0; j < w.size(); ++j)
          std::cout << "  [" << j << "] w=" << w[j] << "  " << describe(all[off + j]) << "\n";
      };
      if (model.has_ie()) print_branch("IE", sc.ie_weights, u.ie);
      if (model.has_ipv()) print_branch("IPV", sc.ipv_weights, u.ipv);
    }
  });
  EDGEREC_CHECK(found, "request id not found in log: " + request_id);
  return 0;
}

int cmd_split(const std::string& model_path, const std::string& out_dir,
              const std::string& version) {
  nlohmann::json bundle = read_json(model_path);
  EdgeRecModel model = EdgeRecModel::from_bundle_json(bundle);
  std::string v = version.empty() ? EdgeRecModel::bundle_version(bundle) : version;
  ExportPaths paths = split_and_export(model, v, out_dir, nullptr);
  std::cout << "device: " << paths.device << "\nembeddings: " << paths.embeddings << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EdgeRec: edge-side reranking with behavior attention"};
  app.require_subcommand(1);
  app.fallthrough();  // --config/--set may follow the subcommand

  CommonOpts common;
  app.add_option("--config", common.config_path, "flat key=value config file");
  app.add_option("--set", common.sets, "override a config key, e.g. --set gru_hidden=32");

  // simulate
  auto* sim = app.add_subcommand("simulate", "run synthetic sessions and write a session log");
  std::string sim_model, sim_out = "out/sim";
  int sim_users = -1;
  std::uint64_t sim_seed = 0;
  sim->add_option("--model", sim_model, "monolithic bundle json (omit for the baseline arm)");
  sim->add_option("--users", sim_users, "number of user sessions");
  auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "simulation seed");
  sim->add_option("--out", sim_out, "output directory");

  // train
  auto* tr = app.add_subcommand("train", "build samples from a log and train a variant");
  std::string tr_variant = "CRBAN+HUBSM(IE&IPV)", tr_log, tr_out = "out/train", tr_version = "v1";
  std::uint64_t tr_seed = 0;
  tr->add_option("--variant", tr_variant, "model variant name");
  tr->add_option("--log", tr_log, "session log (jsonl)")->required();
  tr->add_option("--out", tr_out, "output directory");
  tr->add_option("--version", tr_version, "version id for the exported bundle");
  auto* tr_seed_opt = tr->add_option("--seed", tr_seed, "training seed");

  // eval
  auto* ev = app.add_subcommand("eval", "metrics report from a log, or fresh simulation per model");
  std::string ev_log, ev_report;
  std::vector<std::string> ev_models;
  int ev_users = -1;
  std::uint64_t ev_seed = 0;
  ev->add_option("--log", ev_log, "evaluate an existing session log");
  ev->add_option("--model", ev_models, "bundle json (repeatable; with --log runs a replay check)");
  ev->add_option("--users", ev_users, "sessions for fresh simulation");
  auto* ev_seed_opt = ev->add_option("--seed", ev_seed, "seed for fresh simulation");
  ev->add_option("--report", ev_report, "directory for report files");

  // explain
  auto* ex = app.add_subcommand("explain", "dump attention traces for one candidate of a request");
  std::string ex_model, ex_log, ex_request;
  std::int64_t ex_candidate = 0;
  ex->add_option("--model", ex_model, "monolithic bundle json")->required();
  ex->add_option("--log", ex_log, "session log")->required();
  ex->add_option("--request-id", ex_request, "request id, e.g. u12-r3")->required();
  ex->add_option("--candidate", ex_candidate, "candidate item id")->required();

  // split
  auto* sp = app.add_subcommand("split", "split a monolithic bundle into device + embedding parts");
  std::string sp_model, sp_out = "out/split", sp_version;
  sp->add_option("--model", sp_model, "monolithic bundle json")->required();
  sp->add_option("--out", sp_out, "output directory");
  sp->add_option("--version", sp_version, "override the version id");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed())
      return cmd_simulate(common, sim_model, sim_users, sim_seed, !sim_seed_opt->empty(), sim_out);
    if (tr->parsed())
      return cmd_train(common, tr_variant, tr_log, tr_out, tr_version, tr_seed,
                       !tr_seed_opt->empty());
    if (ev->parsed())
      return cmd_eval(common, ev_log, ev_models, ev_users, ev_seed, !ev_seed_opt->empty(),
                      ev_report);
    if (ex->parsed()) return cmd_explain(common, ex_model, ex_log, ex_request, ex_candidate);
    if (sp->parsed()) return cmd_split(sp_model, sp_out, sp_version);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
