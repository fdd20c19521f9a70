#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "edgerec/evalsim.hpp"
#include "edgerec/trainer.hpp"

namespace py = pybind11;
using namespace edgerec;

namespace {

Config config_from_overrides(const std::map<std::string, std::string>& overrides) {
  Config cfg;
  cfg.apply_env();
  for (const auto& [k, v] : overrides) cfg.set(k, v);
  return cfg;
}

nn::GruStack seeded_stack(nn::ParamStore& store, int input_dim, int hidden, int layers,
                          std::uint64_t seed) {
  nn::GruStack s = nn::make_gru_stack(store, "gru", input_dim, hidden, layers);
  store.init(seed);
  return s;
}

py::dict report_to_dict(const MetricsReport& rep) {
  py::dict d;
  d["pv"] = rep.pv;
  d["click"] = rep.clicks;
  d["ctr"] = rep.ctr;
  d["gmv_proxy"] = rep.gmv_proxy;
  d["pages"] = rep.pages;
  d["triggers_per_page"] = rep.triggers_per_page;
  d["reranks_per_page"] = rep.reranks_per_page;
  d["gauc"] = rep.gauc_value ? py::object(py::float_(*rep.gauc_value)) : py::object(py::none());
  d["users"] = rep.users;
  d["arm"] = rep.arm;
  return d;
}

}  // namespace

PYBIND11_MODULE(_edgerec, m) {
  m.doc() = "Edge-side reranking: feature encoders, sequence kernels, simulator and trainer";

  m.def("bucketize", &bucketize, py::arg("value"), py::arg("boundaries"),
        "One-hot over half-open buckets; values at a boundary fall in the upper bucket.");

  m.def(
      "encode_exposure_action",
      [](std::int64_t duration_ms, std::int64_t count, double scroll_speed,
         std::int64_t scroll_duration_ms, std::int64_t scroll_count,
         const std::string& delete_reason, std::int64_t decay_ms,
         const std::map<std::string, std::string>& overrides) {
        ExposureAction a;
        a.exposure_duration_ms = duration_ms;
        a.exposure_count = count;
        a.scroll_speed_max = scroll_speed;
        a.scroll_duration_max_ms = scroll_duration_ms;
        a.scroll_count = scroll_count;
        a.delete_reason = delete_reason_from_name(delete_reason);
        a.expose_decay_ms = decay_ms;
        return encode_exposure_action(a, config_from_overrides(overrides).features);
      },
      py::arg("duration_ms") = 0, py::arg("count") = 1, py::arg("scroll_speed") = 0.0,
      py::arg("scroll_duration_ms") = 0, py::arg("scroll_count") = 0,
      py::arg("delete_reason") = "none", py::arg("decay_ms") = 0,
      py::arg("overrides") = std::map<std::string, std::string>{});

  m.def(
      "encode_pageview_action",
      [](std::int64_t duration_ms, const std::vector<int>& flags, std::int64_t decay_ms,
         const std::map<std::string, std::string>& overrides) {
        PageViewAction a;
        a.ipv_duration_ms = duration_ms;
        EDGEREC_CHECK(flags.size() == 10, "expected 10 flags");
        std::copy(flags.begin(), flags.end(), a.flags.begin());
        a.ipv_decay_ms = decay_ms;
        return encode_pageview_action(a, config_from_overrides(overrides).features);
      },
      py::arg("duration_ms") = 0, py::arg("flags") = std::vector<int>(10, 0),
      py::arg("decay_ms") = 0, py::arg("overrides") = std::map<std::string, std::string>{});

  m.def("auc", &auc, py::arg("labels"), py::arg("scores"));

  m.def(
      "gauc",
      [](const std::vector<std::pair<std::vector<int>, Vec>>& requests) {
        std::vector<RequestEval> evals;
        for (const auto& [labels, scores] : requests) evals.push_back({labels, scores, 0});
        return gauc(evals);
      },
      py::arg("requests"), "Impression-weighted mean AUC over (labels, scores) requests.");

  m.def(
      "gru_sequence",
      [](const std::vector<Vec>& xs, int hidden, int layers, std::uint64_t seed,
         const std::vector<Vec>& h0) {
        EDGEREC_CHECK(!xs.empty(), "empty sequence");
        nn::ParamStore store;
        nn::GruStack stack = seeded_stack(store, int(xs[0].size()), hidden, layers, seed);
        std::vector<Vec> out, final_state;
        nn::gru_sequence_forward(stack, xs, h0, out, final_state, nullptr);
        return std::make_pair(out, final_state);
      },
      py::arg("xs"), py::arg("hidden") = 8, py::arg("layers") = 2, py::arg("seed") = 1,
      py::arg("h0") = std::vector<Vec>{},
      "Runs a seeded random GRU stack; returns (outputs, final_state) so the "
      "split/resume property can be exercised from python.");

  m.def(
      "additive_attention",
      [](const Vec& q, const std::vector<Vec>& keys, const std::vector<Vec>& values,
         const std::vector<std::uint8_t>& mask, int att, std::uint64_t seed) {
        nn::ParamStore store;
        nn::Attention at = nn::make_attention(store, "attn", int(q.size()),
                                              keys.empty() ? int(q.size()) : int(keys[0].size()),
                                              att);
        store.init(seed);
        return nn::additive_attention(at, q, keys, values, mask);
      },
      py::arg("q"), py::arg("keys"), py::arg("values"), py::arg("mask"), py::arg("att") = 8,
      py::arg("seed") = 1);

  m.def(
      "simulate",
      [](const std::string& log_path, int users, std::uint64_t seed,
         const std::string& model_path, const std::map<std::string, std::string>& overrides) {
        Config cfg = config_from_overrides(overrides);
        cfg.users = users;
        cfg.seed = seed;
        std::unique_ptr<EdgeRecModel> model;
        std::string version;
        if (!model_path.empty()) {
          std::ifstream in(model_path);
          EDGEREC_CHECK(in.good(), "cannot open " + model_path);
          nlohmann::json bundle = nlohmann::json::parse(in);
          version = EdgeRecModel::bundle_version(bundle);
          model = std::make_unique<EdgeRecModel>(EdgeRecModel::from_bundle_json(bundle));
        }
        SimResult res = simulate_standalone(cfg, model.get(), version, log_path, seed);
        return report_to_dict(res.report);
      },
      py::arg("log_path"), py::arg("users") = 50, py::arg("seed") = 1,
      py::arg("model_path") = std::string(),
      py::arg("overrides") = std::map<std::string, std::string>{});

  m.def(
      "train",
      [](const std::string& log_path, const std::string& out_dir, const std::string& variant,
         std::uint64_t seed, const std::string& version,
         const std::map<std::string, std::string>& overrides) {
        Config cfg = config_from_overrides(overrides);
        cfg.seed = seed;
        Dataset ds = build_samples(log_path, cfg);
        TrainResult res = train(ds, variant_from_name(variant), cfg, seed);
        ExportPaths paths = split_and_export(*res.model, version, out_dir, nullptr);
        py::dict d;
        d["best_epoch"] = res.best_epoch;
        d["best_val_gauc"] = res.best_val_gauc;
        d["train_samples"] = res.train_samples;
        d["epochs"] = res.history.size();
        d["bundle"] = paths.bundle;
        d["device"] = paths.device;
        d["embeddings"] = paths.embeddings;
        return d;
      },
      py::arg("log_path"), py::arg("out_dir"), py::arg("variant") = "CRBAN+HUBSM(IE&IPV)",
      py::arg("seed") = 1, py::arg("version") = "v1",
      py::arg("overrides") = std::map<std::string, std::string>{});

  m.def(
      "eval_log",
      [](const std::string& log_path, const std::map<std::string, std::string>& overrides) {
        Config cfg = config_from_overrides(overrides);
        return report_to_dict(report_from_log(log_path, cfg.page_size));
      },
      py::arg("log_path"), py::arg("overrides") = std::map<std::string, std::string>{});

  m.def("variant_names", [] { return variant_names(); });
}
