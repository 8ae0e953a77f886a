#include "efhc/config.hpp"

#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace efhc {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error("config error at '" + path + "': " + what);
}

void check_keys(const json& obj, const std::string& path,
                const std::set<std::string>& allowed) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) fail(path.empty() ? key : path + "." + key, "unknown key");
  }
}

template <typename T>
void get(const json& obj, const std::string& path, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(path.empty() ? key : path + "." + std::string(key), e.what());
  }
}

void get_string_enum(const json& obj, const std::string& path, const char* key,
                     const std::function<void(const std::string&)>& apply) {
  if (!obj.contains(key)) return;
  if (!obj.at(key).is_string()) fail(path + std::string(path.empty() ? "" : ".") + key, "expected string");
  try {
    apply(obj.at(key).get<std::string>());
  } catch (const std::exception& e) {
    fail(path + std::string(path.empty() ? "" : ".") + key, e.what());
  }
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("config parse error: ") + e.what());
  }
  if (!root.is_object()) throw std::runtime_error("config error: top level must be an object");

  ExperimentConfig cfg;

  check_keys(root, "",
             {"m", "total_iterations", "cadence", "monte_carlo_runs", "transmission_budget",
              "policy", "topology", "task", "schedule", "threshold", "bandwidth", "seeds", "init",
              "diagnostics"});

  get(root, "", "m", cfg.m);
  get(root, "", "total_iterations", cfg.total_iterations);
  get(root, "", "cadence", cfg.cadence);
  get(root, "", "monte_carlo_runs", cfg.monte_carlo_runs);
  get(root, "", "transmission_budget", cfg.transmission_budget);
  get_string_enum(root, "", "policy",
                  [&](const std::string& s) { cfg.policy = policy_kind_from_string(s); });

  if (root.contains("topology")) {
    const json& t = root.at("topology");
    if (!t.is_object()) fail("topology", "expected object");
    check_keys(t, "topology", {"connectivity", "availability_prob"});
    get(t, "topology", "connectivity", cfg.connectivity);
    get(t, "topology", "availability_prob", cfg.availability_prob);
  }

  if (root.contains("task")) {
    const json& t = root.at("task");
    if (!t.is_object()) fail("task", "expected object");
    check_keys(t, "task",
               {"kind", "n_features", "classes", "lambda", "per_class", "spread", "center_scale",
                "labels_per_device", "batch_size"});
    get_string_enum(t, "task", "kind",
                    [&](const std::string& s) { cfg.task = task_kind_from_string(s); });
    get(t, "task", "n_features", cfg.n_features);
    get(t, "task", "classes", cfg.classes);
    get(t, "task", "lambda", cfg.lambda);
    get(t, "task", "per_class", cfg.per_class);
    get(t, "task", "spread", cfg.spread);
    get(t, "task", "center_scale", cfg.center_scale);
    get(t, "task", "labels_per_device", cfg.labels_per_device);
    get(t, "task", "batch_size", cfg.batch_size);
  }

  if (root.contains("schedule")) {
    const json& s = root.at("schedule");
    if (!s.is_object()) fail("schedule", "expected object");
    check_keys(s, "schedule", {"a", "b", "c", "omega", "gamma_constant"});
    get(s, "schedule", "a", cfg.schedule.a);
    get(s, "schedule", "b", cfg.schedule.b);
    get(s, "schedule", "c", cfg.schedule.c);
    get(s, "schedule", "omega", cfg.schedule.omega);
    get(s, "schedule", "gamma_constant", cfg.schedule.gamma_constant);
  }

  if (root.contains("threshold")) {
    const json& t = root.at("threshold");
    if (!t.is_object()) fail("threshold", "expected object");
    check_keys(t, "threshold", {"r", "q", "auto_r", "k_agg", "l_inf", "linf_samples"});
    get(t, "threshold", "r", cfg.r);
    get(t, "threshold", "q", cfg.q);
    get(t, "threshold", "auto_r", cfg.auto_r);
    get(t, "threshold", "k_agg", cfg.k_agg);
    get(t, "threshold", "l_inf", cfg.l_inf);
    get(t, "threshold", "linf_samples", cfg.linf_samples);
  }

  if (root.contains("bandwidth")) {
    const json& b = root.at("bandwidth");
    if (!b.is_object()) fail("bandwidth", "expected object");
    check_keys(b, "bandwidth", {"average", "weak", "heterogeneity"});
    get(b, "bandwidth", "average", cfg.average_bandwidth);
    get(b, "bandwidth", "weak", cfg.weak_bandwidth);
    get(b, "bandwidth", "heterogeneity", cfg.heterogeneity);
  }

  if (root.contains("seeds")) {
    const json& s = root.at("seeds");
    if (!s.is_object()) fail("seeds", "expected object");
    check_keys(s, "seeds", {"topology", "data", "policy", "sgd"});
    get(s, "seeds", "topology", cfg.seed_topology);
    get(s, "seeds", "data", cfg.seed_data);
    get(s, "seeds", "policy", cfg.seed_policy);
    get(s, "seeds", "sgd", cfg.seed_sgd);
  }

  if (root.contains("init")) {
    const json& s = root.at("init");
    if (!s.is_object()) fail("init", "expected object");
    check_keys(s, "init", {"kind", "scale"});
    get_string_enum(s, "init", "kind", [&](const std::string& v) {
      if (v == "zeros") cfg.init = InitKind::Zeros;
      else if (v == "random") cfg.init = InitKind::Random;
      else throw std::invalid_argument("unknown init kind: " + v);
    });
    get(s, "init", "scale", cfg.init_scale);
  }

  if (root.contains("diagnostics")) {
    const json& d = root.at("diagnostics");
    if (!d.is_object()) fail("diagnostics", "expected object");
    check_keys(d, "diagnostics",
               {"zero_gradients", "record_trace", "runtime_checks", "b1_window", "b2_budget",
                "force_broadcast_every"});
    get(d, "diagnostics", "zero_gradients", cfg.zero_gradients);
    get(d, "diagnostics", "record_trace", cfg.record_trace);
    get(d, "diagnostics", "runtime_checks", cfg.runtime_checks);
    get(d, "diagnostics", "b1_window", cfg.b1_window);
    get(d, "diagnostics", "b2_budget", cfg.b2_budget);
    get(d, "diagnostics", "force_broadcast_every", cfg.force_broadcast_every);
  }

  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  json root;
  root["m"] = cfg.m;
  root["total_iterations"] = cfg.total_iterations;
  root["cadence"] = cfg.cadence;
  root["monte_carlo_runs"] = cfg.monte_carlo_runs;
  root["transmission_budget"] = cfg.transmission_budget;
  root["policy"] = to_string(cfg.policy);
  root["topology"] = {{"connectivity", cfg.connectivity},
                      {"availability_prob", cfg.availability_prob}};
  root["task"] = {{"kind", to_string(cfg.task)},
                  {"n_features", cfg.n_features},
                  {"classes", cfg.classes},
                  {"lambda", cfg.lambda},
                  {"per_class", cfg.per_class},
                  {"spread", cfg.spread},
                  {"center_scale", cfg.center_scale},
                  {"labels_per_device", cfg.labels_per_device},
                  {"batch_size", cfg.batch_size}};
  root["schedule"] = {{"a", cfg.schedule.a},
                      {"b", cfg.schedule.b},
                      {"c", cfg.schedule.c},
                      {"omega", cfg.schedule.omega},
                      {"gamma_constant", cfg.schedule.gamma_constant}};
  root["threshold"] = {{"r", cfg.r},          {"q", cfg.q},
                       {"auto_r", cfg.auto_r}, {"k_agg", cfg.k_agg},
                       {"l_inf", cfg.l_inf},   {"linf_samples", cfg.linf_samples}};
  root["bandwidth"] = {{"average", cfg.average_bandwidth},
                       {"weak", cfg.weak_bandwidth},
                       {"heterogeneity", cfg.heterogeneity}};
  root["seeds"] = {{"topology", cfg.seed_topology},
                   {"data", cfg.seed_data},
                   {"policy", cfg.seed_policy},
                   {"sgd", cfg.seed_sgd}};
  root["init"] = {{"kind", cfg.init == InitKind::Zeros ? "zeros" : "random"},
                  {"scale", cfg.init_scale}};
  root["diagnostics"] = {{"zero_gradients", cfg.zero_gradients},
                         {"record_trace", cfg.record_trace},
                         {"runtime_checks", cfg.runtime_checks},
                         {"b1_window", cfg.b1_window},
                         {"b2_budget", cfg.b2_budget},
                         {"force_broadcast_every", cfg.force_broadcast_every}};
  return root.dump(2) + "\n";
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return serialize_config(a) == serialize_config(b);
}

}  // namespace efhc
