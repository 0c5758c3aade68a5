#pragma once

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ternconv/network.hpp"
#include "ternconv/synthetic.hpp"

// JSON serialization of the run configuration. Serialized field names are
// the contract: N, M, W, in_channels, num_classes, K0, K, K_e,
// pointwise_mode, skip_mode, threshold, seed, generator, n, m for the model;
// epochs, batch_size, learning_rate, momentum, data_seed, dataset_size,
// sequence_length, class_count for training. Per-block mode lists accept a
// single string or an N-element array. Unknown keys are rejected.

namespace ternconv {

inline nlohmann::json to_json(const ModelConfig& raw) {
  const ModelConfig cfg = resolve(raw);
  nlohmann::json j;
  j["N"] = cfg.N;
  j["M"] = cfg.M;
  j["W"] = cfg.W;
  j["in_channels"] = cfg.in_channels;
  j["num_classes"] = cfg.num_classes;
  j["K0"] = cfg.K0;
  j["K"] = cfg.K;
  j["K_e"] = cfg.K_e;
  std::vector<std::string> pw, skip;
  for (auto m : cfg.pointwise_mode) pw.push_back(to_string(m));
  for (auto m : cfg.skip_mode) skip.push_back(to_string(m));
  j["pointwise_mode"] = pw;
  j["skip_mode"] = skip;
  j["threshold"] = cfg.threshold;
  j["seed"] = cfg.seed;
  j["generator"] = to_string(cfg.generator);
  j["n"] = cfg.n;
  j["m"] = cfg.m;
  return j;
}

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                                const std::string& what) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key()))
      throw std::invalid_argument(what + ": unknown key '" + it.key() + "'");
  }
}

inline std::vector<std::string> mode_list(const nlohmann::json& v, const std::string& key) {
  std::vector<std::string> out;
  if (v.is_string()) {
    out.push_back(v.get<std::string>());
  } else if (v.is_array()) {
    for (const auto& e : v) out.push_back(e.get<std::string>());
  } else {
    throw std::invalid_argument(key + " must be a string or an array of strings");
  }
  return out;
}

}  // namespace detail

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("model config: expected a JSON object");
  detail::reject_unknown_keys(j,
                              {"N", "M", "W", "in_channels", "num_classes", "K0", "K", "K_e",
                               "pointwise_mode", "skip_mode", "threshold", "seed", "generator",
                               "n", "m"},
                              "model config");
  ModelConfig cfg;
  if (j.contains("N")) cfg.N = j["N"].get<int>();
  if (j.contains("M")) cfg.M = j["M"].get<int>();
  if (j.contains("W")) cfg.W = j["W"].get<int>();
  if (j.contains("in_channels")) cfg.in_channels = j["in_channels"].get<int>();
  if (j.contains("num_classes")) cfg.num_classes = j["num_classes"].get<int>();
  if (j.contains("K0")) cfg.K0 = j["K0"].get<int>();
  if (j.contains("K")) cfg.K = j["K"].get<int>();
  if (j.contains("K_e")) cfg.K_e = j["K_e"].get<int>();
  if (j.contains("pointwise_mode")) {
    cfg.pointwise_mode.clear();
    for (const auto& s : detail::mode_list(j["pointwise_mode"], "pointwise_mode"))
      cfg.pointwise_mode.push_back(pointwise_mode_from_string(s));
  }
  if (j.contains("skip_mode")) {
    cfg.skip_mode.clear();
    for (const auto& s : detail::mode_list(j["skip_mode"], "skip_mode"))
      cfg.skip_mode.push_back(skip_mode_from_string(s));
  }
  if (j.contains("threshold")) cfg.threshold = j["threshold"].get<double>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("generator")) cfg.generator = generator_from_string(j["generator"].get<std::string>());
  if (j.contains("n")) cfg.n = j["n"].get<int>();
  if (j.contains("m")) cfg.m = j["m"].get<int>();
  return resolve(cfg);
}

inline nlohmann::json to_json(const TrainConfig& tc) {
  nlohmann::json j;
  j["epochs"] = tc.epochs;
  j["batch_size"] = tc.batch_size;
  j["learning_rate"] = tc.learning_rate;
  j["momentum"] = tc.momentum;
  j["data_seed"] = tc.data_seed;
  j["dataset_size"] = tc.dataset_size;
  j["sequence_length"] = tc.sequence_length;
  j["class_count"] = tc.class_count;
  return j;
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("train config: expected a JSON object");
  detail::reject_unknown_keys(j,
                              {"epochs", "batch_size", "learning_rate", "momentum", "data_seed",
                               "dataset_size", "sequence_length", "class_count"},
                              "train config");
  TrainConfig tc;
  if (j.contains("epochs")) tc.epochs = j["epochs"].get<int>();
  if (j.contains("batch_size")) tc.batch_size = j["batch_size"].get<int>();
  if (j.contains("learning_rate")) tc.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("momentum")) tc.momentum = j["momentum"].get<double>();
  if (j.contains("data_seed")) tc.data_seed = j["data_seed"].get<std::uint64_t>();
  if (j.contains("dataset_size")) tc.dataset_size = j["dataset_size"].get<int>();
  if (j.contains("sequence_length")) tc.sequence_length = j["sequence_length"].get<int>();
  if (j.contains("class_count")) tc.class_count = j["class_count"].get<int>();
  validate(tc);
  return tc;
}

inline nlohmann::json parse_json_file(const std::string& path, const std::string& what) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + what + " file: " + path);
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(what + " file " + path + " is not valid JSON: " + e.what());
  }
}

inline ModelConfig load_model_config(const std::string& path) {
  return model_config_from_json(parse_json_file(path, "model config"));
}

inline TrainConfig load_train_config(const std::string& path) {
  return train_config_from_json(parse_json_file(path, "train config"));
}

inline nlohmann::json to_json(const ParamReport& report) {
  nlohmann::json j;
  j["trainable_float_count"] = report.trainable_float_count;
  j["frozen_implicit_count"] = report.frozen_implicit_count;
  j["stored_bytes_on_the_fly"] = report.stored_bytes_on_the_fly;
  j["stored_bytes_materialized"] = report.stored_bytes_materialized;
  nlohmann::json layers = nlohmann::json::array();
  for (const ParamLayerRow& row : report.layers) {
    layers.push_back({{"name", row.name},
                      {"kind", row.kind},
                      {"trainable_floats", row.trainable_floats},
                      {"frozen_entries", row.frozen_entries},
                      {"bytes_on_the_fly", row.bytes_on_the_fly},
                      {"bytes_materialized", row.bytes_materialized}});
  }
  j["layers"] = layers;
  return j;
}

}  // namespace ternconv
