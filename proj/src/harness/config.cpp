// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cose/harness/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "cose/error.hpp"

namespace cose::harness {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw Error(Errc::kConfig, field + ": " + why);
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where.empty() ? "config" : where, "expected an object");
  const std::set<std::string> known(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!known.count(key)) fail(where.empty() ? key : where + "." + key, "unknown key");
  }
}

template <typename T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  const std::string field = where.empty() ? key : where + "." + key;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) fail(field, "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) fail(field, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (it->is_number_unsigned() == false && it->template get<std::int64_t>() < 0) {
          fail(field, "expected a non-negative integer");
        }
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) fail(field, "expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) fail(field, "expected a string");
    }
    out = it->template get<T>();
  } catch (const json::exception& e) {
    fail(field, e.what());
  }
}

std::vector<int> read_int_list(const json& value, const std::string& field) {
  if (!value.is_array()) fail(field, "expected a list of integers");
  std::vector<int> out;
  for (const auto& v : value) {
    if (!v.is_number_integer()) fail(field, "expected a list of integers");
    out.push_back(v.get<int>());
  }
  return out;
}

DatasetSource parse_source(const std::string& text) {
  if (text == "toy") return DatasetSource::kToy;
  if (text == "folder") return DatasetSource::kFolder;
  if (text == "external") return DatasetSource::kExternal;
  fail("dataset.source", "expected toy, folder or external, got '" + text + "'");
}

}  // namespace

std::string_view source_name(DatasetSource source) noexcept {
  switch (source) {
    case DatasetSource::kToy: return "toy";
    case DatasetSource::kFolder: return "folder";
    case DatasetSource::kExternal: return "external";
  }
  return "?";
}

void RunConfig::validate() const {
  std::set<std::string> seen;
  for (const auto& m : methods) {
    if (!seen.insert(m).second) fail("methods", "duplicate method '" + m + "'");
  }
  if (samples_per_image < 1) fail("samples_per_image", "must be at least 1");
  if (max_images < 0) fail("max_images", "must be non-negative");
  if (threads < 1) fail("threads", "must be at least 1");
  if (dataset.source != DatasetSource::kToy && dataset.path.empty()) fail("dataset.path", "required");
  if (dataset.per_class < 1) fail("dataset.per_class", "must be at least 1");
  if (!(dataset.train_fraction > 0.0 && dataset.train_fraction < 1.0)) {
    fail("dataset.train_fraction", "must lie in (0, 1)");
  }
  if (training.epochs < 1) fail("training.epochs", "must be at least 1");
  if (training.batch_size < 1) fail("training.batch_size", "must be at least 1");
  if (!(training.learning_rate > 0.0)) fail("training.learning_rate", "must be positive");
  for (int e : training.checkpoint_epochs) {
    if (e < 0 || e > training.epochs) fail("training.checkpoints", "epochs must lie in [0, epochs]");
  }
  try {
    ssim.validate();
  } catch (const Error& e) {
    fail("ssim", e.what());
  }
  try {
    saliency.validate();
  } catch (const Error& e) {
    fail("saliency", e.what());
  }
}

RunConfig parse_config(const json& doc) {
  RunConfig c;
  check_keys(doc, "",
             {"dataset", "methods", "samples_per_image", "max_images", "seed", "training", "checkpoint_dir",
              "analyze_checkpoints", "ssim", "saliency", "out", "threads"});
  if (auto it = doc.find("dataset"); it != doc.end()) {
    check_keys(*it, "dataset", {"source", "path", "per_class", "train_fraction"});
    std::string source = "toy", path;
    read(*it, "source", "dataset", source);
    read(*it, "path", "dataset", path);
    c.dataset.source = parse_source(source);
    c.dataset.path = path;
    read(*it, "per_class", "dataset", c.dataset.per_class);
    read(*it, "train_fraction", "dataset", c.dataset.train_fraction);
  }
  if (auto it = doc.find("methods"); it != doc.end()) {
    if (!it->is_array()) fail("methods", "expected a list of names");
    c.methods.clear();
    for (const auto& m : *it) {
      if (!m.is_string()) fail("methods", "expected a list of names");
      c.methods.push_back(m.get<std::string>());
    }
    if (c.methods.empty()) fail("methods", "at least one method is required when given");
  }
  read(doc, "samples_per_image", "", c.samples_per_image);
  read(doc, "max_images", "", c.max_images);
  read(doc, "seed", "", c.seed);
  if (auto it = doc.find("training"); it != doc.end()) {
    check_keys(*it, "training",
               {"epochs", "learning_rate", "momentum", "batch_size", "augment_probability", "checkpoints"});
    read(*it, "epochs", "training", c.training.epochs);
    read(*it, "learning_rate", "training", c.training.learning_rate);
    read(*it, "momentum", "training", c.training.momentum);
    read(*it, "batch_size", "training", c.training.batch_size);
    read(*it, "augment_probability", "training", c.training.augment_probability);
    if (auto cp = it->find("checkpoints"); cp != it->end()) {
      c.training.checkpoint_epochs = read_int_list(*cp, "training.checkpoints");
    }
  }
  std::string text;
  read(doc, "checkpoint_dir", "", text);
  c.checkpoint_dir = text;
  read(doc, "analyze_checkpoints", "", c.analyze_checkpoints);
  if (auto it = doc.find("ssim"); it != doc.end()) {
    check_keys(*it, "ssim", {"mode", "window", "c1", "c2"});
    std::string mode = std::string(metrics::mode_name(c.ssim.mode));
    read(*it, "mode", "ssim", mode);
    try {
      c.ssim.mode = metrics::parse_mode(mode);
    } catch (const Error&) {
      fail("ssim.mode", "expected windowed or global, got '" + mode + "'");
    }
    read(*it, "window", "ssim", c.ssim.window);
    read(*it, "c1", "ssim", c.ssim.c1);
    read(*it, "c2", "ssim", c.ssim.c2);
  }
  if (auto it = doc.find("saliency"); it != doc.end()) {
    auto& s = c.saliency;
    check_keys(*it, "saliency",
               {"ig_steps", "blur_ig_steps", "blur_ig_max_sigma", "guided_ig_steps", "guided_ig_fraction",
                "smoothgrad_samples", "smoothgrad_noise", "lime_segments", "lime_samples", "lime_ridge",
                "lime_kernel_width"});
    read(*it, "ig_steps", "saliency", s.ig_steps);
    read(*it, "blur_ig_steps", "saliency", s.blur_ig_steps);
    read(*it, "blur_ig_max_sigma", "saliency", s.blur_ig_max_sigma);
    read(*it, "guided_ig_steps", "saliency", s.guided_ig_steps);
    read(*it, "guided_ig_fraction", "saliency", s.guided_ig_fraction);
    read(*it, "smoothgrad_samples", "saliency", s.smoothgrad_samples);
    read(*it, "smoothgrad_noise", "saliency", s.smoothgrad_noise);
    read(*it, "lime_segments", "saliency", s.lime_segments);
    read(*it, "lime_samples", "saliency", s.lime_samples);
    read(*it, "lime_ridge", "saliency", s.lime_ridge);
    read(*it, "lime_kernel_width", "saliency", s.lime_kernel_width);
  }
  text.clear();
  read(doc, "out", "", text);
  if (!text.empty()) c.out_dir = text;
  read(doc, "threads", "", c.threads);
  c.training.seed = c.seed;
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw Error(Errc::kConfig, path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

json to_json(const RunConfig& c) {
  json j;
  j["dataset"] = {{"source", std::string(source_name(c.dataset.source))},
                  {"path", c.dataset.path.generic_string()},
                  {"per_class", c.dataset.per_class},
                  {"train_fraction", c.dataset.train_fraction}};
  j["methods"] = c.methods;
  j["samples_per_image"] = c.samples_per_image;
  j["max_images"] = c.max_images;
  j["seed"] = c.seed;
  j["training"] = {{"epochs", c.training.epochs},
                   {"learning_rate", c.training.learning_rate},
                   {"momentum", c.training.momentum},
                   {"batch_size", c.training.batch_size},
                   {"augment_probability", c.training.augment_probability},
                   {"checkpoints", c.training.checkpoint_epochs}};
  j["checkpoint_dir"] = c.checkpoint_dir.generic_string();
  j["analyze_checkpoints"] = c.analyze_checkpoints;
  j["ssim"] = {{"mode", std::string(metrics::mode_name(c.ssim.mode))},
               {"window", c.ssim.window},
               {"c1", c.ssim.c1},
               {"c2", c.ssim.c2}};
  const auto& s = c.saliency;
  j["saliency"] = {{"ig_steps", s.ig_steps},
                   {"blur_ig_steps", s.blur_ig_steps},
                   {"blur_ig_max_sigma", s.blur_ig_max_sigma},
                   {"guided_ig_steps", s.guided_ig_steps},
                   {"guided_ig_fraction", s.guided_ig_fraction},
                   {"smoothgrad_samples", s.smoothgrad_samples},
                   {"smoothgrad_noise", s.smoothgrad_noise},
                   {"lime_segments", s.lime_segments},
                   {"lime_samples", s.lime_samples},
                   {"lime_ridge", s.lime_ridge},
                   {"lime_kernel_width", s.lime_kernel_width}};
  j["out"] = c.out_dir.generic_string();
  j["threads"] = c.threads;
  return j;
}

}  // namespace cose::harness
