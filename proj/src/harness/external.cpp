// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>

#include "cose/error.hpp"
#include "cose/harness/harness.hpp"
#include "cose/interchange/container.hpp"

namespace cose::harness {

namespace {

using nlohmann::json;
namespace ic = cose::interchange;

ic::Entry map_entry(const std::string& name, const SaliencyMap& map) {
  return {name, {static_cast<std::uint64_t>(map.height), static_cast<std::uint64_t>(map.width)}, map.values};
}

bool to_map(const ic::Entry& e, const std::string& method, int target, SaliencyMap& out) {
  if (e.dims.size() != 2 || e.dims[0] == 0 || e.dims[1] == 0) return false;
  out = SaliencyMap(static_cast<int>(e.dims[0]), static_cast<int>(e.dims[1]));
  out.values = e.values;
  out.method = method;
  out.target_class = target;
  return true;
}

int prediction_of(const json& obj, const std::string& file, const std::string& what) {
  const auto it = obj.find("prediction");
  if (it == obj.end() || !it->is_number_integer()) {
    throw Error(Errc::kMissingPredictions, file + ": no prediction for " + what);
  }
  return it->get<int>();
}

}  // namespace

void export_maps(std::span<const ImageMaps> maps, const Subject& subject, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::kIo, "cannot create " + dir.string() + ": " + ec.message());

  std::map<int, std::vector<const ImageMaps*>> by_image;
  for (const auto& m : maps) by_image[m.image_id].push_back(&m);
  for (const auto& [id, list] : by_image) {
    ic::Container c;
    const ImageMaps& first = *list.front();
    json methods = json::array();
    for (const auto* m : list) {
      methods.push_back(m->method);
      c.entries.push_back(map_entry(m->method + "/original", m->original.map));
      for (const auto& t : m->transforms) {
        c.entries.push_back(map_entry(m->method + "/t" + std::to_string(t.sample), t.variant.map));
      }
      for (const auto& k : m->checkpoints) {
        if (k.variant.map.values.empty()) continue;
        c.entries.push_back(map_entry(m->method + "/ckpt" + std::to_string(k.epoch), k.variant.map));
      }
    }
    json transforms_meta = json::array();
    for (const auto& t : first.transforms) {
      transforms_meta.push_back({{"sample", t.sample}, {"spec", t.spec.to_string()}, {"prediction", t.variant.prediction}});
    }
    json checkpoints_meta = json::array();
    for (const auto& k : first.checkpoints) {
      checkpoints_meta.push_back({{"epoch", k.epoch}, {"accuracy", k.accuracy}, {"prediction", k.variant.prediction}});
    }
    c.metadata = {{"kind", "saliency_maps"},
                  {"model", subject.model_name},
                  {"dataset", subject.dataset_name},
                  {"image_id", id},
                  {"methods", methods},
                  {"final_epoch", subject.final_epoch},
                  {"final_accuracy", subject.final_accuracy},
                  {"prediction", first.original.prediction},
                  {"transforms", transforms_meta},
                  {"checkpoints", checkpoints_meta}};
    char name[32];
    std::snprintf(name, sizeof name, "image_%05d.cose", id);
    ic::write(c, dir / name);
  }
}

IngestResult ingest_external(const std::filesystem::path& dir, const std::vector<std::string>& methods) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw Error(Errc::kIo, dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir, ec)) {
    if (e.path().extension() == ".cose") files.push_back(e.path());
  }
  if (ec) throw Error(Errc::kIo, "cannot list " + dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());

  IngestResult out;
  std::vector<ic::Container> containers;
  std::set<std::string> seen;
  for (const auto& f : files) {
    containers.push_back(ic::read(f));
    const auto& meta = containers.back().metadata;
    if (containers.size() == 1) {
      out.model_name = meta.value("model", out.model_name);
      out.dataset_name = meta.value("dataset", out.dataset_name);
      out.final_epoch = meta.value("final_epoch", 0);
      out.final_accuracy = meta.value("final_accuracy", 0.0);
    }
    // Methods present in the file, in entry order.
    for (const auto& e : containers.back().entries) {
      const auto slash = e.name.rfind('/');
      if (slash != std::string::npos && e.name.compare(slash, std::string::npos, "/original") == 0) {
        const std::string m = e.name.substr(0, slash);
        if (seen.insert(m).second && methods.empty()) out.methods.push_back(m);
      }
    }
  }
  if (!methods.empty()) out.methods = methods;
  if (out.methods.empty()) out.methods = saliency::method_names();

  for (std::size_t fi = 0; fi < files.size(); ++fi) {
    const auto& c = containers[fi];
    const std::string file = files[fi].filename().string();
    const json& meta = c.metadata;
    if (!meta.is_object()) throw Error(Errc::kMissingPredictions, file + ": no metadata");
    const int id = meta.value("image_id", static_cast<int>(fi));
    const int label = prediction_of(meta, file, "the original image");
    struct TMeta {
      int sample;
      transforms::TransformSpec spec;
      int prediction;
    };
    std::vector<TMeta> tmeta;
    if (auto it = meta.find("transforms"); it != meta.end()) {
      if (!it->is_array()) throw Error(Errc::kInvalidContainer, file + ": transforms must be a list");
      for (const auto& t : *it) {
        if (!t.is_object()) throw Error(Errc::kInvalidContainer, file + ": malformed transform record");
        const int sample = t.value("sample", static_cast<int>(tmeta.size()));
        const int p = prediction_of(t, file, "transform sample " + std::to_string(sample));
        const auto spec_it = t.find("spec");
        if (spec_it == t.end() || !spec_it->is_string()) {
          throw Error(Errc::kInvalidContainer, file + ": transform sample " + std::to_string(sample) + " has no spec");
        }
        transforms::TransformSpec spec;
        try {
          spec = transforms::TransformSpec::parse(spec_it->get<std::string>());
        } catch (const Error& e) {
          throw Error(Errc::kInvalidContainer, file + ": " + e.what());
        }
        tmeta.push_back({sample, spec, p});
      }
    }
    struct CMeta {
      int epoch;
      double accuracy;
      int prediction;
    };
    std::vector<CMeta> cmeta;
    if (auto it = meta.find("checkpoints"); it != meta.end()) {
      if (!it->is_array()) throw Error(Errc::kInvalidContainer, file + ": checkpoints must be a list");
      for (const auto& k : *it) {
        if (!k.is_object() || !k.contains("epoch") || !k["epoch"].is_number_integer()) {
          throw Error(Errc::kInvalidContainer, file + ": malformed checkpoint record");
        }
        const int epoch = k["epoch"].get<int>();
        cmeta.push_back({epoch, k.value("accuracy", 0.0), prediction_of(k, file, "epoch " + std::to_string(epoch))});
      }
    }

    for (const auto& method : out.methods) {
      auto skip = [&](const std::string& why) {
        out.warnings.push_back(file + ": " + method + " skipped, " + why);
      };
      const auto* orig = c.find(method + "/original");
      ImageMaps im;
      im.method = method;
      im.image_id = id;
      im.original.prediction = label;
      if (!orig) {
        skip("no original map");
        continue;
      }
      if (!to_map(*orig, method, label, im.original.map)) {
        skip("original map is not a 2-D array");
        continue;
      }
      std::string problem;
      for (const auto& t : tmeta) {
        const auto* e = c.find(method + "/t" + std::to_string(t.sample));
        TransformVariant v{t.sample, t.spec, {t.prediction, {}}};
        if (!e) {
          problem = "missing map for transform sample " + std::to_string(t.sample);
          break;
        }
        if (!to_map(*e, method, t.prediction, v.variant.map) || v.variant.map.height != im.original.map.height ||
            v.variant.map.width != im.original.map.width) {
          problem = "transform sample " + std::to_string(t.sample) + " has the wrong shape";
          break;
        }
        im.transforms.push_back(std::move(v));
      }
      for (const auto& k : cmeta) {
        if (!problem.empty()) break;
        CheckpointVariant v{k.epoch, k.accuracy, {k.prediction, {}}};
        if (const auto* e = c.find(method + "/ckpt" + std::to_string(k.epoch))) {
          if (!to_map(*e, method, k.prediction, v.variant.map) || v.variant.map.height != im.original.map.height ||
              v.variant.map.width != im.original.map.width) {
            problem = "epoch " + std::to_string(k.epoch) + " map has the wrong shape";
            break;
          }
        } else if (k.prediction != label) {
          problem = "missing map for epoch " + std::to_string(k.epoch);
          break;
        }
        im.checkpoints.push_back(std::move(v));
      }
      if (!problem.empty()) {
        skip(problem);
        continue;
      }
      out.maps.push_back(std::move(im));
    }
  }
  return out;
}

}  // namespace cose::harness
