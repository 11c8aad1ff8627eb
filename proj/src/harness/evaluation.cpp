// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "cose/error.hpp"
#include "cose/harness/harness.hpp"
#include "cose/metrics/ssim.hpp"
#include "cose/metrics/summation.hpp"
#include "cose/random.hpp"

namespace cose::harness {

namespace {

constexpr std::uint64_t kTransformStream = 3;
constexpr std::uint64_t kMethodStream = 4;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Runs body(i) for i in [0, n). Items are claimed dynamically but each
// writes only its own slot, so results do not depend on scheduling.
template <typename Body>
void parallel_for(std::size_t n, int threads, Body body) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

}  // namespace

std::vector<transforms::TransformSpec> sample_transforms(std::uint64_t seed, int image_id, int samples) {
  Rng rng(mix_seed(mix_seed(seed, kTransformStream), static_cast<std::uint64_t>(image_id)));
  std::vector<transforms::TransformSpec> out;
  out.reserve(static_cast<std::size_t>(samples));
  for (int k = 0; k < samples; ++k) out.push_back(transforms::sample_transform(rng));
  return out;
}

std::vector<ImageMaps> compute_maps(const Subject& subject, const RunConfig& config,
                                    std::span<const saliency::Method> methods) {
  if (!subject.final_model) throw Error(Errc::kInvalidArgument, "subject has no model");
  if (subject.images.size() != subject.image_ids.size()) {
    throw Error(Errc::kInvalidArgument, "image ids do not match images");
  }
  const std::size_t n = subject.images.size();
  const std::size_t m = methods.size();
  std::vector<ImageMaps> out(n * m);
  parallel_for(n, config.threads, [&](std::size_t i) {
    const Image& x = subject.images[i];
    const int id = subject.image_ids[i];
    const auto& f = *subject.final_model;
    const int label = model::predict(f, x).label;
    const auto specs = sample_transforms(config.seed, id, config.samples_per_image);
    std::vector<Image> tx;
    std::vector<int> t_label;
    for (const auto& spec : specs) {
      tx.push_back(transforms::apply(spec, x, subject.fill));
      t_label.push_back(model::predict(f, tx.back()).label);
    }
    std::vector<int> c_label;
    for (const auto& c : subject.checkpoints) c_label.push_back(model::predict(*c.model, x).label);

    saliency::MethodConfig mc = config.saliency;
    mc.seed = mix_seed(mix_seed(config.seed, kMethodStream), static_cast<std::uint64_t>(id));
    for (std::size_t j = 0; j < m; ++j) {
      const auto& method = methods[j];
      ImageMaps& maps = out[i * m + j];
      maps.method = method.name;
      maps.image_id = id;
      maps.original = {label, method.fn(f, x, label, mc)};
      for (std::size_t k = 0; k < specs.size(); ++k) {
        maps.transforms.push_back(
            {static_cast<int>(k), specs[k], {t_label[k], method.fn(f, tx[k], t_label[k], mc)}});
      }
      for (std::size_t e = 0; e < subject.checkpoints.size(); ++e) {
        const auto& c = subject.checkpoints[e];
        CheckpointVariant v{c.epoch, c.accuracy, {c_label[e], {}}};
        // Maps of agreeing checkpoints only feed the correlation analysis.
        if (config.analyze_checkpoints || c_label[e] != label) {
          v.variant.map = method.fn(*c.model, x, c_label[e], mc);
        }
        maps.checkpoints.push_back(std::move(v));
      }
    }
  });
  return out;
}

std::vector<metrics::EvalRecord> score_maps(const ImageMaps& maps, const metrics::SsimParams& params,
                                            Warnings& warnings) {
  using metrics::EvalRecord;
  using metrics::PerturbationKind;
  std::vector<EvalRecord> out;
  const SaliencyMap& original = maps.original.map;
  const std::string where = maps.method + " image " + std::to_string(maps.image_id);
  for (const auto& t : maps.transforms) {
    EvalRecord r;
    r.method = maps.method;
    r.image_id = maps.image_id;
    r.kind = PerturbationKind::kTransform;
    r.sample = t.sample;
    r.transform = t.spec;
    r.equivalent = t.variant.prediction == maps.original.prediction;
    const auto inverted = transforms::invert_on_map(t.spec, t.variant.map);
    try {
      const auto s = metrics::ssim_detail(original, inverted.map, params);
      r.score = r.equivalent ? s.value : 1.0 - s.value;
      r.clamped = s.clamped;
      r.mask_coverage = s.coverage;
    } catch (const Error& e) {
      if (e.code() != Errc::kNoOverlap) throw;
      warnings.add(where + " " + t.spec.to_string() + ": no valid SSIM window, pair skipped");
      continue;
    }
    out.push_back(std::move(r));
  }
  for (const auto& c : maps.checkpoints) {
    if (c.variant.prediction == maps.original.prediction) continue;
    if (c.variant.map.values.empty()) {
      warnings.add(where + " epoch " + std::to_string(c.epoch) + ": checkpoint map missing, pair skipped");
      continue;
    }
    EvalRecord r;
    r.method = maps.method;
    r.image_id = maps.image_id;
    r.kind = PerturbationKind::kCheckpoint;
    r.checkpoint_epoch = c.epoch;
    r.equivalent = false;
    const auto s = metrics::ssim_detail(original, c.variant.map, params);
    r.score = 1.0 - s.value;
    r.clamped = s.clamped;
    r.mask_coverage = s.coverage;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<CheckpointCorrelation> checkpoint_analysis(std::span<const ImageMaps> maps,
                                                       const metrics::SsimParams& params, int final_epoch,
                                                       double final_accuracy) {
  struct Samples {
    double accuracy = 0.0;
    std::vector<double> ssim;
  };
  std::vector<std::string> order;
  std::map<std::string, std::map<int, Samples>> by_method;
  for (const auto& im : maps) {
    if (!by_method.count(im.method)) order.push_back(im.method);
    auto& epochs = by_method[im.method];
    for (const auto& c : im.checkpoints) {
      if (c.variant.map.values.empty()) continue;
      auto& s = epochs[c.epoch];
      s.accuracy = c.accuracy;
      s.ssim.push_back(metrics::ssim(im.original.map, c.variant.map, params));
    }
    auto& fin = epochs[final_epoch];
    fin.accuracy = final_accuracy;
    fin.ssim.push_back(1.0);
  }
  std::vector<CheckpointCorrelation> out;
  for (const auto& name : order) {
    CheckpointCorrelation cc;
    cc.method = name;
    std::vector<std::pair<double, double>> pooled, means;
    for (const auto& [epoch, s] : by_method[name]) {
      metrics::NeumaierSum sum;
      auto sorted = s.ssim;
      std::sort(sorted.begin(), sorted.end());
      for (double v : sorted) sum.add(v);
      const double mean = sum.value() / static_cast<double>(sorted.size());
      cc.points.push_back({epoch, s.accuracy, mean, s.ssim.size()});
      means.emplace_back(s.accuracy, mean);
      for (double v : s.ssim) pooled.emplace_back(s.accuracy, v);
    }
    try {
      cc.pooled = metrics::checkpoint_correlation(pooled);
    } catch (const Error& e) {
      cc.pooled_error = e.what();
    }
    try {
      cc.epoch_means = metrics::checkpoint_correlation(means);
    } catch (const Error& e) {
      cc.epoch_means_error = e.what();
    }
    out.push_back(std::move(cc));
  }
  return out;
}

bool RunResult::all_undefined() const {
  return std::none_of(reports.begin(), reports.end(), [](const auto& r) { return r.overall.cose.has_value(); });
}

RunResult evaluate_maps(std::span<const ImageMaps> maps, const RunConfig& config,
                        const std::vector<std::string>& methods, const std::string& model_name,
                        const std::string& dataset_name, int final_epoch, double final_accuracy) {
  const auto t0 = Clock::now();
  RunResult result;
  Warnings warnings;
  std::vector<std::vector<metrics::EvalRecord>> per_map(maps.size());
  std::vector<Warnings> per_map_warnings(maps.size());
  parallel_for(maps.size(), config.threads,
               [&](std::size_t i) { per_map[i] = score_maps(maps[i], config.ssim, per_map_warnings[i]); });
  std::map<std::string, std::vector<metrics::EvalRecord>> by_method;
  std::set<int> images;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    images.insert(maps[i].image_id);
    for (auto& w : per_map_warnings[i].messages) warnings.add(std::move(w));
    auto& bucket = by_method[maps[i].method];
    for (auto& r : per_map[i]) bucket.push_back(std::move(r));
  }
  for (const auto& name : methods) {
    auto& records = by_method[name];
    metrics::sort_records(records);
    auto report = metrics::aggregate(name, model_name, dataset_name, records);
    if (!report.overall.consistency) warnings.add(name + ": consistency undefined (no consistent pairs)");
    if (!report.overall.sensitivity) warnings.add(name + ": sensitivity undefined (no sensitive pairs)");
    if (report.clamp_events > 0) {
      warnings.add(name + ": " + std::to_string(report.clamp_events) + " SSIM values clamped to [0, 1]");
    }
    if (report.mean_mask_coverage < 0.5) {
      warnings.add(name + ": mean mask coverage " + fmt("%.3f", report.mean_mask_coverage));
    }
    result.reports.push_back(std::move(report));
    result.records.insert(result.records.end(), records.begin(), records.end());
  }
  metrics::sort_records(result.records);
  result.manifest.timing_seconds["score"] = seconds_since(t0);

  if (config.analyze_checkpoints) {
    const auto t1 = Clock::now();
    result.correlations = checkpoint_analysis(maps, config.ssim, final_epoch, final_accuracy);
    // Keep the configured method order.
    std::vector<CheckpointCorrelation> ordered;
    for (const auto& name : methods) {
      for (auto& c : result.correlations) {
        if (c.method == name) ordered.push_back(std::move(c));
      }
    }
    result.correlations = std::move(ordered);
    for (const auto& c : result.correlations) {
      if (!c.pooled_error.empty()) warnings.add(c.method + ": pooled correlation: " + c.pooled_error);
      if (!c.epoch_means_error.empty()) {
        warnings.add(c.method + ": per-epoch correlation: " + c.epoch_means_error);
      }
    }
    result.manifest.timing_seconds["checkpoint_analysis"] = seconds_since(t1);
  }

  auto& mf = result.manifest;
  mf.config = to_json(config);
  // Neither changes a result; dropping them keeps manifests comparable.
  mf.config.erase("out");
  mf.config.erase("threads");
  mf.model = model_name;
  mf.dataset = dataset_name;
  mf.images = images.size();
  mf.methods = methods;
  mf.warnings = std::move(warnings.messages);
  return result;
}

RunResult run_evaluation(const RunConfig& config, const Subject& subject,
                         std::span<const saliency::Method> methods) {
  const auto t0 = Clock::now();
  const auto maps = compute_maps(subject, config, methods);
  const double map_seconds = seconds_since(t0);
  std::vector<std::string> names;
  for (const auto& m : methods) names.push_back(m.name);
  auto result = evaluate_maps(maps, config, names, subject.model_name, subject.dataset_name, subject.final_epoch,
                              subject.final_accuracy);
  result.manifest.images = subject.images.size();
  result.manifest.timing_seconds["maps"] = map_seconds;
  return result;
}

RunResult run_evaluation(const RunConfig& config, const Log& log) {
  const auto t0 = Clock::now();
  if (config.dataset.source == DatasetSource::kExternal) {
    auto ingested = ingest_external(config.dataset.path, config.methods);
    auto result = evaluate_maps(ingested.maps, config, ingested.methods, ingested.model_name,
                                ingested.dataset_name, ingested.final_epoch, ingested.final_accuracy);
    auto& w = result.manifest.warnings;
    w.insert(w.begin(), ingested.warnings.begin(), ingested.warnings.end());
    result.manifest.timing_seconds["ingest"] = seconds_since(t0) - result.manifest.timing_seconds["score"];
    return result;
  }
  const auto subject = prepare_subject(config, log);
  const double prepare_seconds = seconds_since(t0);
  const auto methods = resolve_methods(config.methods);
  auto result = run_evaluation(config, subject, methods);
  result.manifest.timing_seconds["prepare"] = prepare_seconds;
  return result;
}

std::vector<CheckpointCorrelation> run_checkpoint_analysis(const RunConfig& config, const Subject& subject,
                                                           std::span<const saliency::Method> methods) {
  if (subject.checkpoints.size() < 2) {
    throw Error(Errc::kConfig, "checkpoint analysis needs at least two checkpoints before the final one");
  }
  RunConfig c = config;
  c.analyze_checkpoints = true;
  c.samples_per_image = 0;  // transform maps are not needed here
  const auto maps = compute_maps(subject, c, methods);
  auto out = checkpoint_analysis(maps, c.ssim, subject.final_epoch, subject.final_accuracy);
  return out;
}

}  // namespace cose::harness
