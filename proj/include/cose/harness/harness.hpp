// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cose/harness/config.hpp"
#include "cose/image.hpp"
#include "cose/metrics/metrics.hpp"
#include "cose/model/classifier.hpp"
#include "cose/model/dataset.hpp"
#include "cose/model/training.hpp"
#include "cose/saliency/saliency.hpp"
#include "cose/transforms/transforms.hpp"

namespace cose::harness {

inline constexpr const char* kEngineVersion = "0.1.0";

struct CheckpointModel {
  int epoch = 0;
  double accuracy = 0.0;
  std::shared_ptr<const model::Classifier> model;
};

/// Everything an evaluation runs against: the frozen final model, its
/// earlier checkpoints (ascending epochs, final excluded) and the images.
struct Subject {
  std::string model_name = "micro_cnn";
  std::string dataset_name = "toy";
  std::shared_ptr<const model::Classifier> final_model;
  int final_epoch = 0;
  double final_accuracy = 0.0;
  std::vector<CheckpointModel> checkpoints;
  std::vector<Image> images;
  std::vector<int> image_ids;
  std::vector<float> fill;  // per-channel out-of-frame value for geometric transforms
};

using Log = std::function<void(const std::string&)>;

model::Dataset load_dataset(const RunConfig& config);

/// Trains a freshly initialized micro model; the last checkpoint is final.
std::vector<model::ModelCheckpoint> train_checkpoints(const RunConfig& config, const model::Dataset& data,
                                                      const Log& log = {});
/// `epoch_<NNN>.cose` per checkpoint.
void save_checkpoints(std::span<const model::ModelCheckpoint> checkpoints,
                      const model::MicroModelConfig& model_config, const std::filesystem::path& dir);
/// Every checkpoint container in `dir`, ascending epoch. Errc::kIo when
/// there are none.
std::vector<model::ModelCheckpoint> load_checkpoints(const std::filesystem::path& dir,
                                                     model::MicroModelConfig* model_config = nullptr);

Subject make_subject(const RunConfig& config, const model::Dataset& data,
                     const model::MicroModelConfig& model_config,
                     std::span<const model::ModelCheckpoint> checkpoints);

/// Builds the dataset, then trains (or loads `checkpoint_dir`) and selects
/// the first max_images test images. Not valid for external sources.
Subject prepare_subject(const RunConfig& config, const Log& log = {});

/// Resolves configured names through the method registry.
std::vector<saliency::Method> resolve_methods(const std::vector<std::string>& names);

/// Transform samples for one image; shared by every method.
std::vector<transforms::TransformSpec> sample_transforms(std::uint64_t seed, int image_id, int samples);

struct VariantMap {
  int prediction = 0;
  SaliencyMap map;
};

struct TransformVariant {
  int sample = 0;
  transforms::TransformSpec spec;
  VariantMap variant;
};

struct CheckpointVariant {
  int epoch = 0;
  double accuracy = 0.0;
  VariantMap variant;
};

/// The maps of one method on one image. Transform maps are in the frame
/// of t(x); the scorer applies the inverse.
struct ImageMaps {
  std::string method;
  int image_id = 0;
  VariantMap original;
  std::vector<TransformVariant> transforms;
  std::vector<CheckpointVariant> checkpoints;
};

/// Computes every map. Work is split over images; the result is ordered by
/// (image, method) independent of the thread count.
std::vector<ImageMaps> compute_maps(const Subject& subject, const RunConfig& config,
                                    std::span<const saliency::Method> methods);

/// Non-fatal conditions collected during a run.
struct Warnings {
  std::vector<std::string> messages;
  void add(std::string message) { messages.push_back(std::move(message)); }
};

/// Scores one image's maps: equivalent transform pairs by SSIM (after the
/// inverse warp), non-equivalent ones and changed-prediction checkpoints
/// by distance.
std::vector<metrics::EvalRecord> score_maps(const ImageMaps& maps, const metrics::SsimParams& params,
                                            Warnings& warnings);

struct CheckpointPoint {
  int epoch = 0;
  double accuracy = 0.0;
  double mean_ssim = 0.0;
  std::size_t images = 0;
};

struct CheckpointCorrelation {
  std::string method;
  std::vector<CheckpointPoint> points;  // ascending epoch, final last
  std::optional<metrics::Correlation> pooled;       // one pair per (image, checkpoint)
  std::optional<metrics::Correlation> epoch_means;  // one pair per checkpoint
  std::string pooled_error;
  std::string epoch_means_error;
};

/// (accuracy, SSIM to the final model's map) per method, the final model
/// included as a point at SSIM 1.
std::vector<CheckpointCorrelation> checkpoint_analysis(std::span<const ImageMaps> maps,
                                                       const metrics::SsimParams& params,
                                                       int final_epoch, double final_accuracy);

struct RunManifest {
  nlohmann::json config;
  std::string engine_version = kEngineVersion;
  std::string model;
  std::string dataset;
  std::size_t images = 0;
  std::vector<std::string> methods;
  std::vector<std::string> warnings;
  std::map<std::string, double> timing_seconds;  // written apart from the manifest

  nlohmann::json to_json(std::span<const metrics::MetricReport> reports) const;
};

struct RunResult {
  std::vector<metrics::MetricReport> reports;  // one per method, config order
  std::vector<metrics::EvalRecord> records;    // sorted
  std::vector<CheckpointCorrelation> correlations;
  RunManifest manifest;

  /// True when no report has a defined COSE.
  bool all_undefined() const;
};

/// Maps, scores and aggregates. Undefined cells stay unset in their report
/// (and are listed as warnings) without aborting other methods.
RunResult evaluate_maps(std::span<const ImageMaps> maps, const RunConfig& config,
                        const std::vector<std::string>& methods, const std::string& model_name,
                        const std::string& dataset_name, int final_epoch, double final_accuracy);

RunResult run_evaluation(const RunConfig& config, const Subject& subject,
                         std::span<const saliency::Method> methods);
/// Prepares the subject from the config (or ingests external maps).
RunResult run_evaluation(const RunConfig& config, const Log& log = {});

/// Correlation table only; requires at least two earlier checkpoints.
std::vector<CheckpointCorrelation> run_checkpoint_analysis(const RunConfig& config, const Subject& subject,
                                                           std::span<const saliency::Method> methods);

/// One container per image (`image_<id>.cose`) with entries
/// `<method>/original`, `<method>/t<sample>` and `<method>/ckpt<epoch>`.
void export_maps(std::span<const ImageMaps> maps, const Subject& subject, const std::filesystem::path& dir);

struct IngestResult {
  std::vector<ImageMaps> maps;
  std::vector<std::string> methods;
  std::string model_name = "external";
  std::string dataset_name = "external";
  int final_epoch = 0;
  double final_accuracy = 0.0;
  std::vector<std::string> warnings;
};

/// Reads every *.cose file in `dir` (sorted by name). Images lacking an
/// entry for a method are skipped for that method with a warning; missing
/// prediction metadata is Errc::kMissingPredictions.
IngestResult ingest_external(const std::filesystem::path& dir, const std::vector<std::string>& methods);

/// Writes metrics.tsv, breakdown.tsv, records.tsv, correlation.tsv,
/// checkpoints.tsv and manifest.json, plus timing.json which is the only
/// file that varies between identical runs.
void emit_reports(const RunResult& result, const std::filesystem::path& out_dir);
/// correlation.tsv and checkpoints.tsv alone.
void emit_correlations(std::span<const CheckpointCorrelation> correlations, const std::filesystem::path& out_dir);

}  // namespace cose::harness
