// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cose/transforms/transforms.hpp"

namespace cose::metrics {

enum class PerturbationKind { kTransform, kCheckpoint };

/// One scored (image, perturbation) pair. `score` is SSIM for equivalent
/// pairs and the distance 1 - SSIM otherwise.
struct EvalRecord {
  std::string method;
  int image_id = 0;
  PerturbationKind kind = PerturbationKind::kTransform;
  int sample = 0;                     // transform sample index per image
  transforms::TransformSpec transform;  // kind == kTransform
  int checkpoint_epoch = -1;          // kind == kCheckpoint
  bool equivalent = false;
  double score = 0.0;
  double mask_coverage = 1.0;
  bool clamped = false;

  /// Stable ordering key: image, kind, sample or epoch.
  std::string key() const;
};

/// Sorts by (method, image_id, kind, sample, checkpoint_epoch).
void sort_records(std::vector<EvalRecord>& records);

/// Mean SSIM over equivalent transform records. Throws Errc::kUndefinedMetric when there are none.
double consistency(std::span<const EvalRecord> records);
/// Mean distance over non-equivalent transform and checkpoint records.
/// Throws Errc::kUndefinedMetric when there are none.
double sensitivity(std::span<const EvalRecord> records);
/// Harmonic mean in percent; 0 when both inputs are 0.
double cose(double consistency, double sensitivity);

struct Cell {
  std::size_t consistent = 0;  // N
  std::size_t sensitive = 0;   // M
  std::optional<double> consistency;
  std::optional<double> sensitivity;
  std::optional<double> cose;
};

struct MetricReport {
  std::string method;
  std::string model;
  std::string dataset;
  Cell overall;
  std::size_t transform_records = 0;
  std::size_t sensitive_transform = 0;
  std::size_t checkpoint_records = 0;   // all scored checkpoint comparisons
  std::size_t sensitive_checkpoint = 0;
  std::size_t clamp_events = 0;
  double mean_mask_coverage = 1.0;
  std::map<std::string, Cell> per_transform;  // by transform name
  std::map<int, Cell> per_magnitude;         // ranged transforms only
  std::map<std::string, Cell> per_kind;       // geometric / photometric / checkpoint
};

/// Aggregates the records of one method. Empty sets leave the matching
/// optionals unset instead of failing.
MetricReport aggregate(std::string method, std::string model, std::string dataset,
                       std::span<const EvalRecord> records);

struct Correlation {
  std::size_t n = 0;
  double r = 0.0;
  double p_value = 1.0;
  bool significant = false;
};

/// Pearson r with a two-sided t-test on n - 2 degrees of freedom.
/// Throws Errc::kInvalidArgument for fewer than 3 pairs and
/// Errc::kUndefinedCorrelation for zero variance in either coordinate.
Correlation checkpoint_correlation(std::span<const std::pair<double, double>> pairs, double alpha = 0.05);

}  // namespace cose::metrics
