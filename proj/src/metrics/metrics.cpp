// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#include "cose/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <boost/math/special_functions/beta.hpp>

#include "cose/error.hpp"
#include "cose/metrics/summation.hpp"

namespace cose::metrics {

std::string EvalRecord::key() const {
  std::string k = std::to_string(image_id);
  if (kind == PerturbationKind::kTransform) {
    k += "/t" + std::to_string(sample);
  } else {
    k += "/ckpt" + std::to_string(checkpoint_epoch);
  }
  return k;
}

void sort_records(std::vector<EvalRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const EvalRecord& a, const EvalRecord& b) {
    return std::tie(a.method, a.image_id, a.kind, a.sample, a.checkpoint_epoch) <
           std::tie(b.method, b.image_id, b.kind, b.sample, b.checkpoint_epoch);
  });
}

namespace {

bool in_consistent(const EvalRecord& r) { return r.kind == PerturbationKind::kTransform && r.equivalent; }
bool in_sensitive(const EvalRecord& r) { return !r.equivalent; }

// Sums in ascending value order so any permutation of the inputs gives the
// same bits.
double ordered_mean(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  NeumaierSum s;
  for (double x : v) s.add(x);
  return s.value() / static_cast<double>(v.size());
}

template <typename Pred>
std::vector<double> scores(std::span<const EvalRecord> records, Pred pred) {
  std::vector<double> out;
  for (const auto& r : records) {
    if (pred(r)) out.push_back(r.score);
  }
  return out;
}

struct Accumulator {
  std::vector<double> consistent, sensitive;
  Cell cell() const {
    Cell c;
    c.consistent = consistent.size();
    c.sensitive = sensitive.size();
    if (!consistent.empty()) c.consistency = ordered_mean(consistent);
    if (!sensitive.empty()) c.sensitivity = ordered_mean(sensitive);
    if (c.consistency && c.sensitivity) c.cose = metrics::cose(*c.consistency, *c.sensitivity);
    return c;
  }
  void add(const EvalRecord& r) {
    if (in_consistent(r)) consistent.push_back(r.score);
    if (in_sensitive(r)) sensitive.push_back(r.score);
  }
};

}  // namespace

double consistency(std::span<const EvalRecord> records) {
  auto v = scores(records, in_consistent);
  if (v.empty()) throw Error(Errc::kUndefinedMetric, "consistency undefined: no prediction-preserving transform pairs");
  return ordered_mean(std::move(v));
}

double sensitivity(std::span<const EvalRecord> records) {
  auto v = scores(records, in_sensitive);
  if (v.empty()) throw Error(Errc::kUndefinedMetric, "sensitivity undefined: no prediction-changing pairs");
  return ordered_mean(std::move(v));
}

double cose(double c, double s) {
  if (c + s == 0.0) return 0.0;
  return 200.0 * c * s / (c + s);
}

MetricReport aggregate(std::string method, std::string model, std::string dataset,
                       std::span<const EvalRecord> records) {
  MetricReport rep;
  rep.method = std::move(method);
  rep.model = std::move(model);
  rep.dataset = std::move(dataset);
  Accumulator all;
  std::map<std::string, Accumulator> by_transform, by_kind;
  std::map<int, Accumulator> by_magnitude;
  std::vector<double> coverage;
  for (const auto& r : records) {
    all.add(r);
    coverage.push_back(r.mask_coverage);
    if (r.clamped) ++rep.clamp_events;
    if (r.kind == PerturbationKind::kTransform) {
      ++rep.transform_records;
      if (!r.equivalent) ++rep.sensitive_transform;
      by_transform[std::string(transforms::name_of(r.transform.name))].add(r);
      by_kind[r.transform.kind() == transforms::TransformKind::kGeometric ? "geometric" : "photometric"].add(r);
      if (transforms::is_ranged(r.transform.name)) by_magnitude[r.transform.magnitude_index].add(r);
    } else {
      ++rep.checkpoint_records;
      if (!r.equivalent) ++rep.sensitive_checkpoint;
      by_kind["checkpoint"].add(r);
    }
  }
  rep.overall = all.cell();
  if (!coverage.empty()) rep.mean_mask_coverage = ordered_mean(std::move(coverage));
  for (const auto& [k, acc] : by_transform) rep.per_transform[k] = acc.cell();
  for (const auto& [k, acc] : by_kind) rep.per_kind[k] = acc.cell();
  for (const auto& [k, acc] : by_magnitude) rep.per_magnitude[k] = acc.cell();
  return rep;
}

Correlation checkpoint_correlation(std::span<const std::pair<double, double>> pairs, double alpha) {
  const std::size_t n = pairs.size();
  if (n < 3) throw Error(Errc::kInvalidArgument, "correlation needs at least 3 pairs");
  NeumaierSum sx, sy;
  for (const auto& [x, y] : pairs) {
    sx.add(x);
    sy.add(y);
  }
  const double mx = sx.value() / static_cast<double>(n), my = sy.value() / static_cast<double>(n);
  NeumaierSum sxx, syy, sxy;
  for (const auto& [x, y] : pairs) {
    sxx.add((x - mx) * (x - mx));
    syy.add((y - my) * (y - my));
    sxy.add((x - mx) * (y - my));
  }
  if (sxx.value() <= 0.0 || syy.value() <= 0.0) {
    throw Error(Errc::kUndefinedCorrelation, "correlation undefined: a coordinate has zero variance");
  }
  Correlation c;
  c.n = n;
  c.r = std::clamp(sxy.value() / std::sqrt(sxx.value() * syy.value()), -1.0, 1.0);
  const double df = static_cast<double>(n - 2);
  if (std::abs(c.r) == 1.0) {
    c.p_value = 0.0;
  } else if (df > 0.0) {
    const double t2 = c.r * c.r * df / (1.0 - c.r * c.r);
    // Two-sided p = I_{df / (df + t^2)}(df / 2, 1 / 2).
    c.p_value = boost::math::ibeta(df / 2.0, 0.5, df / (df + t2));
  }
  c.significant = c.p_value < alpha;
  return c;
}

}  // namespace cose::metrics
