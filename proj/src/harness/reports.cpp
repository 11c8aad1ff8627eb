// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include "cose/error.hpp"
#include "cose/harness/harness.hpp"

namespace cose::harness {

namespace {

using nlohmann::json;

constexpr const char* kUndefined = "undefined";

std::string num(double v, int digits = 12) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : kUndefined; }

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw Error(Errc::kIo, "write failed for " + path.string());
}

void make_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

json cell_json(const metrics::Cell& c) {
  auto value = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"N", c.consistent},
          {"M", c.sensitive},
          {"consistency", value(c.consistency)},
          {"sensitivity", value(c.sensitivity)},
          {"cose", value(c.cose)}};
}

void cell_row(std::ostringstream& os, const std::string& prefix, const metrics::Cell& c) {
  os << prefix << '\t' << c.consistent << '\t' << c.sensitive << '\t' << opt(c.consistency) << '\t'
     << opt(c.sensitivity) << '\t' << opt(c.cose) << '\n';
}

std::string metrics_table(std::span<const metrics::MetricReport> reports) {
  std::ostringstream os;
  os << "method\tmodel\tdataset\tconsistency\tsensitivity\tcose_percent\tN\tM\ttransform_pairs"
        "\tsensitive_transform_pairs\tcheckpoint_pairs\tclamp_events\tmean_mask_coverage\n";
  for (const auto& r : reports) {
    os << r.method << '\t' << r.model << '\t' << r.dataset << '\t' << opt(r.overall.consistency) << '\t'
       << opt(r.overall.sensitivity) << '\t' << opt(r.overall.cose) << '\t' << r.overall.consistent << '\t'
       << r.overall.sensitive << '\t' << r.transform_records << '\t' << r.sensitive_transform << '\t'
       << r.checkpoint_records << '\t' << r.clamp_events << '\t' << num(r.mean_mask_coverage) << '\n';
  }
  return os.str();
}

std::string breakdown_table(std::span<const metrics::MetricReport> reports) {
  std::ostringstream os;
  os << "method\tscope\tkey\tN\tM\tconsistency\tsensitivity\tcose_percent\n";
  for (const auto& r : reports) {
    for (const auto& [k, c] : r.per_kind) cell_row(os, r.method + "\tkind\t" + k, c);
    for (const auto& [k, c] : r.per_transform) cell_row(os, r.method + "\ttransform\t" + k, c);
    for (const auto& [k, c] : r.per_magnitude) cell_row(os, r.method + "\tmagnitude\t" + std::to_string(k), c);
  }
  return os.str();
}

std::string records_table(std::span<const metrics::EvalRecord> records) {
  std::ostringstream os;
  os << "method\timage_id\tkind\tsample\tperturbation\tequivalent\tscore\tmask_coverage\tclamped\n";
  for (const auto& r : records) {
    const bool t = r.kind == metrics::PerturbationKind::kTransform;
    os << r.method << '\t' << r.image_id << '\t' << (t ? "transform" : "checkpoint") << '\t'
       << (t ? std::to_string(r.sample) : "-") << '\t'
       << (t ? r.transform.to_string() : "epoch:" + std::to_string(r.checkpoint_epoch)) << '\t'
       << (r.equivalent ? 1 : 0) << '\t' << num(r.score) << '\t' << num(r.mask_coverage, 6) << '\t'
       << (r.clamped ? 1 : 0) << '\n';
  }
  return os.str();
}

void correlation_row(std::ostringstream& os, const std::string& method, const char* aggregation,
                     const std::optional<metrics::Correlation>& c, const std::string& error) {
  os << method << '\t' << aggregation << '\t';
  if (c) {
    os << c->n << '\t' << num(c->r) << '\t' << sci(c->p_value) << '\t' << (c->significant ? 1 : 0) << "\t-\n";
  } else {
    os << "-\t" << kUndefined << '\t' << kUndefined << "\t0\t" << error << '\n';
  }
}

std::string correlation_table(std::span<const CheckpointCorrelation> correlations) {
  std::ostringstream os;
  os << "method\taggregation\tn\tr\tp_value\tsignificant_at_0.05\tnote\n";
  for (const auto& c : correlations) {
    correlation_row(os, c.method, "pooled", c.pooled, c.pooled_error);
    correlation_row(os, c.method, "epoch_means", c.epoch_means, c.epoch_means_error);
  }
  return os.str();
}

std::string checkpoint_table(std::span<const CheckpointCorrelation> correlations) {
  std::ostringstream os;
  os << "method\tepoch\taccuracy\tmean_ssim_to_final\timages\n";
  for (const auto& c : correlations) {
    for (const auto& p : c.points) {
      os << c.method << '\t' << p.epoch << '\t' << num(p.accuracy) << '\t' << num(p.mean_ssim) << '\t'
         << p.images << '\n';
    }
  }
  return os.str();
}

}  // namespace

json RunManifest::to_json(std::span<const metrics::MetricReport> reports) const {
  json counts = json::object();
  for (const auto& r : reports) {
    counts[r.method] = {{"overall", cell_json(r.overall)},
                        {"transform_pairs", r.transform_records},
                        {"sensitive_transform_pairs", r.sensitive_transform},
                        {"checkpoint_pairs", r.checkpoint_records},
                        {"sensitive_checkpoint_pairs", r.sensitive_checkpoint},
                        {"clamp_events", r.clamp_events},
                        {"mean_mask_coverage", r.mean_mask_coverage}};
  }
  return {{"engine_version", engine_version},
          {"config", config},
          {"model", model},
          {"dataset", dataset},
          {"images", images},
          {"methods", methods},
          {"counts", counts},
          {"warnings", warnings},
          {"files",
           {"metrics.tsv", "breakdown.tsv", "records.tsv", "correlation.tsv", "checkpoints.tsv", "timing.json"}}};
}

void emit_correlations(std::span<const CheckpointCorrelation> correlations, const std::filesystem::path& out_dir) {
  make_dir(out_dir);
  write_file(out_dir / "correlation.tsv", correlation_table(correlations));
  write_file(out_dir / "checkpoints.tsv", checkpoint_table(correlations));
}

void emit_reports(const RunResult& result, const std::filesystem::path& out_dir) {
  make_dir(out_dir);
  write_file(out_dir / "metrics.tsv", metrics_table(result.reports));
  write_file(out_dir / "breakdown.tsv", breakdown_table(result.reports));
  write_file(out_dir / "records.tsv", records_table(result.records));
  write_file(out_dir / "correlation.tsv", correlation_table(result.correlations));
  write_file(out_dir / "checkpoints.tsv", checkpoint_table(result.correlations));
  write_file(out_dir / "manifest.json", result.manifest.to_json(result.reports).dump(2) + "\n");
  json timing = json::object();
  for (const auto& [stage, s] : result.manifest.timing_seconds) timing[stage] = s;
  write_file(out_dir / "timing.json", timing.dump(2) + "\n");
}

}  // namespace cose::harness
