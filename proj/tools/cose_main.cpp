// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

// cose: command-line front end of the evaluation engine.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "cose/error.hpp"
#include "cose/harness/config.hpp"
#include "cose/harness/harness.hpp"

namespace {

namespace h = cose::harness;
using cose::Errc;

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kUndefinedOnly = 3;
constexpr int kIoError = 4;

int exit_code(Errc code) {
  switch (code) {
    case Errc::kConfig:
    case Errc::kInvalidArgument:
    case Errc::kUnsupportedMethod:
      return kConfigError;
    case Errc::kUndefinedMetric:
    case Errc::kUndefinedCorrelation:
      return kUndefinedOnly;
    case Errc::kIo:
    case Errc::kBadMagic:
    case Errc::kUnsupportedVersion:
    case Errc::kTruncated:
    case Errc::kDuplicateName:
    case Errc::kInvalidContainer:
    case Errc::kMissingPredictions:
      return kIoError;
    default:
      return 1;
  }
}

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string methods;
  std::string out;
  std::optional<int> threads;
  std::string ssim_mode;
  std::string maps_dir;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON run configuration");
  cmd->add_option("--seed", o.seed, "Seed for data, training, transforms and stochastic methods");
  cmd->add_option("--methods", o.methods, "Comma-separated saliency methods");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--threads", o.threads, "Worker threads");
  cmd->add_option("--ssim-mode", o.ssim_mode, "windowed or global");
}

h::RunConfig resolve(const Options& o) {
  h::RunConfig c = o.config.empty() ? h::RunConfig{} : h::load_config(o.config);
  if (o.seed) {
    c.seed = *o.seed;
    c.training.seed = *o.seed;
  }
  if (!o.methods.empty()) {
    c.methods.clear();
    std::stringstream ss(o.methods);
    for (std::string m; std::getline(ss, m, ',');) {
      if (!m.empty()) c.methods.push_back(m);
    }
    if (c.methods.empty()) throw cose::Error(Errc::kConfig, "--methods: no method names");
  }
  if (!o.out.empty()) c.out_dir = o.out;
  if (o.threads) c.threads = *o.threads;
  if (!o.ssim_mode.empty()) {
    try {
      c.ssim.mode = cose::metrics::parse_mode(o.ssim_mode);
    } catch (const cose::Error&) {
      throw cose::Error(Errc::kConfig, "--ssim-mode: expected windowed or global");
    }
  }
  if (!o.maps_dir.empty()) {
    c.dataset.source = h::DatasetSource::kExternal;
    c.dataset.path = o.maps_dir;
  }
  c.validate();
  for (const auto& m : c.methods) {
    if (!cose::saliency::is_method(m) && c.dataset.source != h::DatasetSource::kExternal) {
      throw cose::Error(Errc::kConfig, "unknown method '" + m + "'");
    }
  }
  return c;
}

void log(const std::string& line) { std::cerr << line << '\n'; }

void print_summary(const h::RunResult& r) {
  for (const auto& rep : r.reports) {
    auto v = [](const std::optional<double>& x) {
      char buf[32];
      if (!x) return std::string("undefined");
      std::snprintf(buf, sizeof buf, "%.4f", *x);
      return std::string(buf);
    };
    std::cout << rep.method << ": consistency " << v(rep.overall.consistency) << "  sensitivity "
              << v(rep.overall.sensitivity) << "  COSE " << v(rep.overall.cose) << "%  (N " << rep.overall.consistent
              << ", M " << rep.overall.sensitive << ")\n";
  }
  for (const auto& w : r.manifest.warnings) std::cerr << "warning: " << w << '\n';
}

int run_train(const Options& o) {
  const auto c = resolve(o);
  const auto data = h::load_dataset(c);
  const auto checkpoints = h::train_checkpoints(c, data, log);
  cose::model::MicroModelConfig mc;
  mc.num_classes = data.num_classes;
  h::save_checkpoints(checkpoints, mc, c.out_dir / "checkpoints");
  std::cout << "final epoch " << checkpoints.back().epoch << ", test accuracy " << checkpoints.back().test_accuracy
            << "; checkpoints in " << (c.out_dir / "checkpoints").string() << '\n';
  return kOk;
}

int run_evaluate(const Options& o) {
  const auto c = resolve(o);
  const auto result = h::run_evaluation(c, log);
  h::emit_reports(result, c.out_dir);
  print_summary(result);
  return result.all_undefined() ? kUndefinedOnly : kOk;
}

int run_analyze(const Options& o) {
  const auto c = resolve(o);
  const auto subject = h::prepare_subject(c, log);
  const auto methods = h::resolve_methods(c.methods);
  const auto table = h::run_checkpoint_analysis(c, subject, methods);
  h::emit_correlations(table, c.out_dir);
  bool any = false;
  for (const auto& t : table) {
    if (t.pooled) {
      any = true;
      std::cout << t.method << ": pooled r " << t.pooled->r << " (p " << t.pooled->p_value << ")";
      if (t.epoch_means) std::cout << ", epoch means r " << t.epoch_means->r << " (p " << t.epoch_means->p_value << ")";
      std::cout << '\n';
    } else {
      std::cerr << "warning: " << t.method << ": " << t.pooled_error << '\n';
    }
  }
  return any ? kOk : kUndefinedOnly;
}

int run_export(const Options& o) {
  auto c = resolve(o);
  c.analyze_checkpoints = true;
  const auto subject = h::prepare_subject(c, log);
  const auto methods = h::resolve_methods(c.methods);
  const auto maps = h::compute_maps(subject, c, methods);
  h::export_maps(maps, subject, c.out_dir);
  std::cout << "wrote " << subject.images.size() << " containers to " << c.out_dir.string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Saliency map consistency and sensitivity evaluation"};
  app.require_subcommand(1);
  Options o;
  auto* train = app.add_subcommand("train", "Train the micro model and write checkpoints");
  auto* evaluate = app.add_subcommand("evaluate", "Run the full evaluation and write reports");
  auto* analyze = app.add_subcommand("analyze-checkpoints", "Correlate checkpoint accuracy with map similarity");
  auto* score = app.add_subcommand("score-external", "Score maps from interchange containers");
  auto* exporter = app.add_subcommand("export-maps", "Write per-image map containers");
  for (auto* cmd : {train, evaluate, analyze, score, exporter}) add_common(cmd, o);
  score->add_option("maps_dir", o.maps_dir, "Directory of containers (overrides dataset.path)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*train) return run_train(o);
    if (*evaluate) return run_evaluate(o);
    if (*analyze) return run_analyze(o);
    if (*score) {
      if (o.maps_dir.empty()) {
        const auto c = resolve(o);
        if (c.dataset.source != h::DatasetSource::kExternal) {
          throw cose::Error(Errc::kConfig, "score-external needs a maps directory or an external dataset source");
        }
      }
      return run_evaluate(o);
    }
    if (*exporter) return run_export(o);
  } catch (const cose::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kOk;
}
