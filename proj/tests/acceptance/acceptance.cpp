// SPDX-FileCopyrightText: Copyright (c) 2026 The cose-eval Authors.
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed hard criteria (the checkpoint trend is reported only).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "cose/error.hpp"
#include "cose/harness/harness.hpp"
#include "cose/interchange/container.hpp"
#include "cose/metrics/metrics.hpp"
#include "cose/metrics/ssim.hpp"
#include "cose/model/micro_model.hpp"
#include "cose/random.hpp"
#include "cose/saliency/saliency.hpp"
#include "support/finite_difference.hpp"
#include "support/mock_models.hpp"
#include "support/ssim_oracle.hpp"

namespace {

namespace h = cose::harness;
namespace cm = cose::model;
namespace cs = cose::saliency;
namespace fs = std::filesystem;
using cose::Image;
using cose::Rng;
using cose::SaliencyMap;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string format(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int hard_failures = 0;

void report(const char* name, bool soft, const std::function<Outcome()>& body) {
  Outcome o;
  const auto t0 = Clock::now();
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = seconds_since(t0);
  if (!o.pass && !soft) ++hard_failures;
  std::printf("%s %s%s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name, soft ? " (soft)" : "", o.detail.c_str(), s);
  std::fflush(stdout);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double logit_of(const cm::Classifier& m, const Image& x, int k) { return m.open_session()->logits(x)[k]; }

// The default toy evaluation, shared by the criteria that need a trained
// model and a full run.
struct ToyRun {
  h::RunConfig config;
  h::Subject subject;
  h::RunResult first;
  h::RunResult second;
  double seconds_first = 0.0;
};

ToyRun& toy_run() {
  static ToyRun run = [] {
    ToyRun r;
    r.config.methods = {"vanilla_gradient", "gradcam", "integrated_gradients"};
    r.config.threads = 1;
    const auto t0 = Clock::now();
    r.first = h::run_evaluation(r.config);
    r.seconds_first = seconds_since(t0);
    r.subject = h::prepare_subject(r.config);
    r.second = h::run_evaluation(r.config, r.subject, h::resolve_methods(r.config.methods));
    return r;
  }();
  return run;
}

Outcome ssim_oracle() {
  const auto t0 = Clock::now();
  Rng rng(2024);
  double worst = 0.0;
  for (int p = 0; p < 100; ++p) {
    SaliencyMap a(64, 64), b(64, 64);
    for (auto& v : a.values) v = static_cast<float>(rng.uniform());
    // Correlated partner so values span the whole SSIM range.
    const double mix = rng.uniform();
    for (std::size_t i = 0; i < b.values.size(); ++i) {
      b.values[i] = static_cast<float>(mix * a.values[i] + (1.0 - mix) * rng.uniform());
    }
    const auto got = cose::metrics::ssim_detail(a, b);
    worst = std::max(worst, std::abs(got.unclamped - cose::testing::oracle_ssim(a, b)));
  }
  SaliencyMap ones(16, 16, 1.0f), zeros(16, 16, 0.0f);
  cose::metrics::SsimParams global;
  global.mode = cose::metrics::SsimMode::kGlobal;
  const double constant = cose::metrics::ssim(ones, zeros, global);
  const double s = seconds_since(t0);
  return {worst < 1e-6 && std::abs(constant - 0.01 / 1.01) < 1e-6 && std::abs(constant - 0.009901) < 1e-6 && s < 10.0,
          format("max |windowed - brute force| = %.2e over 100 pairs; global constant pair = %.7f", worst, constant)};
}

Outcome gradient_fd() {
  const auto t0 = Clock::now();
  const auto model = cm::MicroModel::initialized({}, 77);
  Rng rng(5);
  Image x(3, 32, 32);
  for (auto& v : x.data) v = static_cast<float>(rng.uniform());
  const auto xf = cm::to_tensor<float>(x);
  const auto xd = cm::to_tensor<double>(x);

  cose::testing::FdReport f32, f64;
  // Parameter gradients of the loss.
  {
    auto gf = model.build_graph<float>(true);
    auto gd = model.build_graph<double>(true);
    gf.graph.set_label(gf.loss, 1);
    gd.graph.set_label(gd.loss, 1);
    gf.graph.forward(xf);
    gf.graph.backward(cose::autodiff::Tensor<float>(cose::autodiff::Shape{1}, 1.0f));
    gd.graph.forward(xd);
    gd.graph.backward(cose::autodiff::Tensor<double>(cose::autodiff::Shape{1}, 1.0));
    for (std::size_t p = 0; p < gd.params.size(); ++p) {
      const auto ff = gf.graph.grad(gf.params[p]);
      const std::vector<double> as_double(ff.begin(), ff.end());
      const auto fd = gd.graph.grad(gd.params[p]);
      const std::vector<double> exact(fd.begin(), fd.end());
      std::vector<std::size_t> coords(exact.size());
      std::iota(coords.begin(), coords.end(), 0);
      cose::testing::check_parameter(gd.graph, xd, gd.params[p], as_double, coords, 1e-3, 1e-4, f32);
      cose::testing::check_parameter(gd.graph, xd, gd.params[p], exact, coords, 1e-3, 1e-6, f64);
    }
  }
  // Input gradients of logit 0.
  {
    auto gf = model.build_graph<float>(false);
    auto gd = model.build_graph<double>(false);
    cose::autodiff::Tensor<float> sf(cose::autodiff::Shape{3});
    cose::autodiff::Tensor<double> sd(cose::autodiff::Shape{3});
    sf.data[0] = 1.0f;
    sd.data[0] = 1.0;
    gf.graph.forward(xf);
    gf.graph.backward(sf);
    gd.graph.forward(xd);
    gd.graph.backward(sd);
    const auto ff = gf.graph.grad(gf.input);
    const auto fd = gd.graph.grad(gd.input);
    const std::vector<double> as_double(ff.begin(), ff.end()), exact(fd.begin(), fd.end());
    std::vector<std::size_t> coords(exact.size());
    std::iota(coords.begin(), coords.end(), 0);
    cose::testing::check_input(gd.graph, xd, as_double, coords, 1e-3, 1e-4, f32);
    cose::testing::check_input(gd.graph, xd, exact, coords, 1e-3, 1e-6, f64);
  }
  const double s = seconds_since(t0);
  return {f32.max_rel_error < 1e-3 && f64.max_rel_error < 1e-6 && f64.checked > 1000 && s < 60.0,
          format("float32 max rel %.2e, float64 max rel %.2e over %zu coordinates (%zu kink stencils skipped)",
                 f32.max_rel_error, f64.max_rel_error, f64.checked, f64.skipped_kinks)};
}

Outcome ig_closed_form() {
  Rng rng(11);
  const cm::InputShape shape{3, 8, 8};
  const std::size_t n = 3 * 8 * 8;
  std::vector<std::vector<double>> w(2, std::vector<double>(n));
  for (auto& row : w) {
    for (auto& v : row) v = rng.uniform(-1.0, 1.0);
  }
  const cose::testing::LinearModel linear(shape, w, {0.3, -0.2});
  Image x(3, 8, 8);
  for (auto& v : x.data) v = static_cast<float>(rng.uniform());
  double linear_err = 0.0;
  for (int steps : {1, 16, 128}) {
    const auto a = cs::integrated_gradients(linear, x, 1, steps);
    for (std::size_t i = 0; i < n; ++i) linear_err = std::max(linear_err, std::abs(a.raw[i] - w[1][i] * x.data[i]));
  }

  const auto& run = toy_run();
  const auto& model = *run.subject.final_model;
  const Image black(3, 32, 32, 0.0f);
  double completeness = 0.0, gig_gap = 0.0;
  for (int j = 0; j < 5; ++j) {
    const Image& img = run.subject.images[static_cast<std::size_t>(j)];
    const int k = cm::predict(model, img).label;
    const auto ig = cs::integrated_gradients(model, img, k, 128);
    const double total = std::accumulate(ig.raw.begin(), ig.raw.end(), 0.0);
    const double gap = logit_of(model, img, k) - logit_of(model, black, k);
    completeness = std::max(completeness, std::abs(total - gap) / std::abs(gap));
    const auto gig = cs::guided_ig(model, img, k, 128, 1.0);
    for (std::size_t i = 0; i < ig.raw.size(); ++i) gig_gap = std::max(gig_gap, std::abs(gig.raw[i] - ig.raw[i]));
  }
  return {linear_err < 1e-5 && completeness < 0.01 && gig_gap < 1e-6,
          format("linear max |IG - w*x| = %.2e (steps 1/16/128); micro-CNN completeness error %.3f%%; "
                 "max |GuidedIG(fraction 1) - IG| = %.2e",
                 linear_err, 100.0 * completeness, gig_gap)};
}

Outcome equivariance() {
  auto model = cm::MicroModel::initialized({}, 31);
  model.symmetrize_lr();
  const auto data = cm::generate_toy_dataset(3, 40);
  const cose::transforms::TransformSpec flip{cose::transforms::TransformName::kFlipLr, 0, false};
  const auto vg = cs::method("vanilla_gradient");
  std::vector<cose::metrics::EvalRecord> records;
  h::Warnings warnings;
  for (int i = 0; i < 20; ++i) {
    const Image& x = data.images[data.test[static_cast<std::size_t>(i)]];
    const Image fx = cose::transforms::apply(flip, x);
    h::ImageMaps maps;
    maps.method = vg.name;
    maps.image_id = i;
    const int label = cm::predict(model, x).label;
    const int flabel = cm::predict(model, fx).label;
    maps.original = {label, vg.fn(model, x, label, {})};
    maps.transforms.push_back({0, flip, {flabel, vg.fn(model, fx, flabel, {})}});
    for (auto& r : h::score_maps(maps, {}, warnings)) records.push_back(std::move(r));
  }
  const auto equivalent = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.equivalent; });
  const double c = cose::metrics::consistency(records);
  return {equivalent == 20 && std::abs(c - 1.0) < 1e-5,
          format("%ld/20 flips keep the prediction; vanilla-gradient consistency = %.9f", static_cast<long>(equivalent), c)};
}

Outcome degenerate_method() {
  h::Subject s;
  auto model = std::make_shared<cose::testing::FunctionModel>(cm::InputShape{}, 2, [](const Image& x) {
    const double mean = std::accumulate(x.data.begin(), x.data.end(), 0.0) / static_cast<double>(x.data.size());
    return std::vector<double>{0.5 - mean, mean - 0.5};
  });
  s.final_model = model;
  s.final_epoch = 1;
  s.checkpoints.push_back({0, 0.5, model});
  for (int i = 0; i < 20; ++i) {
    s.images.emplace_back(3, 32, 32, static_cast<float>(0.3 + 0.02 * i));
    s.image_ids.push_back(i);
  }
  s.fill = {0.5f, 0.5f, 0.5f};
  const std::vector<cs::Method> constant = {
      {"constant", [](const cm::Classifier&, const Image& x, int, const cs::MethodConfig&) {
         return SaliencyMap(x.height, x.width, 0.5f);
       }}};
  const auto r = h::run_evaluation(h::RunConfig{}, s, constant);
  const auto& cell = r.reports.at(0).overall;
  if (!cell.consistency || !cell.sensitivity || !cell.cose) return {false, "a metric is undefined"};
  return {*cell.consistency == 1.0 && *cell.sensitivity == 0.0 && *cell.cose == 0.0,
          format("consistency %.17g, sensitivity %.17g, COSE %.17g%% (N %zu, M %zu)", *cell.consistency,
                 *cell.sensitivity, *cell.cose, cell.consistent, cell.sensitive)};
}

Outcome metric_algebra() {
  Rng rng(99);
  int violations = 0;
  double worst_equal = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double c = rng.uniform(), s = rng.uniform();
    const double v = cose::metrics::cose(c, s) / 100.0;
    if (v < std::min(c, s) - 1e-15 || v > std::max(c, s) + 1e-15) ++violations;
    worst_equal = std::max(worst_equal, std::abs(cose::metrics::cose(c, c) - 100.0 * c));
  }
  return {violations == 0 && worst_equal < 1e-12,
          format("%d bound violations in 1000 pairs; max |COSE(c,c) - 100c| = %.2e", violations, worst_equal)};
}

Outcome record_conservation() {
  auto& run = toy_run();
  std::string detail;
  bool ok = run.first.reports.size() == 3;
  for (const auto& rep : run.first.reports) {
    const std::size_t split = rep.overall.consistent + rep.sensitive_transform;
    ok = ok && rep.transform_records == 500 && split == 500;
    detail += format("%s %zu+%zu; ", rep.method.c_str(), rep.overall.consistent, rep.sensitive_transform);
  }
  const fs::path a = fs::temp_directory_path() / "cose_acceptance_a";
  const fs::path b = fs::temp_directory_path() / "cose_acceptance_b";
  fs::remove_all(a);
  fs::remove_all(b);
  h::emit_reports(run.first, a);
  h::emit_reports(run.second, b);
  int differing = 0;
  for (const char* f : {"metrics.tsv", "breakdown.tsv", "records.tsv", "correlation.tsv", "checkpoints.tsv",
                        "manifest.json"}) {
    if (slurp(a / f) != slurp(b / f)) ++differing;
  }
  ok = ok && differing == 0 && run.seconds_first < 600.0;
  detail += format("%d report files differ between runs; one run took %.1f s", differing, run.seconds_first);
  return {ok, detail};
}

Outcome checkpoint_trend() {
  const auto& run = toy_run();
  for (const auto& c : run.first.correlations) {
    if (c.method != "gradcam") continue;
    std::string epochs;
    for (const auto& p : c.points) epochs += format("%d:%.2f/%.3f ", p.epoch, p.accuracy, p.mean_ssim);
    if (!c.pooled || !c.epoch_means) return {false, "correlation undefined: " + c.pooled_error + c.epoch_means_error};
    const bool ok = c.pooled->r > 0 && c.pooled->p_value < 0.05 && c.epoch_means->r > 0 && c.epoch_means->p_value < 0.05;
    return {ok, format("GradCAM pooled r %.3f (p %.2e, n %zu), epoch means r %.3f (p %.2e, n %zu); epoch:acc/ssim %s",
                       c.pooled->r, c.pooled->p_value, c.pooled->n, c.epoch_means->r, c.epoch_means->p_value,
                       c.epoch_means->n, epochs.c_str())};
  }
  return {false, "no GradCAM correlation"};
}

Outcome external_equivalence() {
  const auto& run = toy_run();
  const auto methods = h::resolve_methods(run.config.methods);
  const fs::path dir = fs::temp_directory_path() / "cose_acceptance_maps";
  fs::remove_all(dir);
  h::export_maps(h::compute_maps(run.subject, run.config, methods), run.subject, dir);
  h::RunConfig ext = run.config;
  ext.dataset.source = h::DatasetSource::kExternal;
  ext.dataset.path = dir;
  ext.methods.clear();
  const auto scored = h::run_evaluation(ext);
  const auto& internal = run.second;
  if (scored.reports.size() != internal.reports.size()) return {false, "method count differs"};
  double worst = 0.0;
  bool counts = scored.records.size() == internal.records.size();
  for (std::size_t i = 0; i < internal.reports.size(); ++i) {
    const auto& x = internal.reports[i].overall;
    const auto& y = scored.reports[i].overall;
    counts = counts && x.consistent == y.consistent && x.sensitive == y.sensitive;
    worst = std::max({worst, std::abs(*x.consistency - *y.consistency), std::abs(*x.sensitivity - *y.sensitivity),
                      std::abs(*x.cose - *y.cose)});
  }
  for (std::size_t i = 0; counts && i < internal.records.size(); ++i) {
    worst = std::max(worst, std::abs(internal.records[i].score - scored.records[i].score));
  }
  return {counts && worst < 1e-9,
          format("%zu containers, %zu records; max metric difference %.2e", run.subject.images.size(),
                 scored.records.size(), worst)};
}

Outcome fuzzing() {
  namespace ic = cose::interchange;
  ic::Container valid;
  Rng rng(4242);
  for (int e = 0; e < 3; ++e) {
    ic::Entry entry{"tensor/" + std::to_string(e), {3, static_cast<std::uint64_t>(e + 1)}, {}};
    entry.values.resize(3 * (e + 1));
    for (auto& v : entry.values) v = static_cast<float>(rng.normal());
    valid.entries.push_back(entry);
  }
  valid.metadata = {{"kind", "fuzz"}, {"values", {1, 2, 3}}};
  const auto seed = ic::encode(valid);

  int structured = 0, accepted = 0, other = 0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<std::uint8_t> bytes;
    switch (i % 4) {
      case 0:  // random bytes, sometimes with a valid header
        bytes.resize(rng.below(96));
        for (auto& b : bytes) b = static_cast<std::uint8_t>(rng.below(256));
        if (bytes.size() >= 8 && rng.coin()) std::copy(seed.begin(), seed.begin() + 8, bytes.begin());
        break;
      case 1:  // truncation
        bytes.assign(seed.begin(), seed.begin() + static_cast<long>(rng.below(seed.size())));
        break;
      case 2: {  // byte flips
        bytes = seed;
        const int flips = 1 + static_cast<int>(rng.below(4));
        for (int f = 0; f < flips; ++f) {
          bytes[rng.below(bytes.size())] = static_cast<std::uint8_t>(rng.below(256));
        }
        break;
      }
      default: {  // huge length fields spliced in
        bytes = seed;
        const std::size_t at = rng.below(bytes.size() - 4);
        for (int k = 0; k < 4; ++k) bytes[at + k] = 0xff;
        break;
      }
    }
    try {
      const auto c = ic::decode(bytes);
      ++accepted;  // a flip inside a payload is still a valid container
      (void)c;
    } catch (const cose::Error&) {
      ++structured;
    } catch (...) {
      ++other;
    }
  }
  return {other == 0 && structured + accepted == 10000,
          format("10000 streams: %d structured errors, %d decoded, %d unstructured failures", structured, accepted,
                 other)};
}

}  // namespace

int main() {
  std::printf("cose acceptance suite (engine %s)\n", h::kEngineVersion);
  report("ssim-oracle", false, ssim_oracle);
  report("gradient-finite-differences", false, gradient_fd);
  report("ig-closed-form", false, ig_closed_form);
  report("flip-equivariance", false, equivariance);
  report("degenerate-method", false, degenerate_method);
  report("metric-algebra", false, metric_algebra);
  report("record-conservation", false, record_conservation);
  report("checkpoint-trend", true, checkpoint_trend);
  report("external-equivalence", false, external_equivalence);
  report("interchange-fuzzing", false, fuzzing);
  std::printf("%d hard criteria failed\n", hard_failures);
  return hard_failures;
}
