/*
 * Copyright 2026 The v2nc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Acceptance runner: one PASS/FAIL line per criterion, exit status 0 only
// when every selected criterion passes.
//
//   v2nc_acceptance [--work-dir DIR] [--only 1,2,...] [--verbose]

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <random>
#include <set>
#include <sstream>

#include "support/gradient_suite.hpp"
#include "support/properties.hpp"
#include "test_util.hpp"
#include "v2nc/cli.hpp"
#include "v2nc/errors.hpp"
#include "v2nc/losses.hpp"
#include "v2nc/metrics.hpp"
#include "v2nc/networks.hpp"
#include "v2nc/phantom.hpp"
#include "v2nc/pipeline.hpp"
#include "v2nc/rng.hpp"
#include "v2nc/volume_io.hpp"

namespace fs = std::filesystem;
using namespace v2nc;
using namespace v2nc::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

class Clock {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

struct Context {
  fs::path work;
  bool verbose = false;
  fs::path seg_checkpoint;  // set by criterion 6

  LogFn log() const {
    if (!verbose) return {};
    return [](const std::string& s) { std::cerr << "  " << s << '\n'; };
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---- 1: gradient suite -----------------------------------------------------

Outcome gradients(Context&) {
  const Clock clock;
  const auto results = run_gradient_suite(20261016, 5);
  const double secs = clock.seconds();
  Outcome o{secs < 120.0, ""};
  std::string worst;
  double worst_ratio = 0.0;
  for (const auto& r : results) {
    o.pass &= r.pass() && r.shapes >= 5;
    const double ratio = r.max_rel_error / r.tolerance;
    if (ratio >= worst_ratio) {
      worst_ratio = ratio;
      worst = fmt("%s %.2e < %.0e", r.op.c_str(), r.max_rel_error, r.tolerance);
    }
    if (!r.pass()) o.detail += fmt("%s failed (%.3e on %s); ", r.op.c_str(), r.max_rel_error, r.worst_shape.c_str());
  }
  o.detail += fmt("%zu ops x 5 shapes, worst relative error %s, %.1f s (< 120 s)", results.size(), worst.c_str(), secs);
  return o;
}

// ---- 2: loss identities ----------------------------------------------------

Outcome losses(Context&) {
  std::mt19937_64 rng(2);
  std::bernoulli_distribution coin(0.4);
  std::vector<float> g(2 * 4 * 4 * 4), inv(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = coin(rng) ? 1.0f : 0.0f;
    inv[i] = 1.0f - g[i];
  }
  g[0] = 1.0f;
  inv[0] = 0.0f;
  const Shape shape{2, 1, 4, 4, 4};
  const Tensor gt = Tensor::from(shape, g);
  const double same = soft_dice_loss(gt, gt).item();
  const double disjoint = soft_dice_loss(Tensor::from(shape, inv), gt).item();
  const Tensor half_p = Tensor::from({1, 1, 2, 2, 2}, std::vector<float>(8, 0.5f));
  const Tensor half_g = Tensor::from({1, 1, 2, 2, 2}, {1, 1, 1, 1, 0, 0, 0, 0});
  const double half = soft_dice_loss(half_p, half_g).item();
  const double bce = weighted_bce(Tensor::from({1}, {0.0f}), 1, 1.0f, 3.0f).item();
  Outcome o;
  o.pass = same < 1e-4 && disjoint > 1.0 - 1e-4 && std::abs(half - 1.0 / 3.0) <= 1e-5 &&
           std::abs(bce - std::log(2.0)) <= 1e-6;
  o.detail = fmt("dice(p=g) %.2e, dice(disjoint) %.6f, 8-voxel half case %.7f (1/3), bce(0,1) %.8f (ln 2)", same,
                 disjoint, half, bce);
  return o;
}

// ---- 3: oracle equivalences ------------------------------------------------

Outcome oracles(Context&) {
  const auto auc = auc_equivalence(3, 100);
  const auto quant = quantile_equivalence(3, 100);
  const auto comp = component_equivalence(3, 50);
  Outcome o{auc.pass() && quant.pass() && comp.pass(), ""};
  o.detail = fmt("AUC trapezoid vs pairs: %d instances, max |diff| %.1e; median_iqr: %d/%d exact; "
                 "largest_component vs flood fill: %d/%d 16^3 masks",
                 auc.trials, auc.worst, quant.trials - quant.failures, quant.trials, comp.trials - comp.failures,
                 comp.trials);
  for (const auto* r : {&auc, &quant, &comp})
    if (!r->pass()) o.detail += "; " + r->first_failure;
  return o;
}

// ---- 4: adjoint --------------------------------------------------------------

Outcome adjoint(Context&) {
  const auto r = conv_adjoint(400, 20);
  Outcome o{r.pass(), fmt("%d instances, max relative error %.2e (< 1e-4)", r.trials, r.worst)};
  if (!r.pass()) o.detail += "; " + r.first_failure;
  return o;
}

// ---- 5: format round trips ---------------------------------------------------

Outcome round_trips(Context& ctx) {
  std::mt19937_64 rng(5);
  Volume v({23, 17, 9}, {0.9f, 1.1f, 5.5f});
  for (auto& x : v.data()) x = std::normal_distribution<float>(0.0f, 100.0f)(rng);
  v.data()[0] = -0.0f;
  v.data()[1] = std::numeric_limits<float>::denorm_min();
  const fs::path nii = ctx.work / "c5" / "volume.nii";
  fs::create_directories(nii.parent_path());
  write_nifti(v, nii);
  const Volume back = read_nifti(nii);
  const bool nifti_ok = back.dims() == v.dims() && back.spacing() == v.spacing() &&
                        std::memcmp(back.data().data(), v.data().data(), v.size() * sizeof(float)) == 0;

  SegNetConfig cfg;
  const SegNet net = build_v2netcls(cfg, 55);
  Volume t1c(cfg.input_shape, kDefaultSpacing), t2(cfg.input_shape, kDefaultSpacing);
  for (auto& x : t1c.data()) x = std::normal_distribution<float>()(rng);
  for (auto& x : t2.data()) x = std::normal_distribution<float>()(rng);
  const Tensor a = volume_to_tensor(t1c), b = volume_to_tensor(t2);
  const fs::path ckpt = ctx.work / "c5" / "v2netcls.ckpt";
  save_segnet(net, ckpt);
  const SegNet loaded = load_segnet(ckpt);
  NoGradGuard no_grad;
  const SegOutput x = net.forward(a, b), y = loaded.forward(a, b);
  auto same = [](const Tensor& p, const Tensor& q) {
    const auto u = p.values(), w = q.values();
    return u.size() == w.size() && std::memcmp(u.data(), w.data(), u.size() * sizeof(float)) == 0;
  };
  const bool ckpt_ok = same(x.prob_map, y.prob_map) && same(*x.overall_logits, *y.overall_logits) &&
                       same(*x.t_logits, *y.t_logits);
  return {nifti_ok && ckpt_ok,
          fmt("NIfTI write/read %s; V2NetCls (%zu params) save/load/forward %s", nifti_ok ? "bit-exact" : "DIFFERS",
              net.params().scalar_count(), ckpt_ok ? "bit-exact" : "DIFFERS")};
}

// ---- 6: segmentation learnability --------------------------------------------

constexpr int kSegEpochs = 40;

std::vector<StudyRecord> phantom_records(const PhantomConfig& pc, int n, const fs::path& dir) {
  return load_manifest(generate_dataset(pc, n, dir).manifest);
}

Outcome seg_learnability(Context& ctx) {
  const Clock clock;
  PhantomConfig pc;
  pc.seed = 2026;
  const auto recs = phantom_records(pc, 48, ctx.work / "c6" / "data");
  const std::vector<StudyRecord> train(recs.begin(), recs.begin() + 40), val(recs.begin() + 40, recs.end());
  TrainConfig tc;
  tc.seed = 1;
  tc.epochs = kSegEpochs;
  tc.checkpoint_dir = ctx.work / "c6";
  SegNetConfig sc;
  sc.depth = 3;
  sc.base_channels = 8;
  const SegTrainResult r = train_segmentation(tc, sc, "v2netcls", train, val, ctx.log());
  ctx.seg_checkpoint = r.checkpoint;
  const double mins = clock.seconds() / 60.0;
  return {r.best_val_median >= 0.70,
          fmt("best validation median Dice %.4f (>= 0.70); best mean %.4f at epoch %d/%d; 40 train / 8 val at "
              "48x48x16; %.1f min (target < 30)",
              r.best_val_median, r.best_val_dice, r.best_epoch, kSegEpochs, mins)};
}

// ---- 7: classification learnability ------------------------------------------

constexpr int kClsEpochs = 40;

Outcome cls_learnability(Context& ctx) {
  if (ctx.seg_checkpoint.empty()) {
    const fs::path existing = ctx.work / "c6" / "seg_v2netcls.ckpt";
    if (fs::exists(existing)) {
      ctx.seg_checkpoint = existing;
    } else {
      std::cerr << "  criterion 7 needs the criterion 6 checkpoint; training it first\n";
      seg_learnability(ctx);
    }
  }
  const Clock clock;
  PhantomConfig pc;
  pc.seed = 2027;
  const auto recs = phantom_records(pc, 200, ctx.work / "c7" / "data");
  const Split split = split_dataset(recs, 0.2, derive_seed(7, SeedStream::kSplit));
  TrainConfig tc;
  tc.seed = 1;
  tc.epochs = kClsEpochs;
  tc.checkpoint_dir = ctx.work / "c7";
  const SegNet seg = load_segnet(ctx.seg_checkpoint);
  const ClsTrainResult r = train_classifier(tc, ClsNetConfig{}, seg, split.train, split.val, ctx.log());
  const auto& op = r.operating_point;
  const double mins = clock.seconds() / 60.0;
  int pos = 0;
  for (const auto& rec : split.val) pos += rec.progression_3yr;
  return {r.best_val_auc >= 0.85 && op.sensitivity >= 0.7 && op.specificity >= 0.7,
          fmt("validation AUC %.4f (>= 0.85) at epoch %d/%d; Youden sensitivity %.3f, specificity %.3f (each >= "
              "0.7); %zu train / %zu val (%d positive); %.1f min (target < 20)",
              r.best_val_auc, r.best_epoch, kClsEpochs, op.sensitivity, op.specificity, split.train.size(),
              split.val.size(), pos, mins)};
}

// ---- 8: baseline ordering ------------------------------------------------------

Outcome baseline_ordering(Context& ctx) {
  const Clock clock;
  double sum_v2 = 0.0, sum_v1 = 0.0;
  std::string runs;
  for (int run = 1; run <= 3; ++run) {
    PhantomConfig pc;
    pc.dims = {32, 32, 8};
    pc.radius_z_mm = {6.0, 9.0};
    // T1C contrast is faint; T2 carries the rest.
    pc.t1c_rim = 0.12;
    pc.t1c_core = 0.08;
    pc.seed = 800 + run;
    const auto recs = phantom_records(pc, 32, ctx.work / "c8" / ("data" + std::to_string(run)));
    const std::vector<StudyRecord> train(recs.begin(), recs.begin() + 24), val(recs.begin() + 24, recs.end());
    TrainConfig tc;
    tc.seed = run;
    tc.epochs = 30;
    SegNetConfig sc;
    sc.depth = 2;
    sc.base_channels = 8;
    sc.input_shape = pc.dims;
    const double v2 = train_segmentation(tc, sc, "v2net", train, val, ctx.log()).best_val_dice;
    const double v1 = train_segmentation(tc, sc, "vnet", train, val, ctx.log()).best_val_dice;
    sum_v2 += v2;
    sum_v1 += v1;
    runs += fmt("%s%.3f/%.3f", run > 1 ? ", " : "", v2, v1);
  }
  const double m2 = sum_v2 / 3.0, m1 = sum_v1 / 3.0;
  return {m2 >= m1 - 0.02, fmt("mean val Dice V2Net %.4f vs VNet-T1C %.4f (need >= %.4f); per run V2Net/VNet %s; "
                               "%.1f min",
                               m2, m1, m1 - 0.02, runs.c_str(), clock.seconds() / 60.0)};
}

// ---- 9: CLI determinism ----------------------------------------------------------

Outcome cli_determinism(Context& ctx) {
  const fs::path dir = ctx.work / "c9";
  fs::create_directories(dir);
  std::ofstream(dir / "cfg.json") << R"({
    "phantom": {"dims": [32, 32, 8], "radius_xy_mm": [3, 7], "radius_z_mm": [6, 9]},
    "seg_net": {"depth": 2, "base_channels": 4, "input_shape": [32, 32, 8]},
    "seg_train": {"epochs": 3}
  })";
  std::ostringstream out, err;
  const std::string cfg = (dir / "cfg.json").string();
  if (run_cli({"gen-phantom", "--config", cfg, "--out-dir", (dir / "data").string(), "-n", "12"}, out, err) != 0) {
    return {false, "gen-phantom failed: " + err.str()};
  }
  for (const char* leaf : {"a", "b"}) {
    if (run_cli({"train-seg", "--config", cfg, "--manifest", (dir / "data" / "manifest.jsonl").string(), "--seed",
                 "9", "--out-dir", (dir / leaf).string()},
                out, err) != 0) {
      return {false, "train-seg failed: " + err.str()};
    }
  }
  const std::string a = slurp(dir / "a" / "seg_v2netcls_history.csv");
  const std::string b = slurp(dir / "b" / "seg_v2netcls_history.csv");
  const bool ckpt_same = slurp(dir / "a" / "seg_v2netcls.ckpt") == slurp(dir / "b" / "seg_v2netcls.ckpt");
  return {!a.empty() && a == b,
          fmt("two train-seg runs with --seed 9: history CSVs %s (%zu bytes); checkpoints %s",
              a == b ? "byte-identical" : "DIFFER", a.size(), ckpt_same ? "byte-identical" : "differ")};
}

// ---- 10: crop geometry -----------------------------------------------------------

Outcome crop_property(Context&) {
  const auto r = crop_geometry(10, 500);
  Outcome o{r.pass() && r.trials == 500,
            fmt("%d random geometries: shape (3,64,64,12), binary mask, centroid origin oracle; %d failures", r.trials,
                r.failures)};
  if (!r.pass()) o.detail += "; first: " + r.first_failure;
  return o;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome(Context&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria runner"};
  Context ctx;
  std::string work = "acceptance_work";
  std::vector<int> only;
  app.add_option("--work-dir", work, "Scratch directory for generated data and checkpoints");
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  app.add_flag("--verbose", ctx.verbose, "Log training progress to stderr");
  CLI11_PARSE(app, argc, argv);
  ctx.work = work;
  fs::create_directories(ctx.work);

  const std::vector<Criterion> criteria{
      {1, "gradient suite", gradients},
      {2, "loss identities", losses},
      {3, "oracle equivalences", oracles},
      {4, "adjoint identity", adjoint},
      {5, "format round trips", round_trips},
      {6, "phantom segmentation learnability", seg_learnability},
      {7, "phantom classification learnability", cls_learnability},
      {8, "baseline ordering", baseline_ordering},
      {9, "CLI determinism", cli_determinism},
      {10, "crop geometry", crop_property},
  };
  const std::set<int> selected(only.begin(), only.end());
  int run = 0, passed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("raised: ") + e.what()};
    }
    ++run;
    passed += o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail << '\n'
              << std::flush;
  }
  std::cout << passed << "/" << run << " criteria passed\n";
  return passed == run ? 0 : 1;
}
