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

#include "v2nc/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "v2nc/errors.hpp"
#include "v2nc/json_config.hpp"
#include "v2nc/metrics.hpp"
#include "v2nc/rng.hpp"
#include "v2nc/volume_io.hpp"

namespace v2nc {

using nlohmann::json;

// ---- RunConfig ---------------------------------------------------------------

RunConfig::RunConfig() { cls_train.epochs = 40; }

void to_json(json& j, const RunConfig& c) {
  j = json{{"seg_train", c.seg_train},
           {"cls_train", c.cls_train},
           {"seg_net", c.seg_net},
           {"cls_net", c.cls_net},
           {"phantom", c.phantom},
           {"paths", {{"out_dir", c.out_dir.string()}, {"manifest", c.manifest.string()}}}};
}

void merge_json(const json& j, RunConfig& c) {
  if (!j.is_object()) throw ConfigInvalid("config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "seg_train") {
      merge_json(value, c.seg_train);
    } else if (key == "cls_train") {
      merge_json(value, c.cls_train);
    } else if (key == "seg_net") {
      merge_json(value, c.seg_net);
    } else if (key == "cls_net") {
      merge_json(value, c.cls_net);
    } else if (key == "phantom") {
      merge_json(value, c.phantom);
    } else if (key == "paths") {
      if (!value.is_object()) throw ConfigInvalid("paths: expected a JSON object");
      for (const auto& [k, v] : value.items()) {
        if (k != "out_dir" && k != "manifest") throw ConfigInvalid("paths: unknown key \"" + k + "\"");
        if (!v.is_string()) throw ConfigInvalid("paths." + k + ": expected a string path");
        (k == "out_dir" ? c.out_dir : c.manifest) = v.get<std::string>();
      }
    } else {
      throw ConfigInvalid("config: unknown section \"" + key + "\"");
    }
  }
}

void from_json(const json& j, RunConfig& c) {
  c = RunConfig{};
  merge_json(j, c);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  RunConfig c;
  try {
    merge_json(j, c);
  } catch (const ConfigInvalid& e) {
    throw ConfigInvalid(path.string() + ": " + e.what());
  }
  return c;
}

// ---- commands ----------------------------------------------------------------

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::string out_dir;
  std::string manifest;
  // gen-phantom
  int cases = 10;
  std::vector<int> dims;
  // train-seg
  std::string arch = "v2netcls";
  // train-cls / evaluate / predict
  std::string seg_ckpt;
  std::string cls_ckpt;
  std::optional<double> threshold;
  std::string dataset = "test";
  std::string t1c;
  std::string t2;
  std::string out_mask;
};

class Logger {
 public:
  explicit Logger(std::ostream& err) : err_(err) {}
  void operator()(const std::string& line) const { err_ << "[v2nc] " << line << '\n' << std::flush; }
  LogFn fn() const {
    return [this](const std::string& s) { (*this)(s); };
  }

 private:
  std::ostream& err_;
};

RunConfig resolve(const Options& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (!o.out_dir.empty()) c.out_dir = o.out_dir;
  if (!o.manifest.empty()) c.manifest = o.manifest;
  return c;
}

void log_config(const Logger& log, const RunConfig& c) { log("resolved config " + json(c).dump()); }

void write_config(const RunConfig& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoFailure("cannot write " + path.string());
  out << json(c).dump(2) << '\n';
  if (!out) throw IoFailure("write failed for " + path.string());
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoFailure("cannot create " + dir.string() + ": " + ec.message());
}

std::vector<StudyRecord> load_records(const RunConfig& c) {
  if (c.manifest.empty()) throw ConfigInvalid("no manifest given (--manifest or paths.manifest)");
  return load_manifest(c.manifest);
}

// Records tagged "test" are held out from training.
std::vector<StudyRecord> trainable(std::vector<StudyRecord> records) {
  std::erase_if(records, [](const StudyRecord& r) { return r.split_tag && *r.split_tag == "test"; });
  if (records.empty()) throw EmptyDataset("manifest has no records outside the test split");
  return records;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigInvalid(std::string(what) + " not given");
  if (!std::filesystem::exists(path)) throw IoFailure(std::string(what) + " " + path + " does not exist");
}

int cmd_gen_phantom(const Options& o, std::ostream& out, const Logger& log) {
  RunConfig c = resolve(o);
  if (o.seed) c.phantom.seed = *o.seed;
  if (!o.dims.empty()) c.phantom.dims = {o.dims[0], o.dims[1], o.dims[2]};
  if (o.cases < 1) throw ConfigInvalid("--cases must be at least 1");
  log_config(log, c);
  const DatasetSummary s = generate_dataset(c.phantom, o.cases, c.out_dir);
  out << "manifest " << s.manifest.string() << '\n'
      << "cases " << s.cases << '\n'
      << "prevalence " << std::fixed << std::setprecision(4) << s.prevalence() << '\n';
  return kExitOk;
}

int cmd_train_seg(const Options& o, std::ostream& out, const Logger& log) {
  RunConfig c = resolve(o);
  if (o.seed) c.seg_train.seed = *o.seed;
  if (o.epochs) c.seg_train.epochs = *o.epochs;
  c.seg_train.checkpoint_dir = c.out_dir;
  log_config(log, c);
  const auto records = trainable(load_records(c));
  const Split split =
      split_dataset(records, c.seg_train.val_fraction, derive_seed(c.seg_train.seed, SeedStream::kSplit));
  log("arch " + o.arch + ": " + std::to_string(split.train.size()) + " train, " + std::to_string(split.val.size()) +
      " val");
  ensure_dir(c.out_dir);
  write_config(c, c.out_dir / ("seg_" + o.arch + "_config.json"));
  const SegTrainResult r = train_segmentation(c.seg_train, c.seg_net, o.arch, split.train, split.val, log.fn());
  const auto report = c.out_dir / ("seg_" + o.arch + "_val_report.json");
  write_report(r.val_report, report);
  write_table_csv(std::span(&r.val_report, 1), c.out_dir / ("seg_" + o.arch + "_val_table.csv"));
  out << "checkpoint " << r.checkpoint.string() << '\n'
      << "best_epoch " << r.best_epoch << '\n'
      << "best_val_dice " << std::fixed << std::setprecision(4) << r.best_val_dice << '\n'
      << "report " << report.string() << '\n';
  return kExitOk;
}

int cmd_train_cls(const Options& o, std::ostream& out, const Logger& log) {
  RunConfig c = resolve(o);
  if (o.seed) c.cls_train.seed = *o.seed;
  if (o.epochs) c.cls_train.epochs = *o.epochs;
  c.cls_train.checkpoint_dir = c.out_dir;
  log_config(log, c);
  require_file(o.seg_ckpt, "segmentation checkpoint");
  const SegNet seg = load_segnet(o.seg_ckpt);
  const auto records = trainable(load_records(c));
  const Split split =
      split_dataset(records, c.cls_train.val_fraction, derive_seed(c.cls_train.seed, SeedStream::kSplit));
  ensure_dir(c.out_dir);
  write_config(c, c.out_dir / "cls_config.json");
  const ClsTrainResult r = train_classifier(c.cls_train, c.cls_net, seg, split.train, split.val, log.fn());
  const auto report = c.out_dir / "cls_val_report.json";
  write_report(r.val_report, report);
  const auto& a = r.val_report.aggregate;
  out << "checkpoint " << r.checkpoint.string() << '\n'
      << "best_epoch " << r.best_epoch << '\n'
      << std::fixed << std::setprecision(4) << "val_auc " << *a.auc << '\n'
      << "threshold " << *a.threshold << '\n'
      << "sensitivity " << *a.sensitivity << '\n'
      << "specificity " << *a.specificity << '\n'
      << "report " << report.string() << '\n';
  return kExitOk;
}

int cmd_evaluate(const Options& o, std::ostream& out, const Logger& log) {
  const RunConfig c = resolve(o);
  log_config(log, c);
  require_file(o.seg_ckpt, "segmentation checkpoint");
  require_file(o.cls_ckpt, "classifier checkpoint");
  const SegNet seg = load_segnet(o.seg_ckpt);
  const LoadedClassifier cls = load_classifier(o.cls_ckpt);
  const auto records = load_records(c);
  if (records.empty()) throw EmptyDataset("manifest " + c.manifest.string() + " is empty");

  EvalReport report;
  report.model = arch_name(seg.config()) + "+resnet18_3d";
  report.dataset = o.dataset;
  for (const auto& rec : records) {
    const CaseVolumes cv = load_case(rec);
    Prediction p;
    try {
      p = predict(seg, cls.net, cv.t1c, cv.t2, c.cls_train.binarize_threshold);
    } catch (const ShapeMismatch& e) {
      throw ShapeMismatch("case " + rec.case_id + ": " + e.what());
    }
    CaseResult r;
    r.case_id = rec.case_id;
    if (cv.mask) r.dice = dice_binary(p.mask, *cv.mask);
    r.score = p.prob;
    r.label = rec.progression_3yr;
    r.crop_origin = p.crop_origin;
    r.fallback_used = p.fallback_used;
    report.per_case.push_back(std::move(r));
  }
  summarize_dice(report);

  const std::optional<double> threshold = o.threshold ? o.threshold : cls.threshold;
  int positives = 0;
  for (const auto& r : report.per_case) positives += *r.label;
  const bool both = positives > 0 && positives < static_cast<int>(report.per_case.size());
  if (both) {
    summarize_scores(report, threshold);
  } else {
    log("single-class labels: AUC undefined, rates use the frozen threshold only");
    if (threshold) {
      std::vector<double> s;
      std::vector<int> l;
      for (const auto& r : report.per_case) {
        s.push_back(*r.score);
        l.push_back(*r.label);
      }
      const Confusion conf = confusion_at(s, l, *threshold);
      report.aggregate.threshold = *threshold;
      report.aggregate.sensitivity = conf.sensitivity;
      report.aggregate.specificity = conf.specificity;
      report.aggregate.accuracy = conf.accuracy;
    }
  }
  if (!threshold && both) log("no stored threshold: using the Youden threshold of this set");

  ensure_dir(c.out_dir);
  const auto json_path = c.out_dir / (o.dataset + "_report.json");
  const auto csv_path = c.out_dir / (o.dataset + "_table.csv");
  write_report(report, json_path);
  write_table_csv(std::span(&report, 1), csv_path);
  const auto& a = report.aggregate;
  out << std::fixed << std::setprecision(4) << "cases " << report.per_case.size() << '\n';
  if (a.median_dice) out << "median_dice " << *a.median_dice << " (" << *a.dice_q1 << "-" << *a.dice_q3 << ")\n";
  if (a.auc) out << "auc " << *a.auc << '\n';
  if (a.sensitivity) out << "sensitivity " << *a.sensitivity << "\nspecificity " << *a.specificity << '\n';
  out << "report " << json_path.string() << '\n' << "table " << csv_path.string() << '\n';
  return kExitOk;
}

int cmd_predict(const Options& o, std::ostream& out, const Logger& log) {
  const RunConfig c = resolve(o);
  log_config(log, c);
  require_file(o.seg_ckpt, "segmentation checkpoint");
  require_file(o.cls_ckpt, "classifier checkpoint");
  const SegNet seg = load_segnet(o.seg_ckpt);
  const LoadedClassifier cls = load_classifier(o.cls_ckpt);
  const Volume t1c = read_nifti(o.t1c);
  const Volume t2 = read_nifti(o.t2);
  if (t1c.dims() != t2.dims()) {
    throw ShapeMismatch(o.t1c + " and " + o.t2 + " have different dimensions");
  }
  const CaseVolumes cv = preprocess_pair(t1c, t2);
  const Prediction p = predict(seg, cls.net, cv.t1c, cv.t2, c.cls_train.binarize_threshold);
  if (!o.out_mask.empty()) {
    const std::filesystem::path mask_path(o.out_mask);
    if (mask_path.has_parent_path()) ensure_dir(mask_path.parent_path());
    write_nifti(p.mask, mask_path);
  }
  out << "probability " << std::fixed << std::setprecision(6) << p.prob << '\n'
      << "fallback_used " << (p.fallback_used ? "true" : "false") << '\n'
      << "crop_origin " << p.crop_origin[0] << ' ' << p.crop_origin[1] << ' ' << p.crop_origin[2] << '\n';
  if (cls.threshold) out << "progression " << (p.prob >= *cls.threshold ? 1 : 0) << '\n';
  if (!o.out_mask.empty()) out << "mask " << o.out_mask << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-stage MRI tumour segmentation and progression prediction", "v2nc"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON run config")->check(CLI::ExistingFile);
    sub->add_option("--out-dir", o.out_dir, "Output directory (overrides paths.out_dir)");
  };
  auto* gen = app.add_subcommand("gen-phantom", "Write a synthetic phantom dataset and manifest");
  common(gen);
  gen->add_option("-n,--cases", o.cases, "Number of cases");
  gen->add_option("--seed", o.seed, "Phantom seed");
  gen->add_option("--dims", o.dims, "Volume dims X Y Z")->expected(3);

  auto* seg = app.add_subcommand("train-seg", "Train a segmentation network");
  common(seg);
  seg->add_option("--arch", o.arch, "Architecture")->check(CLI::IsMember({"vnet", "v2net", "v2netcls"}));
  seg->add_option("--manifest", o.manifest, "Training manifest (JSON lines)");
  seg->add_option("--seed", o.seed, "Root seed");
  seg->add_option("--epochs", o.epochs, "Epoch count");

  auto* cls = app.add_subcommand("train-cls", "Train the progression classifier on predicted-mask crops");
  common(cls);
  cls->add_option("--seg-checkpoint", o.seg_ckpt, "Frozen segmentation checkpoint")->required();
  cls->add_option("--manifest", o.manifest, "Training manifest (JSON lines)");
  cls->add_option("--seed", o.seed, "Root seed");
  cls->add_option("--epochs", o.epochs, "Epoch count");

  auto* eval = app.add_subcommand("evaluate", "Two-stage inference and report over a manifest");
  common(eval);
  eval->add_option("--seg-checkpoint", o.seg_ckpt, "Segmentation checkpoint")->required();
  eval->add_option("--cls-checkpoint", o.cls_ckpt, "Classifier checkpoint")->required();
  eval->add_option("--manifest", o.manifest, "Held-out manifest (JSON lines)");
  eval->add_option("--threshold", o.threshold, "Frozen decision threshold (default: stored with the classifier)");
  eval->add_option("--name", o.dataset, "Dataset name used in the report and file names");

  auto* pred = app.add_subcommand("predict", "Predict mask and progression probability for one case");
  common(pred);
  pred->add_option("--seg-checkpoint", o.seg_ckpt, "Segmentation checkpoint")->required();
  pred->add_option("--cls-checkpoint", o.cls_ckpt, "Classifier checkpoint")->required();
  pred->add_option("--t1c", o.t1c, "T1C NIfTI")->required()->check(CLI::ExistingFile);
  pred->add_option("--t2", o.t2, "T2 NIfTI")->required()->check(CLI::ExistingFile);
  pred->add_option("--out-mask", o.out_mask, "Output mask NIfTI");

  std::vector<std::string> storage = args;
  storage.insert(storage.begin(), "v2nc");
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << "run with --help for usage\n";
    return kExitUsage;
  }

  const Logger log(err);
  try {
    if (*gen) return cmd_gen_phantom(o, out, log);
    if (*seg) return cmd_train_seg(o, out, log);
    if (*cls) return cmd_train_cls(o, out, log);
    if (*eval) return cmd_evaluate(o, out, log);
    return cmd_predict(o, out, log);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace v2nc
