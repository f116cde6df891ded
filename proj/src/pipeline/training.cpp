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

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "v2nc/adam.hpp"
#include "v2nc/errors.hpp"
#include "v2nc/losses.hpp"
#include "v2nc/pipeline.hpp"
#include "v2nc/rng.hpp"

namespace v2nc {
namespace {

struct SegSample {
  std::string case_id;
  Tensor t1c, t2, mask;  // [1,1,X,Y,Z]
  int overall = 0;
  int t_stage = 0;
};

struct ClsSample {
  std::string case_id;
  Tensor crop;  // [1,C,X,Y,Z]
  int label = 0;
  Int3 origin{};
  bool fallback_used = false;
};

void emit(const LogFn& log, const char* fmt, auto... args) {
  if (!log) return;
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, args...);
  log(buf);
}

void check_input_dims(const Volume& v, const Int3& shape, const std::string& case_id) {
  if (v.dims() != shape) {
    throw ShapeMismatch("case " + case_id + ": preprocessed dims " + std::to_string(v.dims()[0]) + "x" +
                        std::to_string(v.dims()[1]) + "x" + std::to_string(v.dims()[2]) + " differ from network input " +
                        std::to_string(shape[0]) + "x" + std::to_string(shape[1]) + "x" + std::to_string(shape[2]));
  }
}

int stage_label(const std::optional<int>& v, int classes, const char* what, const std::string& case_id) {
  if (!v) throw MissingLabel("case " + case_id + " has no " + what);
  if (*v < 0 || *v >= classes) {
    throw MissingLabel("case " + case_id + ": " + what + " " + std::to_string(*v) + " outside [0, " +
                       std::to_string(classes) + ")");
  }
  return *v;
}

std::vector<SegSample> load_seg_samples(std::span<const StudyRecord> records, const SegNetConfig& net_cfg) {
  std::vector<SegSample> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    if (!rec.mask_path) throw MissingMask("case " + rec.case_id + " has no mask");
    SegSample s;
    s.case_id = rec.case_id;
    if (net_cfg.cls_route) {
      s.overall = stage_label(rec.overall_stage, net_cfg.num_overall_classes, "overall_stage", rec.case_id);
      s.t_stage = stage_label(rec.t_stage, net_cfg.num_t_classes, "t_stage", rec.case_id);
    }
    const CaseVolumes cv = load_case(rec);
    check_input_dims(cv.t1c, net_cfg.input_shape, rec.case_id);
    s.t1c = volume_to_tensor(cv.t1c);
    s.t2 = volume_to_tensor(cv.t2);
    s.mask = volume_to_tensor(*cv.mask);
    out.push_back(std::move(s));
  }
  return out;
}

// Stacks [1,...] tensors along the batch axis.
Tensor stack(const std::vector<const Tensor*>& parts) {
  Shape shape = parts.front()->shape();
  std::vector<float> v;
  v.reserve(parts.front()->numel() * parts.size());
  for (const Tensor* t : parts) v.insert(v.end(), t->values().begin(), t->values().end());
  shape[0] = static_cast<int>(parts.size());
  return Tensor::from(std::move(shape), std::move(v));
}

SegOutput seg_forward(const SegNet& net, const Tensor& t1c, const Tensor& t2) {
  return net.modalities() == 1 ? net.forward(t1c) : net.forward(t1c, t2);
}

double binarized_dice(const Tensor& prob, const Tensor& mask, float threshold) {
  std::vector<float> bin(prob.numel());
  const auto p = prob.values();
  for (std::size_t i = 0; i < bin.size(); ++i) bin[i] = p[i] >= threshold ? 1.0f : 0.0f;
  return dice_binary(bin, mask.values());
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoFailure("cannot create " + dir.string() + ": " + ec.message());
}

double median_of(std::vector<double> v) {
  std::ranges::sort(v);
  return quantile_sorted(v, 0.5);
}

}  // namespace

SegTrainResult train_segmentation(const TrainConfig& cfg, const SegNetConfig& net_cfg, const std::string& arch,
                                  std::span<const StudyRecord> train, std::span<const StudyRecord> val,
                                  const LogFn& log) {
  validate(cfg);
  if (train.empty()) throw EmptyDataset("segmentation training split is empty");
  if (val.empty()) throw EmptyDataset("segmentation validation split is empty");
  SegNet net = build_segnet(arch, net_cfg, cfg.seed);
  if (net.modalities() == 1) emit(log, "%s: using T1C only", arch.c_str());
  const auto train_set = load_seg_samples(train, net.config());
  const auto val_set = load_seg_samples(val, net.config());

  Adam opt(net.params().tensors(), AdamOptions{.lr = cfg.lr});
  SegTrainResult result{net, {}, 0, -1.0, 0.0, {}, {}};
  std::vector<NamedTensor> best_weights;
  std::vector<double> best_dice;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto order = shuffled_order(train_set.size(), derive_seed(cfg.seed, SeedStream::kShuffle, epoch));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<const Tensor*> t1c, t2, mask;
      std::vector<int> overall, t_stage;
      for (std::size_t k = start; k < end; ++k) {
        const auto& s = train_set[order[k]];
        t1c.push_back(&s.t1c);
        t2.push_back(&s.t2);
        mask.push_back(&s.mask);
        overall.push_back(s.overall);
        t_stage.push_back(s.t_stage);
      }
      const SegOutput out = seg_forward(net, stack(t1c), stack(t2));
      const Tensor loss = seg_loss(out, stack(mask), overall, t_stage, cfg.lambda_cls);
      const float value = loss.item();
      if (!std::isfinite(value)) {
        throw DivergedLoss("segmentation loss is " + std::to_string(value) + " at epoch " + std::to_string(epoch));
      }
      backward(loss);
      opt.step();
      opt.zero_grad();
      loss_sum += static_cast<double>(value) * static_cast<double>(end - start);
    }

    std::vector<double> dice;
    {
      NoGradGuard no_grad;
      for (const auto& s : val_set) {
        dice.push_back(binarized_dice(seg_forward(net, s.t1c, s.t2).prob_map, s.mask, cfg.binarize_threshold));
      }
    }
    double mean_dice = 0.0;
    for (double d : dice) mean_dice += d;
    mean_dice /= static_cast<double>(dice.size());
    const double median = median_of(dice);
    result.history.push_back({epoch, loss_sum / static_cast<double>(train_set.size()), mean_dice});
    result.best_val_median = std::max(result.best_val_median, median);
    emit(log, "seg %s epoch %d/%d loss %.5f val_dice mean %.4f median %.4f", arch.c_str(), epoch, cfg.epochs,
         result.history.back().train_loss, mean_dice, median);
    if (mean_dice > result.best_val_dice) {
      result.best_val_dice = mean_dice;
      result.best_epoch = epoch;
      best_weights = net.params().to_named();
      best_dice = dice;
    }
  }

  net.params().load(best_weights);
  result.net = net;
  result.val_report.model = arch;
  result.val_report.dataset = "validation";
  for (std::size_t i = 0; i < val_set.size(); ++i) {
    CaseResult c;
    c.case_id = val_set[i].case_id;
    c.dice = best_dice[i];
    result.val_report.per_case.push_back(std::move(c));
  }
  summarize_dice(result.val_report);

  if (!cfg.checkpoint_dir.empty()) {
    ensure_dir(cfg.checkpoint_dir);
    result.checkpoint = cfg.checkpoint_dir / ("seg_" + arch + ".ckpt");
    save_segnet(net, result.checkpoint);
    write_history_csv(result.history, cfg.checkpoint_dir / ("seg_" + arch + "_history.csv"));
  }
  return result;
}

namespace {

std::vector<ClsSample> load_cls_samples(std::span<const StudyRecord> records, const SegNet& seg,
                                        const ClsNetConfig& net_cfg, float threshold) {
  if (net_cfg.in_channels != 3) throw ConfigInvalid("classifier crops carry 3 channels (T1C, T2, mask)");
  std::vector<ClsSample> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    const CaseVolumes cv = load_case(rec);
    check_input_dims(cv.t1c, seg.config().input_shape, rec.case_id);
    const Volume mask = segment(seg, cv.t1c, cv.t2, threshold);
    CropVolume crop = extract_crop(cv.t1c, cv.t2, mask, net_cfg.input_shape);
    ClsSample s;
    s.case_id = rec.case_id;
    Shape shape = crop.data.shape();
    shape.insert(shape.begin(), 1);
    s.crop = reshape(crop.data, shape);
    s.label = rec.progression_3yr != 0 ? 1 : 0;
    s.origin = crop.origin;
    s.fallback_used = crop.fallback_used;
    out.push_back(std::move(s));
  }
  return out;
}

void require_both_classes(const std::vector<ClsSample>& set, const char* split) {
  int pos = 0;
  for (const auto& s : set) pos += s.label;
  if (pos == 0 || pos == static_cast<int>(set.size())) {
    throw SingleClassDataset(std::string("the ") + split + " split has a single progression label (" +
                             std::to_string(pos) + " of " + std::to_string(set.size()) + " positive)");
  }
}

std::vector<double> classifier_scores(const ResNet3d& net, const std::vector<ClsSample>& set) {
  NoGradGuard no_grad;
  std::vector<double> scores;
  for (const auto& s : set) scores.push_back(sigmoid(net.forward(s.crop)).item());
  return scores;
}

}  // namespace

ClsTrainResult train_classifier(const TrainConfig& cfg, const ClsNetConfig& net_cfg, const SegNet& seg,
                                std::span<const StudyRecord> train, std::span<const StudyRecord> val,
                                const LogFn& log) {
  validate(cfg);
  validate(net_cfg);
  if (train.empty()) throw EmptyDataset("classifier training split is empty");
  if (val.empty()) throw EmptyDataset("classifier validation split is empty");
  std::vector<ClsSample> train_set, val_set;
  {
    NoGradGuard no_grad;
    train_set = load_cls_samples(train, seg, net_cfg, cfg.binarize_threshold);
    val_set = load_cls_samples(val, seg, net_cfg, cfg.binarize_threshold);
  }
  require_both_classes(train_set, "training");
  require_both_classes(val_set, "validation");

  int n_pos = 0;
  for (const auto& s : train_set) n_pos += s.label;
  const int n_neg = static_cast<int>(train_set.size()) - n_pos;
  ResNet3d net = build_resnet18_3d(net_cfg, cfg.seed);
  ClsTrainResult result{net, {}, 0, -1.0, 1.0f, 1.0f, {}, {}, {}};
  result.w_pos = cfg.w_pos.value_or(static_cast<float>(n_neg) / static_cast<float>(n_pos));
  result.w_neg = cfg.w_neg.value_or(1.0f);
  emit(log, "cls: %zu train (%d positive), %zu val, w_pos %.4f w_neg %.4f", train_set.size(), n_pos, val_set.size(),
       result.w_pos, result.w_neg);

  std::vector<int> val_labels;
  for (const auto& s : val_set) val_labels.push_back(s.label);

  Adam opt(net.params().tensors(), AdamOptions{.lr = cfg.lr});
  std::vector<NamedTensor> best_weights;
  std::vector<double> best_scores;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto order = shuffled_order(train_set.size(), derive_seed(cfg.seed, SeedStream::kShuffle, epoch));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<const Tensor*> crops;
      std::vector<int> labels;
      for (std::size_t k = start; k < end; ++k) {
        crops.push_back(&train_set[order[k]].crop);
        labels.push_back(train_set[order[k]].label);
      }
      const Tensor loss = weighted_bce(net.forward(stack(crops)), labels, result.w_pos, result.w_neg);
      const float value = loss.item();
      if (!std::isfinite(value)) {
        throw DivergedLoss("classifier loss is " + std::to_string(value) + " at epoch " + std::to_string(epoch));
      }
      backward(loss);
      opt.step();
      opt.zero_grad();
      loss_sum += static_cast<double>(value) * static_cast<double>(end - start);
    }
    const auto scores = classifier_scores(net, val_set);
    const double auc = roc_auc(scores, val_labels);
    result.history.push_back({epoch, loss_sum / static_cast<double>(train_set.size()), auc});
    emit(log, "cls epoch %d/%d loss %.5f val_auc %.4f", epoch, cfg.epochs, result.history.back().train_loss, auc);
    if (auc > result.best_val_auc) {
      result.best_val_auc = auc;
      result.best_epoch = epoch;
      best_weights = net.params().to_named();
      best_scores = scores;
    }
  }

  net.params().load(best_weights);
  result.net = net;
  result.operating_point = youden_threshold(best_scores, val_labels);
  result.val_report.model = "resnet18_3d";
  result.val_report.dataset = "validation";
  for (std::size_t i = 0; i < val_set.size(); ++i) {
    CaseResult c;
    c.case_id = val_set[i].case_id;
    c.score = best_scores[i];
    c.label = val_set[i].label;
    c.crop_origin = val_set[i].origin;
    c.fallback_used = val_set[i].fallback_used;
    result.val_report.per_case.push_back(std::move(c));
  }
  summarize_scores(result.val_report);

  if (!cfg.checkpoint_dir.empty()) {
    ensure_dir(cfg.checkpoint_dir);
    result.checkpoint = cfg.checkpoint_dir / "cls_resnet18.ckpt";
    save_classifier(net, result.checkpoint, result.operating_point.threshold);
    write_history_csv(result.history, cfg.checkpoint_dir / "cls_resnet18_history.csv");
  }
  return result;
}

// ---- inference -------------------------------------------------------------

Volume segment(const SegNet& seg, const Volume& t1c, const Volume& t2, float threshold) {
  if (!t1c.same_geometry(t2)) throw ShapeMismatch("T1C and T2 geometries differ");
  check_input_dims(t1c, seg.config().input_shape, "(input)");
  NoGradGuard no_grad;
  const Tensor prob = seg_forward(seg, volume_to_tensor(t1c), volume_to_tensor(t2)).prob_map;
  return largest_component(binarize(tensor_to_volume(prob, t1c.spacing()), threshold));
}

Prediction predict(const SegNet& seg, const ResNet3d& cls, const Volume& t1c, const Volume& t2, float threshold) {
  Prediction p;
  p.mask = segment(seg, t1c, t2, threshold);
  const CropVolume crop = extract_crop(t1c, t2, p.mask, cls.config().input_shape);
  p.crop_origin = crop.origin;
  p.fallback_used = crop.fallback_used;
  Shape shape = crop.data.shape();
  shape.insert(shape.begin(), 1);
  NoGradGuard no_grad;
  p.prob = sigmoid(cls.forward(reshape(crop.data, shape))).item();
  return p;
}

Prediction predict(const std::filesystem::path& seg_checkpoint, const std::filesystem::path& cls_checkpoint,
                   const Volume& t1c, const Volume& t2) {
  const SegNet seg = load_segnet(seg_checkpoint);
  const LoadedClassifier cls = load_classifier(cls_checkpoint);
  return predict(seg, cls.net, t1c, t2);
}

}  // namespace v2nc
