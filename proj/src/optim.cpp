// Copyright 2026 The leafnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafnet/optim.hpp"

#include <algorithm>
#include <cmath>

namespace leafnet {

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error("TrainConfig: batch_size must be >= 1");
  if (!(lr0 > 0.0)) throw Error("TrainConfig: lr0 must be > 0");
  if (lr_decay < 0.0) throw Error("TrainConfig: lr_decay must be >= 0");
  if (epochs < 1) throw Error("TrainConfig: epochs must be >= 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw Error("TrainConfig: momentum must be in [0,1)");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw Error("TrainConfig: beta1 must be in (0,1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw Error("TrainConfig: beta2 must be in (0,1)");
  if (!(eps > 0.0)) throw Error("TrainConfig: eps must be > 0");
}

double lr_at(int epoch, const TrainConfig& cfg) {
  if (epoch < 0) throw Error("lr_at: epoch must be >= 0");
  return cfg.lr0 / (1.0 + cfg.lr_decay * epoch);
}

namespace {

void ensure_buffers(std::vector<std::vector<double>>& buffers, const std::vector<Tensor>& params,
                    const char* what) {
  if (buffers.empty()) {
    buffers.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      buffers[i].assign(params[i].data().size(), 0.0);
    }
    return;
  }
  if (buffers.size() != params.size()) {
    throw ShapeMismatch(std::string(what) + ": state has " + std::to_string(buffers.size()) +
                        " buffers for " + std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (buffers[i].size() != params[i].data().size()) {
      throw ShapeMismatch(std::string(what) + ": buffer " + std::to_string(i) +
                          " does not match its parameter shape");
    }
  }
}

const std::vector<double>& grad_of(const Tensor& param) {
  if (!param.has_grad()) {
    throw Error("optimizer step: parameter has no gradient; run backward first");
  }
  return param.grad();
}

}  // namespace

void sgd_step(std::vector<Tensor>& params, SgdState& state, double lr, double momentum) {
  ensure_buffers(state.velocity, params, "sgd_step");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::vector<double>& g = grad_of(params[i]);
    std::vector<double>& v = state.velocity[i];
    double* theta = params[i].data().data();
    for (std::size_t j = 0; j < g.size(); ++j) {
      v[j] = momentum * v[j] + g[j];
      theta[j] -= lr * v[j];
    }
  }
  ++state.step_count;
}

void adam_step(std::vector<Tensor>& params, AdamState& state, double lr, double beta1,
               double beta2, double eps) {
  ensure_buffers(state.m, params, "adam_step");
  ensure_buffers(state.v, params, "adam_step");
  const std::int64_t t = state.step_count + 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::vector<double>& g = grad_of(params[i]);
    std::vector<double>& m = state.m[i];
    std::vector<double>& v = state.v[i];
    double* theta = params[i].data().data();
    for (std::size_t j = 0; j < g.size(); ++j) {
      m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
      v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      theta[j] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
  state.step_count = t;
}

Tensor images_to_batch(const std::vector<const Image*>& images) {
  if (images.empty()) throw EmptyDataset("images_to_batch: empty batch");
  const int n = static_cast<int>(images.size());
  const int h = images[0]->height, w = images[0]->width, c = images[0]->channels;
  Tensor batch = Tensor::zeros({n, c, h, w});
  double* out = batch.data().data();
  for (int i = 0; i < n; ++i) {
    const Image& img = *images[i];
    if (img.height != h || img.width != w || img.channels != c) {
      throw ShapeMismatch("images_to_batch: mixed image sizes in one batch");
    }
    for (int ch = 0; ch < c; ++ch) {
      double* plane = out + ((static_cast<std::size_t>(i) * c + ch) * h) * w;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) plane[static_cast<std::size_t>(y) * w + x] = img.at(y, x, ch);
      }
    }
  }
  return batch;
}

PredictionMatrix predict_probabilities(const Model& model, const std::vector<Image>& images,
                                       AugmentConfig aug) {
  if (model.spec.num_classes != kNumClasses) {
    throw ClassCountMismatch("predict_probabilities: model does not emit 4 classes");
  }
  aug.target_size = model.spec.input_resolution;
  PredictionMatrix preds;
  preds.rows = static_cast<int>(images.size());
  preds.values.reserve(images.size() * kNumClasses);

  constexpr int kEvalBatch = 16;
  std::vector<Image> staged;
  std::vector<const Image*> batch_ptrs;
  for (std::size_t start = 0; start < images.size(); start += kEvalBatch) {
    const std::size_t end = std::min(images.size(), start + kEvalBatch);
    staged.clear();
    batch_ptrs.clear();
    for (std::size_t i = start; i < end; ++i) staged.push_back(apply_eval_pipeline(images[i], aug));
    for (const Image& img : staged) batch_ptrs.push_back(&img);
    Tape tape;
    tape.set_recording(false);
    Tensor logits = forward(tape, model, images_to_batch(batch_ptrs), Mode::Eval, nullptr);
    Tensor probs = softmax(tape, logits);
    preds.values.insert(preds.values.end(), probs.data().begin(), probs.data().end());
  }
  return preds;
}

namespace {

// Stream tags for deriving independent rng children per purpose.
constexpr std::uint64_t kShuffleStream = 0xA1;
constexpr std::uint64_t kAugmentStream = 0xA2;
constexpr std::uint64_t kNoiseStream = 0xA3;

LabelMatrix labels_for(const LabeledSet& set, const std::vector<int>& idx) {
  LabelMatrix m;
  m.rows = static_cast<int>(idx.size());
  for (int i : idx) {
    for (int j = 0; j < kNumClasses; ++j) {
      m.values.push_back(set.labels.values[static_cast<std::size_t>(i) * kNumClasses + j]);
    }
  }
  return m;
}

}  // namespace

TrainResult train_supervised(Model& model, const LabeledSet& train, const LabeledSet& val,
                             const TrainConfig& cfg, AugmentConfig aug, Rng& rng) {
  cfg.validate();
  if (train.size() == 0) throw EmptyDataset("train_supervised: empty training set");
  if (val.size() == 0) throw EmptyDataset("train_supervised: empty validation set");
  aug.target_size = model.spec.input_resolution;
  aug.validate();

  std::vector<Tensor> params = model.parameters();
  AdamState adam;
  SgdState sgd;

  TrainResult result;
  std::vector<std::vector<double>> best_weights = snapshot_weights(model);

  const int n_train = static_cast<int>(train.size());
  std::vector<int> order(n_train);
  for (int i = 0; i < n_train; ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng = rng.split(kShuffleStream).split(epoch);
    for (int i = n_train - 1; i > 0; --i) {
      std::swap(order[i], order[shuffle_rng.uniform_int(i + 1)]);
    }
    Rng epoch_aug_root = rng.split(kAugmentStream).split(epoch);
    Rng noise_rng = rng.split(kNoiseStream).split(epoch);
    const double lr = lr_at(epoch, cfg);

    double loss_sum = 0.0;
    int steps = 0;
    for (int start = 0; start < n_train; start += cfg.batch_size) {
      const int end = std::min(n_train, start + cfg.batch_size);
      std::vector<Image> staged;
      std::vector<int> idx;
      for (int i = start; i < end; ++i) {
        Rng img_rng = epoch_aug_root.split(static_cast<std::uint64_t>(order[i]));
        staged.push_back(apply_train_pipeline(train.images[order[i]], aug, img_rng));
        idx.push_back(order[i]);
      }
      std::vector<const Image*> ptrs;
      for (const Image& img : staged) ptrs.push_back(&img);
      const LabelMatrix batch_labels = labels_for(train, idx);
      Tensor targets =
          Tensor::from({static_cast<int>(idx.size()), kNumClasses}, batch_labels.values);

      Tape tape;
      Tensor logits = forward(tape, model, images_to_batch(ptrs), Mode::Train, &noise_rng);
      Tensor loss = cross_entropy_loss(tape, logits, targets);
      const double loss_value = loss.item();
      if (!std::isfinite(loss_value)) {
        throw NonFinite("train_supervised: non-finite loss at epoch " + std::to_string(epoch) +
                        " step " + std::to_string(steps));
      }
      for (Tensor& p : params) p.zero_grad();
      tape.backward(loss);
      // Branches dropped by stochastic depth leave their weights unreached;
      // their gradient this step is zero, not an error.
      for (Tensor& p : params) p.mutable_grad();
      if (cfg.optimizer == OptimizerKind::Adam) {
        adam_step(params, adam, lr, cfg.beta1, cfg.beta2, cfg.eps);
      } else {
        sgd_step(params, sgd, lr, cfg.momentum);
      }
      loss_sum += loss_value;
      ++steps;
    }

    const double train_loss = loss_sum / steps;
    const PredictionMatrix val_preds = predict_probabilities(model, val.images, aug);
    const AucSummary val_auc = mean_columnwise_auc(val_preds, val.labels);
    result.history.push_back(EpochRecord{epoch, train_loss, val_auc.mean});
    if (result.best_epoch < 0 || val_auc.mean > result.best_val_auc) {
      result.best_epoch = epoch;
      result.best_val_auc = val_auc.mean;
      best_weights = snapshot_weights(model);
    }
    result.final_train_loss = train_loss;
  }

  restore_weights(model, best_weights);
  const PredictionMatrix best_preds = predict_probabilities(model, val.images, aug);
  result.val_report = evaluate_predictions(best_preds, val.labels);
  result.val_report.loss_history = result.history;
  return result;
}

TrainResult train_supervised(Model& model, const LabeledSet& labeled, const TrainConfig& cfg,
                             const AugmentConfig& aug, Rng& rng) {
  auto [train, val] = split_stratified(labeled, 0.8, rng.split(0xDA7A).seed());
  return train_supervised(model, train, val, cfg, aug, rng);
}

}  // namespace leafnet
