// Copyright 2026 The Cribtag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cribtag/train.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <map>
#include <numeric>
#include <ostream>

#include "cribtag/error.hpp"
#include "cribtag/evaluate.hpp"
#include "cribtag/log.hpp"
#include "cribtag/ops.hpp"
#include "cribtag/random.hpp"

namespace cribtag {

namespace {

constexpr std::uint64_t kShuffleStream = 0x5f3759dfULL;
constexpr std::uint64_t kHoldoutStream = 0x4f1bbcdcULL;

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string_view freeze_policy_name(FreezePolicy policy) {
  return policy == FreezePolicy::kWholeModel ? "WHOLE_MODEL" : "LAST_TWO_LAYERS";
}

std::optional<FreezePolicy> parse_freeze_policy(std::string_view text) {
  const auto t = lower(text);
  if (t == "whole_model" || t == "whole" || t == "whole-model") return FreezePolicy::kWholeModel;
  if (t == "last_two_layers" || t == "last2" || t == "last-two-layers") return FreezePolicy::kLastTwoLayers;
  return std::nullopt;
}

std::vector<int> TrainConfig::resolved_milestones() const {
  if (!milestones.empty()) return milestones;
  std::vector<int> out;
  if (milestone_every > 0) {
    for (int e = milestone_every; e < epochs; e += milestone_every) out.push_back(e);
  }
  return out;
}

void TrainConfig::validate() const {
  if (epochs <= 0) throw ConfigError("train: epochs must be positive");
  if (!(lr0 > 0.0)) throw ConfigError("train: lr0 must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("train: gamma must lie in (0, 1]");
  if (batch_size == 0) throw ConfigError("train: batch_size must be positive");
  if (milestones.empty() && milestone_every <= 0) throw ConfigError("train: milestone_every must be positive");
  const auto ms = resolved_milestones();
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (ms[i] <= 0 || ms[i] >= epochs || (i > 0 && ms[i] <= ms[i - 1])) {
      throw ConfigError("train: milestones must be strictly increasing and within (0, epochs)");
    }
  }
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ConfigError("train: val_fraction must lie in [0, 1)");
  if (!(oversample_cap >= 1.0)) throw ConfigError("train: oversample_cap must be >= 1");
}

TrainConfig TrainConfig::preset(std::string_view name) {
  TrainConfig c;
  if (name == "base") return c;
  if (name == "tiny") {
    c.lr0 = 1e-3;
    return c;
  }
  throw ConfigError("unknown train preset '" + std::string(name) + "'");
}

double lr_at(int epoch, const TrainConfig& cfg) {
  if (epoch < 0 || epoch >= cfg.epochs) {
    throw ContractError("lr_at: epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(cfg.epochs) + ")");
  }
  const auto ms = cfg.resolved_milestones();
  const auto passed = std::count_if(ms.begin(), ms.end(), [&](int m) { return m <= epoch; });
  return cfg.lr0 * std::pow(cfg.gamma, static_cast<double>(passed));
}

template <typename T>
Tensor<T> bce_loss(const Tensor<T>& probs, const Tensor<T>& targets) {
  if (probs.shape() != targets.shape()) {
    throw ShapeError("bce_loss: probs " + shape_string(probs.shape()) + " vs targets " +
                     shape_string(targets.shape()));
  }
  const std::size_t n = probs.size();
  if (n == 0) throw ShapeError("bce_loss on an empty tensor");
  const T lo = static_cast<T>(kProbClamp), hi = static_cast<T>(1.0 - kProbClamp);
  const auto p = probs.data();
  const auto t = targets.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double q = std::clamp(p[i], lo, hi);
    acc -= t[i] * std::log(q) + (1.0 - t[i]) * std::log1p(-q);
  }
  const T loss = static_cast<T>(acc / static_cast<double>(n));
  return make_op_result<T>("bce_loss", Shape{}, {loss}, {&probs},
                           [probs, targets, n, lo, hi](TensorNode<T>& out) {
                             const T g = out.grad[0] / static_cast<T>(n);
                             const auto p = probs.data();
                             const auto t = targets.data();
                             std::vector<T> d(n, T(0));
                             for (std::size_t i = 0; i < n; ++i) {
                               if (p[i] < lo || p[i] > hi) continue;
                               d[i] = g * (-t[i] / p[i] + (T(1) - t[i]) / (T(1) - p[i]));
                             }
                             accumulate_grad<T>(probs, d);
                           });
}

bool is_trainable(std::string_view name, FreezePolicy policy, std::size_t n_layers) {
  if (policy == FreezePolicy::kWholeModel) return true;
  if (name.starts_with("head.")) return true;
  const std::size_t first = n_layers >= 2 ? n_layers - 2 : 0;
  for (std::size_t i = first; i < n_layers; ++i) {
    if (name.starts_with("blocks." + std::to_string(i) + ".")) return true;
  }
  return false;
}

template <typename T>
std::vector<Tensor<T>> apply_freeze_policy(Model<T>& model, FreezePolicy policy) {
  std::vector<Tensor<T>> trainable;
  for (auto& p : model.parameters()) {
    const bool on = is_trainable(p.name, policy, model.config().n_layers);
    p.value.set_requires_grad(on);
    if (on) trainable.push_back(p.value);
  }
  return trainable;
}

std::vector<float> multi_hot(LabelSet labels) {
  std::vector<float> v(kNumClasses, 0.0f);
  for (auto l : labels.labels()) v[static_cast<std::size_t>(l)] = 1.0f;
  return v;
}

std::pair<std::vector<Segment>, std::vector<Segment>> holdout_split(std::span<const Segment> segments,
                                                                    double fraction, std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < segments.size(); ++i) groups[segments[i].provenance.record_key].push_back(i);
  std::vector<std::string> keys;
  for (const auto& [k, _] : groups) keys.push_back(k);
  Rng rng(mix64(seed ^ kHoldoutStream));
  std::shuffle(keys.begin(), keys.end(), rng);
  std::size_t n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(keys.size())));
  if (fraction > 0.0 && keys.size() >= 2) n_val = std::clamp<std::size_t>(n_val, 1, keys.size() - 1);
  std::vector<bool> is_val(segments.size(), false);
  for (std::size_t g = 0; g < n_val; ++g) {
    for (auto i : groups[keys[g]]) is_val[i] = true;
  }
  std::pair<std::vector<Segment>, std::vector<Segment>> out;
  for (std::size_t i = 0; i < segments.size(); ++i) (is_val[i] ? out.second : out.first).push_back(segments[i]);
  return out;
}

std::string epoch_record_json(const EpochRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["lr"] = r.lr;
  j["train_loss"] = r.train_loss;
  j["val_macro_f1"] = r.val_macro_f1;
  j["val_accuracy"] = r.val_accuracy;
  j["steps"] = r.steps;
  return j.dump();
}

template <typename T>
FitResult<T> fit(std::span<const Segment> train, std::span<const Segment> val, Model<T>& model,
                 const TrainConfig& cfg, const FrontendConfig& fe, const NormStats& stats,
                 const FitHooks<T>& hooks) {
  cfg.validate();
  if (train.empty()) throw ContractError("fit: empty training set");
  if (val.empty()) throw ContractError("fit: empty validation split");
  const ModelConfig& mc = model.config();
  if (cfg.augment) cfg.augment_config.validate(mc.n_mels, mc.n_frames);

  auto trainable = apply_freeze_policy(model, cfg.freeze);
  AdamState<T> adam;
  adam.options = cfg.adam;
  adam.init(trainable);

  std::vector<LogMelSpectrogram> train_specs;
  train_specs.reserve(train.size());
  for (const auto& s : train) train_specs.push_back(model_input(s.audio(), fe, stats));
  std::vector<LogMelSpectrogram> val_specs;
  std::vector<LabelSet> val_truths;
  for (const auto& s : val) {
    val_specs.push_back(model_input(s.audio(), fe, stats));
    val_truths.push_back(s.labels);
  }

  const AugmentConfig& ac = cfg.augment_config;
  auto training_example = [&](std::size_t idx, int epoch) {
    LabeledSpectrogram ex{train_specs[idx], train[idx].labels};
    if (!cfg.augment) return ex;
    Rng rng(derive_seed(ac.seed ^ cfg.seed, idx, static_cast<std::uint64_t>(epoch)));
    std::bernoulli_distribution noise_coin(ac.noise_prob);
    if (std::isfinite(ac.noise_snr_db) && noise_coin(rng)) {
      const Waveform noisy = add_noise(train[idx].waveform(), ac.noise_snr_db, rng);
      ex.spec = normalize(log_mel(noisy, fe), stats);
    }
    ex.spec = time_mask(freq_mask(ex.spec, ac, rng), ac, rng);
    std::bernoulli_distribution mix_coin(ac.mixup_prob);
    if (ac.mixup_enabled && train.size() > 1 && mix_coin(rng)) {
      const auto other = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(train.size()) - 1));
      ex = spec_mixup(ex, {train_specs[other], train[other].labels}, rng);
    }
    return ex;
  };

  FitResult<T> result{model.clone(), -1, -1.0, {}, false};
  std::vector<std::size_t> order(train.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at(epoch, cfg);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(cfg.seed, kShuffleStream, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t bsz = std::min(cfg.batch_size, order.size() - start);
      for (auto& p : trainable) p.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t b = 0; b < bsz; ++b) {
        const auto ex = training_example(order[start + b], epoch);
        const auto target_f = multi_hot(ex.labels);
        Tensor<T> target(Shape{1, kNumClasses}, std::vector<T>(target_f.begin(), target_f.end()));
        Tape<T> tape;
        TapeScope<T> scope(tape);
        const Tensor<T> probs = model.forward_patches(extract_patches<T>(ex.spec, mc));
        const Tensor<T> loss = scale(bce_loss(probs, target), static_cast<T>(1.0 / static_cast<double>(bsz)));
        batch_loss += static_cast<double>(loss.item());
        if (!std::isfinite(batch_loss)) {
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(steps) + ", lr " + std::to_string(lr));
        }
        tape.backward(loss);
      }
      adam_step(trainable, adam, lr);
      loss_sum += batch_loss;
      ++steps;
      if (hooks.on_step) hooks.on_step(epoch, steps - 1, batch_loss);
    }

    std::vector<std::vector<float>> val_probs;
    val_probs.reserve(val_specs.size());
    for (const auto& s : val_specs) {
      const Tensor<T> p = model.forward_patches(extract_patches<T>(s, mc));
      val_probs.emplace_back(p.data().begin(), p.data().end());
    }
    const MetricsReport rep = evaluate_predictions(val_probs, val_truths, {cfg.val_mode, 0.5});

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = loss_sum / static_cast<double>(steps);
    rec.val_macro_f1 = rep.macro_f1;
    rec.val_accuracy = rep.accuracy;
    rec.steps = steps;
    result.log.push_back(rec);
    if (hooks.epoch_log) *hooks.epoch_log << epoch_record_json(rec) << '\n';
    info("epoch " + std::to_string(epoch) + " loss " + std::to_string(rec.train_loss) + " val_f1 " +
         std::to_string(rec.val_macro_f1));
    if (rec.val_macro_f1 > result.best_f1) {
      result.best_f1 = rec.val_macro_f1;
      result.best_epoch = epoch;
      result.best = model.clone();
    }
    if (hooks.on_epoch_end && hooks.on_epoch_end(rec, model)) {
      result.stopped_early = epoch + 1 < cfg.epochs;
      break;
    }
  }
  return result;
}

template Tensor<float> bce_loss<float>(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> bce_loss<double>(const Tensor<double>&, const Tensor<double>&);
template std::vector<Tensor<float>> apply_freeze_policy<float>(Model<float>&, FreezePolicy);
template std::vector<Tensor<double>> apply_freeze_policy<double>(Model<double>&, FreezePolicy);
template FitResult<float> fit<float>(std::span<const Segment>, std::span<const Segment>, Model<float>&,
                                     const TrainConfig&, const FrontendConfig&, const NormStats&,
                                     const FitHooks<float>&);
template FitResult<double> fit<double>(std::span<const Segment>, std::span<const Segment>, Model<double>&,
                                       const TrainConfig&, const FrontendConfig&, const NormStats&,
                                       const FitHooks<double>&);

}  // namespace cribtag
