// Copyright 2026 The SANER Toolkit Authors.
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

#include "saner/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <unordered_map>

#include "saner/error.hpp"
#include "saner/text_io.hpp"

namespace saner {
namespace {

// Shuffling draws from a stream separate from weight initialization.
constexpr std::uint64_t kShuffleStream = 0x9E3779B97F4A7C15ull;

bool parse_bool(const std::string& key, std::string_view v) {
  std::string s = to_lower(trim(v));
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw FormatError("config key '" + key + "': expected a boolean");
}

long parse_int(const std::string& key, std::string_view v) {
  double d = parse_double(v);
  if (d != std::floor(d)) {
    throw FormatError("config key '" + key + "': expected an integer");
  }
  return static_cast<long>(d);
}

Eigen::MatrixXd stack(std::span<const TrainingSample> samples,
                      const std::function<const Eigen::VectorXd&(const TrainingSample&)>& pick) {
  const Eigen::Index k = pick(samples.front()).size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(samples.size()), k);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Eigen::VectorXd& v = pick(samples[i]);
    if (v.size() != k) throw InvalidArgument("training samples differ in dimension");
    m.row(static_cast<Eigen::Index>(i)) = v.transpose();
  }
  return m;
}

struct SampleMatrices {
  Eigen::MatrixXd orig, neut, images;
  std::vector<Eigen::MatrixXd> groups;
};

SampleMatrices to_matrices(std::span<const TrainingSample> samples) {
  if (samples.empty()) throw InvalidArgument("no training samples");
  const std::size_t n_groups = samples.front().groups.size();
  if (n_groups < 2) throw InvalidArgument("training samples need >= 2 groups");
  for (const auto& s : samples) {
    if (s.groups.size() != n_groups) {
      throw InvalidArgument("sample '" + s.sample_id + "' has a different group count");
    }
  }
  SampleMatrices m;
  m.orig = stack(samples, [](const TrainingSample& s) -> const Eigen::VectorXd& { return s.orig; });
  m.neut = stack(samples, [](const TrainingSample& s) -> const Eigen::VectorXd& { return s.neut; });
  m.images = stack(samples, [](const TrainingSample& s) -> const Eigen::VectorXd& { return s.image; });
  for (std::size_t g = 0; g < n_groups; ++g) {
    m.groups.push_back(stack(samples, [g](const TrainingSample& s) -> const Eigen::VectorXd& {
      return s.groups[g];
    }));
  }
  return m;
}

ObjectiveGradient batch_loss(const DebiasParams& params, const TrainConfig& config,
                             const Eigen::MatrixXd& neut,
                             std::span<const Eigen::MatrixXd> groups,
                             const Eigen::MatrixXd& orig,
                             const Eigen::MatrixXd& images) {
  ForwardTrace tn = forward(params, neut);
  ForwardTrace to = forward(params, orig);
  ObjectiveGradient out;
  out.loss = total_loss(config.weights,
                        {tn.output, groups, to.output, orig, images},
                        config.contrastive_text);
  BackwardResult bn = backward(params, tn, out.loss.grad_neutral);
  BackwardResult bo = backward(params, to, out.loss.grad_orig);
  out.grads = bn.params;
  out.grads.w1 += bo.params.w1;
  out.grads.b1 += bo.params.b1;
  out.grads.w2 += bo.params.w2;
  out.grads.b2 += bo.params.b2;
  return out;
}

template <typename F>
void for_each_tensor(DebiasParams& a, F&& f) {
  f(a.w1);
  f(a.b1);
  f(a.w2);
  f(a.b2);
}

class Optimizer {
 public:
  Optimizer(const TrainConfig& config, const DebiasParams& params)
      : config_(config), m_(zero_like(params)), v_(zero_like(params)) {}

  void step(DebiasParams& params, ParamGrads& grads) {
    if (config_.weight_decay > 0.0) {
      grads.w1 += config_.weight_decay * params.w1;
      grads.b1 += config_.weight_decay * params.b1;
      grads.w2 += config_.weight_decay * params.w2;
      grads.b2 += config_.weight_decay * params.b2;
    }
    if (config_.grad_clip > 0.0) {
      double sq = grads.w1.squaredNorm() + grads.b1.squaredNorm() +
                  grads.w2.squaredNorm() + grads.b2.squaredNorm();
      double norm = std::sqrt(sq);
      if (norm > config_.grad_clip) {
        double s = config_.grad_clip / norm;
        for_each_tensor(grads, [s](auto& t) { t *= s; });
      }
    }
    ++t_;
    if (config_.optimizer == OptimizerKind::kSgd) {
      params.w1 -= config_.learning_rate * grads.w1;
      params.b1 -= config_.learning_rate * grads.b1;
      params.w2 -= config_.learning_rate * grads.w2;
      params.b2 -= config_.learning_rate * grads.b2;
      return;
    }
    const double b1 = config_.adam_beta1;
    const double b2 = config_.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    auto update = [&](auto& p, auto& g, auto& m, auto& v) {
      m = b1 * m + (1.0 - b1) * g;
      v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
      p.array() -= config_.learning_rate * (m.array() / c1) /
                   ((v.array() / c2).sqrt() + config_.adam_epsilon);
    };
    update(params.w1, grads.w1, m_.w1, v_.w1);
    update(params.b1, grads.b1, m_.b1, v_.b1);
    update(params.w2, grads.w2, m_.w2, v_.w2);
    update(params.b2, grads.b2, m_.b2, v_.b2);
  }

 private:
  const TrainConfig& config_;
  DebiasParams m_;
  DebiasParams v_;
  long t_ = 0;
};

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be > 0");
  weights.validate();
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 &&
        adam_beta2 < 1.0)) {
    throw InvalidArgument("Adam decay rates must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw InvalidArgument("adam_epsilon must be > 0");
  if (weight_decay < 0.0 || grad_clip < 0.0) {
    throw InvalidArgument("weight_decay and grad_clip must be >= 0");
  }
  if (hidden_dim < 1) throw InvalidArgument("hidden_dim must be >= 1");
  if (!(subset_fraction > 0.0 && subset_fraction <= 1.0)) {
    throw InvalidArgument("subset_fraction must lie in (0, 1]");
  }
  if (checkpoint_every < 1) throw InvalidArgument("checkpoint_every must be >= 1");
}

TrainConfig parse_config(std::string_view text) {
  TrainConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view t = line;
    t = trim(t.substr(0, t.find('#')));
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    }
    const std::string key(trim(t.substr(0, eq)));
    const std::string_view v = trim(t.substr(eq + 1));
    if (key == "epochs") c.epochs = static_cast<int>(parse_int(key, v));
    else if (key == "batch_size") c.batch_size = static_cast<int>(parse_int(key, v));
    else if (key == "learning_rate") c.learning_rate = parse_double(v);
    else if (key == "alpha") c.weights.alpha = parse_double(v);
    else if (key == "beta") c.weights.beta = parse_double(v);
    else if (key == "gamma") c.weights.gamma = parse_double(v);
    else if (key == "temperature") c.weights.temperature = parse_double(v);
    else if (key == "symmetric_contrastive") c.weights.symmetric_contrastive = parse_bool(key, v);
    else if (key == "contrastive_text") {
      if (v == "debiased") c.contrastive_text = ContrastiveText::kDebiased;
      else if (v == "raw") c.contrastive_text = ContrastiveText::kRaw;
      else throw FormatError("contrastive_text must be 'debiased' or 'raw'");
    } else if (key == "optimizer") {
      if (v == "adam") c.optimizer = OptimizerKind::kAdam;
      else if (v == "sgd") c.optimizer = OptimizerKind::kSgd;
      else throw FormatError("optimizer must be 'adam' or 'sgd'");
    }
    else if (key == "adam_beta1") c.adam_beta1 = parse_double(v);
    else if (key == "adam_beta2") c.adam_beta2 = parse_double(v);
    else if (key == "adam_epsilon") c.adam_epsilon = parse_double(v);
    else if (key == "weight_decay") c.weight_decay = parse_double(v);
    else if (key == "grad_clip") c.grad_clip = parse_double(v);
    else if (key == "hidden_dim") c.hidden_dim = static_cast<int>(parse_int(key, v));
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(key, v));
    else if (key == "subset_fraction") c.subset_fraction = parse_double(v);
    else if (key == "checkpoint_every") c.checkpoint_every = static_cast<int>(parse_int(key, v));
    else throw FormatError("unknown config key '" + key + "'");
  }
  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::string text;
  for (const auto& line : read_lines(path)) text += line + "\n";
  try {
    return parse_config(text);
  } catch (const Error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string format_config(const TrainConfig& c) {
  std::ostringstream out;
  out << "epochs = " << c.epochs << "\n"
      << "batch_size = " << c.batch_size << "\n"
      << "learning_rate = " << format_double(c.learning_rate) << "\n"
      << "alpha = " << format_double(c.weights.alpha) << "\n"
      << "beta = " << format_double(c.weights.beta) << "\n"
      << "gamma = " << format_double(c.weights.gamma) << "\n"
      << "temperature = " << format_double(c.weights.temperature) << "\n"
      << "symmetric_contrastive = "
      << (c.weights.symmetric_contrastive ? "true" : "false") << "\n"
      << "contrastive_text = "
      << (c.contrastive_text == ContrastiveText::kDebiased ? "debiased" : "raw")
      << "\n"
      << "optimizer = " << (c.optimizer == OptimizerKind::kAdam ? "adam" : "sgd")
      << "\n"
      << "adam_beta1 = " << format_double(c.adam_beta1) << "\n"
      << "adam_beta2 = " << format_double(c.adam_beta2) << "\n"
      << "adam_epsilon = " << format_double(c.adam_epsilon) << "\n"
      << "weight_decay = " << format_double(c.weight_decay) << "\n"
      << "grad_clip = " << format_double(c.grad_clip) << "\n"
      << "hidden_dim = " << c.hidden_dim << "\n"
      << "seed = " << c.seed << "\n"
      << "subset_fraction = " << format_double(c.subset_fraction) << "\n"
      << "checkpoint_every = " << c.checkpoint_every << "\n";
  return out.str();
}

AssembledSamples assemble_samples(const EmbeddingDataset& text,
                                  const EmbeddingDataset& images,
                                  const AssembleOptions& options) {
  if (text.modality != Modality::kText) {
    throw InvalidArgument("assemble_samples: first dataset must hold text");
  }
  if (images.dim != text.dim) {
    throw InvalidArgument("assemble_samples: text dim " + std::to_string(text.dim) +
                          " != image dim " + std::to_string(images.dim));
  }
  if (!(options.subset_fraction > 0.0 && options.subset_fraction <= 1.0)) {
    throw InvalidArgument("subset_fraction must lie in (0, 1]");
  }

  AssembledSamples out;
  out.groups = options.groups;
  const bool infer_groups = out.groups.empty();

  struct Parts {
    std::optional<std::size_t> orig, neut;
    std::map<std::string, std::size_t> groups;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, Parts> parts;
  for (std::size_t i = 0; i < text.records.size(); ++i) {
    VariantKey key = VariantKey::parse(text.records[i].id);
    auto [it, inserted] = parts.try_emplace(key.sample_id);
    if (inserted) order.push_back(key.sample_id);
    switch (key.kind) {
      case VariantKey::Kind::kOrig:
        it->second.orig = i;
        break;
      case VariantKey::Kind::kNeut:
        it->second.neut = i;
        break;
      case VariantKey::Kind::kGroup:
        if (std::find(out.groups.begin(), out.groups.end(), key.group) ==
            out.groups.end()) {
          if (!infer_groups) {
            throw FormatError("record '" + text.records[i].id +
                              "' names group outside the active lexicon");
          }
          out.groups.push_back(key.group);
        }
        it->second.groups[key.group] = i;
        break;
    }
  }
  if (out.groups.size() < 2) {
    throw InvalidArgument("assemble_samples: need at least two attribute groups");
  }

  std::unordered_map<std::string_view, std::size_t> image_index;
  for (std::size_t i = 0; i < images.records.size(); ++i) {
    image_index.emplace(images.records[i].id, i);
  }

  for (const auto& sid : order) {
    const Parts& p = parts.at(sid);
    auto img = image_index.find(sid);
    bool complete = p.orig && p.neut && img != image_index.end();
    for (const auto& g : out.groups) complete = complete && p.groups.count(g);
    if (!complete) {
      ++out.dropped;
      continue;
    }
    TrainingSample s;
    s.sample_id = sid;
    s.orig = text.vector(*p.orig);
    s.neut = text.vector(*p.neut);
    for (const auto& g : out.groups) s.groups.push_back(text.vector(p.groups.at(g)));
    s.image = images.vector(img->second);
    out.samples.push_back(std::move(s));
  }
  if (out.samples.empty()) {
    throw InvalidArgument("assemble_samples: no complete samples (" +
                          std::to_string(out.dropped) + " dropped)");
  }

  if (options.subset_fraction < 1.0) {
    const std::size_t n = out.samples.size();
    const auto keep = static_cast<std::size_t>(
        std::ceil(static_cast<double>(n) * options.subset_fraction));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(options.seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(keep);
    std::sort(idx.begin(), idx.end());
    std::vector<TrainingSample> chosen;
    chosen.reserve(keep);
    for (std::size_t i : idx) chosen.push_back(std::move(out.samples[i]));
    out.subsampled = n - keep;
    out.samples = std::move(chosen);
  }
  return out;
}

std::string format_history(const TrainHistory& history) {
  std::string out;
  for (const auto& s : history.steps) {
    out += std::to_string(s.step) + "\t" + format_double(s.deb) + "\t" +
           format_double(s.recon) + "\t" + format_double(s.cont) + "\t" +
           format_double(s.total) + "\n";
  }
  return out;
}

TrainResult train(const TrainConfig& config,
                  std::span<const TrainingSample> samples,
                  const EpochCallback& on_epoch) {
  config.validate();
  const SampleMatrices all = to_matrices(samples);
  const auto n = static_cast<std::size_t>(all.orig.rows());
  const auto k = static_cast<int>(all.orig.cols());

  TrainResult result;
  result.params = init_params(config.seed, k, config.hidden_dim);
  Optimizer optimizer(config, result.params);
  std::mt19937_64 rng(config.seed ^ kShuffleStream);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  const auto batch = static_cast<std::size_t>(config.batch_size);

  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t start = 0; start < n; start += batch) {
      std::vector<int> idx(perm.begin() + static_cast<std::ptrdiff_t>(start),
                           perm.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + batch)));
      std::vector<Eigen::MatrixXd> groups;
      groups.reserve(all.groups.size());
      for (const auto& g : all.groups) groups.emplace_back(g(idx, Eigen::all));
      ObjectiveGradient b = batch_loss(result.params, config, all.neut(idx, Eigen::all),
                               groups, all.orig(idx, Eigen::all),
                               all.images(idx, Eigen::all));
      const LossBreakdown& l = b.loss;
      if (!std::isfinite(l.total) || !std::isfinite(l.deb) ||
          !std::isfinite(l.recon) || !std::isfinite(l.cont)) {
        throw NumericError("non-finite loss at step " + std::to_string(step) +
                           " (epoch " + std::to_string(epoch) + ")");
      }
      result.history.steps.push_back({step, epoch, l.deb, l.recon, l.cont, l.total});
      optimizer.step(result.params, b.grads);
      ++step;
    }
    result.history.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (on_epoch && ((epoch + 1) % config.checkpoint_every == 0 ||
                     epoch + 1 == config.epochs)) {
      on_epoch(epoch, result.params);
    }
  }
  return result;
}

LossBreakdown evaluate_losses(const DebiasParams& params,
                              const TrainConfig& config,
                              std::span<const TrainingSample> samples) {
  const SampleMatrices all = to_matrices(samples);
  return batch_loss(params, config, all.neut, all.groups, all.orig, all.images).loss;
}

ObjectiveGradient objective_gradient(const DebiasParams& params,
                                     const TrainConfig& config,
                                     std::span<const TrainingSample> samples) {
  config.weights.validate();
  const SampleMatrices all = to_matrices(samples);
  return batch_loss(params, config, all.neut, all.groups, all.orig, all.images);
}

EmbeddingDataset apply_debias(const DebiasParams& params,
                              const EmbeddingDataset& text) {
  if (text.modality != Modality::kText) {
    throw InvalidArgument("apply_debias: the layer only applies to text features");
  }
  if (static_cast<Eigen::Index>(text.dim) != params.input_dim()) {
    throw InvalidArgument("apply_debias: dataset dim " + std::to_string(text.dim) +
                          " != layer dim " + std::to_string(params.input_dim()));
  }
  EmbeddingDataset out = text;
  if (text.records.empty()) return out;
  Eigen::MatrixXd h = forward_h(params, text.matrix());
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    auto& v = out.records[i].vector;
    for (std::size_t j = 0; j < v.size(); ++j) {
      v[j] = static_cast<float>(h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
  }
  return out;
}

}  // namespace saner
