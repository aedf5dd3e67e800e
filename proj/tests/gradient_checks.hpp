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

// Finite-difference checks of every analytic gradient, shared by the unit
// tests and the acceptance suite. Each check draws random small instances,
// evaluates the loss with the oracle implementations and compares central
// differences against the library gradients.

#ifndef SANER_TESTS_GRADIENT_CHECKS_HPP_
#define SANER_TESTS_GRADIENT_CHECKS_HPP_

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "saner/debias_net.hpp"
#include "saner/objective.hpp"
#include "saner/trainer.hpp"

namespace gradcheck {

inline constexpr double kStep = 1e-5;
// Inputs whose relu pre-activations come this close to 0 are redrawn, since
// a central difference straddling the kink is not a derivative.
inline constexpr double kKinkMargin = 1e-3;

struct Summary {
  int instances = 0;
  int redrawn = 0;
  double worst = 0.0;

  void add(double err) {
    ++instances;
    worst = std::max(worst, err);
  }
};

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline saner::DebiasParams random_params(std::mt19937_64& rng, int k, int h) {
  saner::DebiasParams p;
  p.w1 = oracle::gaussian(rng, k, h);
  p.b1 = oracle::gaussian(rng, h, 1);
  p.w2 = oracle::gaussian(rng, h, k);
  p.b2 = oracle::gaussian(rng, k, 1);
  return p;
}

inline bool near_kink(const saner::DebiasParams& p, const Eigen::MatrixXd& z) {
  Eigen::MatrixXd pre = (z * p.w1).rowwise() + p.b1.transpose();
  return pre.cwiseAbs().minCoeff() < kKinkMargin;
}

inline oracle::Vec row(const Eigen::MatrixXd& m, Eigen::Index i) {
  return oracle::to_vec(m.row(i).transpose());
}

inline oracle::Mat layer_oracle(const saner::DebiasParams& p, const Eigen::MatrixXd& z) {
  oracle::Mat w1 = oracle::to_mat(p.w1), w2 = oracle::to_mat(p.w2);
  oracle::Vec b1 = oracle::to_vec(p.b1), b2 = oracle::to_vec(p.b2);
  oracle::Mat out;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    out.push_back(oracle::residual_forward(w1, b1, w2, b2, row(z, i)));
  }
  return out;
}

// Flattened parameter vector: W1, b1, W2, b2 in column-major order.
inline Eigen::VectorXd pack(const saner::DebiasParams& p) {
  Eigen::VectorXd v(p.w1.size() + p.b1.size() + p.w2.size() + p.b2.size());
  v << oracle::flatten(p.w1), p.b1, oracle::flatten(p.w2), p.b2;
  return v;
}

inline saner::DebiasParams unpack(const Eigen::VectorXd& v, int k, int h) {
  saner::DebiasParams p;
  Eigen::Index o = 0;
  p.w1 = oracle::unflatten(v.segment(o, k * h), k, h);
  o += k * h;
  p.b1 = v.segment(o, h);
  o += h;
  p.w2 = oracle::unflatten(v.segment(o, h * k), h, k);
  o += h * k;
  p.b2 = v.segment(o, k);
  return p;
}

// Layer backward against L = sum(G .* h), for parameters and input.
inline Summary check_debias_net(std::uint64_t seed, int instances) {
  std::mt19937_64 rng(seed);
  Summary s;
  while (s.instances < instances) {
    const int k = uniform_int(rng, 1, 8), h = uniform_int(rng, 1, 4), b = uniform_int(rng, 1, 4);
    saner::DebiasParams p = random_params(rng, k, h);
    Eigen::MatrixXd z = oracle::gaussian(rng, b, k);
    if (near_kink(p, z)) {
      ++s.redrawn;
      continue;
    }
    Eigen::MatrixXd g = oracle::gaussian(rng, b, k);
    saner::BackwardResult an = saner::backward(p, saner::forward(p, z), g);

    auto loss = [&](const saner::DebiasParams& q, const Eigen::MatrixXd& input) {
      oracle::Mat out = layer_oracle(q, input);
      double l = 0.0;
      for (int i = 0; i < b; ++i) l += oracle::dot(out[i], row(g, i));
      return l;
    };
    Eigen::VectorXd fd_p = oracle::fd_gradient(
        [&](const Eigen::VectorXd& v) { return loss(unpack(v, k, h), z); }, pack(p), kStep);
    Eigen::VectorXd fd_z = oracle::fd_gradient(
        [&](const Eigen::VectorXd& v) { return loss(p, oracle::unflatten(v, b, k)); },
        oracle::flatten(z), kStep);
    s.add(std::max(oracle::relative_error(pack(an.params), fd_p),
                   oracle::relative_error(oracle::flatten(an.input), fd_z)));
  }
  return s;
}

inline oracle::Mat rows(const Eigen::MatrixXd& m) { return oracle::to_mat(m); }

inline Summary check_debias_loss(std::uint64_t seed, int instances) {
  std::mt19937_64 rng(seed);
  Summary s;
  while (s.instances < instances) {
    const int k = uniform_int(rng, 2, 8), b = uniform_int(rng, 1, 4), groups = uniform_int(rng, 2, 4);
    Eigen::MatrixXd h = oracle::gaussian(rng, b, k);
    std::vector<Eigen::MatrixXd> f;
    for (int g = 0; g < groups; ++g) f.push_back(oracle::gaussian(rng, b, k));
    saner::DebiasLossResult an = saner::debias_loss(h, f);

    auto loss = [&](const Eigen::MatrixXd& hh, const std::vector<Eigen::MatrixXd>& ff) {
      std::vector<oracle::Mat> fm;
      for (const auto& x : ff) fm.push_back(rows(x));
      return oracle::debias_loss(rows(hh), fm);
    };
    double err = oracle::relative_error(
        oracle::flatten(an.grad_neutral),
        oracle::fd_gradient([&](const Eigen::VectorXd& v) { return loss(oracle::unflatten(v, b, k), f); },
                            oracle::flatten(h), kStep));
    for (int g = 0; g < groups; ++g) {
      Eigen::VectorXd fd = oracle::fd_gradient(
          [&](const Eigen::VectorXd& v) {
            auto ff = f;
            ff[g] = oracle::unflatten(v, b, k);
            return loss(h, ff);
          },
          oracle::flatten(f[g]), kStep);
      err = std::max(err, oracle::relative_error(oracle::flatten(an.grad_groups[g]), fd));
    }
    s.add(err);
  }
  return s;
}

inline Summary check_recon_loss(std::uint64_t seed, int instances) {
  std::mt19937_64 rng(seed);
  Summary s;
  while (s.instances < instances) {
    const int k = uniform_int(rng, 1, 8), b = uniform_int(rng, 1, 4);
    Eigen::MatrixXd h = oracle::gaussian(rng, b, k), f = oracle::gaussian(rng, b, k);
    saner::PairLossResult an = saner::recon_loss(h, f);
    Eigen::VectorXd fd_h = oracle::fd_gradient(
        [&](const Eigen::VectorXd& v) { return oracle::recon_loss(rows(oracle::unflatten(v, b, k)), rows(f)); },
        oracle::flatten(h), kStep);
    Eigen::VectorXd fd_f = oracle::fd_gradient(
        [&](const Eigen::VectorXd& v) { return oracle::recon_loss(rows(h), rows(oracle::unflatten(v, b, k))); },
        oracle::flatten(f), kStep);
    s.add(std::max(oracle::relative_error(oracle::flatten(an.grad_first), fd_h),
                   oracle::relative_error(oracle::flatten(an.grad_second), fd_f)));
  }
  return s;
}

inline Summary check_contrastive_loss(std::uint64_t seed, int instances) {
  std::mt19937_64 rng(seed);
  Summary s;
  while (s.instances < instances) {
    const int k = uniform_int(rng, 2, 8), b = uniform_int(rng, 1, 4);
    const double tau = uniform(rng, 0.1, 1.0);
    const bool symmetric = uniform_int(rng, 0, 1) == 1;
    Eigen::MatrixXd img = oracle::gaussian(rng, b, k), txt = oracle::gaussian(rng, b, k);
    saner::PairLossResult an = saner::contrastive_loss(img, txt, tau, symmetric);
    Eigen::VectorXd fd_i = oracle::fd_gradient(
        [&](const Eigen::VectorXd& v) {
          return oracle::contrastive_loss(rows(oracle::unflatten(v, b, k)), rows(txt), tau, symmetric);
        },
        oracle::flatten(img), kStep);
    Eigen::VectorXd fd_t = oracle::fd_gradient(
        [&](const Eigen::VectorXd& v) {
          return oracle::contrastive_loss(rows(img), rows(oracle::unflatten(v, b, k)), tau, symmetric);
        },
        oracle::flatten(txt), kStep);
    s.add(std::max(oracle::relative_error(oracle::flatten(an.grad_first), fd_i),
                   oracle::relative_error(oracle::flatten(an.grad_second), fd_t)));
  }
  return s;
}

// Weighted total through the layer, with respect to the layer parameters.
inline Summary check_total_loss(std::uint64_t seed, int instances) {
  std::mt19937_64 rng(seed);
  Summary s;
  while (s.instances < instances) {
    const int k = uniform_int(rng, 2, 8), h = uniform_int(rng, 1, 4), b = uniform_int(rng, 1, 4);
    const int groups = uniform_int(rng, 2, 3);
    saner::DebiasParams p = random_params(rng, k, h);
    p.w2 *= 0.3;
    p.b2 *= 0.3;
    Eigen::MatrixXd neut = oracle::gaussian(rng, b, k), orig = oracle::gaussian(rng, b, k),
                    img = oracle::gaussian(rng, b, k);
    std::vector<Eigen::MatrixXd> grp;
    for (int g = 0; g < groups; ++g) grp.push_back(oracle::gaussian(rng, b, k));
    if (near_kink(p, neut) || near_kink(p, orig)) {
      ++s.redrawn;
      continue;
    }
    saner::TrainConfig config;
    config.weights.alpha = uniform(rng, 0.1, 2.0);
    config.weights.beta = uniform(rng, 0.1, 2.0);
    config.weights.gamma = uniform(rng, 0.1, 2.0);
    config.weights.temperature = uniform(rng, 0.1, 1.0);
    config.weights.symmetric_contrastive = uniform_int(rng, 0, 1) == 1;
    config.contrastive_text =
        uniform_int(rng, 0, 1) == 1 ? saner::ContrastiveText::kRaw : saner::ContrastiveText::kDebiased;

    std::vector<saner::TrainingSample> samples;
    for (int t = 0; t < b; ++t) {
      saner::TrainingSample smp;
      smp.sample_id = std::to_string(t);
      smp.orig = orig.row(t).transpose();
      smp.neut = neut.row(t).transpose();
      for (int g = 0; g < groups; ++g) smp.groups.push_back(grp[g].row(t).transpose());
      smp.image = img.row(t).transpose();
      samples.push_back(std::move(smp));
    }
    saner::ObjectiveGradient an = saner::objective_gradient(p, config, samples);

    std::vector<oracle::Mat> grp_rows;
    for (const auto& g : grp) grp_rows.push_back(rows(g));
    const auto& w = config.weights;
    const oracle::Mat orig_rows = rows(orig), img_rows = rows(img);
    auto loss = [&](const Eigen::VectorXd& v) {
      saner::DebiasParams q = unpack(v, k, h);
      oracle::Mat hn = layer_oracle(q, neut), ho = layer_oracle(q, orig);
      const bool raw = config.contrastive_text == saner::ContrastiveText::kRaw;
      return w.alpha * oracle::debias_loss(hn, grp_rows) + w.beta * oracle::recon_loss(ho, orig_rows) +
             w.gamma * oracle::contrastive_loss(img_rows, raw ? orig_rows : ho, w.temperature,
                                                w.symmetric_contrastive);
    };
    Eigen::VectorXd fd = oracle::fd_gradient(loss, pack(p), kStep);
    s.add(oracle::relative_error(pack(an.grads), fd));
  }
  return s;
}

}  // namespace gradcheck

#endif  // SANER_TESTS_GRADIENT_CHECKS_HPP_
