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

#include "saner/objective.hpp"

#include <cmath>
#include <string>

#include "saner/error.hpp"

namespace saner {
namespace {

void require_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                        const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument(std::string(what) + ": shape mismatch (" +
                          std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()) + ")");
  }
}

Eigen::VectorXd row_norms(const Eigen::MatrixXd& m, const char* what) {
  Eigen::VectorXd n = m.rowwise().norm();
  for (Eigen::Index i = 0; i < n.size(); ++i) {
    if (n[i] == 0.0) throw InvalidArgument(std::string(what) + ": zero-norm vector");
  }
  return n;
}

// Gradient of a loss w.r.t. raw rows given its gradient w.r.t. the
// normalized rows.
Eigen::MatrixXd through_normalization(const Eigen::MatrixXd& unit,
                                      const Eigen::VectorXd& norms,
                                      const Eigen::MatrixXd& grad_unit) {
  Eigen::VectorXd along = (unit.cwiseProduct(grad_unit)).rowwise().sum();
  Eigen::MatrixXd g = grad_unit - unit.cwiseProduct(along.replicate(1, unit.cols()));
  return g.cwiseQuotient(norms.replicate(1, unit.cols()));
}

// Row-wise softmax minus identity, i.e. d(mean CE with target i)/d logits
// before dividing by the batch size.
Eigen::MatrixXd softmax_rows_minus_eye(const Eigen::MatrixXd& logits,
                                       double* loss_sum) {
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    double mx = logits.row(i).maxCoeff();
    Eigen::RowVectorXd e = (logits.row(i).array() - mx).exp().matrix();
    double z = e.sum();
    sum += std::log(z) + mx - logits(i, i);
    p.row(i) = e / z;
  }
  *loss_sum = sum;
  p.diagonal().array() -= 1.0;
  return p;
}

}  // namespace

void LossWeights::validate() const {
  if (alpha < 0.0 || beta < 0.0 || gamma < 0.0) {
    throw InvalidArgument("loss weights must be non-negative");
  }
  if (!(temperature > 0.0)) {
    throw InvalidArgument("contrastive temperature must be positive");
  }
}

SimilarityProfile similarity_profile(const Eigen::VectorXd& h_neutral,
                                     std::span<const Eigen::VectorXd> group_feats) {
  if (group_feats.empty()) throw InvalidArgument("similarity_profile: no groups");
  const double hn = h_neutral.norm();
  if (hn == 0.0) throw InvalidArgument("similarity_profile: zero-norm feature");
  SimilarityProfile p;
  for (const auto& f : group_feats) {
    if (f.size() != h_neutral.size()) {
      throw InvalidArgument("similarity_profile: dimension mismatch");
    }
    const double fn = f.norm();
    if (fn == 0.0) throw InvalidArgument("similarity_profile: zero-norm feature");
    p.similarities.push_back(h_neutral.dot(f) / (hn * fn));
  }
  double sum = 0.0;
  for (double s : p.similarities) sum += s;
  p.mean = sum / static_cast<double>(p.similarities.size());
  return p;
}

double debias_loss(std::span<const SimilarityProfile> profiles) {
  if (profiles.empty()) throw InvalidArgument("debias_loss: empty batch");
  const std::size_t groups = profiles.front().similarities.size();
  if (groups < 2) throw InvalidArgument("debias_loss: need at least two groups");
  double total = 0.0;
  for (const auto& p : profiles) {
    if (p.similarities.size() != groups) {
      throw InvalidArgument("debias_loss: profiles cover different group sets");
    }
    double var = 0.0;
    for (double s : p.similarities) var += (s - p.mean) * (s - p.mean);
    total += std::sqrt(var / static_cast<double>(groups));
  }
  return total / static_cast<double>(profiles.size());
}

DebiasLossResult debias_loss(const Eigen::MatrixXd& h_neutral,
                             std::span<const Eigen::MatrixXd> group_feats) {
  const Eigen::Index batch = h_neutral.rows();
  const Eigen::Index k = h_neutral.cols();
  const auto groups = static_cast<Eigen::Index>(group_feats.size());
  if (batch == 0) throw InvalidArgument("debias_loss: empty batch");
  if (groups < 2) throw InvalidArgument("debias_loss: need at least two groups");
  for (const auto& f : group_feats) require_same_shape(h_neutral, f, "debias_loss");

  const Eigen::VectorXd hn = row_norms(h_neutral, "debias_loss");
  const Eigen::MatrixXd h_unit = h_neutral.cwiseQuotient(hn.replicate(1, k));

  DebiasLossResult r;
  r.grad_neutral = Eigen::MatrixXd::Zero(batch, k);
  std::vector<Eigen::VectorXd> fn(groups);
  std::vector<Eigen::MatrixXd> f_unit(groups);
  Eigen::MatrixXd sims(batch, groups);
  for (Eigen::Index g = 0; g < groups; ++g) {
    fn[g] = row_norms(group_feats[g], "debias_loss");
    f_unit[g] = group_feats[g].cwiseQuotient(fn[g].replicate(1, k));
    sims.col(g) = h_unit.cwiseProduct(f_unit[g]).rowwise().sum();
    r.grad_groups.push_back(Eigen::MatrixXd::Zero(batch, k));
  }

  const double inv_g = 1.0 / static_cast<double>(groups);
  const double inv_b = 1.0 / static_cast<double>(batch);
  double total = 0.0;
  for (Eigen::Index t = 0; t < batch; ++t) {
    SimilarityProfile p;
    for (Eigen::Index g = 0; g < groups; ++g) p.similarities.push_back(sims(t, g));
    p.mean = sims.row(t).sum() * inv_g;
    double var = 0.0;
    for (Eigen::Index g = 0; g < groups; ++g) {
      var += (sims(t, g) - p.mean) * (sims(t, g) - p.mean);
    }
    const double sd = std::sqrt(var * inv_g);
    total += sd;
    r.profiles.push_back(std::move(p));
    if (sd == 0.0) continue;  // subgradient 0 at the minimum

    for (Eigen::Index g = 0; g < groups; ++g) {
      // d sd / d s_g, already scaled by the batch mean.
      const double ds = (sims(t, g) - r.profiles.back().mean) * inv_g / sd * inv_b;
      const double s = sims(t, g);
      r.grad_neutral.row(t) +=
          ds * (f_unit[g].row(t) - s * h_unit.row(t)) / hn[t];
      r.grad_groups[g].row(t) +=
          ds * (h_unit.row(t) - s * f_unit[g].row(t)) / fn[g][t];
    }
  }
  r.value = total * inv_b;
  return r;
}

PairLossResult recon_loss(const Eigen::MatrixXd& h, const Eigen::MatrixXd& f) {
  require_same_shape(h, f, "recon_loss");
  if (h.size() == 0) throw InvalidArgument("recon_loss: empty batch");
  const double n = static_cast<double>(h.size());
  Eigen::MatrixXd diff = h - f;
  PairLossResult r;
  r.value = diff.squaredNorm() / n;
  r.grad_first = (2.0 / n) * diff;
  r.grad_second = -r.grad_first;
  return r;
}

PairLossResult contrastive_loss(const Eigen::MatrixXd& images,
                                const Eigen::MatrixXd& texts,
                                double temperature, bool symmetric) {
  require_same_shape(images, texts, "contrastive_loss");
  if (images.rows() == 0) throw InvalidArgument("contrastive_loss: empty batch");
  if (!(temperature > 0.0)) {
    throw InvalidArgument("contrastive_loss: temperature must be positive");
  }
  const Eigen::Index k = images.cols();
  const Eigen::VectorXd in = row_norms(images, "contrastive_loss");
  const Eigen::VectorXd tn = row_norms(texts, "contrastive_loss");
  const Eigen::MatrixXd iu = images.cwiseQuotient(in.replicate(1, k));
  const Eigen::MatrixXd tu = texts.cwiseQuotient(tn.replicate(1, k));
  const Eigen::MatrixXd logits = (iu * tu.transpose()) / temperature;
  const double inv_b = 1.0 / static_cast<double>(images.rows());

  double row_sum = 0.0;
  Eigen::MatrixXd d_logits = softmax_rows_minus_eye(logits, &row_sum) * inv_b;
  double value = row_sum * inv_b;
  if (symmetric) {
    double col_sum = 0.0;
    Eigen::MatrixXd d_cols =
        softmax_rows_minus_eye(logits.transpose(), &col_sum).transpose() * inv_b;
    value = 0.5 * (value + col_sum * inv_b);
    d_logits = 0.5 * (d_logits + d_cols);
  }

  PairLossResult r;
  r.value = value;
  r.grad_first =
      through_normalization(iu, in, d_logits * tu / temperature);
  r.grad_second =
      through_normalization(tu, tn, d_logits.transpose() * iu / temperature);
  return r;
}

LossBreakdown total_loss(const LossWeights& w, const LossBatch& b,
                         ContrastiveText text_side) {
  w.validate();
  require_same_shape(b.h_orig, b.f_orig, "total_loss");
  require_same_shape(b.h_orig, b.images, "total_loss");

  LossBreakdown out;
  DebiasLossResult deb = debias_loss(b.h_neutral, b.group_feats);
  PairLossResult recon = recon_loss(b.h_orig, b.f_orig);
  const bool debiased_text = text_side == ContrastiveText::kDebiased;
  PairLossResult cont =
      contrastive_loss(b.images, debiased_text ? b.h_orig : b.f_orig,
                       w.temperature, w.symmetric_contrastive);

  out.deb = deb.value;
  out.recon = recon.value;
  out.cont = cont.value;
  out.total = w.alpha * deb.value + w.beta * recon.value + w.gamma * cont.value;
  out.grad_neutral = w.alpha * deb.grad_neutral;
  out.grad_orig = w.beta * recon.grad_first;
  if (debiased_text) out.grad_orig += w.gamma * cont.grad_second;
  return out;
}

}  // namespace saner
