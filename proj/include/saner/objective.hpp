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

// Training losses for the debiasing layer and their analytic gradients.
//
// Batches are row-major matrices (one sample per row). Every loss returns its
// value together with gradients for each input batch so callers can chain
// them into the layer's backward pass.

#ifndef SANER_OBJECTIVE_HPP_
#define SANER_OBJECTIVE_HPP_

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace saner {

struct LossWeights {
  double alpha = 1.0;    // debias
  double beta = 0.1;     // reconstruction
  double gamma = 1e-4;   // contrastive
  double temperature = 0.01;
  bool symmetric_contrastive = true;

  // Negative weights or a non-positive temperature throw InvalidArgument.
  // All-zero weights are accepted; they make the total loss identically 0.
  void validate() const;
};

// Which text features the contrastive term compares against the images.
enum class ContrastiveText { kDebiased, kRaw };

struct SimilarityProfile {
  std::vector<double> similarities;  // one per group, lexicon order
  double mean = 0.0;
};

SimilarityProfile similarity_profile(const Eigen::VectorXd& h_neutral,
                                     std::span<const Eigen::VectorXd> group_feats);

// Mean over samples of the population standard deviation of each profile.
double debias_loss(std::span<const SimilarityProfile> profiles);

struct DebiasLossResult {
  double value = 0.0;
  Eigen::MatrixXd grad_neutral;              // B x K
  std::vector<Eigen::MatrixXd> grad_groups;  // per group, B x K
  std::vector<SimilarityProfile> profiles;
};

// `group_feats[g]` row t is the group-g variant of sample t.
DebiasLossResult debias_loss(const Eigen::MatrixXd& h_neutral,
                             std::span<const Eigen::MatrixXd> group_feats);

struct PairLossResult {
  double value = 0.0;
  Eigen::MatrixXd grad_first;
  Eigen::MatrixXd grad_second;
};

// Mean over all entries of (h - f)^2.
PairLossResult recon_loss(const Eigen::MatrixXd& h, const Eigen::MatrixXd& f);

// InfoNCE over in-batch negatives on L2-normalized rows with logits
// cos(img_i, txt_j) / temperature. Symmetric averages the image->text and
// text->image cross-entropies; otherwise image->text only.
PairLossResult contrastive_loss(const Eigen::MatrixXd& images,
                                const Eigen::MatrixXd& texts,
                                double temperature, bool symmetric = true);

struct LossBreakdown {
  double deb = 0.0;
  double recon = 0.0;
  double cont = 0.0;
  double total = 0.0;
  Eigen::MatrixXd grad_neutral;  // dL/dh for the neutral rows
  Eigen::MatrixXd grad_orig;     // dL/dh for the original-caption rows
};

struct LossBatch {
  const Eigen::MatrixXd& h_neutral;
  std::span<const Eigen::MatrixXd> group_feats;
  const Eigen::MatrixXd& h_orig;
  const Eigen::MatrixXd& f_orig;
  const Eigen::MatrixXd& images;
};

// alpha * deb + beta * recon + gamma * cont, with gradients summed per
// debiased batch.
LossBreakdown total_loss(const LossWeights& weights, const LossBatch& batch,
                         ContrastiveText text_side = ContrastiveText::kDebiased);

}  // namespace saner

#endif  // SANER_OBJECTIVE_HPP_
