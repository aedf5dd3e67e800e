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

// Residual debiasing layer: h = z + relu(z W1 + b1) W2 + b2.
//
// Batches are row-major: one input vector per row. All math is double
// precision. The output layer starts at zero, so an untrained layer is the
// identity.

#ifndef SANER_DEBIAS_NET_HPP_
#define SANER_DEBIAS_NET_HPP_

#include <cstdint>
#include <filesystem>

#include <Eigen/Dense>

namespace saner {

inline constexpr int kDefaultHiddenDim = 128;

struct DebiasParams {
  Eigen::MatrixXd w1;  // K x H
  Eigen::VectorXd b1;  // H
  Eigen::MatrixXd w2;  // H x K
  Eigen::VectorXd b2;  // K

  Eigen::Index input_dim() const { return w1.rows(); }
  Eigen::Index hidden_dim() const { return w1.cols(); }

  // Throws InvalidArgument for inconsistent shapes or non-finite entries.
  void validate() const;

  // Number of scalar parameters.
  Eigen::Index size() const;

  bool operator==(const DebiasParams& other) const;
};

// Gradients with the same shapes as DebiasParams.
using ParamGrads = DebiasParams;

DebiasParams zero_like(const DebiasParams& params);

// W1 and b1 uniform in +/- 1/sqrt(K), W2 and b2 exactly zero.
DebiasParams init_params(std::uint64_t seed, int input_dim, int hidden_dim);

struct ForwardTrace {
  Eigen::MatrixXd input;           // z
  Eigen::MatrixXd pre_activation;  // z W1 + b1
  Eigen::MatrixXd hidden;          // relu(pre_activation)
  Eigen::MatrixXd residual;        // hidden W2 + b2
  Eigen::MatrixXd output;          // z + residual
};

ForwardTrace forward(const DebiasParams& params, const Eigen::MatrixXd& batch);
ForwardTrace forward(const DebiasParams& params, const Eigen::VectorXd& z);

// Only the output rows: h for each input row.
Eigen::MatrixXd forward_h(const DebiasParams& params,
                          const Eigen::MatrixXd& batch);
Eigen::VectorXd forward_h(const DebiasParams& params, const Eigen::VectorXd& z);

struct BackwardResult {
  ParamGrads params;
  Eigen::MatrixXd input;  // dL/dz, one row per sample
};

// Chain-rules dL/dh (one row per traced sample) through the layer. The relu
// subgradient at zero is zero.
BackwardResult backward(const DebiasParams& params, const ForwardTrace& trace,
                        const Eigen::MatrixXd& grad_output);

// Checkpoint: "VLDB" | version u32 | K u32 | H u32 | W1 b1 W2 b2 as f64,
// row-major, little-endian.
void write_checkpoint(const DebiasParams& params,
                      const std::filesystem::path& path);
DebiasParams read_checkpoint(const std::filesystem::path& path);

}  // namespace saner

#endif  // SANER_DEBIAS_NET_HPP_
