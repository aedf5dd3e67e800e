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

// Closed-form projection baseline: P = I - U (U^T U)^+ U^T removes the span
// of the attribute prompt embeddings (the columns of U) from text features.

#ifndef SANER_PROJECTION_HPP_
#define SANER_PROJECTION_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "saner/embedding_store.hpp"

namespace saner {

struct AttributeSubspace {
  Eigen::MatrixXd basis;             // K x m, one prompt embedding per column
  std::vector<std::string> prompts;  // source texts, may be empty
};

// Columns are the dataset's vectors; prompts come from the record meta.
AttributeSubspace subspace_from_dataset(const EmbeddingDataset& prompts);

struct Projector {
  Eigen::MatrixXd matrix;  // K x K, symmetric and idempotent

  Eigen::Index dim() const { return matrix.rows(); }
};

// Singular values below 1e-10 * sigma_max are treated as zero, so
// rank-deficient U is handled. Throws InvalidArgument if U has no columns,
// more columns than rows, or a zero column.
Projector build_projector(const Eigen::MatrixXd& basis);

// Each vector v becomes P v; ids, meta and labels are kept.
EmbeddingDataset project(const Projector& projector,
                         const EmbeddingDataset& dataset);

// "VLPJ" | K u32 | K x K f64 row-major, little-endian.
void write_projector(const Projector& projector,
                     const std::filesystem::path& path);
Projector read_projector(const std::filesystem::path& path);

}  // namespace saner

#endif  // SANER_PROJECTION_HPP_
