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

#include "saner/projection.hpp"

#include <string>

#include <Eigen/SVD>

#include "saner/error.hpp"
#include "saner/text_io.hpp"

namespace saner {
namespace {

constexpr char kMagic[] = "VLPJ";
constexpr double kRankTolerance = 1e-10;

}  // namespace

AttributeSubspace subspace_from_dataset(const EmbeddingDataset& prompts) {
  AttributeSubspace s;
  s.basis = prompts.matrix().transpose();
  for (const auto& r : prompts.records) s.prompts.push_back(r.meta);
  return s;
}

Projector build_projector(const Eigen::MatrixXd& basis) {
  const Eigen::Index k = basis.rows();
  const Eigen::Index m = basis.cols();
  if (m == 0) throw InvalidArgument("build_projector: subspace has no columns");
  if (m > k) {
    throw InvalidArgument("build_projector: " + std::to_string(m) +
                          " columns exceed dimension " + std::to_string(k));
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    if (basis.col(j).norm() == 0.0) {
      throw InvalidArgument("build_projector: column " + std::to_string(j) +
                            " is zero");
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(basis, Eigen::ComputeFullU);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = kRankTolerance * sv[0];
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv[rank] > cutoff) ++rank;

  // I - U (U^T U)^+ U^T is the projector onto the left singular vectors
  // beyond the numerical rank. A subspace spanning every dimension gives
  // exactly zero.
  const Eigen::MatrixXd c = svd.matrixU().rightCols(k - rank);
  Projector p;
  p.matrix = c * c.transpose();
  p.matrix = 0.5 * (p.matrix + p.matrix.transpose()).eval();
  return p;
}

EmbeddingDataset project(const Projector& projector,
                         const EmbeddingDataset& dataset) {
  if (static_cast<Eigen::Index>(dataset.dim) != projector.dim()) {
    throw InvalidArgument("project: dataset dim " + std::to_string(dataset.dim) +
                          " != projector dim " + std::to_string(projector.dim()));
  }
  EmbeddingDataset out = dataset;
  if (dataset.records.empty()) return out;
  const Eigen::MatrixXd projected = dataset.matrix() * projector.matrix;
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    out.records[i].vector = to_float(projected.row(static_cast<Eigen::Index>(i)).transpose());
  }
  return out;
}

void write_projector(const Projector& projector,
                     const std::filesystem::path& path) {
  ByteWriter w;
  w.raw(kMagic);
  w.u32(static_cast<std::uint32_t>(projector.dim()));
  for (Eigen::Index i = 0; i < projector.dim(); ++i) {
    for (Eigen::Index j = 0; j < projector.dim(); ++j) w.f64(projector.matrix(i, j));
  }
  write_bytes(path, w.bytes());
}

Projector read_projector(const std::filesystem::path& path) {
  auto bytes = read_bytes(path);
  ByteReader r(bytes);
  const std::string where = path.string() + ": ";
  if (r.raw(4, "magic") != kMagic) throw FormatError(where + "not a VLPJ projector");
  const Eigen::Index k = r.u32("K");
  if (k == 0) throw FormatError(where + "zero dimension");
  if (r.remaining() != 8ull * static_cast<std::uint64_t>(k * k)) {
    throw FormatError(where + "payload size does not match K=" + std::to_string(k));
  }
  Projector p;
  p.matrix.resize(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) p.matrix(i, j) = r.f64("matrix");
  }
  if (!p.matrix.allFinite()) throw FormatError(where + "non-finite entry");
  return p;
}

}  // namespace saner
