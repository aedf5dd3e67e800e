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

#include "saner/debias_net.hpp"

#include <cmath>
#include <random>
#include <string>

#include "saner/error.hpp"
#include "saner/text_io.hpp"

namespace saner {
namespace {

constexpr char kMagic[] = "VLDB";
constexpr std::uint32_t kCheckpointVersion = 1;

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

}  // namespace

void DebiasParams::validate() const {
  const Eigen::Index k = w1.rows();
  const Eigen::Index h = w1.cols();
  if (k < 1 || h < 1) throw InvalidArgument("debias params: empty shapes");
  if (b1.size() != h || w2.rows() != h || w2.cols() != k || b2.size() != k) {
    throw InvalidArgument("debias params: inconsistent shapes");
  }
  if (!all_finite(w1) || !b1.allFinite() || !all_finite(w2) ||
      !b2.allFinite()) {
    throw InvalidArgument("debias params: non-finite entry");
  }
}

Eigen::Index DebiasParams::size() const {
  return w1.size() + b1.size() + w2.size() + b2.size();
}

bool DebiasParams::operator==(const DebiasParams& o) const {
  auto same = [](const auto& a, const auto& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
  };
  return same(w1, o.w1) && same(b1, o.b1) && same(w2, o.w2) && same(b2, o.b2);
}

DebiasParams zero_like(const DebiasParams& p) {
  return {Eigen::MatrixXd::Zero(p.w1.rows(), p.w1.cols()),
          Eigen::VectorXd::Zero(p.b1.size()),
          Eigen::MatrixXd::Zero(p.w2.rows(), p.w2.cols()),
          Eigen::VectorXd::Zero(p.b2.size())};
}

DebiasParams init_params(std::uint64_t seed, int input_dim, int hidden_dim) {
  if (input_dim < 1 || hidden_dim < 1) {
    throw InvalidArgument("init_params: dimensions must be >= 1");
  }
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
  std::uniform_real_distribution<double> uniform(-bound, bound);

  DebiasParams p;
  p.w1.resize(input_dim, hidden_dim);
  for (Eigen::Index i = 0; i < p.w1.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.w1.cols(); ++j) p.w1(i, j) = uniform(rng);
  }
  p.b1.resize(hidden_dim);
  for (Eigen::Index j = 0; j < p.b1.size(); ++j) p.b1[j] = uniform(rng);
  p.w2 = Eigen::MatrixXd::Zero(hidden_dim, input_dim);
  p.b2 = Eigen::VectorXd::Zero(input_dim);
  return p;
}

ForwardTrace forward(const DebiasParams& params, const Eigen::MatrixXd& batch) {
  if (batch.cols() != params.input_dim()) {
    throw InvalidArgument("forward: input dim " + std::to_string(batch.cols()) +
                          " != layer dim " +
                          std::to_string(params.input_dim()));
  }
  ForwardTrace t;
  t.input = batch;
  t.pre_activation = batch * params.w1;
  t.pre_activation.rowwise() += params.b1.transpose();
  t.hidden = t.pre_activation.cwiseMax(0.0);
  t.residual = t.hidden * params.w2;
  t.residual.rowwise() += params.b2.transpose();
  // A zero residual leaves z untouched, including the sign of -0.0.
  t.output = (t.residual.array() == 0.0)
                 .select(batch, batch + t.residual)
                 .matrix();
  return t;
}

ForwardTrace forward(const DebiasParams& params, const Eigen::VectorXd& z) {
  return forward(params, Eigen::MatrixXd(z.transpose()));
}

Eigen::MatrixXd forward_h(const DebiasParams& params,
                          const Eigen::MatrixXd& batch) {
  return forward(params, batch).output;
}

Eigen::VectorXd forward_h(const DebiasParams& params, const Eigen::VectorXd& z) {
  return forward(params, z).output.row(0).transpose();
}

BackwardResult backward(const DebiasParams& params, const ForwardTrace& trace,
                        const Eigen::MatrixXd& grad_output) {
  if (grad_output.rows() != trace.output.rows() ||
      grad_output.cols() != trace.output.cols()) {
    throw InvalidArgument("backward: gradient shape does not match trace");
  }
  if (trace.hidden.cols() != params.hidden_dim() ||
      trace.input.cols() != params.input_dim()) {
    throw InvalidArgument("backward: trace was produced with other params");
  }
  BackwardResult r;
  r.params.w2 = trace.hidden.transpose() * grad_output;
  r.params.b2 = grad_output.colwise().sum().transpose();
  Eigen::MatrixXd grad_pre = (grad_output * params.w2.transpose())
                                 .cwiseProduct((trace.pre_activation.array() > 0.0)
                                                   .cast<double>()
                                                   .matrix());
  r.params.w1 = trace.input.transpose() * grad_pre;
  r.params.b1 = grad_pre.colwise().sum().transpose();
  r.input = grad_output + grad_pre * params.w1.transpose();
  return r;
}

void write_checkpoint(const DebiasParams& params,
                      const std::filesystem::path& path) {
  params.validate();
  ByteWriter w;
  w.raw(kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(params.input_dim()));
  w.u32(static_cast<std::uint32_t>(params.hidden_dim()));
  auto put = [&w](const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) w.f64(m(i, j));
    }
  };
  put(params.w1);
  put(params.b1);
  put(params.w2);
  put(params.b2);
  write_bytes(path, w.bytes());
}

DebiasParams read_checkpoint(const std::filesystem::path& path) {
  auto bytes = read_bytes(path);
  ByteReader r(bytes);
  const std::string where = path.string() + ": ";
  if (r.raw(4, "magic") != kMagic) throw FormatError(where + "not a VLDB checkpoint");
  std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw FormatError(where + "unsupported checkpoint version " +
                      std::to_string(version));
  }
  Eigen::Index k = r.u32("K");
  Eigen::Index h = r.u32("H");
  if (k == 0 || h == 0) throw FormatError(where + "zero dimension");
  std::uint64_t expected = 8ull * static_cast<std::uint64_t>(2 * k * h + h + k);
  if (r.remaining() != expected) {
    throw FormatError(where + "payload size does not match K=" +
                      std::to_string(k) + " H=" + std::to_string(h));
  }
  auto get = [&r](Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = r.f64("weights");
    }
    return m;
  };
  DebiasParams p;
  p.w1 = get(k, h);
  p.b1 = get(h, 1);
  p.w2 = get(h, k);
  p.b2 = get(k, 1);
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(where + e.what());
  }
  return p;
}

}  // namespace saner
