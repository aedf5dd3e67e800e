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

// Independent reference implementations used by the unit tests and the
// acceptance suite. Plain loops over std::vector, no Eigen, no library code.

#ifndef SANER_TESTS_ORACLES_HPP_
#define SANER_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // rows

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double cosine(const Vec& a, const Vec& b) {
  return dot(a, b) / (norm(a) * norm(b));
}

inline Vec to_vec(const Eigen::VectorXd& v) { return Vec(v.data(), v.data() + v.size()); }

inline Mat to_mat(const Eigen::MatrixXd& m) {
  Mat out(static_cast<std::size_t>(m.rows()), Vec(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  }
  return out;
}

// Enumerates every record, sorts by (score desc, index asc), counts labels of
// the first k by loop and returns max_a ln(count_a * |A| / k).
inline double max_skew(const Mat& images, const std::vector<int>& labels,
                       const Vec& query, std::size_t k, std::size_t groups) {
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < images.size(); ++i) {
    ranked.emplace_back(cosine(images[i], query), i);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::size_t> counts(groups, 0);
  for (std::size_t i = 0; i < k; ++i) counts[labels[ranked[i].second]] += 1;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < groups; ++a) {
    if (counts[a] == 0) continue;
    double eta = static_cast<double>(counts[a]) / static_cast<double>(k);
    best = std::max(best, std::log(eta * static_cast<double>(groups)));
  }
  return best;
}

inline double statistical_parity(const Vec& counts) {
  double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  double s = 0.0;
  for (double c : counts) {
    double d = c / total - 1.0 / static_cast<double>(counts.size());
    s += d * d;
  }
  return std::sqrt(s);
}

// Mean over samples of the population std of cos(h_t, f_{g,t}) over g.
inline double debias_loss(const Mat& h, const std::vector<Mat>& groups) {
  double total = 0.0;
  for (std::size_t t = 0; t < h.size(); ++t) {
    Vec s;
    for (const auto& g : groups) s.push_back(cosine(h[t], g[t]));
    double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    double var = 0.0;
    for (double x : s) var += (x - mean) * (x - mean);
    total += std::sqrt(var / static_cast<double>(s.size()));
  }
  return total / static_cast<double>(h.size());
}

inline double recon_loss(const Mat& h, const Mat& f) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    for (std::size_t j = 0; j < h[i].size(); ++j) {
      s += (h[i][j] - f[i][j]) * (h[i][j] - f[i][j]);
      ++n;
    }
  }
  return s / static_cast<double>(n);
}

// Cross-entropy written as -log(exp(l_ii) / sum_j exp(l_ij)) with a max shift.
inline double contrastive_loss(const Mat& images, const Mat& texts, double tau,
                               bool symmetric) {
  const std::size_t b = images.size();
  Mat logits(b, Vec(b));
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) logits[i][j] = cosine(images[i], texts[j]) / tau;
  }
  auto ce = [&](bool by_row) {
    double total = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < b; ++j) m = std::max(m, by_row ? logits[i][j] : logits[j][i]);
      double z = 0.0;
      for (std::size_t j = 0; j < b; ++j) z += std::exp((by_row ? logits[i][j] : logits[j][i]) - m);
      total += -(logits[i][i] - m - std::log(z));
    }
    return total / static_cast<double>(b);
  };
  return symmetric ? 0.5 * (ce(true) + ce(false)) : ce(true);
}

// Residual layer output z + relu(z W1 + b1) W2 + b2 for one row.
inline Vec residual_forward(const Mat& w1, const Vec& b1, const Mat& w2, const Vec& b2,
                            const Vec& z) {
  const std::size_t k = z.size(), h = b1.size();
  Vec hidden(h);
  for (std::size_t j = 0; j < h; ++j) {
    double a = b1[j];
    for (std::size_t i = 0; i < k; ++i) a += z[i] * w1[i][j];
    hidden[j] = a > 0.0 ? a : 0.0;
  }
  Vec out(z);
  for (std::size_t c = 0; c < k; ++c) {
    double r = b2[c];
    for (std::size_t j = 0; j < h; ++j) r += hidden[j] * w2[j][c];
    out[c] += r;
  }
  return out;
}

// Central finite-difference gradient of f at x (in place perturbation).
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   Eigen::VectorXd x, double step) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = f(x);
    x[i] = saved - step;
    const double down = f(x);
    x[i] = saved;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  if (scale < 1e-12) return (a - b).norm();
  return (a - b).norm() / scale;
}

inline Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

inline Eigen::MatrixXd unflatten(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

inline Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = n(rng);
  }
  return m;
}

}  // namespace oracle

#endif  // SANER_TESTS_ORACLES_HPP_
