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

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <random>

#include "gradient_checks.hpp"
#include "oracles.hpp"
#include "saner/debias_net.hpp"
#include "saner/error.hpp"
#include "saner/text_io.hpp"

TEST_CASE("init_params is seeded and starts at the identity") {
  auto a = saner::init_params(3, 8, 5);
  auto b = saner::init_params(3, 8, 5);
  auto c = saner::init_params(4, 8, 5);
  CHECK(a == b);
  CHECK(a.w1 != c.w1);
  CHECK(a.w2.isZero(0.0));
  CHECK(a.b2.isZero(0.0));
  CHECK(a.w1.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(8.0));
  CHECK(a.size() == 8 * 5 + 5 + 5 * 8 + 8);

  std::mt19937_64 rng(9);
  Eigen::MatrixXd z = oracle::gaussian(rng, 6, 8);
  z(0, 0) = -0.0;
  Eigen::MatrixXd h = saner::forward_h(a, z);
  CHECK(std::memcmp(h.data(), z.data(), sizeof(double) * z.size()) == 0);
}

TEST_CASE("forward by hand") {
  saner::DebiasParams p;
  p.w1 = Eigen::MatrixXd(2, 1);
  p.w1 << 1, 0;
  p.b1 = Eigen::VectorXd::Zero(1);
  p.w2 = Eigen::MatrixXd(1, 2);
  p.w2 << 1, 0;
  p.b2 = Eigen::VectorXd::Zero(2);

  auto t = saner::forward(p, Eigen::VectorXd(Eigen::Vector2d(2, 3)));
  CHECK(t.residual(0, 0) == 2.0);
  CHECK(t.residual(0, 1) == 0.0);
  CHECK(t.output(0, 0) == 4.0);
  CHECK(t.output(0, 1) == 3.0);
  CHECK((t.output - t.input - t.residual).isZero(0.0));

  Eigen::VectorXd z(2);
  z << -2, 3;
  CHECK(saner::forward_h(p, z) == z);
  CHECK_THROWS_AS(saner::forward_h(p, Eigen::VectorXd(Eigen::VectorXd::Ones(3))), saner::InvalidArgument);
}

TEST_CASE("backward basics") {
  std::mt19937_64 rng(5);
  auto p = gradcheck::random_params(rng, 6, 3);
  Eigen::MatrixXd z = oracle::gaussian(rng, 4, 6);
  auto trace = saner::forward(p, z);

  SUBCASE("zero upstream gradient") {
    auto r = saner::backward(p, trace, Eigen::MatrixXd::Zero(4, 6));
    CHECK(r.input.isZero(0.0));
    CHECK(gradcheck::pack(r.params).isZero(0.0));
  }
  SUBCASE("identity layer passes the gradient through") {
    auto id = saner::init_params(1, 6, 3);
    Eigen::MatrixXd g = oracle::gaussian(rng, 4, 6);
    auto r = saner::backward(id, saner::forward(id, z), g);
    CHECK(r.input == g);
  }
  SUBCASE("linear in the upstream gradient") {
    Eigen::MatrixXd g = oracle::gaussian(rng, 4, 6);
    auto r1 = saner::backward(p, trace, g);
    auto r2 = saner::backward(p, trace, 2.5 * g);
    CHECK((gradcheck::pack(r2.params) - 2.5 * gradcheck::pack(r1.params)).norm() <
          1e-12 * gradcheck::pack(r2.params).norm());
    CHECK((r2.input - 2.5 * r1.input).norm() < 1e-12 * r2.input.norm());
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(saner::backward(p, trace, Eigen::MatrixXd::Zero(3, 6)), saner::InvalidArgument);
  }
}

TEST_CASE("backward matches finite differences") {
  gradcheck::Summary s = gradcheck::check_debias_net(2024, 120);
  CHECK(s.instances == 120);
  CHECK(s.worst < 1e-4);
}

TEST_CASE("checkpoint round-trip") {
  std::mt19937_64 rng(1);
  auto p = gradcheck::random_params(rng, 5, 2);
  auto path = std::filesystem::temp_directory_path() / "saner_test_ckpt.vldb";
  saner::write_checkpoint(p, path);
  CHECK(saner::read_checkpoint(path) == p);
  auto bytes = saner::read_bytes(path);
  CHECK(bytes.size() == 16 + 8 * static_cast<std::size_t>(p.size()));
  bytes.pop_back();
  saner::write_bytes(path, bytes);
  CHECK_THROWS_AS(saner::read_checkpoint(path), saner::FormatError);
}
