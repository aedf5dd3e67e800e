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

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "saner/bias_eval.hpp"
#include "saner/error.hpp"

namespace {

saner::EmbeddingDataset labelled(const std::vector<std::vector<float>>& vectors,
                                 const std::vector<int>& labels, std::size_t groups = 2) {
  saner::EmbeddingDataset d;
  d.dim = static_cast<std::uint32_t>(vectors.front().size());
  d.modality = saner::Modality::kImage;
  d.has_labels = true;
  for (std::size_t g = 0; g < groups; ++g) d.label_names.push_back("g" + std::to_string(g));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    d.records.push_back({"r" + std::to_string(i), "", static_cast<std::int16_t>(labels[i]), vectors[i]});
  }
  return d;
}

}  // namespace

TEST_CASE("top_k ranking") {
  auto d = labelled({{1, 0}, {0, 1}, {0.6f, 0.8f}}, {0, 1, 0});
  Eigen::Vector2d q(1, 0);
  auto r = saner::top_k(q, d, 2);
  CHECK(r.indices == std::vector<std::size_t>{0, 2});
  CHECK(r.ids == std::vector<std::string>{"r0", "r2"});
  CHECK(r.scores[0] == doctest::Approx(1.0));
  CHECK(r.scores[1] == doctest::Approx(0.6).epsilon(1e-7));
  CHECK(saner::top_k(q, d, 3).indices.size() == 3);
  CHECK_THROWS_AS(saner::top_k(q, d, 4), saner::InvalidArgument);
  CHECK_THROWS_AS(saner::top_k(q, d, 0), saner::InvalidArgument);
  CHECK_THROWS_AS(saner::top_k(Eigen::Vector3d(1, 0, 0), d, 1), saner::InvalidArgument);
}

TEST_CASE("top_k ties go to the lower index") {
  std::vector<std::vector<float>> v(9, {0.1f, 0.9f, 0.3f});
  v[3] = v[7] = {0.33f, -0.71f, 0.2f};
  auto d = labelled(v, std::vector<int>(9, 0));
  auto r = saner::top_k(Eigen::Vector3d(0.33, -0.71, 0.2), d, 1);
  CHECK(r.indices == std::vector<std::size_t>{3});
  CHECK(saner::top_k(Eigen::Vector3d(0.1, 0.9, 0.3), d, 7).indices ==
        std::vector<std::size_t>{0, 1, 2, 4, 5, 6, 8});
}

TEST_CASE("max_skew closed forms") {
  SUBCASE("counts") {
    std::vector<std::size_t> c31{3, 1}, c40{4, 0}, c22{2, 2}, c222{2, 2, 2};
    CHECK(saner::max_skew_from_counts(c31, 4) == doctest::Approx(std::log(1.5)).epsilon(1e-15));
    CHECK(saner::max_skew_from_counts(c31, 4) == doctest::Approx(0.405465).epsilon(1e-6));
    CHECK(saner::max_skew_from_counts(c40, 4) == doctest::Approx(0.693147).epsilon(1e-6));
    CHECK(saner::max_skew_from_counts(c22, 4) == 0.0);
    CHECK(saner::max_skew_from_counts(c222, 6) == 0.0);
  }
  SUBCASE("retrieval with three of four from one group") {
    auto d = labelled({{1, 0}, {0.9f, 0.1f}, {0.8f, 0.2f}, {0.7f, 0.3f}, {0, 1}}, {0, 0, 1, 0, 1});
    CHECK(saner::max_skew(Eigen::Vector2d(1, 0), d, 4) == doctest::Approx(std::log(1.5)));
    CHECK(saner::max_skew(Eigen::Vector2d(1, 0), d, 2) == doctest::Approx(std::log(2.0)));
  }
  SUBCASE("unlabelled images") {
    auto d = labelled({{1, 0}}, {0});
    d.has_labels = false;
    d.label_names.clear();
    d.records[0].label = saner::kNoLabel;
    CHECK_THROWS_AS(saner::max_skew(Eigen::Vector2d(1, 0), d, 1), saner::InvalidArgument);
  }
}

TEST_CASE("max_skew matches the brute-force oracle") {
  std::mt19937_64 rng(2718);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 50)(rng);
    const int k = std::uniform_int_distribution<int>(1, std::min(10, n))(rng);
    const int groups = std::uniform_int_distribution<int>(2, 4)(rng);
    const int dim = std::uniform_int_distribution<int>(2, 6)(rng);
    std::vector<std::vector<float>> v;
    std::vector<int> labels;
    std::normal_distribution<float> normal;
    for (int i = 0; i < n; ++i) {
      if (i > 0 && trial % 4 == 0 && i % 5 == 0) {
        v.push_back(v[static_cast<std::size_t>(i / 2)]);
      } else {
        std::vector<float> x(static_cast<std::size_t>(dim));
        for (auto& e : x) e = normal(rng);
        v.push_back(x);
      }
      labels.push_back(std::uniform_int_distribution<int>(0, groups - 1)(rng));
    }
    auto d = labelled(v, labels, static_cast<std::size_t>(groups));
    Eigen::VectorXd q = oracle::gaussian(rng, dim, 1);
    oracle::Mat images;
    for (std::size_t i = 0; i < d.size(); ++i) images.push_back(oracle::to_vec(d.vector(i)));
    const double expected = oracle::max_skew(images, labels, oracle::to_vec(q), static_cast<std::size_t>(k),
                                             static_cast<std::size_t>(groups));
    const double got = saner::max_skew(q, d, static_cast<std::size_t>(k));
    CHECK(std::abs(got - expected) <= 1e-12);
    CHECK(got >= 0.0);
    CHECK(saner::max_skew(2.0 * q, d, static_cast<std::size_t>(k)) == got);
    CHECK(saner::max_skew(0.37 * q, d, static_cast<std::size_t>(k)) == doctest::Approx(got));
  }
}

TEST_CASE("aggregate_skew") {
  auto d = labelled({{1, 0}, {0.9f, 0.1f}, {0.8f, 0.2f}, {0.7f, 0.3f}, {0, 1}}, {0, 0, 1, 0, 1});
  saner::ImageGallery gallery(d);
  std::vector<saner::PromptFeature> one{{"kind", "A {} person", Eigen::Vector2d(1, 0)}};
  auto r1 = saner::aggregate_skew(one, gallery, 4, "adjectives");
  CHECK(r1.category_mean == saner::max_skew(Eigen::Vector2d(1, 0), d, 4));
  CHECK(r1.category == "adjectives");

  std::vector<saner::PromptFeature> many{{"a", "t1", Eigen::Vector2d(1, 0)},
                                         {"b", "t1", Eigen::Vector2d(0, 1)},
                                         {"a", "t2", Eigen::Vector2d(0, 1)}};
  auto r = saner::aggregate_skew(many, gallery, 2);
  const double a1 = gallery.max_skew(Eigen::Vector2d(1, 0), 2), a2 = gallery.max_skew(Eigen::Vector2d(0, 1), 2);
  REQUIRE(r.concepts.size() == 2);
  CHECK(r.concepts[0].concept_name == "a");
  CHECK(r.concepts[0].mean == doctest::Approx((a1 + a2) / 2));
  CHECK(r.concepts[1].mean == doctest::Approx(a2));
  CHECK(r.category_mean == doctest::Approx(((a1 + a2) / 2 + a2) / 2));
  CHECK(r.entries.size() == 3);
  CHECK_THROWS_AS(saner::aggregate_skew(std::span<const saner::PromptFeature>{}, gallery, 2),
                  saner::InvalidArgument);
}

TEST_CASE("balanced fixture gives zero skew for neutral queries") {
  saner::FixtureOptions o;
  o.seed = 6;
  o.samples = 60;
  o.bias_strength = 0.0;
  o.paired_images = true;
  auto fx = saner::synthesize_biased_dataset(o);
  saner::ImageGallery gallery(fx.images);
  std::vector<saner::PromptFeature> prompts;
  for (std::size_t i = 0; i < o.samples; ++i) {
    prompts.push_back({std::to_string(i), "", fx.text.vector(*fx.text.find(std::to_string(i) + "#NEUT"))});
  }
  auto r = saner::aggregate_skew(prompts, gallery, 20);
  for (const auto& e : r.entries) CHECK(e.max_skew == 0.0);
}

TEST_CASE("statistical parity") {
  CHECK(saner::statistical_parity(std::vector<double>{50, 50}) == 0.0);
  CHECK(std::abs(saner::statistical_parity(std::vector<double>{80, 20}) - 0.424264) < 1e-6);
  CHECK(std::abs(saner::statistical_parity(std::vector<double>{100, 0}) - 0.707107) < 1e-6);
  CHECK(saner::statistical_parity(std::vector<double>{80, 20}) ==
        doctest::Approx(std::sqrt(0.18)).epsilon(1e-15));
  CHECK(saner::statistical_parity(std::vector<double>{20, 80}) ==
        saner::statistical_parity(std::vector<double>{80, 20}));
  CHECK(saner::statistical_parity(std::vector<double>{8, 2}) ==
        doctest::Approx(saner::statistical_parity(std::vector<double>{80, 20})).epsilon(1e-15));
  std::map<std::string, std::uint64_t> m{{"female", 80}, {"male", 20}};
  CHECK(saner::statistical_parity(m) == doctest::Approx(oracle::statistical_parity({80, 20})));
  CHECK_THROWS_AS(saner::statistical_parity(std::vector<double>{0, 0}), saner::InvalidArgument);

  std::vector<std::string> lines{"p1\tfemale\t80", "p1\tmale\t20", "# comment", "",
                                 "p2\tmale\t30", "p2\tfemale\t30"};
  auto rep = saner::parity_from_label_counts(lines);
  CHECK(rep.groups == std::vector<std::string>{"female", "male"});
  REQUIRE(rep.prompts.size() == 2);
  CHECK(rep.prompts[0].counts == std::vector<std::uint64_t>{80, 20});
  CHECK(rep.prompts[0].distribution[0] + rep.prompts[0].distribution[1] == 1.0);
  CHECK(rep.prompts[1].sp == 0.0);
  CHECK(rep.mean_sp == doctest::Approx(std::sqrt(0.18) / 2));
  std::vector<std::string> bad{"p1\tfemale"};
  CHECK_THROWS_AS(saner::parity_from_label_counts(bad), saner::FormatError);
  std::vector<std::string> unknown{"p1\tother\t3"};
  CHECK_THROWS_AS(saner::parity_from_label_counts(unknown, {"female", "male"}), saner::FormatError);
}

TEST_CASE("retention score") {
  saner::FixtureOptions o;
  o.seed = 10;
  o.samples = 50;
  auto fx = saner::synthesize_biased_dataset(o);
  auto set = saner::collect_group_variants(fx.text);
  CHECK(set.groups == std::vector<std::string>{"female", "male"});
  REQUIRE(set.features.size() == 50);
  auto identity = [](const Eigen::VectorXd& v) { return v; };
  CHECK(saner::retention_score(set.features, identity) == 1.0);
  auto swap = [&](const Eigen::VectorXd& v) {
    const Eigen::VectorXd& u = fx.attribute_direction;
    return Eigen::VectorXd(v - 2.0 * u.dot(v) * u);
  };
  CHECK(saner::retention_score(set.features, swap) == 0.0);

  saner::GroupVariants broken = set.features;
  broken[3].pop_back();
  CHECK_THROWS_AS(saner::retention_score(broken, identity), saner::InvalidArgument);
  auto partial = fx.text;
  partial.records.erase(partial.records.begin() + static_cast<std::ptrdiff_t>(*partial.find("7#GROUP:male")));
  CHECK(saner::collect_group_variants(partial).features.size() == 49);
}

TEST_CASE("zero-shot accuracy") {
  saner::EmbeddingDataset images;
  images.dim = 2;
  images.modality = saner::Modality::kImage;
  images.has_labels = true;
  images.label_names = {"cat", "dog"};
  const double pi = std::acos(-1.0);
  // 30 degrees from class 0 (x axis), 60 from class 1 (y axis).
  images.records.push_back({"a", "", 0, {static_cast<float>(std::cos(pi / 6)), static_cast<float>(std::sin(pi / 6))}});
  images.records.push_back({"b", "", 1, {static_cast<float>(std::cos(pi / 3)), static_cast<float>(std::sin(pi / 3))}});
  images.records.push_back({"c", "", 1, {static_cast<float>(std::cos(pi / 6)), static_cast<float>(std::sin(pi / 6))}});

  std::vector<std::vector<Eigen::VectorXd>> classes{
      {Eigen::Vector2d(2, 0), Eigen::Vector2d(1, 0.01), Eigen::Vector2d(1, -0.01)},
      {Eigen::Vector2d(0, 3)}};
  CHECK(saner::zero_shot_accuracy(classes, images) == doctest::Approx(2.0 / 3.0));

  images.records.pop_back();
  CHECK(saner::zero_shot_accuracy(classes, images) == 1.0);
  classes.pop_back();
  CHECK_THROWS_AS(saner::zero_shot_accuracy(classes, images), saner::InvalidArgument);
  classes.push_back({});
  CHECK_THROWS_AS(saner::zero_shot_accuracy(classes, images), saner::InvalidArgument);
}
