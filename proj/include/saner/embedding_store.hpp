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

// Embedding datasets and the VLEB container that stores them.
//
// VLEB layout (little-endian):
//
//   "VLEB" | version u32 = 1 | flags u32 | dim u32 | count u64
//   [has_labels] label_count u16, then per name: len u16 + UTF-8
//   per record: id (len u16 + UTF-8) | meta (len u32 + UTF-8)
//               | [has_labels] label i16 | dim x f32
//
// flags bit 0 = has_labels, bit 1 = image modality.

#ifndef SANER_EMBEDDING_STORE_HPP_
#define SANER_EMBEDDING_STORE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace saner {

inline constexpr std::int16_t kNoLabel = -1;
inline constexpr std::uint32_t kVlebVersion = 1;

enum class Modality : std::uint8_t { kText = 0, kImage = 1 };

struct EmbeddingRecord {
  std::string id;
  std::string meta;
  std::int16_t label = kNoLabel;
  std::vector<float> vector;

  bool operator==(const EmbeddingRecord&) const = default;
};

struct EmbeddingDataset {
  std::uint32_t dim = 0;
  Modality modality = Modality::kText;
  bool has_labels = false;
  std::vector<std::string> label_names;
  std::vector<EmbeddingRecord> records;

  std::size_t size() const { return records.size(); }

  // Throws FormatError on the first violated invariant.
  void validate() const;

  std::optional<std::size_t> find(std::string_view id) const;

  // Record vectors as rows, widened to double.
  Eigen::MatrixXd matrix() const;
  Eigen::VectorXd vector(std::size_t index) const;

  bool operator==(const EmbeddingDataset&) const = default;
};

std::vector<std::byte> encode_dataset(const EmbeddingDataset& dataset);
EmbeddingDataset decode_dataset(std::span<const std::byte> bytes);

EmbeddingDataset read_dataset(const std::filesystem::path& path);
void write_dataset(const EmbeddingDataset& dataset,
                   const std::filesystem::path& path);

std::vector<float> to_float(const Eigen::Ref<const Eigen::VectorXd>& v);

// Cosine similarity. Throws InvalidArgument on zero norm or size mismatch.
double cosine(const Eigen::Ref<const Eigen::VectorXd>& u,
              const Eigen::Ref<const Eigen::VectorXd>& v);

// Identifies one textual variant of a training sample. Serialized as
// "sample_id#ORIG", "sample_id#NEUT" or "sample_id#GROUP:<group>".
struct VariantKey {
  enum class Kind { kOrig, kNeut, kGroup };

  std::string sample_id;
  Kind kind = Kind::kOrig;
  std::string group;  // only for kGroup

  static VariantKey parse(std::string_view id);
  static VariantKey parse_variant(std::string_view sample_id,
                                  std::string_view variant);
  std::string variant_name() const;
  std::string to_string() const;

  bool operator==(const VariantKey&) const = default;
};

struct FixtureOptions {
  std::uint64_t seed = 0;
  std::uint32_t dim = 32;
  std::size_t samples = 200;
  double bias_strength = 0.4;     // NEUT offset along the attribute direction
  double group_separation = 0.5;  // +/- offset of the two groups
  // Emit both group variants of every sample as images ("sid#female",
  // "sid#male") instead of one ORIG image. Gives a gallery whose top-k is
  // balanced for queries without an attribute component.
  bool paired_images = false;
};

// Planted-bias fixture. Every sample i has a unit base vector b_i orthogonal
// to a unit attribute direction u:
//   GROUP(female) = b_i + sep * u,  GROUP(male) = b_i - sep * u,
//   NEUT = b_i + bias * u,          ORIG = one group variant (seeded),
//   image = the ORIG vector, labelled with its group.
// `prompts` holds two attribute prompts c +/- sep * u built from a held-out
// base c, standing in for "A photo of a woman/man".
struct SyntheticFixture {
  EmbeddingDataset text;
  EmbeddingDataset images;
  EmbeddingDataset prompts;
  Eigen::VectorXd attribute_direction;
  std::vector<std::string> groups;
};

SyntheticFixture synthesize_biased_dataset(const FixtureOptions& options);

}  // namespace saner

#endif  // SANER_EMBEDDING_STORE_HPP_
