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

#include "saner/embedding_store.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_set>

#include "saner/error.hpp"
#include "saner/text_io.hpp"

namespace saner {
namespace {

constexpr char kMagic[] = "VLEB";
constexpr std::uint32_t kFlagLabels = 1u << 0;
constexpr std::uint32_t kFlagImage = 1u << 1;

}  // namespace

void EmbeddingDataset::validate() const {
  if (dim == 0) throw FormatError("dataset dim must be positive");
  if (has_labels && label_names.empty()) {
    throw FormatError("labelled dataset has no label names");
  }
  if (!has_labels && !label_names.empty()) {
    throw FormatError("unlabelled dataset carries label names");
  }
  if (label_names.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw FormatError("too many label names");
  }
  std::unordered_set<std::string_view> ids;
  for (const auto& r : records) {
    if (r.vector.size() != dim) {
      throw FormatError("record '" + r.id + "' has " +
                        std::to_string(r.vector.size()) +
                        " components, expected " + std::to_string(dim));
    }
    for (float x : r.vector) {
      if (!std::isfinite(x)) {
        throw FormatError("record '" + r.id + "' has a non-finite component");
      }
    }
    if (!ids.insert(r.id).second) {
      throw FormatError("duplicate record id '" + r.id + "'");
    }
    if (r.id.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw FormatError("record id too long");
    }
    if (has_labels) {
      if (r.label < 0 || static_cast<std::size_t>(r.label) >= label_names.size()) {
        throw FormatError("record '" + r.id + "' has label " +
                          std::to_string(r.label) + " outside [0, " +
                          std::to_string(label_names.size()) + ")");
      }
    } else if (r.label != kNoLabel) {
      throw FormatError("record '" + r.id + "' has a label in an unlabelled dataset");
    }
  }
}

std::optional<std::size_t> EmbeddingDataset::find(std::string_view id) const {
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].id == id) return i;
  }
  return std::nullopt;
}

Eigen::MatrixXd EmbeddingDataset::matrix() const {
  Eigen::MatrixXd m(records.size(), dim);
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::uint32_t j = 0; j < dim; ++j) m(i, j) = records[i].vector[j];
  }
  return m;
}

Eigen::VectorXd EmbeddingDataset::vector(std::size_t index) const {
  const auto& v = records.at(index).vector;
  Eigen::VectorXd out(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) out[j] = v[j];
  return out;
}

std::vector<std::byte> encode_dataset(const EmbeddingDataset& dataset) {
  dataset.validate();
  ByteWriter w;
  w.raw(kMagic);
  w.u32(kVlebVersion);
  std::uint32_t flags = 0;
  if (dataset.has_labels) flags |= kFlagLabels;
  if (dataset.modality == Modality::kImage) flags |= kFlagImage;
  w.u32(flags);
  w.u32(dataset.dim);
  w.u64(dataset.records.size());
  if (dataset.has_labels) {
    w.u16(static_cast<std::uint16_t>(dataset.label_names.size()));
    for (const auto& name : dataset.label_names) {
      if (name.size() > std::numeric_limits<std::uint16_t>::max()) {
        throw FormatError("label name too long");
      }
      w.u16(static_cast<std::uint16_t>(name.size()));
      w.raw(name);
    }
  }
  for (const auto& r : dataset.records) {
    w.u16(static_cast<std::uint16_t>(r.id.size()));
    w.raw(r.id);
    if (r.meta.size() > std::numeric_limits<std::uint32_t>::max()) {
      throw FormatError("record meta too long");
    }
    w.u32(static_cast<std::uint32_t>(r.meta.size()));
    w.raw(r.meta);
    if (dataset.has_labels) w.i16(r.label);
    for (float x : r.vector) w.f32(x);
  }
  return w.bytes();
}

EmbeddingDataset decode_dataset(std::span<const std::byte> bytes) {
  ByteReader r(bytes);
  if (r.raw(4, "magic") != kMagic) throw FormatError("bad magic, not a VLEB file");
  std::uint32_t version = r.u32("version");
  if (version != kVlebVersion) {
    throw FormatError("unsupported VLEB version " + std::to_string(version));
  }
  std::uint32_t flags = r.u32("flags");
  if (flags & ~(kFlagLabels | kFlagImage)) {
    throw FormatError("unknown VLEB flags");
  }
  EmbeddingDataset ds;
  ds.has_labels = (flags & kFlagLabels) != 0;
  ds.modality = (flags & kFlagImage) ? Modality::kImage : Modality::kText;
  ds.dim = r.u32("dim");
  if (ds.dim == 0) throw FormatError("VLEB dim is zero");
  std::uint64_t count = r.u64("count");
  if (ds.has_labels) {
    std::uint16_t n = r.u16("label count");
    for (std::uint16_t i = 0; i < n; ++i) {
      std::uint16_t len = r.u16("label name length");
      ds.label_names.push_back(r.raw(len, "label name"));
    }
  }
  // Each record needs at least its fixed-size fields.
  std::uint64_t min_record = 2 + 4 + (ds.has_labels ? 2 : 0) + 4ull * ds.dim;
  if (count > r.remaining() / min_record) {
    throw FormatError("truncated VLEB file: header claims " +
                      std::to_string(count) + " records");
  }
  ds.records.resize(count);
  for (auto& rec : ds.records) {
    rec.id = r.raw(r.u16("id length"), "id");
    rec.meta = r.raw(r.u32("meta length"), "meta");
    if (ds.has_labels) rec.label = r.i16("label");
    rec.vector.resize(ds.dim);
    for (auto& x : rec.vector) x = r.f32("vector");
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after last record");
  ds.validate();
  return ds;
}

EmbeddingDataset read_dataset(const std::filesystem::path& path) {
  try {
    return decode_dataset(read_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_dataset(const EmbeddingDataset& dataset,
                   const std::filesystem::path& path) {
  write_bytes(path, encode_dataset(dataset));
}

std::vector<float> to_float(const Eigen::Ref<const Eigen::VectorXd>& v) {
  std::vector<float> out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
  return out;
}

double cosine(const Eigen::Ref<const Eigen::VectorXd>& u,
              const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (u.size() != v.size()) {
    throw InvalidArgument("cosine: size mismatch " + std::to_string(u.size()) +
                          " vs " + std::to_string(v.size()));
  }
  double nu = u.norm();
  double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) throw InvalidArgument("cosine: zero-norm vector");
  double c = u.dot(v) / (nu * nv);
  return std::clamp(c, -1.0, 1.0);
}

VariantKey VariantKey::parse(std::string_view id) {
  auto hash = id.rfind('#');
  if (hash == std::string_view::npos) {
    throw FormatError("variant id without '#': '" + std::string(id) + "'");
  }
  return parse_variant(id.substr(0, hash), id.substr(hash + 1));
}

VariantKey VariantKey::parse_variant(std::string_view sample_id,
                                     std::string_view variant) {
  if (sample_id.empty()) throw FormatError("empty sample id");
  VariantKey key;
  key.sample_id = std::string(sample_id);
  if (variant == "ORIG") {
    key.kind = Kind::kOrig;
  } else if (variant == "NEUT") {
    key.kind = Kind::kNeut;
  } else if (variant.starts_with("GROUP:") && variant.size() > 6) {
    key.kind = Kind::kGroup;
    key.group = std::string(variant.substr(6));
  } else {
    throw FormatError("unknown variant '" + std::string(variant) + "'");
  }
  return key;
}

std::string VariantKey::variant_name() const {
  switch (kind) {
    case Kind::kOrig:
      return "ORIG";
    case Kind::kNeut:
      return "NEUT";
    case Kind::kGroup:
      return "GROUP:" + group;
  }
  return {};
}

std::string VariantKey::to_string() const {
  return sample_id + "#" + variant_name();
}

SyntheticFixture synthesize_biased_dataset(const FixtureOptions& o) {
  if (o.dim < 2) throw InvalidArgument("fixture dim must be >= 2");
  if (o.samples < 1) throw InvalidArgument("fixture needs at least one sample");
  if (!(o.group_separation > 0.0)) {
    throw InvalidArgument("group separation must be positive");
  }
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);

  const auto k = static_cast<Eigen::Index>(o.dim);
  auto gaussian = [&] {
    Eigen::VectorXd v(k);
    for (Eigen::Index i = 0; i < k; ++i) v[i] = normal(rng);
    return v;
  };
  Eigen::VectorXd u = gaussian().normalized();
  auto base = [&] {
    Eigen::VectorXd b = gaussian();
    b -= u.dot(b) * u;
    return Eigen::VectorXd(b.normalized());
  };

  SyntheticFixture fx;
  fx.attribute_direction = u;
  fx.groups = {"female", "male"};

  fx.text.dim = o.dim;
  fx.text.modality = Modality::kText;
  fx.images.dim = o.dim;
  fx.images.modality = Modality::kImage;
  fx.images.has_labels = true;
  fx.images.label_names = fx.groups;

  for (std::size_t i = 0; i < o.samples; ++i) {
    const std::string sid = std::to_string(i);
    Eigen::VectorXd b = base();
    Eigen::VectorXd g0 = b + o.group_separation * u;
    Eigen::VectorXd g1 = b - o.group_separation * u;
    Eigen::VectorXd neut = b + o.bias_strength * u;
    int orig_group = coin(rng) ? 0 : 1;
    const Eigen::VectorXd& orig = orig_group == 0 ? g0 : g1;

    auto add = [&](VariantKey::Kind kind, const std::string& group,
                   const Eigen::VectorXd& v) {
      VariantKey key{sid, kind, group};
      fx.text.records.push_back(
          {key.to_string(), "synthetic " + key.variant_name(), kNoLabel,
           to_float(v)});
    };
    add(VariantKey::Kind::kOrig, "", orig);
    add(VariantKey::Kind::kNeut, "", neut);
    add(VariantKey::Kind::kGroup, fx.groups[0], g0);
    add(VariantKey::Kind::kGroup, fx.groups[1], g1);
    if (o.paired_images) {
      fx.images.records.push_back({sid + "#" + fx.groups[0], "synthetic image", 0,
                                   to_float(g0)});
      fx.images.records.push_back({sid + "#" + fx.groups[1], "synthetic image", 1,
                                   to_float(g1)});
    } else {
      fx.images.records.push_back({sid, "synthetic image " + sid,
                                   static_cast<std::int16_t>(orig_group),
                                   to_float(orig)});
    }
  }

  Eigen::VectorXd c = base();
  fx.prompts.dim = o.dim;
  fx.prompts.modality = Modality::kText;
  fx.prompts.records.push_back({"subspace/0", "A photo of a woman", kNoLabel,
                                to_float(c + o.group_separation * u)});
  fx.prompts.records.push_back({"subspace/1", "A photo of a man", kNoLabel,
                                to_float(c - o.group_separation * u)});
  return fx;
}

}  // namespace saner
