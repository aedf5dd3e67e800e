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

// Bias and utility metrics: retrieval skew, statistical parity, attribute
// retention and zero-shot accuracy.

#ifndef SANER_BIAS_EVAL_HPP_
#define SANER_BIAS_EVAL_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "saner/embedding_store.hpp"

namespace saner {

struct RetrievalResult {
  std::string query_id;
  std::vector<std::size_t> indices;  // into the gallery dataset
  std::vector<std::string> ids;
  std::vector<double> scores;        // non-increasing
};

// Unit-normalized copy of an image dataset for repeated cosine queries.
// Scores are computed one record at a time with a fixed summation order, so
// identical vectors always tie exactly; ties go to the lower index.
class ImageGallery {
 public:
  explicit ImageGallery(const EmbeddingDataset& images);

  const EmbeddingDataset& dataset() const { return *images_; }
  std::size_t size() const { return images_->size(); }

  std::vector<double> scores(const Eigen::VectorXd& query) const;
  RetrievalResult top_k(const Eigen::VectorXd& query, std::size_t k,
                        std::string query_id = {}) const;

  // log(max_a share_a * |groups|) over the labels of the top-k records.
  // `num_groups` of 0 means the dataset's label count.
  double max_skew(const Eigen::VectorXd& query, std::size_t k,
                  std::size_t num_groups = 0) const;

 private:
  const EmbeddingDataset* images_;
  std::vector<double> unit_;  // row-major n x K
};

RetrievalResult top_k(const Eigen::VectorXd& query,
                      const EmbeddingDataset& images, std::size_t k);

double max_skew(const Eigen::VectorXd& query, const EmbeddingDataset& images,
                std::size_t k, std::size_t num_groups = 0);

// MaxSkew of one label histogram over k retrieved items. Groups with zero
// count never attain the maximum.
double max_skew_from_counts(std::span<const std::size_t> counts, std::size_t k);

struct PromptFeature {
  std::string concept_name;
  std::string template_text;
  Eigen::VectorXd feature;
};

struct SkewEntry {
  std::string concept_name;
  std::string template_text;
  double max_skew = 0.0;
};

struct ConceptSkew {
  std::string concept_name;
  double mean = 0.0;  // over templates
};

struct SkewReport {
  std::string category;
  std::size_t k = 0;
  std::vector<SkewEntry> entries;
  std::vector<ConceptSkew> concepts;  // first-appearance order
  double category_mean = 0.0;         // over concepts
};

SkewReport aggregate_skew(std::span<const PromptFeature> prompts,
                          const ImageGallery& gallery, std::size_t k,
                          std::string category = "all");

double statistical_parity(std::span<const double> counts);
double statistical_parity(const std::map<std::string, std::uint64_t>& counts);

struct ParityEntry {
  std::string prompt_id;
  std::vector<std::uint64_t> counts;  // ParityReport::groups order
  std::vector<double> distribution;
  double sp = 0.0;
};

struct ParityReport {
  std::vector<std::string> groups;
  std::vector<ParityEntry> prompts;
  double mean_sp = 0.0;
};

// Lines "prompt_id<TAB>group_label_name<TAB>count". Repeated
// (prompt, group) rows are summed. Groups default to every name in the file,
// in first-appearance order.
ParityReport parity_from_label_counts(std::span<const std::string> lines,
                                      std::vector<std::string> groups = {});

// variants[s][g]: feature of sample s rewritten for group g.
using GroupVariants = std::vector<std::vector<Eigen::VectorXd>>;

// Fraction of (sample, group) pairs whose transformed feature is closest,
// by cosine, to the original feature of its own group.
double retention_score(const GroupVariants& originals,
                       const GroupVariants& transformed);
double retention_score(
    const GroupVariants& originals,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& transform);

struct GroupVariantSet {
  std::vector<std::string> sample_ids;
  std::vector<std::string> groups;
  GroupVariants features;
};

// Collects GROUP variants from a text dataset keyed by "sample#GROUP:g".
// Samples missing a group are skipped. Groups default to all seen.
GroupVariantSet collect_group_variants(const EmbeddingDataset& text,
                                       std::vector<std::string> groups = {});

// class_prompts[c]: template features of class c. Images carry class labels.
double zero_shot_accuracy(std::span<const std::vector<Eigen::VectorXd>> class_prompts,
                          const EmbeddingDataset& images);

// Groups a labelled text dataset's vectors by label.
std::vector<std::vector<Eigen::VectorXd>> class_prompts_from_dataset(
    const EmbeddingDataset& prompts);

}  // namespace saner

#endif  // SANER_BIAS_EVAL_HPP_
