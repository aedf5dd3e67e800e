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

#include "saner/bias_eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "saner/error.hpp"
#include "saner/text_io.hpp"

namespace saner {
namespace {

double plain_dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> unit(const Eigen::VectorXd& v, const char* what) {
  std::vector<double> u(v.data(), v.data() + v.size());
  double n = std::sqrt(plain_dot(u.data(), u.data(), u.size()));
  if (n == 0.0) throw InvalidArgument(std::string(what) + ": zero-norm vector");
  for (double& x : u) x /= n;
  return u;
}

Eigen::VectorXd normalized(const Eigen::VectorXd& v) {
  double n = v.norm();
  if (n == 0.0) throw InvalidArgument("zero-norm feature");
  return v / n;
}

}  // namespace

ImageGallery::ImageGallery(const EmbeddingDataset& images) : images_(&images) {
  const std::size_t k = images.dim;
  unit_.resize(images.size() * k);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& v = images.records[i].vector;
    double* row = unit_.data() + i * k;
    for (std::size_t j = 0; j < k; ++j) row[j] = v[j];
    double n = std::sqrt(plain_dot(row, row, k));
    if (n == 0.0) {
      throw InvalidArgument("gallery record '" + images.records[i].id +
                            "' has zero norm");
    }
    for (std::size_t j = 0; j < k; ++j) row[j] /= n;
  }
}

std::vector<double> ImageGallery::scores(const Eigen::VectorXd& query) const {
  const std::size_t k = images_->dim;
  if (static_cast<std::size_t>(query.size()) != k) {
    throw InvalidArgument("query dim " + std::to_string(query.size()) +
                          " != gallery dim " + std::to_string(k));
  }
  std::vector<double> q = unit(query, "query");
  std::vector<double> s(images_->size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = plain_dot(unit_.data() + i * k, q.data(), k);
  }
  return s;
}

RetrievalResult ImageGallery::top_k(const Eigen::VectorXd& query, std::size_t k,
                                    std::string query_id) const {
  if (k < 1 || k > size()) {
    throw InvalidArgument("top_k: k=" + std::to_string(k) + " outside [1, " +
                          std::to_string(size()) + "]");
  }
  std::vector<double> s = scores(query);
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k),
                    idx.end(), [&s](std::size_t a, std::size_t b) {
                      return s[a] > s[b] || (s[a] == s[b] && a < b);
                    });
  RetrievalResult r;
  r.query_id = std::move(query_id);
  for (std::size_t i = 0; i < k; ++i) {
    r.indices.push_back(idx[i]);
    r.ids.push_back(images_->records[idx[i]].id);
    r.scores.push_back(s[idx[i]]);
  }
  return r;
}

double ImageGallery::max_skew(const Eigen::VectorXd& query, std::size_t k,
                              std::size_t num_groups) const {
  if (!images_->has_labels) throw InvalidArgument("max_skew: images carry no labels");
  if (num_groups == 0) num_groups = images_->label_names.size();
  RetrievalResult r = top_k(query, k);
  std::vector<std::size_t> counts(num_groups, 0);
  for (std::size_t i : r.indices) {
    auto label = static_cast<std::size_t>(images_->records[i].label);
    if (label >= num_groups) {
      throw InvalidArgument("max_skew: label " + std::to_string(label) +
                            " outside " + std::to_string(num_groups) + " groups");
    }
    ++counts[label];
  }
  return max_skew_from_counts(counts, k);
}

RetrievalResult top_k(const Eigen::VectorXd& query,
                      const EmbeddingDataset& images, std::size_t k) {
  return ImageGallery(images).top_k(query, k);
}

double max_skew(const Eigen::VectorXd& query, const EmbeddingDataset& images,
                std::size_t k, std::size_t num_groups) {
  return ImageGallery(images).max_skew(query, k, num_groups);
}

double max_skew_from_counts(std::span<const std::size_t> counts, std::size_t k) {
  if (counts.empty() || k == 0) throw InvalidArgument("max_skew: empty histogram");
  const double groups = static_cast<double>(counts.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t c : counts) {
    if (c == 0) continue;
    best = std::max(best, std::log(static_cast<double>(c) * groups /
                                   static_cast<double>(k)));
  }
  return best;
}

SkewReport aggregate_skew(std::span<const PromptFeature> prompts,
                          const ImageGallery& gallery, std::size_t k,
                          std::string category) {
  if (prompts.empty()) throw InvalidArgument("aggregate_skew: no prompts");
  SkewReport report;
  report.category = std::move(category);
  report.k = k;
  std::vector<std::pair<double, std::size_t>> sums;  // per concept
  std::unordered_map<std::string, std::size_t> concept_index;
  for (const auto& p : prompts) {
    double v = gallery.max_skew(p.feature, k);
    report.entries.push_back({p.concept_name, p.template_text, v});
    auto [it, inserted] = concept_index.try_emplace(p.concept_name, sums.size());
    if (inserted) {
      sums.emplace_back(0.0, 0);
      report.concepts.push_back({p.concept_name, 0.0});
    }
    sums[it->second].first += v;
    sums[it->second].second += 1;
  }
  double total = 0.0;
  for (std::size_t c = 0; c < sums.size(); ++c) {
    report.concepts[c].mean = sums[c].first / static_cast<double>(sums[c].second);
    total += report.concepts[c].mean;
  }
  report.category_mean = total / static_cast<double>(sums.size());
  return report;
}

double statistical_parity(std::span<const double> counts) {
  if (counts.empty()) throw InvalidArgument("statistical_parity: no groups");
  double sum = 0.0;
  for (double c : counts) {
    if (c < 0.0) throw InvalidArgument("statistical_parity: negative count");
    sum += c;
  }
  if (sum <= 0.0) throw InvalidArgument("statistical_parity: all counts are zero");
  const double uniform = 1.0 / static_cast<double>(counts.size());
  double sq = 0.0;
  for (double c : counts) {
    double d = c / sum - uniform;
    sq += d * d;
  }
  return std::sqrt(sq);
}

double statistical_parity(const std::map<std::string, std::uint64_t>& counts) {
  std::vector<double> c;
  for (const auto& [group, n] : counts) c.push_back(static_cast<double>(n));
  return statistical_parity(c);
}

ParityReport parity_from_label_counts(std::span<const std::string> lines,
                                      std::vector<std::string> groups) {
  ParityReport report;
  const bool infer = groups.empty();
  report.groups = std::move(groups);
  std::vector<std::string> order;
  std::unordered_map<std::string, std::map<std::string, std::uint64_t>> table;
  int lineno = 0;
  for (const auto& line : lines) {
    ++lineno;
    std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto f = split(line, '\t');
    if (f.size() != 3) {
      throw FormatError("label counts line " + std::to_string(lineno) +
                        ": expected prompt_id<TAB>group<TAB>count");
    }
    const std::string prompt(trim(f[0]));
    const std::string group(trim(f[1]));
    double c = parse_double(f[2]);
    if (c < 0 || c != std::floor(c)) {
      throw FormatError("label counts line " + std::to_string(lineno) +
                        ": count must be a non-negative integer");
    }
    if (std::find(report.groups.begin(), report.groups.end(), group) ==
        report.groups.end()) {
      if (!infer) {
        throw FormatError("label counts line " + std::to_string(lineno) +
                          ": unknown group '" + group + "'");
      }
      report.groups.push_back(group);
    }
    if (!table.count(prompt)) order.push_back(prompt);
    table[prompt][group] += static_cast<std::uint64_t>(c);
  }
  if (order.empty()) throw FormatError("label counts file has no rows");
  if (report.groups.size() < 2) {
    throw FormatError("label counts need at least two groups");
  }
  double total = 0.0;
  for (const auto& prompt : order) {
    ParityEntry e;
    e.prompt_id = prompt;
    std::vector<double> counts;
    double sum = 0.0;
    for (const auto& g : report.groups) {
      auto it = table[prompt].find(g);
      std::uint64_t n = it == table[prompt].end() ? 0 : it->second;
      e.counts.push_back(n);
      counts.push_back(static_cast<double>(n));
      sum += static_cast<double>(n);
    }
    e.sp = statistical_parity(counts);
    for (double c : counts) e.distribution.push_back(c / sum);
    total += e.sp;
    report.prompts.push_back(std::move(e));
  }
  report.mean_sp = total / static_cast<double>(report.prompts.size());
  return report;
}

double retention_score(const GroupVariants& originals,
                       const GroupVariants& transformed) {
  if (originals.empty()) throw InvalidArgument("retention_score: no samples");
  if (transformed.size() != originals.size()) {
    throw InvalidArgument("retention_score: sample counts differ");
  }
  const std::size_t groups = originals.front().size();
  if (groups < 2) throw InvalidArgument("retention_score: need >= 2 groups");
  std::size_t retained = 0;
  std::size_t total = 0;
  for (std::size_t s = 0; s < originals.size(); ++s) {
    if (originals[s].size() != groups || transformed[s].size() != groups) {
      throw InvalidArgument("retention_score: sample " + std::to_string(s) +
                            " is missing group variants");
    }
    for (std::size_t g = 0; g < groups; ++g) {
      std::size_t best = 0;
      double best_sim = -std::numeric_limits<double>::infinity();
      for (std::size_t h = 0; h < groups; ++h) {
        double sim = cosine(transformed[s][g], originals[s][h]);
        if (sim > best_sim) {
          best_sim = sim;
          best = h;
        }
      }
      retained += best == g ? 1 : 0;
      ++total;
    }
  }
  return static_cast<double>(retained) / static_cast<double>(total);
}

double retention_score(
    const GroupVariants& originals,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& transform) {
  GroupVariants transformed;
  transformed.reserve(originals.size());
  for (const auto& sample : originals) {
    std::vector<Eigen::VectorXd> row;
    for (const auto& v : sample) row.push_back(transform(v));
    transformed.push_back(std::move(row));
  }
  return retention_score(originals, transformed);
}

GroupVariantSet collect_group_variants(const EmbeddingDataset& text,
                                       std::vector<std::string> groups) {
  GroupVariantSet out;
  const bool infer = groups.empty();
  out.groups = std::move(groups);
  std::vector<std::string> order;
  std::unordered_map<std::string, std::unordered_map<std::string, std::size_t>> found;
  for (std::size_t i = 0; i < text.records.size(); ++i) {
    const auto& id = text.records[i].id;
    auto hash = id.rfind('#');
    if (hash == std::string::npos || id.compare(hash + 1, 6, "GROUP:") != 0) continue;
    VariantKey key = VariantKey::parse(id);
    if (std::find(out.groups.begin(), out.groups.end(), key.group) == out.groups.end()) {
      if (!infer) continue;
      out.groups.push_back(key.group);
    }
    if (!found.count(key.sample_id)) order.push_back(key.sample_id);
    found[key.sample_id][key.group] = i;
  }
  for (const auto& sid : order) {
    const auto& m = found[sid];
    bool complete = std::all_of(out.groups.begin(), out.groups.end(),
                                [&m](const std::string& g) { return m.count(g) > 0; });
    if (!complete) continue;
    std::vector<Eigen::VectorXd> row;
    for (const auto& g : out.groups) row.push_back(text.vector(m.at(g)));
    out.sample_ids.push_back(sid);
    out.features.push_back(std::move(row));
  }
  return out;
}

double zero_shot_accuracy(std::span<const std::vector<Eigen::VectorXd>> class_prompts,
                          const EmbeddingDataset& images) {
  if (!images.has_labels) throw InvalidArgument("zero_shot_accuracy: images carry no labels");
  if (class_prompts.size() != images.label_names.size()) {
    throw InvalidArgument("zero_shot_accuracy: " + std::to_string(class_prompts.size()) +
                          " classes but images use " +
                          std::to_string(images.label_names.size()) + " labels");
  }
  if (images.records.empty()) throw InvalidArgument("zero_shot_accuracy: no images");
  std::vector<Eigen::VectorXd> classes;
  for (std::size_t c = 0; c < class_prompts.size(); ++c) {
    if (class_prompts[c].empty()) {
      throw InvalidArgument("zero_shot_accuracy: class " + std::to_string(c) +
                            " has no templates");
    }
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(class_prompts[c].front().size());
    for (const auto& f : class_prompts[c]) {
      if (f.size() != mean.size()) throw InvalidArgument("zero_shot_accuracy: dim mismatch");
      mean += normalized(f);
    }
    classes.push_back(normalized(mean / static_cast<double>(class_prompts[c].size())));
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < images.records.size(); ++i) {
    Eigen::VectorXd img = images.vector(i);
    std::size_t best = 0;
    double best_sim = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < classes.size(); ++c) {
      double sim = cosine(classes[c], img);
      if (sim > best_sim) {
        best_sim = sim;
        best = c;
      }
    }
    correct += static_cast<std::int16_t>(best) == images.records[i].label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(images.records.size());
}

std::vector<std::vector<Eigen::VectorXd>> class_prompts_from_dataset(
    const EmbeddingDataset& prompts) {
  if (!prompts.has_labels) {
    throw InvalidArgument("class prompt dataset must carry class labels");
  }
  std::vector<std::vector<Eigen::VectorXd>> out(prompts.label_names.size());
  for (std::size_t i = 0; i < prompts.records.size(); ++i) {
    out[static_cast<std::size_t>(prompts.records[i].label)].push_back(prompts.vector(i));
  }
  return out;
}

}  // namespace saner
