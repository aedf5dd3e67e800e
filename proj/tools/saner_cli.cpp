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

// saner: command-line pipelines for attribute neutralization, debiasing
// layer training, projection baselines and bias evaluation.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "saner/bias_eval.hpp"
#include "saner/debias_net.hpp"
#include "saner/embedding_store.hpp"
#include "saner/error.hpp"
#include "saner/lexicon.hpp"
#include "saner/projection.hpp"
#include "saner/text_io.hpp"
#include "saner/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = SANER_VERSION;

fs::path data_dir() {
  if (const char* env = std::getenv("SANER_DATA_DIR"); env && *env) return env;
  return SANER_DEFAULT_DATA_DIR;
}

// One JSON manifest per run, written next to the primary output.
class RunManifest {
 public:
  explicit RunManifest(std::string subcommand)
      : start_(std::chrono::steady_clock::now()) {
    doc_["subcommand"] = std::move(subcommand);
    doc_["tool_version"] = kToolVersion;
    doc_["started_at_unix"] = static_cast<long long>(std::time(nullptr));
    doc_["config"] = json::object();
    doc_["inputs"] = json::object();
    doc_["outputs"] = json::object();
  }

  json& config() { return doc_["config"]; }
  json& stats() { return doc_["stats"]; }
  void input(const std::string& key, const fs::path& p) { doc_["inputs"][key] = p.string(); }
  void output(const std::string& key, const fs::path& p) { doc_["outputs"][key] = p.string(); }
  void seed(std::uint64_t s) { doc_["seed"] = s; }

  void write(const fs::path& primary_output) {
    doc_["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    fs::path path = primary_output;
    path += ".run.json";
    saner::write_text(path, doc_.dump(2) + "\n");
  }

 private:
  json doc_;
  std::chrono::steady_clock::time_point start_;
};

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void write_dataset_checked(const saner::EmbeddingDataset& d, const fs::path& p) {
  ensure_parent(p);
  saner::write_dataset(d, p);
  if (!(saner::read_dataset(p) == d)) {
    throw saner::Error("read-back of " + p.string() + " does not match");
  }
}

void write_json(const json& doc, const fs::path& p) {
  ensure_parent(p);
  saner::write_text(p, doc.dump(2) + "\n");
}

struct Transform {
  std::string method = "original";
  std::string id;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply =
      [](const Eigen::VectorXd& v) { return v; };
};

Transform load_transform(const std::string& checkpoint, const std::string& projector,
                         RunManifest& run) {
  if (!checkpoint.empty() && !projector.empty()) {
    throw saner::InvalidArgument("--checkpoint and --projector are exclusive");
  }
  Transform t;
  if (!checkpoint.empty()) {
    auto params = std::make_shared<saner::DebiasParams>(saner::read_checkpoint(checkpoint));
    t.method = "saner";
    t.id = checkpoint;
    t.apply = [params](const Eigen::VectorXd& v) {
      if (v.size() != params->input_dim()) {
        throw saner::InvalidArgument("feature dim " + std::to_string(v.size()) +
                                     " != checkpoint dim " +
                                     std::to_string(params->input_dim()));
      }
      return saner::forward_h(*params, v);
    };
    run.input("checkpoint", checkpoint);
  } else if (!projector.empty()) {
    auto p = std::make_shared<saner::Projector>(saner::read_projector(projector));
    t.method = "projection";
    t.id = projector;
    t.apply = [p](const Eigen::VectorXd& v) {
      if (v.size() != p->dim()) {
        throw saner::InvalidArgument("feature dim " + std::to_string(v.size()) +
                                     " != projector dim " + std::to_string(p->dim()));
      }
      return Eigen::VectorXd(p->matrix * v);
    };
    run.input("projector", projector);
  }
  return t;
}

// ---------------------------------------------------------------- neutralize

struct NeutralizeArgs {
  std::string in, out, persons, attribute = "gender", images_out;
  std::vector<std::string> lexicons;
};

void cmd_neutralize(const NeutralizeArgs& a) {
  RunManifest run("neutralize");
  std::vector<fs::path> lexicon_paths(a.lexicons.begin(), a.lexicons.end());
  if (lexicon_paths.empty()) {
    lexicon_paths.push_back(data_dir() / "lexicons" /
                            (saner::AttributeKind::parse(a.attribute).name() + ".tsv"));
  }
  fs::path persons_path = a.persons.empty() ? data_dir() / "persons.txt" : fs::path(a.persons);

  saner::PersonLexicon persons = saner::load_persons(persons_path);
  std::vector<saner::AttributeRewriter> rewriters;
  json lex_names = json::array();
  for (const auto& p : lexicon_paths) {
    rewriters.emplace_back(saner::load_lexicon(p), persons);
    lex_names.push_back(rewriters.back().lexicon().kind.name());
    run.input("lexicon:" + rewriters.back().lexicon().kind.name(), p);
  }
  run.input("captions", a.in);
  run.input("persons", persons_path);
  run.config()["attributes"] = lex_names;

  std::string manifest;
  std::string images;
  std::size_t kept = 0, skipped = 0, no_op = 0, lineno = 0;
  for (const auto& line : saner::read_lines(a.in)) {
    ++lineno;
    if (saner::trim(line).empty() || line.front() == '#') continue;
    auto fields = saner::split(line, '\t');
    if (fields.size() < 3) {
      throw saner::FormatError(a.in + ":" + std::to_string(lineno) +
                               ": expected sample_id<TAB>image_ref<TAB>caption");
    }
    std::string sid(saner::trim(fields[0]));
    std::string caption = fields[2];
    for (std::size_t i = 3; i < fields.size(); ++i) caption += " " + fields[i];
    if (sid.empty() || sid.find('#') != std::string::npos) {
      throw saner::FormatError(a.in + ":" + std::to_string(lineno) +
                               ": sample id must be non-empty and free of '#'");
    }
    if (!saner::contains_person_reference(caption, persons)) {
      ++skipped;
      continue;
    }
    std::string neutral = caption;
    for (const auto& r : rewriters) neutral = r.neutralize(neutral);
    std::vector<saner::GroupVariant> variants =
        rewriters.size() == 1 ? rewriters.front().expand_all_groups(caption)
                              : saner::expand_intersectional(caption, rewriters);
    manifest += sid + "\tORIG\t" + caption + "\n";
    manifest += sid + "\tNEUT\t" + neutral + "\n";
    for (const auto& v : variants) {
      manifest += sid + "\tGROUP:" + v.group + "\t" + v.text + "\n";
      no_op += v.no_op ? 1 : 0;
    }
    images += sid + "\t" + std::string(saner::trim(fields[1])) + "\n";
    ++kept;
  }
  ensure_parent(a.out);
  saner::write_text(a.out, manifest);
  run.output("manifest", a.out);
  if (!a.images_out.empty()) {
    ensure_parent(a.images_out);
    saner::write_text(a.images_out, images);
    run.output("images", a.images_out);
  }
  run.stats() = {{"captions_kept", kept}, {"captions_skipped", skipped},
                 {"no_op_variants", no_op}};
  run.write(a.out);
  std::cerr << "neutralize: " << kept << " captions kept, " << skipped
            << " without a person reference skipped\n";
  if (kept == 0) std::cerr << "warning: manifest is empty\n";
}

// ------------------------------------------------------------------- prompts

struct PromptsArgs {
  std::string concepts, templates, category, out, table_out;
};

void cmd_prompts(const PromptsArgs& a) {
  RunManifest run("prompts");
  fs::path concepts = a.concepts, templates = a.templates;
  if (!a.category.empty()) {
    if (concepts.empty()) concepts = data_dir() / "concepts" / (a.category + ".txt");
    if (templates.empty()) templates = data_dir() / "templates" / (a.category + ".txt");
  }
  if (concepts.empty() || templates.empty()) {
    throw saner::InvalidArgument("need --category or both --concepts and --templates");
  }
  auto c = saner::load_string_list(concepts);
  auto t = saner::load_string_list(templates);
  auto prompts = saner::generate_concept_prompts(c, t);
  std::string manifest, table;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    std::string id = "p" + std::to_string(i);
    manifest += id + "\tPROMPT\t" + prompts[i].prompt + "\n";
    table += id + "\t" + prompts[i].concept_name + "\t" + prompts[i].template_text +
             "\t" + prompts[i].prompt + "\n";
  }
  ensure_parent(a.out);
  saner::write_text(a.out, manifest);
  run.input("concepts", concepts);
  run.input("templates", templates);
  run.output("manifest", a.out);
  if (!a.table_out.empty()) {
    ensure_parent(a.table_out);
    saner::write_text(a.table_out, table);
    run.output("table", a.table_out);
  }
  run.stats() = {{"prompts", prompts.size()}};
  run.write(a.out);
}

// --------------------------------------------------------------------- synth

struct SynthArgs {
  std::string out_dir;
  saner::FixtureOptions options;
};

void cmd_synth(const SynthArgs& a) {
  RunManifest run("synth");
  fs::path dir = a.out_dir;
  fs::create_directories(dir);
  saner::SyntheticFixture fx = saner::synthesize_biased_dataset(a.options);
  write_dataset_checked(fx.text, dir / "text.vleb");
  write_dataset_checked(fx.images, dir / "images.vleb");
  write_dataset_checked(fx.prompts, dir / "subspace.vleb");
  run.seed(a.options.seed);
  run.config() = {{"dim", a.options.dim},
                  {"samples", a.options.samples},
                  {"bias_strength", a.options.bias_strength},
                  {"group_separation", a.options.group_separation},
                  {"paired_images", a.options.paired_images}};
  run.output("text", dir / "text.vleb");
  run.output("images", dir / "images.vleb");
  run.output("subspace", dir / "subspace.vleb");
  run.write(dir / "fixture");
}

// --------------------------------------------------------------------- train

struct TrainArgs {
  std::string text, images, config, out;
  std::optional<double> subset;
  std::optional<std::uint64_t> seed;
};

void cmd_train(const TrainArgs& a) {
  RunManifest run("train");
  saner::TrainConfig config = a.config.empty() ? saner::TrainConfig{} : saner::load_config(a.config);
  if (a.subset) config.subset_fraction = *a.subset;
  if (a.seed) config.seed = *a.seed;
  config.validate();
  saner::EmbeddingDataset text = saner::read_dataset(a.text);
  saner::EmbeddingDataset images = saner::read_dataset(a.images);
  saner::AssembledSamples samples = saner::assemble_samples(
      text, images, {{}, config.subset_fraction, config.seed});
  if (samples.samples.empty()) {
    throw saner::InvalidArgument("no complete training samples in " + a.text);
  }
  if (samples.dropped > 0) {
    std::cerr << "train: dropped " << samples.dropped << " incomplete samples\n";
  }
  ensure_parent(a.out);
  saner::TrainResult result = saner::train(
      config, samples.samples,
      [&a](int, const saner::DebiasParams& p) { saner::write_checkpoint(p, a.out); });
  saner::write_checkpoint(result.params, a.out);
  if (!(saner::read_checkpoint(a.out) == result.params)) {
    throw saner::Error("read-back of " + a.out + " does not match");
  }
  fs::path history = a.out + ".history.tsv";
  saner::write_text(history, saner::format_history(result.history));

  saner::LossBreakdown final_loss =
      saner::evaluate_losses(result.params, config, samples.samples);
  run.seed(config.seed);
  run.config() = {{"resolved", saner::format_config(config)}};
  run.input("text", a.text);
  run.input("images", a.images);
  if (!a.config.empty()) run.input("config", a.config);
  run.output("checkpoint", a.out);
  run.output("history", history);
  json groups = samples.groups;
  run.stats() = {{"samples", samples.samples.size()},
                 {"dropped", samples.dropped},
                 {"subsampled", samples.subsampled},
                 {"groups", groups},
                 {"steps", result.history.steps.size()},
                 {"final_loss",
                  {{"deb", final_loss.deb},
                   {"recon", final_loss.recon},
                   {"cont", final_loss.cont},
                   {"total", final_loss.total}}}};
  run.write(a.out);
}

// --------------------------------------------------------------------- apply

void cmd_apply(const std::string& checkpoint, const std::string& in, const std::string& out) {
  RunManifest run("apply");
  saner::DebiasParams params = saner::read_checkpoint(checkpoint);
  write_dataset_checked(saner::apply_debias(params, saner::read_dataset(in)), out);
  run.input("checkpoint", checkpoint);
  run.input("text", in);
  run.output("text", out);
  run.write(out);
}

// ------------------------------------------------------------------- project

void cmd_project(const std::string& text, const std::string& subspace,
                 const std::string& out, const std::string& projector_out) {
  RunManifest run("project");
  saner::EmbeddingDataset data = saner::read_dataset(text);
  saner::AttributeSubspace s = saner::subspace_from_dataset(saner::read_dataset(subspace));
  if (s.basis.rows() != static_cast<Eigen::Index>(data.dim)) {
    throw saner::InvalidArgument("subspace dim " + std::to_string(s.basis.rows()) +
                                 " != text dim " + std::to_string(data.dim));
  }
  saner::Projector p = saner::build_projector(s.basis);
  write_dataset_checked(saner::project(p, data), out);
  run.input("text", text);
  run.input("subspace", subspace);
  run.output("text", out);
  if (!projector_out.empty()) {
    ensure_parent(projector_out);
    saner::write_projector(p, projector_out);
    run.output("projector", projector_out);
  }
  run.config() = {{"subspace_prompts", s.prompts}};
  run.write(out);
}

// ---------------------------------------------------------------------- eval

struct EvalArgs {
  std::string mode, out, images, prompts, prompt_table, variant, text, counts,
      checkpoint, projector, method, category = "all";
  std::vector<std::string> groups;
  std::size_t k = 1000;
};

json eval_header(const EvalArgs& a, const Transform& t) {
  json j;
  j["mode"] = a.mode;
  j["method"] = a.method.empty() ? t.method : a.method;
  j["checkpoint_id"] = t.id.empty() ? json(nullptr) : json(t.id);
  return j;
}

json eval_maxskew(const EvalArgs& a, const Transform& t, RunManifest& run) {
  if (a.images.empty() || a.prompts.empty()) {
    throw saner::InvalidArgument("maxskew needs --images and --prompts");
  }
  saner::EmbeddingDataset images = saner::read_dataset(a.images);
  saner::EmbeddingDataset prompts = saner::read_dataset(a.prompts);
  run.input("images", a.images);
  run.input("prompts", a.prompts);
  std::map<std::string, std::pair<std::string, std::string>> table;
  if (!a.prompt_table.empty()) {
    run.input("prompt_table", a.prompt_table);
    for (const auto& line : saner::read_lines(a.prompt_table)) {
      auto f = saner::split(line, '\t');
      if (f.size() >= 3) table[f[0]] = {f[1], f[2]};
    }
  }
  std::vector<saner::PromptFeature> features;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    const auto& r = prompts.records[i];
    std::string base = r.id;
    if (auto hash = r.id.rfind('#'); hash != std::string::npos) {
      if (!a.variant.empty() && r.id.substr(hash + 1) != a.variant) continue;
      base = r.id.substr(0, hash);
    } else if (!a.variant.empty()) {
      continue;
    }
    saner::PromptFeature f;
    if (auto it = table.find(base); it != table.end()) {
      f.concept_name = it->second.first;
      f.template_text = it->second.second;
    } else {
      f.concept_name = base;
      f.template_text = r.meta;
    }
    f.feature = t.apply(prompts.vector(i));
    features.push_back(std::move(f));
  }
  if (features.empty()) throw saner::InvalidArgument("no prompts selected from " + a.prompts);
  saner::ImageGallery gallery(images);
  saner::SkewReport report = saner::aggregate_skew(features, gallery, a.k, a.category);
  json j = eval_header(a, t);
  j["category"] = report.category;
  j["k"] = report.k;
  j["log_base"] = "e";
  j["scale"] = 100;
  j["aggregation"] = "mean over templates per concept, then mean over concepts";
  j["dataset_ids"] = {{"images", a.images}, {"prompts", a.prompts}};
  j["category_mean"] = report.category_mean * 100.0;
  j["category_mean_raw"] = report.category_mean;
  json concepts = json::array();
  for (const auto& c : report.concepts) concepts.push_back({{"concept", c.concept_name}, {"max_skew", c.mean * 100.0}});
  j["concepts"] = concepts;
  json entries = json::array();
  for (const auto& e : report.entries) {
    entries.push_back({{"concept", e.concept_name}, {"template", e.template_text},
                       {"max_skew", e.max_skew * 100.0}});
  }
  j["entries"] = entries;
  return j;
}

json eval_sp(const EvalArgs& a, const Transform& t, RunManifest& run) {
  if (a.counts.empty()) throw saner::InvalidArgument("sp needs --counts");
  run.input("counts", a.counts);
  auto lines = saner::read_lines(a.counts);
  saner::ParityReport report = saner::parity_from_label_counts(lines, a.groups);
  json j = eval_header(a, t);
  j["dataset_ids"] = {{"counts", a.counts}};
  j["groups"] = report.groups;
  j["mean_sp"] = report.mean_sp;
  json prompts = json::array();
  for (const auto& e : report.prompts) {
    prompts.push_back({{"prompt_id", e.prompt_id}, {"counts", e.counts},
                       {"distribution", e.distribution}, {"sp", e.sp}});
  }
  j["prompts"] = prompts;
  return j;
}

json eval_retention(const EvalArgs& a, const Transform& t, RunManifest& run) {
  if (a.text.empty()) throw saner::InvalidArgument("retention needs --text");
  run.input("text", a.text);
  saner::GroupVariantSet set = saner::collect_group_variants(saner::read_dataset(a.text), a.groups);
  if (set.features.empty()) {
    throw saner::InvalidArgument("no sample in " + a.text + " has every group variant");
  }
  json j = eval_header(a, t);
  j["dataset_ids"] = {{"text", a.text}};
  j["groups"] = set.groups;
  j["samples"] = set.sample_ids.size();
  j["retention"] = saner::retention_score(set.features, t.apply);
  return j;
}

json eval_zeroshot(const EvalArgs& a, const Transform& t, RunManifest& run) {
  if (a.images.empty() || a.prompts.empty()) {
    throw saner::InvalidArgument("zeroshot needs --images and --prompts");
  }
  run.input("images", a.images);
  run.input("prompts", a.prompts);
  saner::EmbeddingDataset prompts = saner::read_dataset(a.prompts);
  auto classes = saner::class_prompts_from_dataset(prompts);
  for (auto& c : classes) {
    for (auto& v : c) v = t.apply(v);
  }
  json j = eval_header(a, t);
  j["dataset_ids"] = {{"images", a.images}, {"prompts", a.prompts}};
  j["classes"] = prompts.label_names;
  j["accuracy"] = saner::zero_shot_accuracy(classes, saner::read_dataset(a.images));
  return j;
}

void cmd_eval(const EvalArgs& a) {
  RunManifest run("eval");
  Transform t = load_transform(a.checkpoint, a.projector, run);
  json report;
  if (a.mode == "maxskew") {
    report = eval_maxskew(a, t, run);
  } else if (a.mode == "sp") {
    report = eval_sp(a, t, run);
  } else if (a.mode == "retention") {
    report = eval_retention(a, t, run);
  } else {
    report = eval_zeroshot(a, t, run);
  }
  write_json(report, a.out);
  run.config() = {{"mode", a.mode}, {"k", a.k}, {"category", a.category}};
  run.output("report", a.out);
  run.write(a.out);
}

// -------------------------------------------------------------------- report

std::string column_name(const json& r) {
  const std::string mode = r.at("mode");
  if (mode == "maxskew") {
    return "MaxSkew@" + std::to_string(r.at("k").get<std::size_t>()) + " " +
           r.at("category").get<std::string>();
  }
  if (mode == "sp") return "SP";
  if (mode == "retention") return "Retention";
  return "ZeroShot";
}

double column_value(const json& r) {
  const std::string mode = r.at("mode");
  if (mode == "maxskew") return r.at("category_mean");
  if (mode == "sp") return r.at("mean_sp");
  if (mode == "retention") return r.at("retention");
  return r.at("accuracy");
}

void cmd_report(const std::string& runs, const std::string& out) {
  RunManifest run("report");
  if (!fs::is_directory(runs)) throw saner::InvalidArgument("not a directory: " + runs);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(runs)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && e.path().extension() == ".json" &&
        !name.ends_with(".run.json")) {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<std::string> columns;
  std::map<std::string, std::map<std::string, double>> cells;
  for (const auto& f : files) {
    json r = json::parse(saner::read_text(f), nullptr, false);
    if (r.is_discarded() || !r.is_object() || !r.contains("mode") || !r.contains("method")) continue;
    std::string col = column_name(r);
    if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
    cells[r.at("method").get<std::string>()][col] = column_value(r);
    run.input(f.filename().string(), f);
  }
  if (cells.empty()) throw saner::InvalidArgument("no evaluation reports in " + runs);

  std::vector<std::string> methods;
  for (const char* m : {"original", "projection", "saner"}) {
    if (cells.count(m)) methods.push_back(m);
  }
  for (const auto& [m, row] : cells) {
    if (std::find(methods.begin(), methods.end(), m) == methods.end()) methods.push_back(m);
  }
  auto display = [](const std::string& m) {
    if (m == "original") return std::string("Original");
    if (m == "projection") return std::string("Projection");
    if (m == "saner") return std::string("SANER");
    return m;
  };
  std::string md = "| Method |";
  for (const auto& c : columns) md += " " + c + " |";
  md += "\n|---|";
  for (std::size_t i = 0; i < columns.size(); ++i) md += "---|";
  md += "\n";
  json table = json::array();
  for (const auto& m : methods) {
    md += "| " + display(m) + " |";
    json row = {{"method", display(m)}};
    for (const auto& c : columns) {
      auto it = cells[m].find(c);
      if (it == cells[m].end()) {
        md += " - |";
        row[c] = nullptr;
      } else {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", it->second);
        md += std::string(" ") + buf + " |";
        row[c] = it->second;
      }
    }
    md += "\n";
    table.push_back(row);
  }
  md += "\nMaxSkew uses the natural log, scaled by 100; mean over templates, then concepts.\n";
  ensure_parent(out);
  saner::write_text(out, md);
  run.output("table", out);
  run.stats() = {{"rows", table}};
  run.write(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"saner: debiasing text features of vision-language models"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  NeutralizeArgs na;
  auto* neutralize = app.add_subcommand("neutralize", "Expand captions into ORIG/NEUT/GROUP variants");
  neutralize->add_option("--in", na.in, "Captions TSV: sample_id, image_ref, caption")->required();
  neutralize->add_option("--out", na.out, "Variant manifest TSV")->required();
  neutralize->add_option("--lexicon", na.lexicons,
                         "Attribute lexicon; repeat for intersectional variants");
  neutralize->add_option("--persons", na.persons, "Person term list");
  neutralize->add_option("--attribute", na.attribute, "Built-in lexicon when --lexicon is absent")
      ->check(CLI::IsMember({"gender", "age", "race"}));
  neutralize->add_option("--images-out", na.images_out, "sample_id, image_ref list of kept captions");

  PromptsArgs pa;
  auto* prompts = app.add_subcommand("prompts", "Concept x template prompt manifest");
  prompts->add_option("--category", pa.category, "Built-in concept set (adjectives, occupations, activities)");
  prompts->add_option("--concepts", pa.concepts, "Concept list");
  prompts->add_option("--templates", pa.templates, "Template list with one {} each");
  prompts->add_option("--out", pa.out, "Manifest TSV: prompt_id, PROMPT, text")->required();
  prompts->add_option("--table-out", pa.table_out, "TSV: prompt_id, concept, template, prompt");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Write the planted-bias synthetic fixture");
  synth->add_option("--out-dir", sa.out_dir, "Directory for text, images and subspace VLEBs")->required();
  synth->add_option("--seed", sa.options.seed, "Fixture seed")->capture_default_str();
  synth->add_option("--dim", sa.options.dim, "Embedding dimension")->capture_default_str();
  synth->add_option("--samples", sa.options.samples, "Number of samples")->capture_default_str();
  synth->add_option("--bias", sa.options.bias_strength, "NEUT offset along the attribute direction")
      ->capture_default_str();
  synth->add_option("--separation", sa.options.group_separation, "Group offset along the attribute direction")
      ->capture_default_str();
  synth->add_flag("--paired-images", sa.options.paired_images, "One image per group variant instead of per sample");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train the debiasing layer");
  train->add_option("--text", ta.text, "Text variant VLEB")->required();
  train->add_option("--images", ta.images, "Image VLEB")->required();
  train->add_option("--config", ta.config, "key = value training config");
  train->add_option("--out", ta.out, "Checkpoint path")->required();
  train->add_option("--subset", ta.subset, "Fraction of samples to train on");
  train->add_option("--seed", ta.seed, "Overrides the config seed");

  std::string ap_ckpt, ap_in, ap_out;
  auto* apply = app.add_subcommand("apply", "Debias a text VLEB with a checkpoint");
  apply->add_option("--checkpoint", ap_ckpt, "Trained checkpoint")->required();
  apply->add_option("--in", ap_in, "Text VLEB")->required();
  apply->add_option("--out", ap_out, "Debiased text VLEB")->required();

  std::string pr_text, pr_subspace, pr_out, pr_projector;
  auto* project = app.add_subcommand("project", "Orthogonal projection baseline");
  project->add_option("--text", pr_text, "Text VLEB")->required();
  project->add_option("--subspace", pr_subspace, "Attribute prompt VLEB")->required();
  project->add_option("--out", pr_out, "Projected text VLEB")->required();
  project->add_option("--projector-out", pr_projector, "Also write the projector matrix");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Bias and utility metrics");
  eval->add_option("--mode", ea.mode)
      ->required()
      ->check(CLI::IsMember({"maxskew", "sp", "retention", "zeroshot"}));
  eval->add_option("--out", ea.out, "Report JSON")->required();
  eval->add_option("--images", ea.images, "Labelled image VLEB");
  eval->add_option("--prompts", ea.prompts, "Query or class prompt VLEB");
  eval->add_option("--prompt-table", ea.prompt_table, "prompts --table-out file");
  eval->add_option("--variant", ea.variant, "Only prompts whose id ends in #VARIANT");
  eval->add_option("--text", ea.text, "Text VLEB with GROUP variants");
  eval->add_option("--counts", ea.counts, "prompt_id, group, count TSV");
  eval->add_option("--groups", ea.groups, "Group order")->delimiter(',');
  eval->add_option("--checkpoint", ea.checkpoint, "Debias queries with this checkpoint");
  eval->add_option("--projector", ea.projector, "Project queries with this projector");
  eval->add_option("--method", ea.method, "Method label in the report");
  eval->add_option("--category", ea.category, "Category label in the report");
  eval->add_option("-k,--k", ea.k, "Retrieval depth for maxskew")->capture_default_str()->check(CLI::PositiveNumber);

  std::string rp_runs, rp_out;
  auto* report = app.add_subcommand("report", "Collate evaluation reports into a table");
  report->add_option("--runs", rp_runs, "Directory of eval report JSONs")->required();
  report->add_option("--out", rp_out, "Markdown table")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*neutralize) cmd_neutralize(na);
    if (*prompts) cmd_prompts(pa);
    if (*synth) cmd_synth(sa);
    if (*train) cmd_train(ta);
    if (*apply) cmd_apply(ap_ckpt, ap_in, ap_out);
    if (*project) cmd_project(pr_text, pr_subspace, pr_out, pr_projector);
    if (*eval) cmd_eval(ea);
    if (*report) cmd_report(rp_runs, rp_out);
  } catch (const std::exception& e) {
    std::cerr << "saner: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
