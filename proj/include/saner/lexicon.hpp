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

// Attribute word lists and the text-side operators built on them:
// neutralization (strip attribute-specific words), group specialization
// (rewrite a neutral caption for one attribute group), person-reference
// filtering and concept prompt generation.
//
// Lexicon file format, one record per line, tab separated:
//
//   kind  group  surface_singular  surface_plural  replacement_singular  replacement_plural
//   @insert  group  adjective
//   @groups  group1  group2  ...
//
// `group` is either a group id or NEUTRAL. Blank fields mean "absent".
// Lines starting with '#' are comments. `@groups` fixes the group order;
// without it groups are ordered by first appearance.

#ifndef SANER_LEXICON_HPP_
#define SANER_LEXICON_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace saner {

inline constexpr std::string_view kNeutralGroup = "NEUTRAL";

enum class AttributeTag { kGender, kAge, kRace, kCustom };

struct AttributeKind {
  AttributeTag tag = AttributeTag::kGender;
  std::string custom_name;  // only for kCustom

  static AttributeKind parse(std::string_view name);
  std::string name() const;

  bool operator==(const AttributeKind&) const = default;
};

struct LexiconEntry {
  std::string surface_singular;
  std::optional<std::string> surface_plural;
  std::string group;
  // Empty replacement on a NEUTRAL entry deletes the matched words.
  std::string replacement_singular;
  std::optional<std::string> replacement_plural;

  bool multiword() const;
  bool is_neutral() const { return group == kNeutralGroup; }

  bool operator==(const LexiconEntry&) const = default;
};

struct AttributeLexicon {
  AttributeKind kind;
  std::vector<std::string> groups;
  std::vector<LexiconEntry> entries;
  // Adjective inserted before the first person noun to form a group variant.
  std::map<std::string, std::string> group_insertions;

  bool has_group(std::string_view group) const;

  // Throws FormatError describing the first violated invariant.
  void validate() const;

  bool operator==(const AttributeLexicon&) const = default;
};

struct PersonLexicon {
  std::set<std::string> terms;

  void validate() const;
  bool empty() const { return terms.empty(); }
};

AttributeLexicon parse_lexicon(std::string_view text,
                               std::string_view source = "<memory>");
AttributeLexicon load_lexicon(const std::filesystem::path& path);
std::string format_lexicon(const AttributeLexicon& lexicon);
void write_lexicon(const AttributeLexicon& lexicon,
                   const std::filesystem::path& path);

PersonLexicon parse_persons(std::span<const std::string> lines);
PersonLexicon load_persons(const std::filesystem::path& path);

// One string per non-blank, non-comment line.
std::vector<std::string> load_string_list(const std::filesystem::path& path);

// Result of a group rewrite. `no_op` is set when nothing could be rewritten.
struct Specialized {
  std::string text;
  bool no_op = false;

  bool operator==(const Specialized&) const = default;
};

struct GroupVariant {
  std::string group;
  std::string text;
  bool no_op = false;
};

// True iff some person term occurs as a whole word or phrase
// (case-insensitive).
bool contains_person_reference(std::string_view text,
                               const PersonLexicon& persons);

// Precomputed matcher for one attribute lexicon. Immutable after
// construction, so one instance can be shared across threads.
//
// `persons` anchors insertion-style groups (age, race); it may be empty for
// lexicons that only substitute words.
class AttributeRewriter {
 public:
  explicit AttributeRewriter(AttributeLexicon lexicon,
                             PersonLexicon persons = {});

  const AttributeLexicon& lexicon() const { return lexicon_; }

  // Replaces or deletes every attribute-specific word. Idempotent.
  std::string neutralize(std::string_view text) const;

  // Rewrites an already neutral text for one group. Throws InvalidArgument
  // for an unknown group.
  Specialized specialize(std::string_view neutral_text,
                         std::string_view group) const;

  // specialize(neutralize(text), g) for every group, in lexicon order.
  std::vector<GroupVariant> expand_all_groups(std::string_view text) const;

 private:
  struct PhraseTable {
    // lowercase words joined by single spaces -> replacement
    std::map<std::string, std::string, std::less<>> phrases;
    std::size_t max_words = 0;

    void add(const std::string& key, const std::string& value);
  };

  AttributeLexicon lexicon_;
  PhraseTable neutral_table_;
  std::map<std::string, PhraseTable, std::less<>> group_tables_;
  PhraseTable anchor_table_;
};

std::string neutralize(std::string_view text, const AttributeLexicon& lexicon);
Specialized specialize(std::string_view neutral_text,
                       const AttributeLexicon& lexicon, std::string_view group,
                       const PersonLexicon& persons = {});
std::vector<GroupVariant> expand_all_groups(std::string_view text,
                                            const AttributeLexicon& lexicon,
                                            const PersonLexicon& persons = {});

// Cross product of several attributes: neutralize with every lexicon, then
// specialize with one group from each. Group names are joined with '+',
// e.g. "female+young".
std::vector<GroupVariant> expand_intersectional(
    std::string_view text, std::span<const AttributeRewriter> rewriters);

struct ConceptPrompt {
  std::string concept_name;
  std::string template_text;
  std::string prompt;
};

// Every concept substituted into every template's single "{}" placeholder,
// concept-major order. Throws InvalidArgument if a template does not have
// exactly one placeholder.
std::vector<ConceptPrompt> generate_concept_prompts(
    std::span<const std::string> concepts,
    std::span<const std::string> templates);

}  // namespace saner

#endif  // SANER_LEXICON_HPP_
