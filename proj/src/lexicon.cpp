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

#include "saner/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <sstream>
#include <utility>

#include "saner/error.hpp"
#include "saner/text_io.hpp"

namespace saner {
namespace {

// Pronouns never anchor an inserted adjective ("A young he").
const std::set<std::string, std::less<>> kPronouns = {
    "he",   "she",    "him",   "her",    "his",    "hers",      "himself",
    "herself", "they", "them", "their", "theirs", "themselves"};

constexpr int kMaxNeutralizePasses = 8;

bool is_word_byte(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) != 0 || u >= 0x80;
}

bool is_upper(char c) {
  return std::isupper(static_cast<unsigned char>(c)) != 0;
}

char upper(char c) {
  return static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
}

char lower(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

struct Piece {
  std::string text;
  bool word = false;
  // Word produced or exposed by an edit; articles before it get repaired.
  bool touched = false;
};

std::vector<Piece> tokenize(std::string_view text) {
  std::vector<Piece> pieces;
  std::size_t i = 0;
  while (i < text.size()) {
    bool word = is_word_byte(text[i]);
    std::size_t j = i;
    while (j < text.size() && is_word_byte(text[j]) == word) ++j;
    pieces.push_back({std::string(text.substr(i, j - i)), word, false});
    i = j;
  }
  return pieces;
}

std::string join(const std::vector<Piece>& pieces) {
  std::string out;
  for (const Piece& p : pieces) out += p.text;
  return out;
}

bool is_blank(const Piece& p) {
  return !p.word && !p.text.empty() &&
         std::all_of(p.text.begin(), p.text.end(), [](char c) {
           return std::isspace(static_cast<unsigned char>(c)) != 0;
         });
}

// Lowercase words joined by single spaces.
std::string normalize_phrase(std::string_view phrase) {
  std::string out;
  for (const Piece& p : tokenize(phrase)) {
    if (!p.word) continue;
    if (!out.empty()) out += ' ';
    out += to_lower(p.text);
  }
  return out;
}

std::size_t word_count(std::string_view phrase) {
  std::size_t n = 0;
  for (const Piece& p : tokenize(phrase)) n += p.word ? 1 : 0;
  return n;
}

struct Match {
  std::size_t end;  // one past the last matched piece
  const std::string* value;
};

// Longest phrase starting at word piece `start` whose words are separated by
// whitespace only. `lookup` maps a normalized phrase to a value or nullptr.
template <typename Lookup>
std::optional<Match> match_at(const std::vector<Piece>& pieces,
                              std::size_t start, std::size_t max_words,
                              const Lookup& lookup) {
  std::vector<std::pair<std::string, std::size_t>> candidates;
  std::string key;
  std::size_t i = start;
  while (candidates.size() < max_words && i < pieces.size() &&
         pieces[i].word) {
    if (!key.empty()) key += ' ';
    key += to_lower(pieces[i].text);
    candidates.emplace_back(key, i + 1);
    if (i + 2 >= pieces.size() || !is_blank(pieces[i + 1])) break;
    i += 2;
  }
  for (auto it = candidates.rbegin(); it != candidates.rend(); ++it) {
    if (const std::string* v = lookup(it->first)) return Match{it->second, v};
  }
  return std::nullopt;
}

// Replaces every longest match left to right. An empty value deletes the
// matched words together with one adjacent whitespace run. Returns true if
// anything changed.
template <typename Lookup>
bool rewrite(std::vector<Piece>& pieces, std::size_t max_words,
             const Lookup& lookup) {
  std::vector<Piece> out;
  bool changed = false;
  bool touch_next = false;
  bool capitalize_next = false;
  bool seen_word = false;
  std::size_t i = 0;
  while (i < pieces.size()) {
    const Piece& p = pieces[i];
    if (!p.word) {
      out.push_back(p);
      ++i;
      continue;
    }
    auto m = match_at(pieces, i, max_words, lookup);
    if (!m) {
      Piece q = p;
      if (touch_next) q.touched = true;
      if (capitalize_next) q.text[0] = upper(q.text[0]);
      touch_next = capitalize_next = false;
      out.push_back(std::move(q));
      seen_word = true;
      ++i;
      continue;
    }
    changed = true;
    bool was_upper = is_upper(p.text[0]);
    if (!m->value->empty()) {
      std::string r = *m->value;
      if (was_upper || capitalize_next) r[0] = upper(r[0]);
      out.push_back({std::move(r), true, true});
      touch_next = capitalize_next = false;
      seen_word = true;
      i = m->end;
    } else {
      i = m->end;
      if (i < pieces.size() && is_blank(pieces[i])) {
        ++i;
      } else if (!out.empty() && is_blank(out.back())) {
        out.pop_back();
      }
      touch_next = true;
      if (was_upper && !seen_word) capitalize_next = true;
    }
  }
  pieces = std::move(out);
  return changed;
}

// a/an agreement for articles directly in front of an edited word.
void repair_articles(std::vector<Piece>& pieces) {
  for (std::size_t i = 0; i + 2 < pieces.size(); ++i) {
    Piece& art = pieces[i];
    if (!art.word) continue;
    std::string low = to_lower(art.text);
    if (low != "a" && low != "an") continue;
    const Piece& next = pieces[i + 2];
    if (!is_blank(pieces[i + 1]) || !next.word || !next.touched) continue;
    bool vowel = std::strchr("aeiouAEIOU", next.text[0]) != nullptr;
    std::string fixed = vowel ? "an" : "a";
    if (is_upper(art.text[0])) fixed[0] = 'A';
    art.text = std::move(fixed);
  }
}

std::optional<std::string> optional_field(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return s;
}

bool is_lowercase(std::string_view s) {
  return std::none_of(s.begin(), s.end(), [](char c) { return is_upper(c); });
}

}  // namespace

AttributeKind AttributeKind::parse(std::string_view name) {
  std::string n = to_lower(trim(name));
  if (n == "gender") return {AttributeTag::kGender, {}};
  if (n == "age") return {AttributeTag::kAge, {}};
  if (n == "race") return {AttributeTag::kRace, {}};
  if (n.empty()) throw FormatError("empty attribute kind");
  return {AttributeTag::kCustom, n};
}

std::string AttributeKind::name() const {
  switch (tag) {
    case AttributeTag::kGender:
      return "gender";
    case AttributeTag::kAge:
      return "age";
    case AttributeTag::kRace:
      return "race";
    case AttributeTag::kCustom:
      return custom_name;
  }
  return custom_name;
}

bool LexiconEntry::multiword() const {
  return surface_singular.find_first_of(" \t") != std::string::npos;
}

bool AttributeLexicon::has_group(std::string_view group) const {
  return std::find(groups.begin(), groups.end(), group) != groups.end();
}

void AttributeLexicon::validate() const {
  if (kind.tag == AttributeTag::kCustom && kind.custom_name.empty()) {
    throw FormatError("custom attribute kind needs a name");
  }
  if (groups.size() < 2) {
    throw FormatError("lexicon needs at least two groups, found " +
                      std::to_string(groups.size()));
  }
  std::set<std::string> seen;
  for (const auto& g : groups) {
    if (g.empty() || g == kNeutralGroup) {
      throw FormatError("invalid group id '" + g + "'");
    }
    if (!seen.insert(g).second) throw FormatError("duplicate group '" + g + "'");
  }

  std::set<std::string> surfaces;
  std::set<std::string> covered;
  for (const auto& e : entries) {
    const std::string where = "entry '" + e.surface_singular + "'";
    if (e.surface_singular.empty()) throw FormatError("entry with empty surface");
    if (!is_lowercase(e.surface_singular) ||
        (e.surface_plural && !is_lowercase(*e.surface_plural))) {
      throw FormatError(where + ": surfaces must be lowercase");
    }
    if (!e.is_neutral()) {
      if (!has_group(e.group)) {
        throw FormatError(where + ": unknown group '" + e.group + "'");
      }
      if (e.replacement_singular.empty() ||
          (e.surface_plural && !e.replacement_plural)) {
        throw FormatError(where + ": group-specific entry needs a replacement");
      }
      covered.insert(e.group);
    }
    surfaces.insert(normalize_phrase(e.surface_singular));
    if (e.surface_plural) surfaces.insert(normalize_phrase(*e.surface_plural));
  }
  for (const auto& [g, adjective] : group_insertions) {
    if (!has_group(g)) throw FormatError("@insert for unknown group '" + g + "'");
    if (trim(adjective).empty()) {
      throw FormatError("@insert for group '" + g + "' has no adjective");
    }
    covered.insert(g);
  }
  for (const auto& g : groups) {
    if (!covered.count(g)) {
      throw FormatError("group '" + g +
                        "' has neither entries nor an @insert adjective");
    }
  }
  // A replacement that is itself a surface would make neutralization
  // non-idempotent.
  for (const auto& e : entries) {
    for (const auto* r : {&e.replacement_singular,
                          e.replacement_plural ? &*e.replacement_plural
                                               : nullptr}) {
      if (r && !r->empty() && surfaces.count(normalize_phrase(*r))) {
        throw FormatError("replacement '" + *r + "' of entry '" +
                          e.surface_singular + "' is itself a surface form");
      }
    }
  }
}

void PersonLexicon::validate() const {
  if (terms.empty()) throw FormatError("person lexicon is empty");
  for (const auto& t : terms) {
    if (!is_lowercase(t)) throw FormatError("person term '" + t + "' not lowercase");
  }
}

AttributeLexicon parse_lexicon(std::string_view text, std::string_view source) {
  AttributeLexicon lex;
  std::optional<AttributeKind> kind;
  bool explicit_groups = false;
  std::vector<std::string> order;
  auto note_group = [&](const std::string& g) {
    if (g != kNeutralGroup &&
        std::find(order.begin(), order.end(), g) == order.end()) {
      order.push_back(g);
    }
  };

  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto fields = split(line, '\t');
    for (auto& f : fields) f = std::string(trim(f));
    auto fail = [&](const std::string& what) {
      return FormatError(std::string(source) + ":" + std::to_string(lineno) +
                         ": " + what);
    };
    if (fields[0] == "@groups") {
      if (explicit_groups) throw fail("duplicate @groups");
      explicit_groups = true;
      for (std::size_t i = 1; i < fields.size(); ++i) {
        if (!fields[i].empty()) lex.groups.push_back(fields[i]);
      }
      continue;
    }
    if (fields[0] == "@insert") {
      if (fields.size() != 3 || fields[1].empty() || fields[2].empty()) {
        throw fail("expected @insert<TAB>group<TAB>adjective");
      }
      if (!lex.group_insertions.emplace(fields[1], fields[2]).second) {
        throw fail("duplicate @insert for group '" + fields[1] + "'");
      }
      note_group(fields[1]);
      continue;
    }
    if (fields[0].front() == '@') throw fail("unknown directive " + fields[0]);
    if (fields.size() < 3 || fields.size() > 6) {
      throw fail("expected 3 to 6 tab-separated fields, got " +
                 std::to_string(fields.size()));
    }
    fields.resize(6);
    AttributeKind k = AttributeKind::parse(fields[0]);
    if (kind && !(*kind == k)) {
      throw fail("mixed attribute kinds '" + kind->name() + "' and '" +
                 k.name() + "'");
    }
    kind = k;
    if (fields[1].empty()) throw fail("missing group");
    if (fields[2].empty()) throw fail("missing surface");
    LexiconEntry e;
    e.group = fields[1];
    e.surface_singular = fields[2];
    e.surface_plural = optional_field(fields[3]);
    e.replacement_singular = fields[4];
    e.replacement_plural = optional_field(fields[5]);
    note_group(e.group);
    lex.entries.push_back(std::move(e));
  }
  if (!kind) {
    throw FormatError(std::string(source) + ": lexicon has no entries");
  }
  lex.kind = *kind;
  if (!explicit_groups) lex.groups = std::move(order);
  try {
    lex.validate();
  } catch (const FormatError& e) {
    throw FormatError(std::string(source) + ": " + e.what());
  }
  return lex;
}

AttributeLexicon load_lexicon(const std::filesystem::path& path) {
  auto bytes = read_bytes(path);
  std::string text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  return parse_lexicon(text, path.string());
}

std::string format_lexicon(const AttributeLexicon& lexicon) {
  std::ostringstream out;
  out << "# kind\tgroup\tsurface_singular\tsurface_plural\t"
         "replacement_singular\treplacement_plural\n";
  out << "@groups";
  for (const auto& g : lexicon.groups) out << '\t' << g;
  out << '\n';
  for (const auto& g : lexicon.groups) {
    auto it = lexicon.group_insertions.find(g);
    if (it != lexicon.group_insertions.end()) {
      out << "@insert\t" << g << '\t' << it->second << '\n';
    }
  }
  const std::string kind = lexicon.kind.name();
  for (const auto& e : lexicon.entries) {
    out << kind << '\t' << e.group << '\t' << e.surface_singular << '\t'
        << e.surface_plural.value_or("") << '\t' << e.replacement_singular
        << '\t' << e.replacement_plural.value_or("") << '\n';
  }
  return out.str();
}

void write_lexicon(const AttributeLexicon& lexicon,
                   const std::filesystem::path& path) {
  write_text(path, format_lexicon(lexicon));
}

PersonLexicon parse_persons(std::span<const std::string> lines) {
  PersonLexicon persons;
  for (const auto& line : lines) {
    std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    persons.terms.insert(normalize_phrase(t));
  }
  persons.validate();
  return persons;
}

PersonLexicon load_persons(const std::filesystem::path& path) {
  return parse_persons(read_lines(path));
}

std::vector<std::string> load_string_list(const std::filesystem::path& path) {
  std::vector<std::string> out;
  for (const auto& line : read_lines(path)) {
    std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    out.emplace_back(t);
  }
  return out;
}

bool contains_person_reference(std::string_view text,
                               const PersonLexicon& persons) {
  std::size_t max_words = 0;
  for (const auto& t : persons.terms) {
    max_words = std::max(max_words, word_count(t));
  }
  auto lookup = [&](const std::string& key) -> const std::string* {
    auto it = persons.terms.find(key);
    return it == persons.terms.end() ? nullptr : &*it;
  };
  auto pieces = tokenize(text);
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (pieces[i].word && match_at(pieces, i, max_words, lookup)) return true;
  }
  return false;
}

void AttributeRewriter::PhraseTable::add(const std::string& key,
                                         const std::string& value) {
  std::string k = normalize_phrase(key);
  if (k.empty()) return;
  max_words = std::max(max_words, word_count(k));
  phrases.emplace(std::move(k), value);
}

AttributeRewriter::AttributeRewriter(AttributeLexicon lexicon,
                                     PersonLexicon persons)
    : lexicon_(std::move(lexicon)) {
  lexicon_.validate();
  for (const auto& e : lexicon_.entries) {
    neutral_table_.add(e.surface_singular, e.replacement_singular);
    if (e.surface_plural) {
      neutral_table_.add(*e.surface_plural,
                         e.replacement_plural.value_or(e.replacement_singular));
    }
  }
  for (const auto& g : lexicon_.groups) {
    if (lexicon_.group_insertions.count(g)) continue;
    PhraseTable& table = group_tables_[g];
    for (const auto& e : lexicon_.entries) {
      if (e.group != g) continue;
      table.add(e.replacement_singular, e.surface_singular);
      if (e.surface_plural && e.replacement_plural) {
        table.add(*e.replacement_plural, *e.surface_plural);
      }
    }
  }
  for (const auto& t : persons.terms) {
    if (!kPronouns.count(t)) anchor_table_.add(t, t);
  }
}

std::string AttributeRewriter::neutralize(std::string_view text) const {
  auto lookup = [this](const std::string& key) -> const std::string* {
    auto it = neutral_table_.phrases.find(key);
    return it == neutral_table_.phrases.end() ? nullptr : &it->second;
  };
  std::string current(text);
  for (int pass = 0; pass < kMaxNeutralizePasses; ++pass) {
    auto pieces = tokenize(current);
    if (!rewrite(pieces, neutral_table_.max_words, lookup)) break;
    repair_articles(pieces);
    current = join(pieces);
  }
  return current;
}

Specialized AttributeRewriter::specialize(std::string_view neutral_text,
                                          std::string_view group) const {
  if (!lexicon_.has_group(group)) {
    throw InvalidArgument("unknown group '" + std::string(group) +
                          "' for attribute " + lexicon_.kind.name());
  }
  auto pieces = tokenize(neutral_text);

  auto insertion = lexicon_.group_insertions.find(std::string(group));
  if (insertion != lexicon_.group_insertions.end()) {
    if (anchor_table_.phrases.empty()) {
      throw InvalidArgument("attribute " + lexicon_.kind.name() +
                            " inserts adjectives and needs a person lexicon");
    }
    auto lookup = [this](const std::string& key) -> const std::string* {
      auto it = anchor_table_.phrases.find(key);
      return it == anchor_table_.phrases.end() ? nullptr : &it->second;
    };
    bool first_word = true;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      if (!pieces[i].word) continue;
      if (match_at(pieces, i, anchor_table_.max_words, lookup)) {
        std::string adjective = insertion->second;
        if (first_word && is_upper(pieces[i].text[0])) {
          adjective[0] = upper(adjective[0]);
          pieces[i].text[0] = lower(pieces[i].text[0]);
        }
        pieces.insert(pieces.begin() + static_cast<std::ptrdiff_t>(i),
                      {Piece{std::move(adjective), true, true},
                       Piece{" ", false, false}});
        repair_articles(pieces);
        return {join(pieces), false};
      }
      first_word = false;
    }
    return {std::string(neutral_text), true};
  }

  const PhraseTable& table = group_tables_.find(group)->second;
  auto lookup = [&table](const std::string& key) -> const std::string* {
    auto it = table.phrases.find(key);
    return it == table.phrases.end() ? nullptr : &it->second;
  };
  if (!rewrite(pieces, table.max_words, lookup)) {
    return {std::string(neutral_text), true};
  }
  repair_articles(pieces);
  return {join(pieces), false};
}

std::vector<GroupVariant> AttributeRewriter::expand_all_groups(
    std::string_view text) const {
  std::string neutral = neutralize(text);
  std::vector<GroupVariant> out;
  out.reserve(lexicon_.groups.size());
  for (const auto& g : lexicon_.groups) {
    Specialized s = specialize(neutral, g);
    out.push_back({g, std::move(s.text), s.no_op});
  }
  return out;
}

std::string neutralize(std::string_view text, const AttributeLexicon& lexicon) {
  return AttributeRewriter(lexicon).neutralize(text);
}

Specialized specialize(std::string_view neutral_text,
                       const AttributeLexicon& lexicon, std::string_view group,
                       const PersonLexicon& persons) {
  return AttributeRewriter(lexicon, persons).specialize(neutral_text, group);
}

std::vector<GroupVariant> expand_all_groups(std::string_view text,
                                            const AttributeLexicon& lexicon,
                                            const PersonLexicon& persons) {
  return AttributeRewriter(lexicon, persons).expand_all_groups(text);
}

std::vector<GroupVariant> expand_intersectional(
    std::string_view text, std::span<const AttributeRewriter> rewriters) {
  if (rewriters.empty()) throw InvalidArgument("no attributes to expand");
  std::set<std::string> kinds;
  for (const auto& r : rewriters) {
    if (!kinds.insert(r.lexicon().kind.name()).second) {
      throw InvalidArgument("attribute '" + r.lexicon().kind.name() +
                            "' given twice");
    }
  }
  std::string neutral(text);
  for (const auto& r : rewriters) neutral = r.neutralize(neutral);

  std::vector<GroupVariant> variants = {{"", neutral, true}};
  for (const auto& r : rewriters) {
    std::vector<GroupVariant> next;
    for (const auto& v : variants) {
      for (const auto& g : r.lexicon().groups) {
        Specialized s = r.specialize(v.text, g);
        next.push_back({v.group.empty() ? g : v.group + "+" + g,
                        std::move(s.text), v.no_op && s.no_op});
      }
    }
    variants = std::move(next);
  }
  return variants;
}

std::vector<ConceptPrompt> generate_concept_prompts(
    std::span<const std::string> concepts,
    std::span<const std::string> templates) {
  for (const auto& t : templates) {
    std::size_t first = t.find("{}");
    if (first == std::string::npos || t.find("{}", first + 2) != std::string::npos) {
      throw InvalidArgument("template must contain exactly one {} placeholder: '" +
                            t + "'");
    }
  }
  std::vector<ConceptPrompt> out;
  out.reserve(concepts.size() * templates.size());
  for (const auto& c : concepts) {
    for (const auto& t : templates) {
      std::string prompt = t;
      prompt.replace(prompt.find("{}"), 2, c);
      out.push_back({c, t, std::move(prompt)});
    }
  }
  return out;
}

}  // namespace saner
