#include "pairlm/phonorules.h"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace pairlm {

namespace {

std::pair<std::string, std::string> SplitPair(const std::string &item, int lineno) {
  auto parts = SplitFields(item, ':');
  if (parts.size() != 2 || parts[0].empty() || parts[1].empty())
    throw ParseError("expected from:to, got '" + item + "'", lineno);
  return {parts[0], parts[1]};
}

std::string Onset(const std::string &text) { return text == "-" ? std::string() : text; }

void RequirePhoneme(const Inventory &inv, const std::string &p, int lineno) {
  if (!inv.alphabet.contains(p)) throw ParseError("unknown phoneme '" + p + "'", lineno);
}

void RequireCoda(const Inventory &inv, const std::string &c, int lineno) {
  if (!inv.codas.contains(c)) throw ParseError("unknown coda token '" + c + "'", lineno);
}

}  // namespace

// ---------------------------------------------------------------------------
// RuleTable

RuleTable RuleTable::Read(std::istream &in, const Inventory &inv) {
  RuleTable t;
  t.yey_keep_onsets.clear();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto f = SplitWhitespace(StripComment(line));
    if (f.empty()) continue;
    const std::string key = f[0];
    std::vector<std::string> v(f.begin() + 1, f.end());
    if (v.empty()) throw ParseError("rule '" + key + "' has no values", lineno);

    if (key == "h_contraction.coda") {
      for (const auto &item : v) {
        auto [coda, rest] = SplitPair(item, lineno);
        RequireCoda(inv, coda, lineno);
        if (rest != PhonTag::kDeletion) RequirePhoneme(inv, rest, lineno);
        t.h_contraction_coda[coda] = rest;
      }
    } else if (key == "h_contraction.onset") {
      for (const auto &item : v) {
        auto [from, to] = SplitPair(item, lineno);
        RequirePhoneme(inv, from, lineno);
        RequirePhoneme(inv, to, lineno);
        t.h_contraction_onset[from] = to;
      }
    } else if (key == "h_merge.coda") {
      for (const auto &item : v) {
        auto parts = SplitFields(item, ':');
        if (parts.size() != 3) throw ParseError("expected from:rest:to, got '" + item + "'", lineno);
        RequireCoda(inv, parts[0], lineno);
        if (parts[1] != PhonTag::kDeletion) RequirePhoneme(inv, parts[1], lineno);
        RequirePhoneme(inv, parts[2], lineno);
        t.h_merge_coda[parts[0]] = Merge{parts[1], parts[2]};
      }
    } else if (key == "h_merge.onset") {
      for (const auto &p : v) RequirePhoneme(inv, p, lineno), t.h_merge_onset.insert(p);
    } else if (key == "glottal.trigger") {
      for (const auto &c : v) RequireCoda(inv, c, lineno), t.glottal_trigger.insert(c);
    } else if (key == "glottal.tense") {
      for (const auto &item : v) {
        auto [from, to] = SplitPair(item, lineno);
        RequirePhoneme(inv, from, lineno);
        RequirePhoneme(inv, to, lineno);
        t.tense[from] = to;
      }
    } else if (key == "stem_glottal.trigger") {
      for (const auto &c : v) RequireCoda(inv, c, lineno), t.stem_glottal_trigger.insert(c);
    } else if (key == "stem_glottal.onsets") {
      for (const auto &p : v) RequirePhoneme(inv, p, lineno), t.stem_glottal_onsets.insert(p);
    } else if (key == "stem_glottal.ending") {
      for (const auto &p : v) t.ending_tags.emplace_back(p);
    } else if (key == "nasal.onsets") {
      for (const auto &p : v) RequirePhoneme(inv, p, lineno), t.nasal_onsets.insert(p);
    } else if (key == "nasal.map") {
      for (const auto &item : v) {
        auto [from, to] = SplitPair(item, lineno);
        RequirePhoneme(inv, from, lineno);
        RequirePhoneme(inv, to, lineno);
        t.nasal_map[from] = to;
      }
    } else if (key == "l_to_n.after") {
      for (const auto &p : v) RequirePhoneme(inv, p, lineno), t.l_to_n_after.insert(p);
    } else if (key == "lateral") {
      if (v.size() != 1) throw ParseError("lateral takes one from:to pair", lineno);
      std::tie(t.lateral_from, t.lateral_to) = SplitPair(v[0], lineno);
    } else if (key == "desyl.onsets") {
      for (const auto &p : v) RequirePhoneme(inv, p, lineno), t.desyl_onsets.insert(p);
    } else if (key == "desyl.contract") {
      if (v.size() != 1) throw ParseError("desyl.contract takes one a+b:c item", lineno);
      auto [lhs, result] = SplitPair(v[0], lineno);
      auto vowels = SplitFields(lhs, '+');
      if (vowels.size() != 2) throw ParseError("expected a+b:c, got '" + v[0] + "'", lineno);
      for (const auto *p : {&vowels[0], &vowels[1], &result}) RequirePhoneme(inv, *p, lineno);
      t.desyl_stem_vowel = vowels[0];
      t.desyl_ending_vowel = vowels[1];
      t.desyl_result = result;
    } else if (key == "yey.variant") {
      if (v.size() != 1) throw ParseError("yey.variant takes one from:to pair", lineno);
      std::tie(t.yey_from, t.yey_to) = SplitPair(v[0], lineno);
      RequirePhoneme(inv, t.yey_from, lineno);
      RequirePhoneme(inv, t.yey_to, lineno);
    } else if (key == "yey.keep_onsets") {
      for (const auto &p : v) t.yey_keep_onsets.insert(Onset(p));
    } else {
      throw ParseError("unknown rule key '" + key + "'", lineno);
    }
  }
  return t;
}

RuleTable RuleTable::Load(const std::string &path, const Inventory &inventory) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return Read(in, inventory);
  } catch (const ParseError &err) {
    throw ParseError(path + ": " + err.what());
  }
}

bool RuleTable::IsEnding(std::string_view morph_tag) const {
  return std::any_of(ending_tags.begin(), ending_tags.end(),
                     [&](const TagPattern &p) { return p.Matches(morph_tag); });
}

// ---------------------------------------------------------------------------
// RuleEngine

RuleEngine::RuleEngine(Inventory inventory, RuleTable rules)
    : inventory_(std::move(inventory)), rules_(std::move(rules)) {
  for (const auto &s : inventory_.alphabet.symbols())
    (PhonemeAlphabet::IsVowelSymbol(s) ? vowels_ : consonants_).push_back(s);
  auto longer = [](const std::string &a, const std::string &b) {
    return a.size() != b.size() ? a.size() > b.size() : a < b;
  };
  std::sort(consonants_.begin(), consonants_.end(), longer);
  std::sort(vowels_.begin(), vowels_.end(), longer);
}

std::vector<Syllable> RuleEngine::Syllabify(std::string_view surface) const {
  if (surface.empty()) throw ParseError("empty surface form");
  std::vector<Syllable> out;
  for (const auto &chunk : SplitFields(surface, '-')) {
    std::optional<Syllable> parsed;
    std::vector<std::string> onsets;
    for (const auto &c : consonants_)
      if (std::string_view(chunk).substr(0, c.size()) == c) onsets.push_back(c);
    onsets.emplace_back();
    for (const auto &onset : onsets) {
      auto rest = std::string_view(chunk).substr(onset.size());
      for (const auto &v : vowels_) {
        if (rest.substr(0, v.size()) != v) continue;
        std::string coda(rest.substr(v.size()));
        if (!coda.empty() && !inventory_.codas.contains(coda)) continue;
        parsed = Syllable{onset, v, coda};
        break;
      }
      if (parsed) break;
    }
    if (!parsed) throw ParseError("cannot syllabify '" + chunk + "' in '" + std::string(surface) + "'");
    out.push_back(*parsed);
  }
  return out;
}

OrthoMorpheme RuleEngine::MakeMorpheme(std::string surface, std::string tag, Flags flags,
                                       std::string gloss) const {
  static const Flags kKnown = {std::string(kFlagVerbStem), std::string(kFlagLpToP),
                               std::string(kFlagDesyl)};
  for (const auto &f : flags)
    if (!kKnown.count(f)) throw ParseError("unknown lexical flag '" + f + "'");
  if (surface.find('+') != std::string::npos)
    throw ParseError("orthographic morpheme '" + surface + "' contains '+'");
  if (tag.empty() || tag == kBoundaryMorphTag) throw ParseError("bad morphological tag '" + tag + "'");
  OrthoMorpheme m;
  m.syllables = Syllabify(surface);
  m.surface = std::move(surface);
  m.tag = std::move(tag);
  m.flags = std::move(flags);
  m.gloss = std::move(gloss);
  return m;
}

std::string RuleEngine::NeutralizeCoda(std::string_view coda, const Flags &flags) const {
  const auto &entry = inventory_.codas.at(coda);
  if (coda == "lp" && flags.count(kFlagLpToP)) return "p";
  return entry.neutralized;
}

PhonTag RuleEngine::LeftEdgeTag(const Syllable &left, const Flags &flags,
                                const JunctionRealization &j, bool changed_beyond_neutral) const {
  if (left.coda.empty()) {
    if (j.left_nucleus != left.nucleus) return PhonTag::PronouncedAs(left.nucleus, j.left_nucleus);
    return PhonTag::Unchanged(left.nucleus);
  }
  if (j.left_coda.empty()) return PhonTag::PronouncedAs(left.coda, std::string(PhonTag::kDeletion));
  if (j.left_coda.size() > 1) {
    // A cluster carried over before a vowel: the edge phoneme is its last
    // component, but the token itself is not a phoneme.
    return PhonTag::PronouncedAs(left.coda, j.left_coda.back());
  }
  const auto &surface = j.left_coda[0];
  if (surface == left.coda) return PhonTag::Unchanged(surface);
  if (!changed_beyond_neutral && surface == NeutralizeCoda(left.coda, flags)) return PhonTag::Neutralized(left.coda, surface);
  return PhonTag::PronouncedAs(left.coda, surface);
}

JunctionRealization RuleEngine::RealizeBoundary(const Syllable &left, const Flags &left_flags,
                                                const Syllable &right, bool right_is_ending,
                                                bool morpheme_boundary) const {
  const auto &r = rules_;
  JunctionRealization j;
  j.left_nucleus = left.nucleus;
  if (!right.onset.empty()) j.right_onset = {right.onset};
  bool changed_beyond_neutral = false;
  const std::string &c = left.coda;
  const std::string &o = right.onset;

  auto finish = [&]() {
    j.left_tag = LeftEdgeTag(left, left_flags, j, changed_beyond_neutral);
    if (j.right_absorbed) {
      j.right_tag = PhonTag::PronouncedAs(right.onset.empty() ? right.nucleus : right.onset,
                                          std::string(PhonTag::kDeletion));
    } else if (o.empty()) {
      j.right_tag = PhonTag::Unchanged(right.nucleus);
    } else if (j.right_onset.size() == 1 && j.right_onset[0] == o) {
      j.right_tag = PhonTag::Unchanged(o);
    } else {
      j.right_tag = PhonTag::PronouncedAs(o, j.right_onset.at(0));
    }
    return j;
  };

  if (c.empty()) {
    if (morpheme_boundary && left_flags.count(kFlagDesyl) && left.nucleus == r.desyl_stem_vowel &&
        r.desyl_onsets.count(left.onset) && o.empty() && right.nucleus == r.desyl_ending_vowel &&
        right.coda.empty()) {
      j.left_nucleus = r.desyl_result;
      j.right_absorbed = true;
      j.right_onset.clear();
      j.rules_applied.push_back("desyllabification");
    }
    return finish();
  }

  if (o.empty()) {
    j.left_coda = inventory_.codas.at(c).components;
    return finish();
  }

  if (auto hc = r.h_contraction_coda.find(c); hc != r.h_contraction_coda.end()) {
    if (auto ho = r.h_contraction_onset.find(o); ho != r.h_contraction_onset.end()) {
      if (hc->second != PhonTag::kDeletion) j.left_coda = {hc->second};
      j.right_onset = {ho->second};
      changed_beyond_neutral = true;
      j.rules_applied.push_back("h-contraction");
      return finish();
    }
  }
  if (r.h_merge_onset.count(o)) {
    if (auto hm = r.h_merge_coda.find(c); hm != r.h_merge_coda.end()) {
      if (hm->second.rest != PhonTag::kDeletion) j.left_coda = {hm->second.rest};
      j.right_onset = {hm->second.aspirate};
      changed_beyond_neutral = true;
      j.rules_applied.push_back("h-contraction");
      return finish();
    }
  }

  std::string coda = NeutralizeCoda(c, left_flags);
  if (coda != c) j.rules_applied.push_back("neutralization");
  std::string onset = o;

  if (auto t = r.tense.find(o); t != r.tense.end()) {
    const bool general = r.glottal_trigger.count(c) > 0;
    const bool stem = morpheme_boundary && left_flags.count(kFlagVerbStem) &&
                      r.stem_glottal_trigger.count(c) && right_is_ending &&
                      r.stem_glottal_onsets.count(o);
    if (general || stem) {
      onset = t->second;
      j.rules_applied.push_back("glottalization");
    }
  }

  const std::string neutral = coda;
  const std::string tensed = onset;
  if (onset == "l" && r.l_to_n_after.count(coda)) onset = "n";
  if (r.nasal_onsets.count(onset))
    if (auto n = r.nasal_map.find(coda); n != r.nasal_map.end()) coda = n->second;
  if (coda == r.lateral_to && onset == r.lateral_from) {
    onset = r.lateral_to;
  } else if (coda == r.lateral_from && onset == r.lateral_to) {
    coda = r.lateral_to;
  }
  if (coda != neutral || onset != tensed) j.rules_applied.push_back("assimilation");
  changed_beyond_neutral = coda != neutral;
  j.left_coda = {coda};
  j.right_onset = {onset};
  return finish();
}

JunctionRealization RuleEngine::RealizeJunction(const OrthoMorpheme &a, const OrthoMorpheme &b) const {
  return RealizeBoundary(a.syllables.back(), a.flags, b.syllables.front(), rules_.IsEnding(b.tag),
                         true);
}

namespace {

struct LeftVariant {
  std::vector<std::string> onset;
  bool absorbed = false;
  PhonTag tag;
};

struct RightVariant {
  std::vector<std::string> coda;
  std::string nucleus;
  PhonTag tag;
};

LeftVariant LeftFrom(const JunctionRealization &j) {
  return {j.right_absorbed ? std::vector<std::string>{} : j.right_onset, j.right_absorbed,
          j.right_tag};
}

RightVariant RightFrom(const JunctionRealization &j) { return {j.left_coda, j.left_nucleus, j.left_tag}; }

LeftVariant UnchangedLeft(const std::vector<Syllable> &syl) {
  const auto &s = syl.front();
  LeftVariant v;
  if (!s.onset.empty()) v.onset = {s.onset};
  v.tag = PhonTag::Unchanged(s.onset.empty() ? s.nucleus : s.onset);
  return v;
}

// A morpheme-sized run of syllables with its flags split by edge: internal
// junctions use `flags`, the right junction uses `right_flags`.
struct Unit {
  std::string surface, left_morph, right_morph, gloss;
  std::vector<Syllable> syllables;
  Flags flags, right_flags;
  std::map<std::string, LeftVariant> left;
  std::map<std::string, RightVariant> right;
};

struct Realized {
  std::vector<std::string> phonemes;
  std::vector<std::size_t> yey_positions;  // optional yey -> ey sites
};

std::string VariantKey(const std::vector<std::string> &phones, const PhonTag &tag, bool absorbed) {
  std::string key = RenderPhonTag(tag) + (absorbed ? "|A|" : "|-|");
  for (const auto &p : phones) key += p + " ";
  return key;
}

std::string VariantKey(const LeftVariant &v) { return VariantKey(v.onset, v.tag, v.absorbed); }
std::string VariantKey(const RightVariant &v) {
  auto phones = v.coda;
  phones.insert(phones.begin(), v.nucleus);
  return VariantKey(phones, v.tag, false);
}

Realized RealizeUnit(const RuleEngine &engine, const std::vector<Syllable> &syl, const Flags &flags,
                     const LeftVariant &left, const RightVariant &right) {
  const auto &rules = engine.rules();
  const std::size_t n = syl.size();
  std::vector<std::vector<std::string>> onsets(n), codas(n);
  std::vector<std::string> nuclei(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!syl[i].onset.empty()) onsets[i] = {syl[i].onset};
    nuclei[i] = syl[i].nucleus;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    auto j = engine.RealizeBoundary(syl[i], flags, syl[i + 1], false, false);
    codas[i] = j.left_coda;
    onsets[i + 1] = j.right_onset;
  }
  onsets[0] = left.onset;
  codas[n - 1] = right.coda;
  nuclei[n - 1] = right.nucleus;

  Realized out;
  for (std::size_t i = left.absorbed ? 1 : 0; i < n; ++i) {
    for (const auto &p : onsets[i]) out.phonemes.push_back(p);
    if (nuclei[i] == rules.yey_from && !rules.yey_keep_onsets.count(syl[i].onset))
      out.yey_positions.push_back(out.phonemes.size());
    out.phonemes.push_back(nuclei[i]);
    for (const auto &p : codas[i]) out.phonemes.push_back(p);
  }
  return out;
}

// Every combination of optional yey readings, base first.
std::vector<std::vector<std::string>> YeyVariants(const Realized &r, const std::string &to) {
  std::vector<std::vector<std::string>> out;
  const std::size_t k = std::min<std::size_t>(r.yey_positions.size(), 8);
  for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
    auto phones = r.phonemes;
    for (std::size_t b = 0; b < k; ++b)
      if (mask & (std::size_t{1} << b)) phones[r.yey_positions[b]] = to;
    out.push_back(std::move(phones));
  }
  return out;
}

PhonTag Retag(const PhonTag &tag, const std::string &edge) {
  if (tag.kind == PhonTagKind::kUnchanged && tag.boundary != edge) return PhonTag::Unchanged(edge);
  return tag;
}

RightVariant PauseRight(const RuleEngine &engine, const Syllable &last, const Flags &flags) {
  RightVariant v;
  v.nucleus = last.nucleus;
  if (last.coda.empty()) {
    v.tag = PhonTag::Unchanged(last.nucleus);
    return v;
  }
  auto n = engine.NeutralizeCoda(last.coda, flags);
  v.coda = {n};
  v.tag = n == last.coda ? PhonTag::Unchanged(n) : PhonTag::Neutralized(last.coda, n);
  return v;
}

// Realizes every morpheme of a sentence; index i holds the unit of morpheme i
// (empty when absorbed by its predecessor).
std::vector<Realized> ComposeUnits(const RuleEngine &engine, std::span<const OrthoMorpheme> s) {
  std::vector<Realized> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto &m = s[i];
    LeftVariant left = UnchangedLeft(m.syllables);
    if (i > 0) left = LeftFrom(engine.RealizeJunction(s[i - 1], m));
    if (left.absorbed && m.syllables.size() == 1) continue;
    RightVariant right = i + 1 < s.size() ? RightFrom(engine.RealizeJunction(m, s[i + 1]))
                                          : PauseRight(engine, m.syllables.back(), m.flags);
    out[i] = RealizeUnit(engine, m.syllables, m.flags, left, right);
  }
  return out;
}

}  // namespace

PauseRealization RuleEngine::RealizeBeforePause(const OrthoMorpheme &a) const {
  auto right = PauseRight(*this, a.syllables.back(), a.flags);
  auto r = RealizeUnit(*this, a.syllables, a.flags, UnchangedLeft(a.syllables), right);
  return {r.phonemes, right.tag};
}

Composition RuleEngine::SurfaceCompose(std::span<const OrthoMorpheme> sentence) const {
  Composition c;
  for (const auto &unit : ComposeUnits(*this, sentence)) {
    const auto start = c.phonemes.size();
    c.phonemes.insert(c.phonemes.end(), unit.phonemes.begin(), unit.phonemes.end());
    c.spans.emplace_back(start, c.phonemes.size());
  }
  return c;
}

std::vector<std::vector<std::string>> RuleEngine::Desyllabify(
    std::span<const OrthoMorpheme> sequence) const {
  Realized all;
  for (const auto &unit : ComposeUnits(*this, sequence)) {
    for (auto p : unit.yey_positions) all.yey_positions.push_back(all.phonemes.size() + p);
    all.phonemes.insert(all.phonemes.end(), unit.phonemes.begin(), unit.phonemes.end());
  }
  return YeyVariants(all, rules_.yey_to);
}

// ---------------------------------------------------------------------------
// Orthographic lexicon

std::vector<OrthoMorpheme> ParseOrthoLexicon(std::istream &in, const RuleEngine &engine,
                                             const MorphTagSet *tagset) {
  std::vector<OrthoMorpheme> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = Trim(StripComment(line));
    if (body.empty()) continue;
    auto f = SplitFields(body, '|');
    if (f.size() < 2 || f.size() > 4)
      throw ParseError("expected surface | morph_tag | flags [| gloss]", lineno);
    if (tagset && !tagset->contains(f[1]))
      throw ParseError("unknown morphological tag '" + f[1] + "'", lineno);
    Flags flags;
    if (f.size() > 2) {
      std::string list = f[2];
      std::replace(list.begin(), list.end(), ',', ' ');
      for (auto &flag : SplitWhitespace(list)) flags.insert(flag);
    }
    try {
      out.push_back(engine.MakeMorpheme(f[0], f[1], flags, f.size() > 3 ? f[3] : ""));
    } catch (const ParseError &err) {
      throw ParseError(err.what(), lineno);
    }
  }
  return out;
}

std::vector<OrthoMorpheme> LoadOrthoLexicon(const std::string &path, const RuleEngine &engine,
                                            const MorphTagSet *tagset) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return ParseOrthoLexicon(in, engine, tagset);
  } catch (const ParseError &err) {
    throw ParseError(path + ": " + err.what());
  }
}

// ---------------------------------------------------------------------------
// Compilation

namespace {

// Unchanged tags that an optional yey -> ey reading turns into another edge.
std::vector<PhonTag> RightTagReadings(const RuleTable &rules, const Unit &u, const PhonTag &tag) {
  std::vector<PhonTag> out = {tag};
  const auto &last = u.syllables.back();
  if (tag.kind == PhonTagKind::kUnchanged && tag.boundary == rules.yey_from && last.coda.empty() &&
      !rules.yey_keep_onsets.count(last.onset))
    out.push_back(PhonTag::Unchanged(rules.yey_to));
  return out;
}

std::vector<PhonTag> LeftTagReadings(const RuleTable &rules, const Unit &u, const PhonTag &tag) {
  std::vector<PhonTag> out = {tag};
  const auto &first = u.syllables.front();
  if (tag.kind == PhonTagKind::kUnchanged && tag.boundary == rules.yey_from &&
      first.onset.empty() && !rules.yey_keep_onsets.count(first.onset))
    out.push_back(PhonTag::Unchanged(rules.yey_to));
  return out;
}

Unit UnitOf(const OrthoMorpheme &m) {
  Unit u;
  u.surface = m.surface;
  u.left_morph = u.right_morph = m.tag;
  u.gloss = m.gloss;
  u.syllables = m.syllables;
  u.flags = u.right_flags = m.flags;
  return u;
}

}  // namespace

CompiledLexicon CompileLexicon(const RuleEngine &engine, std::span<const OrthoMorpheme> ortho,
                               const ConnectivityMatrix *morph) {
  const auto &rules = engine.rules();

  // Canonical, duplicate-free input order.
  std::map<std::string, const OrthoMorpheme *> by_token;
  for (const auto &m : ortho) {
    auto [it, inserted] = by_token.emplace(m.Token(), &m);
    if (!inserted && (it->second->flags != m.flags || it->second->gloss != m.gloss))
      throw ParseError("morpheme " + m.Token() + " listed twice with different flags or glosses");
  }
  std::vector<const OrthoMorpheme *> morphs;
  for (const auto &[token, m] : by_token) morphs.push_back(m);

  std::vector<Unit> units;
  for (const auto *m : morphs) units.push_back(UnitOf(*m));

  std::set<std::pair<std::string, std::string>> pairs;
  const std::string pend(PhonTag::kPauseText);
  auto add_pairs = [&](const Unit &a, const PhonTag &l, const Unit &b, const PhonTag &r) {
    for (const auto &lt : RightTagReadings(rules, a, l))
      for (const auto &rt : LeftTagReadings(rules, b, r))
        pairs.emplace(RenderPhonTag(lt), RenderPhonTag(rt));
  };
  auto add_edge_variants = [&](Unit &u) {
    auto left = UnchangedLeft(u.syllables);
    u.left.emplace(VariantKey(left), left);
    for (const auto &t : LeftTagReadings(rules, u, left.tag)) pairs.emplace(pend, RenderPhonTag(t));
    auto pause = PauseRight(engine, u.syllables.back(), u.right_flags);
    u.right.emplace(VariantKey(pause), pause);
    for (const auto &t : RightTagReadings(rules, u, pause.tag)) pairs.emplace(RenderPhonTag(t), pend);
    // Base form before any vowel-initial successor.
    auto liaison = RightFrom(engine.RealizeBoundary(u.syllables.back(), u.right_flags,
                                                    Syllable{"", "a", ""}, false, true));
    u.right.emplace(VariantKey(liaison), liaison);
  };

  for (auto &u : units) add_edge_variants(u);

  std::vector<Unit> fused;
  std::vector<std::size_t> fused_from;
  for (std::size_t ai = 0; ai < morphs.size(); ++ai) {
    for (std::size_t bi = 0; bi < morphs.size(); ++bi) {
      const auto &a = *morphs[ai];
      const auto &b = *morphs[bi];
      if (morph && !morph->Allows(a.tag, b.tag)) continue;
      auto j = engine.RealizeJunction(a, b);
      if (j.right_absorbed && b.syllables.size() == 1) {
        Unit f;
        f.surface = a.surface + "+" + b.surface;
        f.left_morph = a.tag;
        f.right_morph = b.tag;
        if (!a.gloss.empty() || !b.gloss.empty()) f.gloss = a.gloss + "+" + b.gloss;
        f.syllables = a.syllables;
        f.syllables.back().nucleus = j.left_nucleus;
        f.flags = a.flags;
        f.right_flags = b.flags;
        fused.push_back(std::move(f));
        fused_from.push_back(ai);
        continue;
      }
      auto r = RightFrom(j);
      auto l = LeftFrom(j);
      units[ai].right.emplace(VariantKey(r), r);
      units[bi].left.emplace(VariantKey(l), l);
      add_pairs(units[ai], j.left_tag, units[bi], j.right_tag);
    }
  }

  // Fused units start like their first morpheme and end like a fresh syllable.
  for (std::size_t fi = 0; fi < fused.size(); ++fi) {
    auto &f = fused[fi];
    f.left = units[fused_from[fi]].left;
    add_edge_variants(f);
    for (std::size_t bi = 0; bi < morphs.size(); ++bi) {
      const auto &b = *morphs[bi];
      if (morph && !morph->Allows(f.right_morph, b.tag)) continue;
      auto j = engine.RealizeBoundary(f.syllables.back(), f.right_flags, b.syllables.front(),
                                      rules.IsEnding(b.tag), true);
      if (j.right_absorbed) continue;
      auto r = RightFrom(j);
      f.right.emplace(VariantKey(r), r);
      auto l = LeftFrom(j);
      units[bi].left.emplace(VariantKey(l), l);
      add_pairs(f, j.left_tag, units[bi], j.right_tag);
    }
  }

  CompiledLexicon out;
  out.fused_units = fused.size();
  std::vector<DictEntry> entries;
  std::set<std::string> seen;
  auto emit = [&](const Unit &u) {
    for (const auto &[lk, left] : u.left) {
      if (left.absorbed && u.syllables.size() == 1) continue;
      for (const auto &[rk, right] : u.right) {
        auto realized = RealizeUnit(engine, u.syllables, u.flags, left, right);
        for (auto &phones : YeyVariants(realized, rules.yey_to)) {
          DictEntry e;
          e.left_phon = Retag(left.tag, phones.front());
          e.right_phon = Retag(right.tag, phones.back());
          e.phonemes = std::move(phones);
          e.surface = u.surface;
          e.left_morph = u.left_morph;
          e.right_morph = u.right_morph;
          e.gloss = u.gloss;
          CheckBoundaryTags(e);
          if (seen.insert(EntryKey(e)).second) entries.push_back(std::move(e));
        }
      }
    }
  };
  for (const auto &u : units) emit(u);
  for (const auto &f : fused) emit(f);
  std::sort(entries.begin(), entries.end(), EntryLess);
  for (auto &e : entries) {
    if (e.right_phon.kind == PhonTagKind::kNeutralized) pairs.emplace(RenderPhonTag(e.right_phon), pend);
    out.lexicon.Add(std::move(e), EntryOrigin::kCompiled);
  }

  // Left tags with the same set of permitted successors share one line.
  std::map<std::string, std::set<std::string>> successors;
  for (const auto &[l, r] : pairs) successors[l].insert(r);
  std::map<std::set<std::string>, std::vector<std::string>> lines;
  for (const auto &[l, rs] : successors) lines[rs].push_back(l);
  std::vector<MatrixEntry> rows;
  for (const auto &[rs, ls] : lines) {
    MatrixEntry row;
    for (const auto &l : ls) row.left.emplace_back(l);
    for (const auto &r : rs) row.right.emplace_back(r);
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const MatrixEntry &a, const MatrixEntry &b) {
    return a.left.front().text() < b.left.front().text();
  });
  for (auto &row : rows) out.phon_matrix.Add(std::move(row));
  return out;
}

// ---------------------------------------------------------------------------
// Final-form check

namespace {

struct EdgeSyllables {
  bool ok = false;
  Syllable last;                        // coda as a token
  std::vector<std::string> last_coda;   // coda as phonemes
  Syllable first;                       // onset as a phoneme
};

EdgeSyllables EdgesOf(const RuleEngine &engine, const DictEntry &e) {
  auto is_vowel = [&](const std::string &p) { return PhonemeAlphabet::IsVowelSymbol(p); };
  EdgeSyllables s;
  const auto &ph = e.phonemes;
  auto first_v = std::find_if(ph.begin(), ph.end(), is_vowel);
  if (first_v == ph.end()) return s;
  auto last_v = std::find_if(ph.rbegin(), ph.rend(), is_vowel).base() - 1;

  s.first.nucleus = *first_v;
  if (first_v - ph.begin() == 1) s.first.onset = ph.front();
  if (first_v - ph.begin() > 1) return s;  // no such onset in this inventory

  s.last.nucleus = *last_v;
  if (last_v != ph.begin() && !is_vowel(*(last_v - 1))) s.last.onset = *(last_v - 1);
  s.last_coda.assign(last_v + 1, ph.end());
  if (!s.last_coda.empty()) {
    auto token = engine.inventory().codas.TokenFor(s.last_coda);
    if (!token) return s;
    s.last.coda = *token;
  }
  s.ok = true;
  return s;
}

}  // namespace

std::vector<std::string> FinalFormViolations(const RuleEngine &engine, const Lexicon &lexicon,
                                             const ConnectivityMatrix &phon) {
  std::vector<std::string> out;
  std::vector<EdgeSyllables> edges;
  for (const auto &e : lexicon.entries()) {
    edges.push_back(EdgesOf(engine, e));
    if (!edges.back().ok &&
        std::any_of(e.phonemes.begin(), e.phonemes.end(),
                    [](const std::string &p) { return PhonemeAlphabet::IsVowelSymbol(p); }))
      out.push_back("unsyllabifiable surface: " + FormatEntry(e));
  }
  // Group by facing tags so the matrix is consulted once per tag pair.
  std::map<std::string, std::vector<std::size_t>> by_right, by_left;
  for (std::size_t i = 0; i < lexicon.size(); ++i) {
    if (!edges[i].ok) continue;
    by_right[RenderPhonTag(lexicon.entry(i).right_phon)].push_back(i);
    by_left[RenderPhonTag(lexicon.entry(i).left_phon)].push_back(i);
  }
  const Flags none;
  for (const auto &[rt, xs] : by_right) {
    for (const auto &[lt, ys] : by_left) {
      if (!phon.Allows(rt, lt)) continue;
      for (auto x : xs) {
        for (auto y : ys) {
          const auto &ex = edges[x];
          const auto &ey = edges[y];
          auto j = engine.RealizeBoundary(ex.last, none, ey.first, false, true);
          std::vector<std::string> onset;
          if (!ey.first.onset.empty()) onset = {ey.first.onset};
          if (j.right_absorbed || j.left_nucleus != ex.last.nucleus || j.left_coda != ex.last_coda ||
              j.right_onset != onset) {
            out.push_back(FormatEntry(lexicon.entry(x)) + "  +  " + FormatEntry(lexicon.entry(y)));
          }
        }
      }
    }
  }
  return out;
}

}  // namespace pairlm
