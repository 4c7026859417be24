#include "pairlm/lexicon.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

namespace pairlm {

bool EntryLess(const DictEntry &a, const DictEntry &b) {
  auto key = [](const DictEntry &e) {
    return std::make_tuple(std::cref(e.phonemes), std::cref(e.surface), std::cref(e.left_morph),
                           std::cref(e.right_morph), RenderPhonTag(e.left_phon),
                           RenderPhonTag(e.right_phon), std::cref(e.gloss));
  };
  return key(a) < key(b);
}

void CheckBoundaryTags(const DictEntry &entry) {
  if (entry.phonemes.empty()) throw ParseError("entry '" + entry.surface + "' has no phonemes");
  if (entry.left_phon.kind == PhonTagKind::kPause || entry.right_phon.kind == PhonTagKind::kPause)
    throw ParseError("PEND is reserved for utterance boundaries");
  if (auto edge = entry.left_phon.EdgePhoneme(); edge && *edge != entry.phonemes.front())
    throw ParseError("left tag " + RenderPhonTag(entry.left_phon) + " does not match first phoneme '" +
                     entry.phonemes.front() + "'");
  if (auto edge = entry.right_phon.EdgePhoneme(); edge && *edge != entry.phonemes.back())
    throw ParseError("right tag " + RenderPhonTag(entry.right_phon) +
                     " does not match last phoneme '" + entry.phonemes.back() + "'");
}

std::vector<std::string> MorphemeTokens(const DictEntry &entry) {
  auto parts = SplitFields(entry.surface, '+');
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto &tag = (i + 1 == parts.size() && i > 0) ? entry.right_morph : entry.left_morph;
    tokens.push_back(parts[i] + "/" + tag);
  }
  return tokens;
}

std::string EntryKey(const DictEntry &entry) {
  DictEntry bare = entry;
  bare.gloss.clear();
  return FormatEntry(bare);
}

void Lexicon::Add(DictEntry entry, EntryOrigin origin) {
  if (!keys_.insert(EntryKey(entry)).second)
    throw ParseError("duplicate entry: " + FormatEntry(entry));
  entries_.push_back(std::move(entry));
  origins_.push_back(origin);
}

namespace {

DictEntry ParseEntryLine(std::string_view body, const Inventory &inventory,
                         const MorphTagSet *tagset) {
  auto f = SplitFields(body, '|');
  if (f.size() != 6 && f.size() != 7)
    throw ParseError("expected 6 or 7 '|'-separated fields, got " + std::to_string(f.size()));
  DictEntry e;
  e.phonemes = SplitWhitespace(f[0]);
  for (const auto &p : e.phonemes)
    if (!inventory.alphabet.contains(p)) throw ParseError("unknown phoneme '" + p + "'");
  e.surface = f[1];
  if (e.surface.empty()) throw ParseError("empty surface");
  e.left_morph = f[2];
  e.right_morph = f[3];
  for (const auto *m : {&e.left_morph, &e.right_morph}) {
    if (m->empty()) throw ParseError("empty morphological tag");
    if (*m == kBoundaryMorphTag) throw ParseError("morphological tag SB is reserved");
    if (tagset && !tagset->contains(*m)) throw ParseError("unknown morphological tag '" + *m + "'");
  }
  e.left_phon = ParsePhonTag(f[4], inventory);
  e.right_phon = ParsePhonTag(f[5], inventory);
  if (f.size() == 7) e.gloss = f[6];
  CheckBoundaryTags(e);
  return e;
}

}  // namespace

DictionaryParse ParseDictionary(std::istream &in, const Inventory &inventory,
                                const DictionaryOptions &options) {
  DictionaryParse result;
  EntryOrigin origin = EntryOrigin::kHandWritten;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto trimmed = Trim(line);
    if (trimmed.rfind("#", 0) == 0) {
      auto directive = Trim(trimmed.substr(1));
      if (directive == "origin: compiled") origin = EntryOrigin::kCompiled;
      if (directive == "origin: hand-written") origin = EntryOrigin::kHandWritten;
      continue;
    }
    auto body = Trim(StripComment(line));
    if (body.empty()) continue;
    try {
      result.lexicon.Add(ParseEntryLine(body, inventory, options.tagset), origin);
    } catch (const ParseError &err) {
      if (options.strict) throw ParseError(err.what(), lineno);
      ++result.skipped;
      result.diagnostics.push_back("line " + std::to_string(lineno) + ": " + err.what());
    }
  }
  return result;
}

DictionaryParse LoadDictionary(const std::string &path, const Inventory &inventory,
                               const DictionaryOptions &options) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return ParseDictionary(in, inventory, options);
  } catch (const ParseError &err) {
    throw ParseError(path + ": " + err.what());
  }
}

std::string FormatEntry(const DictEntry &e) {
  std::ostringstream out;
  for (std::size_t i = 0; i < e.phonemes.size(); ++i) out << (i ? " " : "") << e.phonemes[i];
  out << " | " << e.surface << " | " << e.left_morph << " | " << e.right_morph << " | "
      << RenderPhonTag(e.left_phon) << " | " << RenderPhonTag(e.right_phon);
  if (!e.gloss.empty()) out << " | " << e.gloss;
  return out.str();
}

void WriteDictionary(std::ostream &out, const Lexicon &lexicon) {
  std::vector<std::size_t> order(lexicon.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return EntryLess(lexicon.entry(a), lexicon.entry(b));
  });
  EntryOrigin current = EntryOrigin::kHandWritten;
  for (auto i : order) {
    if (lexicon.origin(i) != current) {
      current = lexicon.origin(i);
      out << (current == EntryOrigin::kCompiled ? "# origin: compiled\n"
                                                : "# origin: hand-written\n");
    }
    out << FormatEntry(lexicon.entry(i)) << '\n';
  }
}

// ---------------------------------------------------------------------------
// LexiconTrie

LexiconTrie LexiconTrie::Build(const Lexicon &lexicon, const PhonemeAlphabet &alphabet) {
  std::vector<std::uint32_t> order(lexicon.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return EntryLess(lexicon.entry(a), lexicon.entry(b));
  });

  LexiconTrie trie;
  trie.nodes_.emplace_back();
  for (auto id : order) {
    NodeId node = kRoot;
    for (const auto &symbol : lexicon.entry(id).phonemes) {
      auto idx = alphabet.index(symbol);
      if (!idx) throw ParseError("phoneme '" + symbol + "' not in alphabet");
      auto phoneme = static_cast<std::uint32_t>(*idx);
      auto &children = trie.nodes_[node].children;
      auto it = std::lower_bound(children.begin(), children.end(), phoneme,
                                 [](const auto &c, std::uint32_t p) { return c.first < p; });
      if (it != children.end() && it->first == phoneme) {
        node = it->second;
      } else {
        auto child = static_cast<NodeId>(trie.nodes_.size());
        children.insert(it, {phoneme, child});
        trie.nodes_.emplace_back();
        node = child;
      }
    }
    trie.nodes_[node].entries.push_back(id);
  }
  return trie;
}

LexiconTrie::NodeId LexiconTrie::Step(NodeId node, std::size_t phoneme) const {
  const auto &children = nodes_.at(node).children;
  auto it = std::lower_bound(children.begin(), children.end(), phoneme,
                             [](const auto &c, std::size_t p) { return c.first < p; });
  if (it == children.end() || it->first != phoneme) return kNone;
  return it->second;
}

}  // namespace pairlm
