// Phoneme-sequence-to-morpheme dictionary and its tree index.

#ifndef PAIRLM_LEXICON_H_
#define PAIRLM_LEXICON_H_

#include <cstdint>
#include <istream>
#include <set>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pairlm/tagcore.h"

namespace pairlm {

/// One pronunciation of a morpheme (or contracted morpheme sequence).
struct DictEntry {
  std::vector<std::string> phonemes;
  std::string surface;  // Yale romanization; '+' joins contracted morphemes
  std::string left_morph;
  std::string right_morph;
  PhonTag left_phon;
  PhonTag right_phon;
  std::string gloss;
};

/// Identity used for duplicate detection; the gloss does not participate.
std::string EntryKey(const DictEntry &entry);

/// Canonical order: phonemes, surface, morph tags, rendered phon tags.
bool EntryLess(const DictEntry &a, const DictEntry &b);

/// Throws ParseError when the boundary tags disagree with the phonemes.
void CheckBoundaryTags(const DictEntry &entry);

/// Morpheme tokens an entry stands for, as `surface/tag`.  A contracted
/// entry "a+b" yields "a/left_morph" and "b/right_morph".
std::vector<std::string> MorphemeTokens(const DictEntry &entry);

enum class EntryOrigin { kHandWritten, kCompiled };

class Lexicon {
 public:
  /// Throws ParseError on a duplicate (phonemes, surface, tags) tuple.
  void Add(DictEntry entry, EntryOrigin origin = EntryOrigin::kHandWritten);

  const std::vector<DictEntry> &entries() const { return entries_; }
  const DictEntry &entry(std::size_t i) const { return entries_.at(i); }
  EntryOrigin origin(std::size_t i) const { return origins_.at(i); }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<DictEntry> entries_;
  std::vector<EntryOrigin> origins_;
  std::set<std::string> keys_;
};

struct DictionaryOptions {
  bool strict = true;
  const MorphTagSet *tagset = nullptr;  // validate morph tags when set
};

struct DictionaryParse {
  Lexicon lexicon;
  int skipped = 0;
  std::vector<std::string> diagnostics;
};

/// Line format: `ph ph ... | surface | left_morph | right_morph | left_phon |
/// right_phon [| gloss]`.  `#` starts a comment; a `# origin: compiled`
/// directive marks the following entries as compiler output.
DictionaryParse ParseDictionary(std::istream &in, const Inventory &inventory,
                                const DictionaryOptions &options = {});
DictionaryParse LoadDictionary(const std::string &path, const Inventory &inventory,
                               const DictionaryOptions &options = {});

std::string FormatEntry(const DictEntry &entry);
/// Canonical field order, entries sorted with EntryLess.
void WriteDictionary(std::ostream &out, const Lexicon &lexicon);

/// Prefix tree over phoneme indices; entries hang off the node their
/// phoneme sequence ends at.
class LexiconTrie {
 public:
  using NodeId = std::int32_t;
  static constexpr NodeId kRoot = 0;
  static constexpr NodeId kNone = -1;

  static LexiconTrie Build(const Lexicon &lexicon, const PhonemeAlphabet &alphabet);

  NodeId Step(NodeId node, std::size_t phoneme) const;
  /// Entry indices (into the source lexicon) attached to `node`.
  std::span<const std::uint32_t> Entries(NodeId node) const { return nodes_.at(node).entries; }
  /// (phoneme, child) pairs in phoneme order.
  const std::vector<std::pair<std::uint32_t, NodeId>> &Children(NodeId node) const {
    return nodes_.at(node).children;
  }
  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    std::vector<std::pair<std::uint32_t, NodeId>> children;  // sorted by phoneme
    std::vector<std::uint32_t> entries;
  };
  std::vector<Node> nodes_;
};

}  // namespace pairlm

#endif  // PAIRLM_LEXICON_H_
