// Phoneme inventory, phonological boundary tags, morphological tags and the
// wildcard patterns used by the connectivity matrices.

#ifndef PAIRLM_TAGCORE_H_
#define PAIRLM_TAGCORE_H_

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pairlm {

/// Error raised by every text-format reader.  `line()` is 1-based, 0 when the
/// error is not tied to a line.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string &message, int line = 0);
  int line() const { return line_; }

 private:
  int line_;
};

/// Characters that may never appear inside a phoneme symbol.
inline constexpr std::string_view kReservedChars = "-=2*?|#";

/// Ordered, duplicate-free phoneme inventory.  Order is the column order of
/// lattice files.
class PhonemeAlphabet {
 public:
  PhonemeAlphabet() = default;
  explicit PhonemeAlphabet(std::vector<std::string> symbols);

  /// Alphabet file: one symbol per line, `#` comments.
  static PhonemeAlphabet Read(std::istream &in);
  static PhonemeAlphabet Load(const std::string &path);

  std::size_t size() const { return symbols_.size(); }
  const std::string &symbol(std::size_t i) const { return symbols_.at(i); }
  const std::vector<std::string> &symbols() const { return symbols_; }
  std::optional<std::size_t> index(std::string_view symbol) const;
  bool contains(std::string_view symbol) const { return index(symbol).has_value(); }

  /// Yale vowels are exactly the symbols containing one of a, e, i, o, u.
  static bool IsVowelSymbol(std::string_view symbol);
  bool IsVowel(std::size_t i) const { return vowel_.at(i); }

 private:
  std::vector<std::string> symbols_;
  std::vector<bool> vowel_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Legal syllable-final tokens.  Cluster codas ("lk", "ph", ...) are single
/// tokens here even though they span one or two phonemes.
class CodaTable {
 public:
  struct Coda {
    std::string token;
    std::string neutralized;              // one of k n t l m p ng
    std::vector<std::string> components;  // surface phonemes before a vowel
  };

  CodaTable() = default;

  /// Coda file: `token neutralized [component...]` per line, `#` comments.
  static CodaTable Read(std::istream &in, const PhonemeAlphabet &alphabet);
  static CodaTable Load(const std::string &path, const PhonemeAlphabet &alphabet);

  bool contains(std::string_view token) const;
  const Coda &at(std::string_view token) const;
  /// Token whose components are exactly `phonemes`, if any.
  std::optional<std::string> TokenFor(const std::vector<std::string> &phonemes) const;
  const std::map<std::string, Coda, std::less<>> &codas() const { return codas_; }

 private:
  std::map<std::string, Coda, std::less<>> codas_;
};

/// Alphabet plus coda tokens: everything needed to validate a tag.
struct Inventory {
  PhonemeAlphabet alphabet;
  CodaTable codas;

  bool IsTagToken(std::string_view token) const {
    return alphabet.contains(token) || codas.contains(token);
  }
};

enum class PhonTagKind { kUnchanged, kPronouncedAs, kNeutralized, kPause };

/// Boundary phonological tag: `P-x`, `Pa=b`, `Pa2b` or `PEND`.
struct PhonTag {
  PhonTagKind kind = PhonTagKind::kPause;
  std::string source;    // PronouncedAs / Neutralized
  std::string target;    // PronouncedAs / Neutralized; "X" marks deletion
  std::string boundary;  // Unchanged

  static PhonTag Unchanged(std::string boundary);
  static PhonTag PronouncedAs(std::string source, std::string target);
  static PhonTag Neutralized(std::string source, std::string target);
  static PhonTag Pause();

  bool IsDeletion() const { return target == kDeletion; }
  /// Phoneme that must sit at the tagged edge of the entry, if constrained.
  std::optional<std::string> EdgePhoneme() const;

  bool operator==(const PhonTag &other) const = default;

  static constexpr std::string_view kDeletion = "X";
  static constexpr std::string_view kPauseText = "PEND";
};

PhonTag ParsePhonTag(std::string_view text, const Inventory &inventory);
std::string RenderPhonTag(const PhonTag &tag);

/// Reserved morphological tag for the utterance boundary pseudo-entries.
inline constexpr std::string_view kBoundaryMorphTag = "SB";

/// Hierarchical morphological tag set.  A tag is valid when it is listed or
/// is a prefix (coarser category) of a listed tag.
class MorphTagSet {
 public:
  MorphTagSet() = default;
  static MorphTagSet Read(std::istream &in);
  static MorphTagSet Load(const std::string &path);

  bool contains(std::string_view tag) const;
  const std::map<std::string, std::string, std::less<>> &tags() const { return tags_; }

 private:
  std::map<std::string, std::string, std::less<>> tags_;  // tag -> description
  std::set<std::string, std::less<>> prefixes_;
};

/// Tag pattern with `?` (exactly one character) and a pattern-final `*`
/// (any suffix, possibly empty).
class TagPattern {
 public:
  /// Throws ParseError for empty text, whitespace, or a non-final `*`.
  explicit TagPattern(std::string text);

  bool Matches(std::string_view tag) const;
  bool HasWildcards() const;
  const std::string &text() const { return text_; }

  bool operator==(const TagPattern &other) const = default;

 private:
  std::string text_;
};

bool MatchPattern(const TagPattern &pattern, std::string_view tag);

/// Splits on runs of whitespace.
std::vector<std::string> SplitWhitespace(std::string_view text);
/// Splits on `sep` and trims whitespace from each field.
std::vector<std::string> SplitFields(std::string_view text, char sep);
std::string_view Trim(std::string_view text);
/// Removes a trailing `#` comment.
std::string_view StripComment(std::string_view line);

}  // namespace pairlm

#endif  // PAIRLM_TAGCORE_H_
