// Forward pronunciation rules over syllabified Yale romanization, and the
// compiler that turns an orthographic lexicon into tagged surface entries
// plus the phonological connectivity matrix licensing them.

#ifndef PAIRLM_PHONORULES_H_
#define PAIRLM_PHONORULES_H_

#include <istream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pairlm/connectivity.h"
#include "pairlm/lexicon.h"
#include "pairlm/tagcore.h"

namespace pairlm {

// Lexical flags understood by the rule engine.
inline constexpr std::string_view kFlagVerbStem = "vstem";  // tenses following endings
inline constexpr std::string_view kFlagLpToP = "lp-p";      // coda lp simplifies to p
inline constexpr std::string_view kFlagDesyl = "desyl";     // stem-final i contracts with e

using Flags = std::set<std::string, std::less<>>;

/// Orthographic syllable.  Onset and coda may be empty; the coda is a single
/// token even for clusters.
struct Syllable {
  std::string onset;
  std::string nucleus;
  std::string coda;

  bool operator==(const Syllable &) const = default;
};

struct OrthoMorpheme {
  std::string surface;  // syllables joined with '-'
  std::string tag;
  Flags flags;
  std::vector<Syllable> syllables;
  std::string gloss;

  bool HasFlag(std::string_view flag) const { return flags.count(flag) > 0; }
  /// `surface/tag`, the unit of morpheme comparison.
  std::string Token() const { return surface + "/" + tag; }
};

/// Rule contexts loaded from the rule-table file.
struct RuleTable {
  struct Merge {
    std::string rest;      // what stays in the coda ("X" when nothing)
    std::string aspirate;  // the merged onset
  };

  // coda h (nh, lh) + plain onset -> aspirated onset
  std::map<std::string, std::string, std::less<>> h_contraction_coda;   // coda -> rest
  std::map<std::string, std::string, std::less<>> h_contraction_onset;  // onset -> aspirate
  // obstruent coda + onset h -> aspirated onset
  std::map<std::string, Merge, std::less<>> h_merge_coda;
  std::set<std::string, std::less<>> h_merge_onset;

  std::set<std::string, std::less<>> glottal_trigger;
  std::map<std::string, std::string, std::less<>> tense;
  std::set<std::string, std::less<>> stem_glottal_trigger;
  std::set<std::string, std::less<>> stem_glottal_onsets;
  std::vector<TagPattern> ending_tags;

  std::set<std::string, std::less<>> nasal_onsets;
  std::map<std::string, std::string, std::less<>> nasal_map;
  std::set<std::string, std::less<>> l_to_n_after;
  std::string lateral_from = "n", lateral_to = "l";

  std::set<std::string, std::less<>> desyl_onsets;
  std::string desyl_stem_vowel = "i", desyl_ending_vowel = "e", desyl_result = "e";
  std::string yey_from = "yey", yey_to = "ey";
  std::set<std::string, std::less<>> yey_keep_onsets;

  static RuleTable Read(std::istream &in, const Inventory &inventory);
  static RuleTable Load(const std::string &path, const Inventory &inventory);

  bool IsEnding(std::string_view morph_tag) const;
};

/// Surface result at one syllable junction.  Only the final form is kept;
/// `rules_applied` is a diagnostic trace.
struct JunctionRealization {
  std::vector<std::string> left_coda;    // surface phonemes of the left coda
  std::string left_nucleus;              // left nucleus after realization
  std::vector<std::string> right_onset;  // surface onset of the right syllable
  bool right_absorbed = false;           // right syllable merged into the left
  PhonTag left_tag;                      // right edge of the left morpheme
  PhonTag right_tag;                     // left edge of the right morpheme
  std::vector<std::string> rules_applied;
};

struct PauseRealization {
  std::vector<std::string> phonemes;
  PhonTag right_tag;
};

struct Composition {
  std::vector<std::string> phonemes;
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // half-open, per morpheme
};

class RuleEngine {
 public:
  RuleEngine(Inventory inventory, RuleTable rules);

  const Inventory &inventory() const { return inventory_; }
  const RuleTable &rules() const { return rules_; }

  /// Splits `a-b-c` into syllables; throws ParseError when a chunk does not
  /// decompose into onset + vowel + legal coda.
  std::vector<Syllable> Syllabify(std::string_view surface) const;
  OrthoMorpheme MakeMorpheme(std::string surface, std::string tag, Flags flags = {},
                             std::string gloss = {}) const;

  std::string NeutralizeCoda(std::string_view coda, const Flags &flags) const;

  /// Junction between the last syllable of `a` and the first of `b`.
  JunctionRealization RealizeJunction(const OrthoMorpheme &a, const OrthoMorpheme &b) const;
  /// Syllable-level junction.  `morpheme_boundary` enables the lexically
  /// conditioned rules (stem tensing, desyllabification).
  JunctionRealization RealizeBoundary(const Syllable &left, const Flags &left_flags,
                                      const Syllable &right, bool right_is_ending,
                                      bool morpheme_boundary) const;

  PauseRealization RealizeBeforePause(const OrthoMorpheme &a) const;

  /// Contracted surface variants of a morpheme sequence, including the
  /// optional yey -> ey readings.
  std::vector<std::vector<std::string>> Desyllabify(std::span<const OrthoMorpheme> sequence) const;

  /// Realizes every junction; the last morpheme is realized before a pause.
  /// A morpheme absorbed by desyllabification gets an empty span.
  Composition SurfaceCompose(std::span<const OrthoMorpheme> sentence) const;

 private:
  PhonTag LeftEdgeTag(const Syllable &left, const Flags &flags, const JunctionRealization &j,
                      bool changed_beyond_neutral) const;

  Inventory inventory_;
  RuleTable rules_;
  std::vector<std::string> consonants_, vowels_;  // longest first
};

/// Orthographic lexicon line: `surface | morph_tag | flags [| gloss]`, flags
/// space- or comma-separated.
std::vector<OrthoMorpheme> ParseOrthoLexicon(std::istream &in, const RuleEngine &engine,
                                             const MorphTagSet *tagset = nullptr);
std::vector<OrthoMorpheme> LoadOrthoLexicon(const std::string &path, const RuleEngine &engine,
                                            const MorphTagSet *tagset = nullptr);

struct CompiledLexicon {
  Lexicon lexicon;
  ConnectivityMatrix phon_matrix{MatrixKind::kPhonological};
  std::size_t fused_units = 0;
};

/// Emits every boundary realization of every morpheme reachable in a pause
/// or junction context, and a matrix licensing exactly the realized pairs
/// (plus PEND for every pause-final and pause-initial form).  With a
/// morphological matrix, only morphologically licensed junctions count as
/// contexts.  Deterministic and independent of input order.
CompiledLexicon CompileLexicon(const RuleEngine &engine, std::span<const OrthoMorpheme> ortho,
                               const ConnectivityMatrix *morph = nullptr);

/// Licensed entry pairs whose junction is not a fixpoint of the
/// context-driven rules (lexically conditioned rules are not re-applied).
std::vector<std::string> FinalFormViolations(const RuleEngine &engine, const Lexicon &lexicon,
                                             const ConnectivityMatrix &phon);

}  // namespace pairlm

#endif  // PAIRLM_PHONORULES_H_
