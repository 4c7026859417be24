// Binary connectivity matrices and the pairwise adjacency check built on
// them.

#ifndef PAIRLM_CONNECTIVITY_H_
#define PAIRLM_CONNECTIVITY_H_

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "pairlm/lexicon.h"
#include "pairlm/tagcore.h"

namespace pairlm {

enum class MatrixKind { kPhonological, kMorphological };

/// One allow-list line: any left pattern may precede any right pattern.
struct MatrixEntry {
  std::vector<TagPattern> left;
  std::vector<TagPattern> right;
};

/// Allow-list of adjacent tag pairs.  Anything not matched is forbidden.
class ConnectivityMatrix {
 public:
  explicit ConnectivityMatrix(MatrixKind kind = MatrixKind::kPhonological) : kind_(kind) {}

  /// Throws ParseError if either side is empty.
  void Add(MatrixEntry entry);

  bool Allows(std::string_view left_tag, std::string_view right_tag) const;

  MatrixKind kind() const { return kind_; }
  const std::vector<MatrixEntry> &entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  MatrixKind kind_;
  std::vector<MatrixEntry> entries_;
};

/// Line format: `leftpat[,leftpat...]  rightpat[,rightpat...]`, `#` comments.
/// With an inventory, wildcard-free phonological patterns must parse as tags
/// and every phonological pattern must start with 'P'.  With a tag set,
/// wildcard-free morphological patterns must be known tags (or SB).
ConnectivityMatrix ParseMatrix(std::istream &in, MatrixKind kind,
                               const Inventory *inventory = nullptr,
                               const MorphTagSet *tagset = nullptr);
ConnectivityMatrix LoadMatrix(const std::string &path, MatrixKind kind,
                              const Inventory *inventory = nullptr,
                              const MorphTagSet *tagset = nullptr);
void WriteMatrix(std::ostream &out, const ConnectivityMatrix &matrix);

bool MatrixAllows(const ConnectivityMatrix &matrix, std::string_view left_tag,
                  std::string_view right_tag);

/// Utterance boundary pseudo-entry: phonological tag PEND, morph tag SB.
const DictEntry &BoundaryEntry();

/// The pairwise language model: both matrices must license the pair.
bool Connectable(const DictEntry &a, const DictEntry &b, const ConnectivityMatrix &phon,
                 const ConnectivityMatrix &morph);

/// Connectable() tabulated over the facing-tag classes of one lexicon.
/// Entry ids index the lexicon; kBoundary stands for BOS (left) or EOS
/// (right).
class PairwiseLicense {
 public:
  static constexpr std::int32_t kBoundary = -1;

  PairwiseLicense(const Lexicon &lexicon, const ConnectivityMatrix &phon,
                  const ConnectivityMatrix &morph);

  bool Allows(std::int32_t left_entry, std::int32_t right_entry) const {
    return table_[RightClass(left_entry) * num_left_ + LeftClass(right_entry)] != 0;
  }
  /// Class of the entry's right edge (used when it is on the left of a pair).
  std::size_t RightClass(std::int32_t entry) const {
    return entry == kBoundary ? boundary_right_ : right_class_[entry];
  }
  std::size_t LeftClass(std::int32_t entry) const {
    return entry == kBoundary ? boundary_left_ : left_class_[entry];
  }
  std::size_t num_right_classes() const { return num_right_; }
  std::size_t num_left_classes() const { return num_left_; }
  bool ClassAllows(std::size_t right_class, std::size_t left_class) const {
    return table_[right_class * num_left_ + left_class] != 0;
  }

 private:
  std::vector<std::size_t> right_class_, left_class_;
  std::size_t boundary_right_ = 0, boundary_left_ = 0;
  std::size_t num_right_ = 0, num_left_ = 0;
  std::vector<std::uint8_t> table_;
};

struct LintReport {
  /// Neutralized right tags with no (tag, PEND) permission.
  std::vector<std::string> missing_pause;
  /// Patterns matching no tag that can occur on their side: left patterns
  /// are checked against entries' right tags, right patterns against left
  /// tags, PEND counting on both sides.
  std::vector<std::string> unreachable_patterns;
  bool ok() const { return missing_pause.empty() && unreachable_patterns.empty(); }
};

/// PEND closure and unreachable-pattern check of a phonological matrix
/// against a dictionary.
LintReport LintPhonMatrix(const Lexicon &lexicon, const ConnectivityMatrix &phon);

}  // namespace pairlm

#endif  // PAIRLM_CONNECTIVITY_H_
