// Edit-distance scoring of morpheme hypotheses, for 1-best sequences and for
// whole morpheme graphs.

#ifndef PAIRLM_EVAL_H_
#define PAIRLM_EVAL_H_

#include <ostream>
#include <string>
#include <vector>

#include "pairlm/decoder.h"
#include "pairlm/lexicon.h"

namespace pairlm {

struct AlignmentCounts {
  std::size_t correct = 0;
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t ref_len = 0;

  std::size_t Distance() const { return substitutions + deletions + insertions; }
  AlignmentCounts &operator+=(const AlignmentCounts &o);
  bool operator==(const AlignmentCounts &) const = default;
};

/// Unit-cost edit distance.  Among minimal alignments: most correct, then
/// fewest insertions, then fewest substitutions.
AlignmentCounts Align(const std::vector<std::string> &hyp, const std::vector<std::string> &ref);

/// `surface/tag` -> `surface`.
std::string SurfaceOnly(const std::string &token);

/// Morpheme tokens of each node, optionally stripped of tags.
std::vector<std::vector<std::string>> NodeTokens(const MorphemeGraph &graph, const Lexicon &lexicon,
                                                 bool surface_only = false);

/// Best Align() over every BOS -> EOS path of the graph, by dynamic
/// programming over (token, reference position).  An empty graph scores as
/// all deletions.
AlignmentCounts OracleAlign(const MorphemeGraph &graph, const Lexicon &lexicon,
                            const std::vector<std::string> &ref, bool surface_only = false);

struct Metrics {
  double pct_correct = 0.0;  // C / N
  double accuracy = 0.0;     // (C - I) / N
};

/// Throws ParseError when ref_len is zero.
Metrics ComputeMetrics(const AlignmentCounts &counts);

struct UtteranceScore {
  std::string id;
  AlignmentCounts counts;
};

/// Per-utterance table, pooled totals, macro average and a
/// `summary utts=... ref_len=... C=... S=... D=... I=... pct_correct=...
/// accuracy=...` line.
void WriteReport(std::ostream &out, const std::string &title, const std::vector<UtteranceScore> &rows);

}  // namespace pairlm

#endif  // PAIRLM_EVAL_H_
