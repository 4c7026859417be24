// Slot-synchronous lexical decoding of phoneme posterior lattices into
// morpheme graphs, pairwise-LM filtering and 1-best extraction.

#ifndef PAIRLM_DECODER_H_
#define PAIRLM_DECODER_H_

#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "pairlm/connectivity.h"
#include "pairlm/lexicon.h"
#include "pairlm/tagcore.h"

namespace pairlm {

inline constexpr double kProbFloor = 1e-10;
inline constexpr double kInfiniteBeam = std::numeric_limits<double>::infinity();

/// One posterior vector per phoneme slot, in alphabet order.
struct PhonemeLattice {
  std::string id;
  std::vector<std::vector<double>> slots;

  std::size_t size() const { return slots.size(); }
};

/// Throws ParseError unless every slot has `alphabet_size` non-negative
/// values summing to 1 within 1e-6.
void ValidateLattice(const PhonemeLattice &lattice, std::size_t alphabet_size);

/// Header line: the alphabet symbols in column order.  Then, per utterance,
/// `== id` followed by one line of probabilities per slot.
std::vector<PhonemeLattice> ReadLattices(std::istream &in, const PhonemeAlphabet &alphabet);
void WriteLattices(std::ostream &out, const std::vector<PhonemeLattice> &lattices,
                   const PhonemeAlphabet &alphabet);

struct MorphNode {
  std::int32_t entry = 0;  // index into the lexicon
  std::size_t start = 0;   // half-open slot span
  std::size_t end = 0;
  double score = 0.0;      // summed log posteriors over the span

  bool operator==(const MorphNode &) const = default;
};

/// Nodes are sorted by (start, end, entry).  Edges are pairs of node
/// indices, with kBos and kEos standing for the utterance boundaries.
struct MorphemeGraph {
  static constexpr std::int32_t kBos = -1;
  static constexpr std::int32_t kEos = -2;

  std::string id;
  std::size_t num_slots = 0;
  std::vector<MorphNode> nodes;
  std::vector<std::pair<std::int32_t, std::int32_t>> edges;  // sorted, unique
  std::string empty_reason;  // set when no BOS -> EOS path survives

  bool empty() const { return nodes.empty(); }
  /// Entry ids of an edge end, kBoundary for BOS/EOS.
  std::int32_t EntryOf(std::int32_t node) const {
    return node < 0 ? PairwiseLicense::kBoundary : nodes[node].entry;
  }
};

struct DecodeOptions {
  double beam = kInfiniteBeam;
  /// When set, the search itself only extends licensed pairs: node scores
  /// and the beam reference use LM-consistent paths, and the graph keeps
  /// only licensed edges.  Without it every span-adjacent pair is an edge.
  const PairwiseLicense *license = nullptr;
};

/// Emits node (entry, s, t) when its best path score from slot 0 is within
/// `beam` of the best score of any path reaching t.  Scores are exact, so a
/// wider beam only adds nodes.
/// Throws ParseError when the lattice width differs from the alphabet size.
MorphemeGraph DecodeLattice(const PhonemeLattice &lattice, const Lexicon &lexicon,
                            const LexiconTrie &trie, const PhonemeAlphabet &alphabet,
                            const DecodeOptions &options = {});

/// Keeps the edges whose facing entries are connectable, then prunes nodes
/// off every BOS -> EOS path.  Idempotent.
MorphemeGraph ApplyLanguageModel(const MorphemeGraph &graph, const PairwiseLicense &license);

/// Drops nodes and edges not on any BOS -> EOS path.
MorphemeGraph PruneUnreachable(MorphemeGraph graph);

struct ScoredPath {
  std::vector<std::int32_t> nodes;  // indices into graph.nodes
  double score = 0.0;               // acoustic sum + penalty * node count
};

/// Ordering key used to break exact score ties between paths.
std::string NodeKey(const DictEntry &entry);

/// Best BOS -> EOS path.  Ties within 1e-9 go to fewer nodes, then to the
/// lexicographically smaller sequence of NodeKey()s.  Throws on an empty
/// graph.
ScoredPath BestPath(const MorphemeGraph &graph, const Lexicon &lexicon, double insertion_penalty = 0.0);

/// `== id slots`, then `N index start end score | entry` and `E from to`
/// lines (BOS/EOS spelled out).
void WriteGraph(std::ostream &out, const MorphemeGraph &graph, const Lexicon &lexicon);
/// Entries are resolved against `lexicon` by their dictionary line.
std::vector<MorphemeGraph> ReadGraphs(std::istream &in, const Lexicon &lexicon, const Inventory &inventory);

}  // namespace pairlm

#endif  // PAIRLM_DECODER_H_
