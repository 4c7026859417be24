// Simulated recognizer front end: reference sentences to surface phonemes to
// posterior lattices at a controlled phoneme accuracy.

#ifndef PAIRLM_SIMFRONT_H_
#define PAIRLM_SIMFRONT_H_

#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pairlm/connectivity.h"
#include "pairlm/decoder.h"
#include "pairlm/phonorules.h"
#include "pairlm/tagcore.h"

namespace pairlm {

/// Seed of utterance `index` under a run seed.
std::uint64_t SubSeed(std::uint64_t seed, std::uint64_t index);

/// Uniform double in [0, 1) from the top 53 bits.
double Uniform01(std::mt19937_64 &rng);
/// Uniform integer in [0, n) by rejection; n > 0.
std::size_t UniformIndex(std::mt19937_64 &rng, std::size_t n);

struct ConfusionModel {
  enum class Mode { kUniform, kMatrix };

  Mode mode = Mode::kUniform;
  /// matrix[i][j]: chance that a swapped slot of true phoneme i peaks at j.
  /// Zero diagonal, rows sum to 1.
  std::vector<std::vector<double>> matrix;
  double correct_mass = 0.9;  // mass on the peak phoneme
  double p_keep = 1.0;        // chance the peak stays on the true phoneme

  /// Throws ParseError when the model is malformed for this alphabet.
  void Validate(std::size_t alphabet_size) const;
};

/// Sparse confusion file: `from to weight` lines; each row is normalized
/// and rows left empty fall back to uniform.
ConfusionModel ReadConfusionMatrix(std::istream &in, const PhonemeAlphabet &alphabet);
ConfusionModel LoadConfusionMatrix(const std::string &path, const PhonemeAlphabet &alphabet);

struct SimulatedLattice {
  PhonemeLattice lattice;
  std::size_t correct_slots = 0;  // slots whose argmax is the true phoneme
  double realized_accuracy = 1.0;
};

/// Index of the largest value, lowest index on ties.
std::size_t ArgMax(const std::vector<double> &v);

SimulatedLattice MakeLattice(std::span<const std::string> surface, const PhonemeAlphabet &alphabet,
                             const ConfusionModel &model, std::uint64_t seed, std::string id = "");

using Sentence = std::vector<OrthoMorpheme>;

struct CorpusOptions {
  std::size_t max_len = 8;
  double stop_probability = 0.35;  // chance to end once SB may follow
  int max_retries = 1000;
};

/// Random walks from SB over morphologically licensed successors.  Throws
/// ParseError when a sentence cannot be completed within the retry budget.
std::vector<Sentence> GenCorpus(std::span<const OrthoMorpheme> lexicon, const ConnectivityMatrix &morph,
                                std::size_t n, std::uint64_t seed, const CorpusOptions &options = {});

/// `surface/tag` tokens, one sentence per line.
void WriteCorpus(std::ostream &out, const std::vector<Sentence> &corpus);
std::vector<std::vector<std::string>> ReadCorpusTokens(std::istream &in);
/// Resolves tokens against the orthographic lexicon; throws on unknown ones.
std::vector<Sentence> ResolveCorpus(const std::vector<std::vector<std::string>> &tokens,
                                    std::span<const OrthoMorpheme> lexicon);

std::vector<std::string> SentenceTokens(const Sentence &sentence);

}  // namespace pairlm

#endif  // PAIRLM_SIMFRONT_H_
