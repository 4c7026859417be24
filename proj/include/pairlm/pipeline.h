// End-to-end plumbing shared by the command-line tool and the acceptance
// checks: configuration, resource loading, golden checks and the
// accuracy-sweep experiment.

#ifndef PAIRLM_PIPELINE_H_
#define PAIRLM_PIPELINE_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pairlm/connectivity.h"
#include "pairlm/decoder.h"
#include "pairlm/eval.h"
#include "pairlm/lexicon.h"
#include "pairlm/phonorules.h"
#include "pairlm/simfront.h"
#include "pairlm/tagcore.h"

namespace pairlm {

/// `key = value` lines, `#` comments.  Relative paths are resolved against
/// the directory of the config file.
struct ExperimentConfig {
  std::string alphabet, codas, rules, tagset;
  std::string ortho, morph_matrix;
  std::string dictionary, phon_matrix;  // compiled artifacts
  std::string golden;
  std::string corpus;
  std::string confusion;  // empty: uniform confusions
  std::string report;

  std::vector<double> p_keep = {1.0, 0.9, 0.7, 0.5};
  double correct_mass = 0.6;
  std::uint64_t seed = 1;
  double beam = 6.0;
  double insertion_penalty = 0.0;
  bool lm_enabled = true;
  bool surface_only = false;
  std::size_t sentences = 100;
  std::size_t max_len = 8;
  unsigned jobs = 0;  // worker threads; 0 uses the hardware count.  Not a config key.
};

ExperimentConfig ParseConfig(std::istream &in, const std::string &base_dir = ".");
ExperimentConfig LoadConfig(const std::string &path);
void WriteConfig(std::ostream &out, const ExperimentConfig &config);

Inventory LoadInventory(const std::string &alphabet_path, const std::string &codas_path);

/// Everything a decode needs, loaded once.
struct Resources {
  Inventory inventory;
  std::unique_ptr<RuleEngine> engine;
  std::optional<MorphTagSet> tagset;
  std::vector<OrthoMorpheme> ortho;
  ConnectivityMatrix morph{MatrixKind::kMorphological};
  ConnectivityMatrix phon{MatrixKind::kPhonological};
  Lexicon lexicon;
  LexiconTrie trie;
  std::unique_ptr<PairwiseLicense> license;

  /// Rebuilds the trie and pairwise table after the lexicon or matrices change.
  void Index();
};

/// Loads inventory, rules, tag set, ortho lexicon and morph matrix; the
/// dictionary and phonological matrix come from the compiled files when
/// `compiled` is true, otherwise from a fresh compilation.
Resources LoadResources(const ExperimentConfig &config, bool compiled = true);

/// One worked example: morpheme tokens and their expected surface phonemes.
struct GoldenCase {
  std::vector<std::string> tokens;
  std::vector<std::string> expected;
  int line = 0;
};

struct GoldenResult {
  GoldenCase golden;
  std::vector<std::string> actual;
  bool ok() const { return actual == golden.expected; }
};

/// Line format: `tok/tag tok/tag ... | ph ph ph`.
std::vector<GoldenCase> ReadGolden(std::istream &in);
std::vector<GoldenCase> LoadGolden(const std::string &path);
std::vector<GoldenResult> CheckGolden(const RuleEngine &engine, std::span<const OrthoMorpheme> ortho,
                                      const std::vector<GoldenCase> &cases);

/// Decodes one lattice.  With the LM the search is LM-integrated; without
/// it the graph keeps every span-adjacent edge and is only pruned.
MorphemeGraph DecodeUtterance(const Resources &res, const PhonemeLattice &lattice, double beam,
                              bool use_lm);

struct ExperimentRow {
  double p_keep = 0.0;
  std::size_t slots = 0;
  double realized_accuracy = 0.0;
  AlignmentCounts graph_lm, graph_no_lm, best_lm;
  std::size_t nodes_lm = 0, nodes_no_lm = 0;
  std::size_t empty_lm = 0;  // utterances whose LM graph came out empty
};

std::vector<ExperimentRow> RunExperiment(const Resources &res, const std::vector<Sentence> &corpus,
                                         const ExperimentConfig &config);
void WriteExperimentReport(std::ostream &out, const ExperimentConfig &config,
                           const std::vector<ExperimentRow> &rows);

}  // namespace pairlm

#endif  // PAIRLM_PIPELINE_H_
