// Shared fixtures: paths into the shipped data and a cached demo setup.

#ifndef PAIRLM_TESTS_SUPPORT_H_
#define PAIRLM_TESTS_SUPPORT_H_

#include <algorithm>
#include <random>
#include <sstream>
#include <string>

#include "pairlm/pipeline.h"

namespace pairlm::testing {

inline std::string DataPath(const std::string &rel) { return std::string(PAIRLM_DATA_DIR) + "/" + rel; }

inline const Inventory &DefaultInventory() {
  static const Inventory inv = LoadInventory(DataPath("alphabet.txt"), DataPath("codas.txt"));
  return inv;
}

inline const RuleEngine &DefaultEngine() {
  static const RuleEngine engine(DefaultInventory(),
                                 RuleTable::Load(DataPath("rules.txt"), DefaultInventory()));
  return engine;
}

inline ExperimentConfig DemoConfig() { return LoadConfig(DataPath("demo/experiment.conf")); }

/// Demo resources from a fresh compilation of the orthographic lexicon.
inline const Resources &Demo() {
  static const Resources res = LoadResources(DemoConfig(), false);
  return res;
}

inline const OrthoMorpheme &DemoMorpheme(const std::string &token) {
  for (const auto &m : Demo().ortho)
    if (m.Token() == token) return m;
  throw ParseError("no demo morpheme " + token);
}

inline std::vector<std::string> Phonemes(const std::string &text) { return SplitWhitespace(text); }

/// Entries of a lexicon with the given surface text.
inline std::vector<DictEntry> EntriesFor(const Lexicon &lex, const std::string &surface) {
  std::vector<DictEntry> out;
  for (const auto &e : lex.entries())
    if (e.surface == surface) out.push_back(e);
  return out;
}

inline DictEntry MakeEntry(const std::string &phonemes, const std::string &surface, const std::string &lm,
                           const std::string &rm, const std::string &lp, const std::string &rp) {
  std::istringstream in(phonemes + " | " + surface + " | " + lm + " | " + rm + " | " + lp + " | " + rp);
  return ParseDictionary(in, DefaultInventory()).lexicon.entry(0);
}


/// Random DAG over `slots` slots with nodes drawn from `lex`.  Scores are
/// small integers half of the time so that exact ties occur.  Edges join
/// span-adjacent nodes with some chance; the result is not pruned.
inline MorphemeGraph RandomGraph(std::mt19937_64 &rng, const Lexicon &lex, std::size_t slots) {
  MorphemeGraph g;
  g.num_slots = slots;
  bool integral = rng() % 2;
  for (std::size_t s = 0; s < slots; ++s)
    for (std::size_t t = s + 1; t <= std::min(slots, s + 3); ++t)
      for (std::size_t k = 0, n = rng() % 3; k < n; ++k) {
        double score = integral ? -static_cast<double>(rng() % 4)
                                : -std::uniform_real_distribution<double>(0.0, 5.0)(rng);
        g.nodes.push_back({static_cast<std::int32_t>(rng() % lex.size()), s, t, score});
      }
  std::sort(g.nodes.begin(), g.nodes.end(), [](const MorphNode &a, const MorphNode &b) {
    return std::tie(a.start, a.end, a.entry) < std::tie(b.start, b.end, b.entry);
  });
  g.nodes.erase(std::unique(g.nodes.begin(), g.nodes.end(),
                            [](const MorphNode &a, const MorphNode &b) {
                              return a.start == b.start && a.end == b.end && a.entry == b.entry;
                            }),
                g.nodes.end());
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    auto n = static_cast<std::int32_t>(i);
    if (g.nodes[i].start == 0 && coin(rng) < 0.9) g.edges.emplace_back(MorphemeGraph::kBos, n);
    for (std::size_t j = 0; j < i; ++j)
      if (g.nodes[j].end == g.nodes[i].start && coin(rng) < 0.7)
        g.edges.emplace_back(static_cast<std::int32_t>(j), n);
    if (g.nodes[i].end == slots && coin(rng) < 0.9) g.edges.emplace_back(n, MorphemeGraph::kEos);
  }
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

}  // namespace pairlm::testing

#endif  // PAIRLM_TESTS_SUPPORT_H_
