#include "pairlm/decoder.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <unordered_map>

namespace pairlm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string FormatProb(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", p);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Lattices

void ValidateLattice(const PhonemeLattice &lattice, std::size_t alphabet_size) {
  for (std::size_t t = 0; t < lattice.slots.size(); ++t) {
    const auto &v = lattice.slots[t];
    const std::string where = "lattice '" + lattice.id + "' slot " + std::to_string(t);
    if (v.size() != alphabet_size)
      throw ParseError(where + " has " + std::to_string(v.size()) + " values, alphabet has " +
                       std::to_string(alphabet_size));
    double sum = 0.0;
    for (double p : v) {
      if (!(p >= 0.0)) throw ParseError(where + " has a negative or NaN probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw ParseError(where + " sums to " + FormatProb(sum));
  }
}

std::vector<PhonemeLattice> ReadLattices(std::istream &in, const PhonemeAlphabet &alphabet) {
  std::vector<PhonemeLattice> out;
  std::vector<std::size_t> column;  // file column -> alphabet index
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = Trim(line);
    if (body.empty() || body[0] == '#') continue;
    if (column.empty()) {
      auto symbols = SplitWhitespace(body);
      if (symbols.size() != alphabet.size())
        throw ParseError("lattice header lists " + std::to_string(symbols.size()) +
                             " symbols, alphabet has " + std::to_string(alphabet.size()),
                         lineno);
      std::vector<bool> seen(alphabet.size());
      for (const auto &s : symbols) {
        auto idx = alphabet.index(s);
        if (!idx || seen[*idx]) throw ParseError("bad lattice header symbol '" + s + "'", lineno);
        seen[*idx] = true;
        column.push_back(*idx);
      }
      continue;
    }
    if (body.rfind("==", 0) == 0) {
      out.push_back({std::string(Trim(body.substr(2))), {}});
      continue;
    }
    if (out.empty()) throw ParseError("probabilities before the first '== id' line", lineno);
    auto fields = SplitWhitespace(body);
    if (fields.size() != column.size())
      throw ParseError("expected " + std::to_string(column.size()) + " probabilities", lineno);
    std::vector<double> slot(alphabet.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      try {
        std::size_t used = 0;
        slot[column[i]] = std::stod(fields[i], &used);
        if (used != fields[i].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception &) {
        throw ParseError("bad probability '" + fields[i] + "'", lineno);
      }
    }
    out.back().slots.push_back(std::move(slot));
  }
  for (const auto &lat : out) ValidateLattice(lat, alphabet.size());
  return out;
}

void WriteLattices(std::ostream &out, const std::vector<PhonemeLattice> &lattices,
                   const PhonemeAlphabet &alphabet) {
  for (std::size_t i = 0; i < alphabet.size(); ++i) out << (i ? " " : "") << alphabet.symbol(i);
  out << '\n';
  for (const auto &lat : lattices) {
    out << "== " << lat.id << '\n';
    for (const auto &slot : lat.slots) {
      for (std::size_t i = 0; i < slot.size(); ++i) out << (i ? " " : "") << FormatProb(slot[i]);
      out << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Decoding

namespace {

struct Candidate {
  MorphNode node;
  bool operator<(const Candidate &o) const {
    return std::tie(node.start, node.end, node.entry) < std::tie(o.node.start, o.node.end, o.node.entry);
  }
};

void SortUnique(std::vector<std::pair<std::int32_t, std::int32_t>> &edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

}  // namespace

MorphemeGraph DecodeLattice(const PhonemeLattice &lattice, const Lexicon &lexicon,
                            const LexiconTrie &trie, const PhonemeAlphabet &alphabet,
                            const DecodeOptions &options) {
  ValidateLattice(lattice, alphabet.size());
  if (!(options.beam >= 0.0)) throw ParseError("beam must be non-negative");
  if (trie.num_nodes() == 0 && !lexicon.empty()) throw ParseError("lexicon trie has not been built");
  const std::size_t T = lattice.size();
  const PairwiseLicense *lic = options.license;

  std::vector<std::vector<double>> logp(T);
  for (std::size_t t = 0; t < T; ++t)
    for (double p : lattice.slots[t]) logp[t].push_back(std::log(std::max(p, kProbFloor)));

  // best_out[t][c]: best score of a path ending at t in right class c.  In
  // the plain search there is a single class.
  const std::size_t num_right = lic ? lic->num_right_classes() : 1;
  const std::size_t num_left = lic ? lic->num_left_classes() : 1;
  std::vector<std::vector<double>> best_out(T + 1, std::vector<double>(num_right, kNegInf));
  best_out[0][lic ? lic->RightClass(PairwiseLicense::kBoundary) : 0] = 0.0;
  std::vector<double> reach(T + 1, kNegInf);  // beam reference per end slot
  std::vector<Candidate> cands;

  struct Frame {
    LexiconTrie::NodeId node;
    std::size_t slot;
    double score;
  };
  for (std::size_t s = 0; s < T; ++s) {
    // Best licensed predecessor score for each left class.
    std::vector<double> best_in(num_left, kNegInf);
    for (std::size_t lc = 0; lc < num_left; ++lc)
      for (std::size_t rc = 0; rc < num_right; ++rc)
        if (!lic || lic->ClassAllows(rc, lc)) best_in[lc] = std::max(best_in[lc], best_out[s][rc]);
    if (std::all_of(best_in.begin(), best_in.end(), [](double v) { return v == kNegInf; })) continue;

    std::vector<Frame> stack = {{LexiconTrie::kRoot, s, 0.0}};
    while (!stack.empty()) {
      auto f = stack.back();
      stack.pop_back();
      if (f.slot > s) {
        for (auto id : trie.Entries(f.node)) {
          auto entry = static_cast<std::int32_t>(id);
          double w = f.score + best_in[lic ? lic->LeftClass(entry) : 0];
          if (w == kNegInf) continue;
          cands.push_back({{entry, s, f.slot, f.score}});
          auto &slot_best = best_out[f.slot][lic ? lic->RightClass(entry) : 0];
          slot_best = std::max(slot_best, w);
          if (f.slot < T || !lic || lic->Allows(entry, PairwiseLicense::kBoundary))
            reach[f.slot] = std::max(reach[f.slot], w);
        }
      }
      if (f.slot == T) continue;
      for (const auto &[phoneme, child] : trie.Children(f.node))
        stack.push_back({child, f.slot + 1, f.score + logp[f.slot][phoneme]});
    }
  }

  // Path score through a candidate: its acoustic score plus the best
  // licensed predecessor, recomputed now that all arrivals are final.
  MorphemeGraph g;
  g.id = lattice.id;
  g.num_slots = T;
  std::sort(cands.begin(), cands.end());
  for (const auto &c : cands) {
    double in = kNegInf;
    for (std::size_t rc = 0; rc < num_right; ++rc)
      if (!lic || lic->ClassAllows(rc, lic->LeftClass(c.node.entry)))
        in = std::max(in, best_out[c.node.start][rc]);
    if (in + c.node.score >= reach[c.node.end] - options.beam) g.nodes.push_back(c.node);
  }

  std::vector<std::vector<std::int32_t>> ending(T + 1);
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    ending[g.nodes[i].end].push_back(static_cast<std::int32_t>(i));
  auto licensed = [&](std::int32_t a, std::int32_t b) {
    return !lic || lic->Allows(g.EntryOf(a), g.EntryOf(b));
  };
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    auto n = static_cast<std::int32_t>(i);
    const auto &node = g.nodes[i];
    if (node.start == 0 && licensed(MorphemeGraph::kBos, n)) g.edges.emplace_back(MorphemeGraph::kBos, n);
    for (auto p : ending[node.start])
      if (licensed(p, n)) g.edges.emplace_back(p, n);
    if (node.end == T && licensed(n, MorphemeGraph::kEos)) g.edges.emplace_back(n, MorphemeGraph::kEos);
  }
  SortUnique(g.edges);
  if (lic) return PruneUnreachable(std::move(g));
  return g;
}

MorphemeGraph PruneUnreachable(MorphemeGraph g) {
  const std::size_t n = g.nodes.size();
  std::vector<std::vector<std::int32_t>> preds(n), succs(n);
  std::vector<char> fwd(n, 0), bwd(n, 0);
  for (auto [a, b] : g.edges) {
    if (a == MorphemeGraph::kBos && b >= 0) fwd[b] = 1;
    if (b == MorphemeGraph::kEos && a >= 0) bwd[a] = 1;
    if (a >= 0 && b >= 0) {
      preds[b].push_back(a);
      succs[a].push_back(b);
    }
  }
  // Nodes are ordered by start slot, and every edge goes forward in time.
  for (std::size_t i = 0; i < n; ++i)
    for (auto p : preds[i]) fwd[i] |= fwd[p];
  for (std::size_t i = n; i-- > 0;)
    for (auto s : succs[i]) bwd[i] |= bwd[s];

  std::vector<std::int32_t> remap(n, -1);
  std::vector<MorphNode> kept;
  for (std::size_t i = 0; i < n; ++i) {
    if (fwd[i] && bwd[i]) {
      remap[i] = static_cast<std::int32_t>(kept.size());
      kept.push_back(g.nodes[i]);
    }
  }
  auto map = [&](std::int32_t x) { return x < 0 ? x : remap[x]; };
  std::vector<std::pair<std::int32_t, std::int32_t>> edges;
  for (auto [a, b] : g.edges) {
    auto ma = map(a), mb = map(b);
    if ((a >= 0 && ma < 0) || (b >= 0 && mb < 0)) continue;
    if (a < 0 && b < 0) continue;
    edges.emplace_back(ma, mb);
  }
  g.nodes = std::move(kept);
  g.edges = std::move(edges);
  SortUnique(g.edges);
  if (g.nodes.empty()) {
    g.edges.clear();
    g.empty_reason = "no BOS-EOS path survives";
  }
  return g;
}

MorphemeGraph ApplyLanguageModel(const MorphemeGraph &graph, const PairwiseLicense &license) {
  MorphemeGraph g = graph;
  g.edges.clear();
  for (auto [a, b] : graph.edges)
    if (license.Allows(graph.EntryOf(a), graph.EntryOf(b))) g.edges.emplace_back(a, b);
  return PruneUnreachable(std::move(g));
}

// ---------------------------------------------------------------------------
// 1-best

std::string NodeKey(const DictEntry &entry) { return entry.surface + '\x1f' + FormatEntry(entry); }

namespace {

bool NearlyEqual(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

ScoredPath BestPath(const MorphemeGraph &graph, const Lexicon &lexicon, double insertion_penalty) {
  if (graph.empty()) throw ParseError("best path of an empty graph" +
                                      (graph.empty_reason.empty() ? "" : ": " + graph.empty_reason));
  const std::size_t n = graph.nodes.size();
  std::vector<std::string> keys(n);
  for (std::size_t i = 0; i < n; ++i) keys[i] = NodeKey(lexicon.entry(graph.nodes[i].entry));

  struct Best {
    double score = kNegInf;
    std::size_t count = 0;
    std::int32_t prev = MorphemeGraph::kBos;
    bool set = false;
  };
  std::vector<Best> best(n);
  auto sequence = [&](std::int32_t last) {
    std::vector<std::int32_t> seq;
    for (auto i = last; i >= 0; i = best[i].prev) seq.push_back(i);
    std::reverse(seq.begin(), seq.end());
    return seq;
  };
  // True when the path (score, count, ending in `a_last`) beats the current
  // one ending in `b_last`.  Candidates for the same node share the suffix,
  // so comparing prefixes is enough.
  auto better = [&](double score, std::size_t count, std::int32_t a_last, const Best &cur,
                    std::int32_t b_last) {
    if (!cur.set) return true;
    if (!NearlyEqual(score, cur.score)) return score > cur.score;
    if (count != cur.count) return count < cur.count;
    auto sa = sequence(a_last), sb = sequence(b_last);
    return std::lexicographical_compare(sa.begin(), sa.end(), sb.begin(), sb.end(),
                                        [&](std::int32_t x, std::int32_t y) { return keys[x] < keys[y]; });
  };

  std::vector<std::vector<std::int32_t>> preds(n);
  std::vector<std::int32_t> finals;
  for (auto [a, b] : graph.edges) {
    if (b == MorphemeGraph::kEos) {
      if (a >= 0) finals.push_back(a);
    } else if (b >= 0) {
      preds[b].push_back(a);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double own = graph.nodes[i].score + insertion_penalty;
    for (auto p : preds[i]) {
      double score = (p < 0 ? 0.0 : best[p].score) + own;
      std::size_t count = (p < 0 ? 0 : best[p].count) + 1;
      if (p >= 0 && !best[p].set) continue;
      if (!best[i].set || better(score, count, p, best[i], best[i].prev)) {
        best[i] = {score, count, p, true};
      }
    }
  }
  Best end;
  std::int32_t end_last = -1;
  for (auto f : finals) {
    if (!best[f].set) continue;
    if (better(best[f].score, best[f].count, f, end, end_last)) {
      end = best[f];
      end.set = true;
      end_last = f;
    }
  }
  if (end_last < 0) throw ParseError("graph has no BOS-EOS path");
  return {sequence(end_last), end.score};
}

// ---------------------------------------------------------------------------
// Graph dumps

void WriteGraph(std::ostream &out, const MorphemeGraph &graph, const Lexicon &lexicon) {
  out << "== " << graph.id << ' ' << graph.num_slots << '\n';
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    const auto &n = graph.nodes[i];
    char score[32];
    std::snprintf(score, sizeof score, "%.10g", n.score);
    out << "N " << i << ' ' << n.start << ' ' << n.end << ' ' << score << " | "
        << FormatEntry(lexicon.entry(n.entry)) << '\n';
  }
  auto name = [](std::int32_t x) {
    return x == MorphemeGraph::kBos ? std::string("BOS")
                                    : x == MorphemeGraph::kEos ? std::string("EOS") : std::to_string(x);
  };
  for (auto [a, b] : graph.edges) out << "E " << name(a) << ' ' << name(b) << '\n';
}

std::vector<MorphemeGraph> ReadGraphs(std::istream &in, const Lexicon &lexicon,
                                      const Inventory &inventory) {
  std::unordered_map<std::string, std::int32_t> by_key;
  for (std::size_t i = 0; i < lexicon.size(); ++i)
    by_key.emplace(EntryKey(lexicon.entry(i)), static_cast<std::int32_t>(i));

  std::vector<MorphemeGraph> out;
  std::string line;
  int lineno = 0;
  auto node_ref = [&](const std::string &text) -> std::int32_t {
    if (text == "BOS") return MorphemeGraph::kBos;
    if (text == "EOS") return MorphemeGraph::kEos;
    std::size_t used = 0;
    long v = -1;
    try {
      v = std::stol(text, &used);
    } catch (const std::exception &) {
    }
    if (v < 0 || used != text.size() || static_cast<std::size_t>(v) >= out.back().nodes.size())
      throw ParseError("bad node reference '" + text + "'", lineno);
    return static_cast<std::int32_t>(v);
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto body = Trim(line);
    if (body.empty() || body[0] == '#') continue;
    if (body.rfind("==", 0) == 0) {
      auto f = SplitWhitespace(body.substr(2));
      if (f.size() != 2) throw ParseError("expected '== id slots'", lineno);
      MorphemeGraph g;
      g.id = f[0];
      g.num_slots = std::stoul(f[1]);
      out.push_back(std::move(g));
      continue;
    }
    if (out.empty()) throw ParseError("graph content before '== id slots'", lineno);
    auto &g = out.back();
    if (body[0] == 'N') {
      auto bar = body.find('|');
      if (bar == std::string_view::npos) throw ParseError("node line without entry", lineno);
      auto f = SplitWhitespace(body.substr(0, bar));
      if (f.size() != 5) throw ParseError("expected 'N index start end score | entry'", lineno);
      if (std::stoul(f[1]) != g.nodes.size()) throw ParseError("node indices must be consecutive", lineno);
      std::istringstream entry_text{std::string(body.substr(bar + 1))};
      auto parsed = ParseDictionary(entry_text, inventory);
      if (parsed.lexicon.size() != 1) throw ParseError("bad node entry", lineno);
      auto it = by_key.find(EntryKey(parsed.lexicon.entry(0)));
      if (it == by_key.end()) throw ParseError("node entry not in dictionary", lineno);
      g.nodes.push_back({it->second, std::stoul(f[2]), std::stoul(f[3]), std::stod(f[4])});
    } else if (body[0] == 'E') {
      auto f = SplitWhitespace(body);
      if (f.size() != 3) throw ParseError("expected 'E from to'", lineno);
      g.edges.emplace_back(node_ref(f[1]), node_ref(f[2]));
    } else {
      throw ParseError("unknown graph line", lineno);
    }
  }
  for (auto &g : out) {
    SortUnique(g.edges);
    if (g.nodes.empty()) g.empty_reason = "no BOS-EOS path survives";
  }
  return out;
}

}  // namespace pairlm
