#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "oracles.h"
#include "support.h"

using namespace pairlm;
using namespace pairlm::testing;

namespace {

PhonemeLattice OneHot(const std::vector<std::string> &phonemes, const PhonemeAlphabet &a, std::string id = "u") {
  PhonemeLattice lat{std::move(id), {}};
  for (const auto &p : phonemes) {
    std::vector<double> v(a.size(), 0.0);
    v[*a.index(p)] = 1.0;
    lat.slots.push_back(v);
  }
  return lat;
}

PhonemeLattice RandomLattice(std::mt19937_64 &rng, std::size_t slots, std::size_t width) {
  PhonemeLattice lat{"r", {}};
  std::gamma_distribution<double> g(0.3, 1.0);
  for (std::size_t t = 0; t < slots; ++t) {
    std::vector<double> v(width);
    double sum = 0.0;
    for (auto &x : v) sum += (x = (rng() % 4 == 0) ? 0.0 : g(rng));
    if (sum == 0.0) v[0] = sum = 1.0;
    for (auto &x : v) x /= sum;
    lat.slots.push_back(v);
  }
  return lat;
}

// A handful of demo entries with their own trie and license.
struct SmallWorld {
  Lexicon lexicon;
  LexiconTrie trie;
  std::unique_ptr<PairwiseLicense> license;
};

SmallWorld Subset(std::mt19937_64 &rng, std::size_t n) {
  const auto &res = Demo();
  std::vector<std::size_t> ids(res.lexicon.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  std::shuffle(ids.begin(), ids.end(), rng);
  SmallWorld w;
  for (std::size_t i = 0; i < n; ++i) w.lexicon.Add(res.lexicon.entry(ids[i]));
  w.trie = LexiconTrie::Build(w.lexicon, res.inventory.alphabet);
  w.license = std::make_unique<PairwiseLicense>(w.lexicon, res.phon, res.morph);
  return w;
}

using NodeSet = std::set<std::tuple<std::int32_t, std::size_t, std::size_t>>;

NodeSet Nodes(const std::vector<MorphNode> &nodes) {
  NodeSet out;
  for (const auto &n : nodes) out.insert({n.entry, n.start, n.end});
  return out;
}

// Edges as (entry, start, end) endpoint tuples so graphs with different node
// numbering compare.
std::set<std::pair<std::tuple<std::int32_t, std::size_t, std::size_t>, std::tuple<std::int32_t, std::size_t, std::size_t>>>
Edges(const MorphemeGraph &g) {
  auto ref = [&](std::int32_t x) {
    return x < 0 ? std::make_tuple(x, std::size_t{0}, std::size_t{0})
                 : std::make_tuple(g.nodes[x].entry, g.nodes[x].start, g.nodes[x].end);
  };
  std::set<std::pair<std::tuple<std::int32_t, std::size_t, std::size_t>, std::tuple<std::int32_t, std::size_t, std::size_t>>> out;
  for (auto [a, b] : g.edges) out.insert({ref(a), ref(b)});
  return out;
}

std::vector<std::string> BestTokens(const MorphemeGraph &g, const Lexicon &lex) {
  std::vector<std::string> out;
  for (auto n : BestPath(g, lex).nodes)
    for (auto &t : MorphemeTokens(lex.entry(g.nodes[n].entry))) out.push_back(t);
  return out;
}

}  // namespace

TEST_SUITE("decoder") {

TEST_CASE("lattice io with a permuted header") {
  const auto &a = DefaultInventory().alphabet;
  std::mt19937_64 rng(4);
  std::vector<PhonemeLattice> lats = {RandomLattice(rng, 3, a.size()), RandomLattice(rng, 2, a.size())};
  lats[0].id = "u1";
  lats[1].id = "u2";
  std::ostringstream out;
  WriteLattices(out, lats, a);
  std::istringstream in(out.str());
  auto again = ReadLattices(in, a);
  REQUIRE(again.size() == 2);
  CHECK(again[1].id == "u2");
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(again[0].slots[t][i] == doctest::Approx(lats[0].slots[t][i]).epsilon(1e-8));

  // Reversed columns mean the same lattice.
  std::ostringstream rev;
  for (std::size_t i = a.size(); i-- > 0;) rev << a.symbol(i) << (i ? " " : "\n");
  rev << "== x\n";
  for (std::size_t i = a.size(); i-- > 0;) rev << (i == *a.index("k") ? "1" : "0") << (i ? " " : "\n");
  std::istringstream rin(rev.str());
  auto x = ReadLattices(rin, a);
  REQUIRE(x.size() == 1);
  CHECK(ArgMax(x[0].slots[0]) == *a.index("k"));
}

TEST_CASE("lattice validation") {
  const auto &a = DefaultInventory().alphabet;
  auto lat = OneHot({"a"}, a);
  lat.slots[0][1] = 0.5;
  CHECK_THROWS_AS(ValidateLattice(lat, a.size()), ParseError);
  lat.slots[0][1] = -0.0;
  CHECK_NOTHROW(ValidateLattice(lat, a.size()));
  lat.slots[0].pop_back();
  CHECK_THROWS_AS(ValidateLattice(lat, a.size()), ParseError);
  const auto &res = Demo();
  CHECK_THROWS_AS(DecodeLattice(lat, res.lexicon, res.trie, a), ParseError);
  std::istringstream short_row("a k\n== u\n1 0\n");
  CHECK_THROWS_AS(ReadLattices(short_row, a), ParseError);
  DecodeOptions neg;
  neg.beam = -1.0;
  CHECK_THROWS_AS(DecodeLattice(OneHot({"a"}, a), res.lexicon, res.trie, a, neg), ParseError);
}

TEST_CASE("one-hot talk + kwa + pap decodes to its reference") {
  const auto &res = Demo();
  const auto &a = res.inventory.alphabet;
  std::vector<OrthoMorpheme> sentence = {DemoMorpheme("talk/nc"), DemoMorpheme("kwa/jj"), DemoMorpheme("pap/nc")};
  auto surface = res.engine->SurfaceCompose(sentence).phonemes;
  CHECK(surface == Phonemes("t a k kk wa p a p"));
  auto lat = OneHot(surface, a);
  DecodeOptions lm;
  lm.beam = 5.0;  // under one floored slot
  lm.license = res.license.get();
  auto g = DecodeLattice(lat, res.lexicon, res.trie, a, lm);
  REQUIRE_FALSE(g.empty());
  CHECK(BestTokens(g, res.lexicon) == std::vector<std::string>{"talk/nc", "kwa/jj", "pap/nc"});
  CHECK(OracleAlign(g, res.lexicon, SentenceTokens(sentence)).Distance() == 0);
  bool talk = false;
  for (const auto &n : g.nodes) {
    const auto &e = res.lexicon.entry(n.entry);
    if (e.surface == "talk" && n.start == 0 && n.end == 3) talk |= RenderPhonTag(e.right_phon) == "Plk2k";
    CHECK(n.score == 0.0);
  }
  CHECK(talk);
}

TEST_CASE("a lexicon of one entry spans exactly its phonemes") {
  Lexicon lex;
  lex.Add(MakeEntry("t a k", "talk", "nc", "nc", "P-t", "Plk2k"));
  const auto &a = DefaultInventory().alphabet;
  auto trie = LexiconTrie::Build(lex, a);
  auto g = DecodeLattice(OneHot(Phonemes("t a k t a k"), a), lex, trie, a);
  REQUIRE(g.nodes.size() == 2);
  CHECK(g.nodes[0] == MorphNode{0, 0, 3, 0.0});
  CHECK(g.nodes[1] == MorphNode{0, 3, 6, 0.0});
  CHECK(g.edges.size() == 3);
  auto short_lat = DecodeLattice(OneHot(Phonemes("t a"), a), lex, trie, a);
  CHECK(short_lat.nodes.empty());
}

TEST_CASE("uniform two-slot lattice over a three-phoneme alphabet") {
  Inventory inv{PhonemeAlphabet({"a", "i", "u"}), {}};
  Lexicon lex;
  for (const char *ph : {"a", "i", "u", "a i", "u u", "i a u"}) {
    DictEntry e;
    e.phonemes = Phonemes(ph);
    e.surface = "w" + std::to_string(lex.size());
    e.left_morph = e.right_morph = "nc";
    e.left_phon = PhonTag::Unchanged(e.phonemes.front());
    e.right_phon = PhonTag::Unchanged(e.phonemes.back());
    lex.Add(e);
  }
  auto trie = LexiconTrie::Build(lex, inv.alphabet);
  PhonemeLattice lat{"flat", {{1.0 / 3, 1.0 / 3, 1.0 / 3}, {1.0 / 3, 1.0 / 3, 1.0 / 3}}};
  for (double beam : {0.0, 1.0, kInfiniteBeam}) {
    DecodeOptions o;
    o.beam = beam;
    auto g = DecodeLattice(lat, lex, trie, inv.alphabet, o);
    // Every path into a slot scores the same, so every fitting node is in
    // the graph at any beam: 3 singles at slot 0, 3 at slot 1, 2 pairs.
    CHECK(g.nodes.size() == 8);
    CHECK(Nodes(g.nodes) == Nodes(oracle::DecodeNodes(lat, lex, inv.alphabet, beam)));
    CHECK(oracle::Paths(g).size() == 3 * 3 + 2);
  }
}

TEST_CASE("plain decoding agrees with exhaustive search") {
  std::mt19937_64 rng(8);
  const auto &a = Demo().inventory.alphabet;
  int mismatches = 0;
  for (int round = 0; round < 40; ++round) {
    auto w = Subset(rng, 12);
    auto lat = RandomLattice(rng, 2 + rng() % 4, a.size());
    for (double beam : {0.0, 2.5, 8.0, kInfiniteBeam}) {
      DecodeOptions o;
      o.beam = beam;
      auto g = DecodeLattice(lat, w.lexicon, w.trie, a, o);
      auto expected = oracle::DecodeNodes(lat, w.lexicon, a, beam);
      if (Nodes(g.nodes) != Nodes(expected)) ++mismatches;
      for (std::size_t i = 0; i < g.nodes.size() && i < expected.size(); ++i)
        CHECK(g.nodes[i].score == doctest::Approx(expected[i].score));
      // Every span-adjacent pair is an edge.
      for (std::size_t i = 0; i < g.nodes.size(); ++i)
        for (std::size_t j = 0; j < g.nodes.size(); ++j)
          if (g.nodes[i].end == g.nodes[j].start)
            CHECK(std::binary_search(g.edges.begin(), g.edges.end(),
                                     std::make_pair(static_cast<std::int32_t>(i), static_cast<std::int32_t>(j))));
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("LM-integrated decoding agrees with exhaustive licensed search") {
  std::mt19937_64 rng(81);
  const auto &a = Demo().inventory.alphabet;
  int mismatches = 0, nonempty = 0;
  for (int round = 0; round < 40; ++round) {
    auto w = Subset(rng, 14);
    auto lat = RandomLattice(rng, 2 + rng() % 4, a.size());
    for (double beam : {0.0, 3.0, kInfiniteBeam}) {
      DecodeOptions o;
      o.beam = beam;
      o.license = w.license.get();
      auto g = DecodeLattice(lat, w.lexicon, w.trie, a, o);
      // The oracle's emitted nodes, restricted to those on a licensed path.
      MorphemeGraph full;
      full.num_slots = lat.size();
      full.nodes = oracle::DecodeNodes(lat, w.lexicon, a, beam, w.license.get());
      for (std::size_t i = 0; i < full.nodes.size(); ++i) {
        auto n = static_cast<std::int32_t>(i);
        const auto &x = full.nodes[i];
        if (x.start == 0 && w.license->Allows(PairwiseLicense::kBoundary, x.entry)) full.edges.emplace_back(MorphemeGraph::kBos, n);
        for (std::size_t j = 0; j < full.nodes.size(); ++j)
          if (full.nodes[j].end == x.start && w.license->Allows(full.nodes[j].entry, x.entry))
            full.edges.emplace_back(static_cast<std::int32_t>(j), n);
        if (x.end == lat.size() && w.license->Allows(x.entry, PairwiseLicense::kBoundary)) full.edges.emplace_back(n, MorphemeGraph::kEos);
      }
      NodeSet on_path;
      for (const auto &p : oracle::Paths(full))
        for (auto n : p) on_path.insert({full.nodes[n].entry, full.nodes[n].start, full.nodes[n].end});
      if (Nodes(g.nodes) != on_path) ++mismatches;
      if (!g.empty()) {
        ++nonempty;
        for (auto [x, y] : g.edges) CHECK(w.license->Allows(g.EntryOf(x), g.EntryOf(y)));
      } else {
        CHECK_FALSE(g.empty_reason.empty());
      }
    }
  }
  CHECK(mismatches == 0);
  CHECK(nonempty > 0);
}

TEST_CASE("with an infinite beam the integrated search equals filtering the plain graph") {
  std::mt19937_64 rng(12);
  const auto &a = Demo().inventory.alphabet;
  for (int round = 0; round < 30; ++round) {
    auto w = Subset(rng, 20);
    auto lat = RandomLattice(rng, 2 + rng() % 5, a.size());
    auto plain = DecodeLattice(lat, w.lexicon, w.trie, a);
    auto filtered = ApplyLanguageModel(plain, *w.license);
    DecodeOptions o;
    o.license = w.license.get();
    auto integrated = DecodeLattice(lat, w.lexicon, w.trie, a, o);
    CHECK(Nodes(integrated.nodes) == Nodes(filtered.nodes));
    CHECK(Edges(integrated) == Edges(filtered));
  }
}

TEST_CASE("language model filtering") {
  const auto &res = Demo();
  const auto &a = res.inventory.alphabet;
  std::mt19937_64 rng(21);
  for (int round = 0; round < 20; ++round) {
    std::vector<OrthoMorpheme> sentence = {DemoMorpheme("talk/nc"), DemoMorpheme("kwa/jj"), DemoMorpheme("aph/nc")};
    auto surface = res.engine->SurfaceCompose(sentence).phonemes;
    ConfusionModel model;
    model.correct_mass = 0.6;
    model.p_keep = 0.8;
    auto lat = MakeLattice(surface, a, model, rng()).lattice;
    DecodeOptions o;
    o.beam = 4.0;
    auto plain = DecodeLattice(lat, res.lexicon, res.trie, a, o);
    auto f = ApplyLanguageModel(plain, *res.license);
    // Kept edges are exactly the licensed ones among survivors.
    for (auto [x, y] : f.edges) CHECK(res.license->Allows(f.EntryOf(x), f.EntryOf(y)));
    auto fe = Edges(f), pe = Edges(plain);
    for (const auto &e : fe) CHECK(pe.count(e) == 1);
    CHECK(Nodes(f.nodes).size() <= Nodes(plain.nodes).size());
    auto twice = ApplyLanguageModel(f, *res.license);
    CHECK(twice.nodes == f.nodes);
    CHECK(twice.edges == f.edges);
    // Filtering can only lose paths, so its oracle is never better.
    auto ref = SentenceTokens(sentence);
    if (!f.empty()) CHECK(OracleAlign(f, res.lexicon, ref).Distance() >= OracleAlign(plain, res.lexicon, ref).Distance());
  }
}

TEST_CASE("end of utterance is licensed through PEND") {
  const auto &res = Demo();
  const auto &a = res.inventory.alphabet;
  DecodeOptions o;
  o.beam = 5.0;
  auto g = DecodeLattice(OneHot(Phonemes("t a k"), a), res.lexicon, res.trie, a, o);
  auto f = ApplyLanguageModel(g, *res.license);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const auto &e = res.lexicon.entry(g.nodes[i].entry);
    if (g.nodes[i].end != 3) continue;
    bool pend = MatrixAllows(res.phon, RenderPhonTag(e.right_phon), "PEND") && MatrixAllows(res.morph, e.right_morph, "SB");
    CHECK(res.license->Allows(g.nodes[i].entry, PairwiseLicense::kBoundary) == pend);
  }
  // talk before a pause is [t a k] with Plk2k.
  REQUIRE_FALSE(f.empty());
  bool talk = false;
  for (auto [x, y] : f.edges)
    if (y == MorphemeGraph::kEos) {
      const auto &e = res.lexicon.entry(f.nodes[x].entry);
      CHECK(MatrixAllows(res.phon, RenderPhonTag(e.right_phon), "PEND"));
      talk |= e.surface == "talk" && RenderPhonTag(e.right_phon) == "Plk2k";
    }
  CHECK(talk);
}

TEST_CASE("empty graph after filtering carries a reason") {
  const auto &res = Demo();
  const auto &a = res.inventory.alphabet;
  ConnectivityMatrix nothing;
  PairwiseLicense none(res.lexicon, nothing, res.morph);
  auto g = DecodeLattice(OneHot(Phonemes("t a k"), a), res.lexicon, res.trie, a);
  REQUIRE_FALSE(g.empty());
  auto f = ApplyLanguageModel(g, none);
  CHECK(f.empty());
  CHECK(f.edges.empty());
  CHECK_FALSE(f.empty_reason.empty());
  CHECK_THROWS_AS(BestPath(f, res.lexicon), ParseError);
  CHECK(OracleAlign(f, res.lexicon, {"talk/nc"}).deletions == 1);
}

TEST_CASE("homophones tie-break by entry key") {
  const auto &res = Demo();
  const auto &a = res.inventory.alphabet;
  DecodeOptions o;
  o.beam = 5.0;
  auto g = DecodeLattice(OneHot(Phonemes("n u n"), a), res.lexicon, res.trie, a, o);
  auto best = BestPath(g, res.lexicon);
  REQUIRE(best.nodes.size() == 1);
  std::vector<std::string> keys;
  for (const auto &n : g.nodes)
    if (n.start == 0 && n.end == 3 && n.score == 0.0) keys.push_back(NodeKey(res.lexicon.entry(n.entry)));
  REQUIRE(keys.size() >= 2);
  CHECK(NodeKey(res.lexicon.entry(g.nodes[best.nodes[0]].entry)) == *std::min_element(keys.begin(), keys.end()));
  auto again = BestPath(g, res.lexicon);
  CHECK(again.nodes == best.nodes);
}

TEST_CASE("best path agrees with path enumeration") {
  const auto &lex = Demo().lexicon;
  std::mt19937_64 rng(31);
  int compared = 0;
  for (int round = 0; round < 400; ++round) {
    auto g = RandomGraph(rng, lex, 2 + rng() % 5);
    auto paths = oracle::Paths(g);
    if (paths.empty()) {
      CHECK_THROWS_AS(BestPath(g, lex), ParseError);
      continue;
    }
    if (paths.size() > 300) continue;
    for (double penalty : {0.0, -0.5, -2.0}) {
      auto got = BestPath(g, lex, penalty);
      auto want = oracle::BestPath(g, lex, penalty);
      CHECK(got.score == doctest::Approx(want.score));
      CHECK(got.nodes == want.nodes);
      ++compared;
    }
  }
  CHECK(compared > 300);
}

TEST_CASE("a more negative insertion penalty never lengthens the best path") {
  const auto &lex = Demo().lexicon;
  std::mt19937_64 rng(32);
  for (int round = 0; round < 200; ++round) {
    auto g = RandomGraph(rng, lex, 3 + rng() % 4);
    if (oracle::Paths(g).empty()) continue;
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (double penalty : {0.0, -0.5, -1.0, -3.0, -10.0}) {
      auto n = BestPath(g, lex, penalty).nodes.size();
      CHECK(n <= prev);
      prev = n;
    }
  }
}

TEST_CASE("widening the beam only adds nodes") {
  const auto &res = Demo();
  const auto &a = res.inventory.alphabet;
  std::mt19937_64 rng(41);
  for (int round = 0; round < 15; ++round) {
    std::vector<OrthoMorpheme> sentence = {DemoMorpheme("na/np"), DemoMorpheme("ka/jc"), DemoMorpheme("mek/pv"),
                                           DemoMorpheme("ta/eS")};
    ConfusionModel model;
    model.correct_mass = 0.6;
    model.p_keep = 0.7;
    auto lat = MakeLattice(res.engine->SurfaceCompose(sentence).phonemes, a, model, rng()).lattice;
    for (bool lm : {false, true}) {
      NodeSet prev;
      for (double beam : {0.0, 1.0, 2.0, 4.0, 8.0, kInfiniteBeam}) {
        DecodeOptions o;
        o.beam = beam;
        if (lm) o.license = res.license.get();
        auto g = DecodeLattice(lat, res.lexicon, res.trie, a, o);
        auto now = Nodes(g.nodes);
        CHECK(std::includes(now.begin(), now.end(), prev.begin(), prev.end()));
        prev = now;
      }
    }
  }
}

TEST_CASE("graph write and read round trip") {
  const auto &res = Demo();
  const auto &a = res.inventory.alphabet;
  std::mt19937_64 rng(51);
  auto lat = RandomLattice(rng, 5, a.size());
  lat.id = "u7";
  DecodeOptions o;
  o.beam = 3.0;
  o.license = res.license.get();
  std::vector<MorphemeGraph> graphs = {DecodeLattice(lat, res.lexicon, res.trie, a, o),
                                       DecodeLattice(OneHot(Phonemes("t a k kk wa"), a, "u8"), res.lexicon,
                                                     res.trie, a, o)};
  std::ostringstream out;
  for (const auto &g : graphs) WriteGraph(out, g, res.lexicon);
  std::istringstream in(out.str());
  auto again = ReadGraphs(in, res.lexicon, res.inventory);
  REQUIRE(again.size() == 2);
  std::ostringstream out2;
  for (const auto &g : again) WriteGraph(out2, g, res.lexicon);
  CHECK(out.str() == out2.str());
  CHECK(again[1].id == "u8");
  CHECK(again[1].edges == graphs[1].edges);
  std::istringstream bad("== u 2\nE BOS 3\n");
  CHECK_THROWS_AS(ReadGraphs(bad, res.lexicon, res.inventory), ParseError);
}

}  // TEST_SUITE
