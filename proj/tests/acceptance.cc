// Acceptance checks.  Prints one PASS/FAIL line per criterion and exits
// non-zero when any selected criterion fails.  With arguments, runs only
// the named criteria.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "oracles.h"
#include "support.h"

using namespace pairlm;
using namespace pairlm::testing;
namespace fs = std::filesystem;

namespace {

// Tolerances and limits.
constexpr double kGoldenSeconds = 1.0;
constexpr double kRoundTripSeconds = 10.0;
constexpr double kRegimeSeconds = 60.0;
constexpr double kRegimeAccuracy = 0.70;
constexpr double kRegimeAccuracyTolerance = 0.02;
constexpr double kRegimeMinGapPoints = 5.0;
constexpr std::size_t kSweepMaxLen = 5;
constexpr int kRandomGraphs = 50;
constexpr std::size_t kMaxPaths = 100;
constexpr int kPatternPairs = 10000;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

std::string Fmt(const char *fmt, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, a, b, c, d);
  return buf;
}

double Pct(const AlignmentCounts &c) { return c.ref_len ? 100.0 * ComputeMetrics(c).pct_correct : 0.0; }

bool HasEntry(const Lexicon &lex, const std::string &phonemes, const std::string &surface, const std::string &left,
              const std::string &right) {
  for (const auto &e : lex.entries())
    if (e.surface == surface && e.phonemes == Phonemes(phonemes) && RenderPhonTag(e.left_phon) == left &&
        RenderPhonTag(e.right_phon) == right)
      return true;
  return false;
}

// The shipped sweep, run once.  Seconds spent are kept with the rows.
struct Sweep {
  std::vector<ExperimentRow> rows;
  double seconds = 0.0;
};

const Sweep &DemoSweep() {
  static const Sweep sweep = [] {
    auto start = std::chrono::steady_clock::now();
    auto config = DemoConfig();
    CorpusOptions opts;
    opts.max_len = config.max_len;
    auto corpus = GenCorpus(Demo().ortho, Demo().morph, config.sentences, config.seed, opts);
    Sweep s;
    s.rows = RunExperiment(Demo(), corpus, config);
    s.seconds = Seconds(start);
    return s;
  }();
  return sweep;
}

const ExperimentRow &SweepRow(double p_keep) {
  for (const auto &r : DemoSweep().rows)
    if (r.p_keep == p_keep) return r;
  throw ParseError(Fmt("no operating point p_keep=%.2f in the demo config", p_keep));
}

Outcome Golden() {
  auto start = std::chrono::steady_clock::now();
  auto engine = RuleEngine(DefaultInventory(), RuleTable::Load(DataPath("rules.txt"), DefaultInventory()));
  auto ortho = LoadOrthoLexicon(DataPath("demo/ortho.txt"), engine);
  auto results = CheckGolden(engine, ortho, LoadGolden(DataPath("golden.txt")));
  std::size_t ok = 0;
  std::string bad;
  for (const auto &r : results) {
    if (r.ok()) ++ok;
    else bad += " line" + std::to_string(r.golden.line);
  }
  double secs = Seconds(start);
  return {ok == 19 && results.size() == 19 && secs < kGoldenSeconds,
          std::to_string(ok) + "/" + std::to_string(results.size()) + " exact" + bad + Fmt(", %.3f s", secs)};
}

Outcome Figures() {
  auto engine = RuleEngine(DefaultInventory(), RuleTable::Load(DataPath("rules.txt"), DefaultInventory()));
  auto ortho = LoadOrthoLexicon(DataPath("demo/ortho.txt"), engine);
  auto morph = LoadMatrix(DataPath("demo/morph_matrix.txt"), MatrixKind::kMorphological);
  auto c = CompileLexicon(engine, ortho, &morph);
  const auto &lex = c.lexicon;
  const auto &phon = c.phon_matrix;
  std::vector<std::pair<std::string, bool>> checks = {
      {"talk [t a k] Plk2k", HasEntry(lex, "t a k", "talk", "P-t", "Plk2k")},
      {"kwa [kk wa] Pk=kk", HasEntry(lex, "kk wa", "kwa", "Pk=kk", "P-wa")},
      {"Plk2k Pk=kk", MatrixAllows(phon, "Plk2k", "Pk=kk")},
      {"aph [a m] Pph=m", HasEntry(lex, "a m", "aph", "P-a", "Pph=m")},
      {"Pph=m P-m", MatrixAllows(phon, "Pph=m", "P-m")},
      {"noh [n o] Ph=X", HasEntry(lex, "n o", "noh", "P-n", "Ph=X")},
      {"ko [kh o] Pk=kh", HasEntry(lex, "kh o", "ko", "Pk=kh", "P-o")},
      {"Ph=X Pk=kh", MatrixAllows(phon, "Ph=X", "Pk=kh")},
  };
  std::set<std::string> nun;
  for (const auto &e : lex.entries())
    if (e.phonemes == Phonemes("n u n")) nun.insert(e.left_morph);
  checks.push_back({"[n u n] homophones", nun.size() >= 2});
  bool closure = true;
  for (const auto &e : lex.entries())
    if (e.right_phon.kind == PhonTagKind::kNeutralized)
      closure &= MatrixAllows(phon, RenderPhonTag(e.right_phon), "PEND");
  checks.push_back({"PEND closure", closure});
  std::string failed;
  for (const auto &[name, ok] : checks)
    if (!ok) failed += " [" + name + "]";
  return {failed.empty(), std::to_string(checks.size()) + " checks" + (failed.empty() ? "" : ", failed:" + failed)};
}

Outcome RoundTrip() {
  auto start = std::chrono::steady_clock::now();
  auto config = DemoConfig();
  config.p_keep = {1.0};
  CorpusOptions opts;
  opts.max_len = config.max_len;
  auto corpus = GenCorpus(Demo().ortho, Demo().morph, config.sentences, config.seed, opts);
  auto rows = RunExperiment(Demo(), corpus, config);
  const auto &r = rows.at(0);
  double secs = Seconds(start);
  double graph = Pct(r.graph_lm), best = Pct(r.best_lm);
  bool sized = DemoConfig().sentences == 100;
  return {sized && r.realized_accuracy == 1.0 && graph == 100.0 && best == 100.0 && secs < kRoundTripSeconds,
          Fmt("graph %.2f%%, 1-best %.2f%%, %.2f s", graph, best, secs) + ", " +
              std::to_string(r.graph_lm.ref_len) + " morphemes"};
}

Outcome Regime() {
  const auto &r = SweepRow(kRegimeAccuracy);
  double secs = DemoSweep().seconds;
  double lm = Pct(r.graph_lm), nolm = Pct(r.graph_no_lm), acc = 100.0 * r.realized_accuracy;
  bool in_band = std::abs(r.realized_accuracy - kRegimeAccuracy) <= kRegimeAccuracyTolerance;
  bool a = lm - nolm >= kRegimeMinGapPoints;
  bool b = lm > acc;
  bool sized = DemoConfig().sentences == 100;
  return {sized && in_band && a && b && secs < kRegimeSeconds,
          Fmt("phoneme acc %.2f%%, graph with LM %.2f%%, without %.2f%%", acc, lm, nolm) +
              Fmt(", gap %.2f (need >= %.0f): ", lm - nolm, kRegimeMinGapPoints) + (a ? "ok" : "short") +
              ", LM above phoneme acc: " + (b ? "ok" : "no") + Fmt(", %.2f s", secs)};
}

Outcome Oracles() {
  std::size_t align_bad = 0, align_pairs = 0;
  std::vector<std::vector<std::string>> seqs = {{}};
  for (std::size_t begin = 0, len = 0; len < kSweepMaxLen; ++len) {
    std::size_t end = seqs.size();
    for (std::size_t i = begin; i < end; ++i)
      for (const char *s : {"a", "b", "c"}) {
        auto next = seqs[i];
        next.push_back(s);
        seqs.push_back(next);
      }
    begin = end;
  }
  for (const auto &h : seqs)
    for (const auto &r : seqs) {
      ++align_pairs;
      align_bad += Align(h, r) != oracle::Align(h, r);
    }

  const auto &lex = Demo().lexicon;
  std::mt19937_64 rng(2718);
  int graphs = 0;
  std::size_t graph_bad = 0, best_bad = 0;
  while (graphs < kRandomGraphs) {
    auto g = RandomGraph(rng, lex, 2 + rng() % 5);
    auto paths = oracle::Paths(g);
    if (paths.empty() || paths.size() > kMaxPaths) continue;
    ++graphs;
    auto ref = oracle::PathTokens(g, lex, paths[rng() % paths.size()]);
    std::shuffle(ref.begin(), ref.end(), rng);
    if (rng() % 2) ref.push_back(MorphemeTokens(lex.entry(rng() % lex.size()))[0]);
    graph_bad += OracleAlign(g, lex, ref) != oracle::GraphAlign(g, lex, ref);
    auto got = BestPath(g, lex), want = oracle::BestPath(g, lex, 0.0);
    best_bad += got.nodes != want.nodes || std::abs(got.score - want.score) > 1e-9;
  }

  std::size_t pattern_bad = 0;
  std::mt19937_64 prng(31415);
  const std::string chars = "abP";
  for (int i = 0; i < kPatternPairs; ++i) {
    std::string p, t;
    auto plen = 1 + prng() % 10, tlen = prng() % 11;
    for (std::size_t k = 0; k < plen; ++k) p += (prng() % 3 == 0) ? '?' : chars[prng() % chars.size()];
    if (prng() % 2) p.back() = '*';
    for (std::size_t k = 0; k < tlen; ++k) t += chars[prng() % chars.size()];
    pattern_bad += MatchPattern(TagPattern(p), t) != oracle::Match(p, t);
  }
  std::ostringstream d;
  d << "align " << align_bad << "/" << align_pairs << ", graph align " << graph_bad << "/" << graphs
    << ", best path " << best_bad << "/" << graphs << ", patterns " << pattern_bad << "/" << kPatternPairs
    << " mismatches";
  return {align_bad + graph_bad + best_bad + pattern_bad == 0, d.str()};
}

int RunCli(const std::string &args) {
  std::string cmd = std::string(PAIRLM_CLI) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome Determinism() {
  std::random_device rd;
  auto dir = fs::temp_directory_path() / ("pairlm-accept-" + std::to_string(rd()));
  fs::create_directories(dir);
  auto conf = DataPath("demo/experiment.conf");
  auto a = dir / "a.txt", b = dir / "b.txt";
  int ra = RunCli("run-experiment -c " + conf + " -o " + a.string());
  int rb = RunCli("run-experiment -c " + conf + " -o " + b.string());
  auto slurp = [](const fs::path &p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  auto ta = slurp(a), tb = slurp(b);
  std::error_code ec;
  fs::remove_all(dir, ec);
  bool same = ra == 0 && rb == 0 && !ta.empty() && ta == tb;
  return {same, "exit " + std::to_string(ra) + "/" + std::to_string(rb) + ", " + std::to_string(ta.size()) +
                    " bytes, " + (ta == tb ? "identical" : "different")};
}

Outcome Invariants() {
  std::string cmd = std::string(PAIRLM_TESTS) + " --minimal > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return {code == 0, "unit and property suites exit " + std::to_string(code)};
}

}  // namespace

int main(int argc, char **argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"golden", Golden},         {"figures", Figures},         {"roundtrip", RoundTrip},
      {"regime", Regime},         {"oracles", Oracles},         {"determinism", Determinism},
      {"invariants", Invariants},
  };
  std::set<std::string> only(argv + 1, argv + argc);
  for (const auto &name : only)
    if (std::none_of(criteria.begin(), criteria.end(), [&](const auto &c) { return c.first == name; })) {
      std::fprintf(stderr, "unknown criterion '%s'\n", name.c_str());
      return 2;
    }
  int failed = 0;
  for (const auto &[name, fn] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %-12s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
