// pairlm: batch driver for the pronunciation compiler, the lexical decoder
// and the accuracy-sweep experiment.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "pairlm/pipeline.h"

namespace fs = std::filesystem;
using namespace pairlm;

namespace {

// Error raised by a named stage; main() prints it and exits 1.
struct StageError : std::runtime_error {
  StageError(const std::string &stage, const std::string &what) : std::runtime_error(stage + ": " + what) {}
};

template <typename Fn>
auto Stage(const std::string &name, Fn fn) {
  try {
    return fn();
  } catch (const StageError &) {
    throw;
  } catch (const std::exception &err) {
    throw StageError(name, err.what());
  }
}

std::ifstream OpenIn(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

// Writes through a temporary file and renames it into place, so a failing
// command never leaves a truncated output behind.
class AtomicFile {
 public:
  explicit AtomicFile(std::string path) : path_(std::move(path)), tmp_(path_ + ".tmp") {}
  ~AtomicFile() {
    if (!committed_) {
      std::error_code ec;
      fs::remove(tmp_, ec);
    }
  }
  std::ostringstream &stream() { return buf_; }
  void Commit() {
    {
      std::ofstream out(tmp_, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write " + tmp_);
      out << buf_.str();
      if (!out.flush()) throw std::runtime_error("write failed: " + tmp_);
    }
    fs::rename(tmp_, path_);
    committed_ = true;
  }

 private:
  std::string path_, tmp_;
  std::ostringstream buf_;
  bool committed_ = false;
};

// Writes to `path`, or stdout when it is empty or "-".
void Emit(const std::string &path, const std::string &text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  AtomicFile f(path);
  f.stream() << text;
  f.Commit();
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> beam, insertion_penalty;
  bool no_lm = false, surface_only = false, lenient = false;
  unsigned jobs = 0;
};

void AddCommonFlags(CLI::App *cmd, std::string &config_path, Overrides &ov) {
  cmd->add_option("-c,--config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", ov.seed, "override the config seed");
  cmd->add_option("--beam", ov.beam, "override the decoding beam (log-prob width, or inf)");
  cmd->add_option("--insertion-penalty", ov.insertion_penalty, "override the 1-best insertion penalty");
  cmd->add_flag("--no-lm", ov.no_lm, "decode without the connectivity language model");
  cmd->add_flag("--surface-only", ov.surface_only, "score morphemes by surface form only");
  auto *strict = cmd->add_flag("--strict", "reject malformed dictionary lines (default)");
  auto *lenient = cmd->add_flag("--lenient", ov.lenient, "skip malformed dictionary lines with a warning");
  strict->excludes(lenient);
  cmd->add_option("-j,--jobs", ov.jobs, "worker threads for per-utterance stages (0: all cores)");
}

ExperimentConfig Configure(const std::string &path, const Overrides &ov) {
  auto c = Stage("config", [&] { return LoadConfig(path); });
  if (ov.seed) c.seed = *ov.seed;
  if (ov.beam) c.beam = *ov.beam;
  if (ov.insertion_penalty) c.insertion_penalty = *ov.insertion_penalty;
  if (ov.no_lm) c.lm_enabled = false;
  if (ov.surface_only) c.surface_only = true;
  c.jobs = ov.jobs;
  if (!(c.beam >= 0.0)) throw StageError("config", "beam must be non-negative");
  if (c.insertion_penalty > 0.0) throw StageError("config", "insertion_penalty must be <= 0");
  return c;
}

Resources LoadCompiled(const ExperimentConfig &c, bool lenient) {
  return Stage("load", [&] {
    Resources r;
    r.inventory = LoadInventory(c.alphabet, c.codas);
    r.engine = std::make_unique<RuleEngine>(r.inventory, RuleTable::Load(c.rules, r.inventory));
    if (!c.tagset.empty()) r.tagset = MorphTagSet::Load(c.tagset);
    const MorphTagSet *tags = r.tagset ? &*r.tagset : nullptr;
    r.ortho = LoadOrthoLexicon(c.ortho, *r.engine, tags);
    r.morph = LoadMatrix(c.morph_matrix, MatrixKind::kMorphological, nullptr, tags);
    DictionaryOptions opts;
    opts.strict = !lenient;
    opts.tagset = tags;
    auto parsed = LoadDictionary(c.dictionary, r.inventory, opts);
    for (const auto &d : parsed.diagnostics) std::cerr << "warning: " << d << '\n';
    r.lexicon = std::move(parsed.lexicon);
    r.phon = LoadMatrix(c.phon_matrix, MatrixKind::kPhonological, &r.inventory);
    r.Index();
    return r;
  });
}

std::vector<Sentence> LoadCorpus(const std::string &path, const Resources &res) {
  return Stage("corpus", [&] {
    auto in = OpenIn(path);
    return ResolveCorpus(ReadCorpusTokens(in), res.ortho);
  });
}

// ---------------------------------------------------------------------------

int CmdCompile(const ExperimentConfig &c) {
  Inventory inv = Stage("load", [&] { return LoadInventory(c.alphabet, c.codas); });
  RuleEngine engine(inv, Stage("rules", [&] { return RuleTable::Load(c.rules, inv); }));
  std::optional<MorphTagSet> tagset;
  if (!c.tagset.empty()) tagset = Stage("tagset", [&] { return MorphTagSet::Load(c.tagset); });
  const MorphTagSet *tags = tagset ? &*tagset : nullptr;
  auto ortho = Stage("ortho", [&] { return LoadOrthoLexicon(c.ortho, engine, tags); });
  auto morph = Stage("morph matrix", [&] {
    return LoadMatrix(c.morph_matrix, MatrixKind::kMorphological, nullptr, tags);
  });
  auto compiled = Stage("compile", [&] { return CompileLexicon(engine, ortho, &morph); });
  auto violations = FinalFormViolations(engine, compiled.lexicon, compiled.phon_matrix);
  if (!violations.empty()) {
    for (const auto &v : violations) std::cerr << "final-form violation: " << v << '\n';
    throw StageError("compile", std::to_string(violations.size()) + " final-form violations");
  }

  AtomicFile dict(c.dictionary), phon(c.phon_matrix);
  dict.stream() << "# compiled from " << fs::path(c.ortho).filename().string() << '\n';
  WriteDictionary(dict.stream(), compiled.lexicon);
  phon.stream() << "# compiled from " << fs::path(c.ortho).filename().string() << '\n';
  WriteMatrix(phon.stream(), compiled.phon_matrix);
  dict.Commit();
  phon.Commit();

  std::cout << "morphemes " << ortho.size() << '\n'
            << "entries " << compiled.lexicon.size() << '\n'
            << "fused_units " << compiled.fused_units << '\n'
            << "matrix_lines " << compiled.phon_matrix.size() << '\n';
  int failed = 0;
  if (!c.golden.empty()) {
    auto results = Stage("golden", [&] { return CheckGolden(engine, ortho, LoadGolden(c.golden)); });
    for (const auto &r : results) {
      std::string tokens, expected, actual;
      for (const auto &t : r.golden.tokens) tokens += (tokens.empty() ? "" : " ") + t;
      for (const auto &p : r.golden.expected) expected += (expected.empty() ? "" : " ") + p;
      for (const auto &p : r.actual) actual += (actual.empty() ? "" : " ") + p;
      std::cout << (r.ok() ? "golden ok   " : "golden FAIL ") << tokens << " -> [" << actual << "]";
      if (!r.ok()) std::cout << " expected [" << expected << "]";
      std::cout << '\n';
      failed += r.ok() ? 0 : 1;
    }
    std::cout << "golden " << results.size() - failed << "/" << results.size() << '\n';
  }
  return failed ? 1 : 0;
}

int CmdGenCorpus(const ExperimentConfig &c, std::optional<std::size_t> n, const std::string &out) {
  Inventory inv = Stage("load", [&] { return LoadInventory(c.alphabet, c.codas); });
  RuleEngine engine(inv, Stage("rules", [&] { return RuleTable::Load(c.rules, inv); }));
  std::optional<MorphTagSet> tagset;
  if (!c.tagset.empty()) tagset = Stage("tagset", [&] { return MorphTagSet::Load(c.tagset); });
  const MorphTagSet *tags = tagset ? &*tagset : nullptr;
  auto ortho = Stage("ortho", [&] { return LoadOrthoLexicon(c.ortho, engine, tags); });
  auto morph = Stage("morph matrix", [&] {
    return LoadMatrix(c.morph_matrix, MatrixKind::kMorphological, nullptr, tags);
  });
  CorpusOptions opts;
  opts.max_len = c.max_len;
  auto corpus = Stage("gencorpus", [&] { return GenCorpus(ortho, morph, n.value_or(c.sentences), c.seed, opts); });
  std::ostringstream text;
  WriteCorpus(text, corpus);
  Emit(out.empty() ? c.corpus : out, text.str());
  return 0;
}

int CmdSimulate(const ExperimentConfig &c, const Overrides &ov, double p_keep, const std::string &corpus_path,
                const std::string &out) {
  auto res = LoadCompiled(c, ov.lenient);
  auto corpus = LoadCorpus(corpus_path.empty() ? c.corpus : corpus_path, res);
  ConfusionModel model;
  if (!c.confusion.empty())
    model = Stage("confusion", [&] { return LoadConfusionMatrix(c.confusion, res.inventory.alphabet); });
  model.correct_mass = c.correct_mass;
  model.p_keep = p_keep;
  std::vector<PhonemeLattice> lattices;
  std::size_t slots = 0, correct = 0;
  Stage("simulate", [&] {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      auto surface = res.engine->SurfaceCompose(corpus[i]).phonemes;
      auto sim = MakeLattice(surface, res.inventory.alphabet, model, SubSeed(c.seed, i),
                             "u" + std::to_string(i + 1));
      slots += surface.size();
      correct += sim.correct_slots;
      lattices.push_back(std::move(sim.lattice));
    }
    return 0;
  });
  std::ostringstream text;
  WriteLattices(text, lattices, res.inventory.alphabet);
  Emit(out, text.str());
  std::fprintf(stderr, "utterances %zu slots %zu realized_accuracy %.4f\n", lattices.size(), slots,
               slots ? static_cast<double>(correct) / static_cast<double>(slots) : 1.0);
  return 0;
}

int CmdDecode(const ExperimentConfig &c, const Overrides &ov, const std::string &lattice_path, bool best,
              const std::string &out) {
  auto res = LoadCompiled(c, ov.lenient);
  auto lattices = Stage("lattices", [&] {
    auto in = OpenIn(lattice_path);
    return ReadLattices(in, res.inventory.alphabet);
  });
  std::vector<MorphemeGraph> graphs(lattices.size());
  Stage("decode", [&] {
    for (std::size_t i = 0; i < lattices.size(); ++i)
      graphs[i] = DecodeUtterance(res, lattices[i], c.beam, c.lm_enabled);
    return 0;
  });
  std::ostringstream text;
  for (const auto &g : graphs) {
    if (!best) {
      WriteGraph(text, g, res.lexicon);
      continue;
    }
    text << g.id << '\t';
    if (!g.empty()) {
      auto path = BestPath(g, res.lexicon, c.insertion_penalty);
      bool first = true;
      for (auto n : path.nodes)
        for (const auto &t : MorphemeTokens(res.lexicon.entry(g.nodes[n].entry))) {
          text << (first ? "" : " ") << t;
          first = false;
        }
    }
    text << '\n';
  }
  Emit(out, text.str());
  return 0;
}

int CmdEvaluate(const ExperimentConfig &c, const Overrides &ov, const std::string &graph_path,
                const std::string &corpus_path, const std::string &out) {
  auto res = LoadCompiled(c, ov.lenient);
  auto corpus = LoadCorpus(corpus_path.empty() ? c.corpus : corpus_path, res);
  auto graphs = Stage("graphs", [&] {
    auto in = OpenIn(graph_path);
    return ReadGraphs(in, res.lexicon, res.inventory);
  });
  // Utterance ids are u1, u2, ... in corpus order.
  std::vector<UtteranceScore> oracle_rows, best_rows;
  Stage("evaluate", [&] {
    for (const auto &g : graphs) {
      std::size_t index = 0;
      if (g.id.size() < 2 || g.id[0] != 'u' || (index = std::stoul(g.id.substr(1))) == 0 ||
          index > corpus.size())
        throw std::runtime_error("graph id '" + g.id + "' has no reference sentence");
      auto ref = SentenceTokens(corpus[index - 1]);
      if (c.surface_only)
        for (auto &t : ref) t = SurfaceOnly(t);
      oracle_rows.push_back({g.id, OracleAlign(g, res.lexicon, ref, c.surface_only)});
      std::vector<std::string> hyp;
      if (!g.empty())
        for (auto n : BestPath(g, res.lexicon, c.insertion_penalty).nodes)
          for (const auto &t : MorphemeTokens(res.lexicon.entry(g.nodes[n].entry)))
            hyp.push_back(c.surface_only ? SurfaceOnly(t) : t);
      best_rows.push_back({g.id, Align(hyp, ref)});
    }
    return 0;
  });
  std::ostringstream text;
  WriteReport(text, "graph oracle", oracle_rows);
  text << '\n';
  WriteReport(text, "1-best", best_rows);
  Emit(out, text.str());
  return 0;
}

int CmdLint(const ExperimentConfig &c) {
  auto res = LoadCompiled(c, true);
  int problems = 0;
  auto report = LintPhonMatrix(res.lexicon, res.phon);
  for (const auto &m : report.missing_pause) {
    std::cout << "missing PEND permission for right tag " << m << '\n';
    ++problems;
  }
  for (const auto &u : report.unreachable_patterns) {
    std::cout << "unreachable pattern " << u << '\n';
    ++problems;
  }
  for (const auto &v : FinalFormViolations(*res.engine, res.lexicon, res.phon)) {
    std::cout << "final-form violation " << v << '\n';
    ++problems;
  }
  // Strict reload reports the first malformed dictionary line, if any.
  try {
    DictionaryOptions opts;
    opts.tagset = res.tagset ? &*res.tagset : nullptr;
    LoadDictionary(c.dictionary, res.inventory, opts);
  } catch (const std::exception &err) {
    std::cout << "dictionary: " << err.what() << '\n';
    ++problems;
  }
  std::cout << "entries " << res.lexicon.size() << " matrix_lines " << res.phon.size() << " problems "
            << problems << '\n';
  return problems ? 1 : 0;
}

int CmdRunExperiment(const ExperimentConfig &c, const Overrides &ov, const std::string &out) {
  auto res = LoadCompiled(c, ov.lenient);
  std::vector<Sentence> corpus;
  if (!c.corpus.empty() && fs::exists(c.corpus)) {
    corpus = LoadCorpus(c.corpus, res);
  } else {
    CorpusOptions opts;
    opts.max_len = c.max_len;
    corpus = Stage("gencorpus", [&] { return GenCorpus(res.ortho, res.morph, c.sentences, c.seed, opts); });
  }
  auto rows = Stage("experiment", [&] { return RunExperiment(res, corpus, c); });
  std::ostringstream text;
  WriteExperimentReport(text, c, rows);
  Emit(out.empty() ? c.report : out, text.str());
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Morpheme recognition from phoneme lattices with a pairwise connectivity model"};
  app.require_subcommand(1);

  std::string config;
  Overrides ov;
  std::string out, corpus_path, lattices, graphs;
  std::optional<std::size_t> count;
  double p_keep = 1.0;
  bool best = false;

  auto *compile = app.add_subcommand("compile", "compile the orthographic lexicon into dictionary and matrix");
  auto *gencorpus = app.add_subcommand("gencorpus", "generate a corpus by random walk over the morph matrix");
  auto *simulate = app.add_subcommand("simulate", "turn corpus sentences into phoneme lattices");
  auto *decode = app.add_subcommand("decode", "decode lattices into morpheme graphs");
  auto *evaluate = app.add_subcommand("evaluate", "score morpheme graphs against a reference corpus");
  auto *lint = app.add_subcommand("lint", "check the compiled dictionary and matrix");
  auto *run = app.add_subcommand("run-experiment", "accuracy sweep with and without the language model");
  for (auto *cmd : {compile, gencorpus, simulate, decode, evaluate, lint, run}) AddCommonFlags(cmd, config, ov);

  gencorpus->add_option("-n,--sentences", count, "number of sentences (default: config)");
  gencorpus->add_option("-o,--output", out, "output file (default: config corpus path)");
  simulate->add_option("--corpus", corpus_path, "reference corpus (default: config)");
  simulate->add_option("--p-keep", p_keep, "chance each slot keeps its peak on the true phoneme")
      ->check(CLI::Range(0.0, 1.0));
  simulate->add_option("-o,--output", out, "lattice file (default: stdout)");
  decode->add_option("lattices", lattices, "lattice file")->required();
  decode->add_flag("--best", best, "print the 1-best morpheme sequence instead of the graph");
  decode->add_option("-o,--output", out, "output file (default: stdout)");
  evaluate->add_option("graphs", graphs, "graph file")->required();
  evaluate->add_option("--corpus", corpus_path, "reference corpus (default: config)");
  evaluate->add_option("-o,--output", out, "report file (default: stdout)");
  run->add_option("-o,--output", out, "report file (default: config report path)");

  CLI11_PARSE(app, argc, argv);

  try {
    auto c = Configure(config, ov);
    if (compile->parsed()) return CmdCompile(c);
    if (gencorpus->parsed()) return CmdGenCorpus(c, count, out);
    if (simulate->parsed()) return CmdSimulate(c, ov, p_keep, corpus_path, out);
    if (decode->parsed()) return CmdDecode(c, ov, lattices, best, out);
    if (evaluate->parsed()) return CmdEvaluate(c, ov, graphs, corpus_path, out);
    if (lint->parsed()) return CmdLint(c);
    if (run->parsed()) return CmdRunExperiment(c, ov, out);
  } catch (const std::exception &err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 1;
}
