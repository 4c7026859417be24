#include "pairlm/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace pairlm {

namespace fs = std::filesystem;

namespace {

double ParseDouble(const std::string &key, const std::string &value, int lineno) {
  if (value == "inf") return kInfiniteBeam;
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception &) {
  }
  throw ParseError("'" + key + "' expects a number, got '" + value + "'", lineno);
}

std::uint64_t ParseUnsigned(const std::string &key, const std::string &value, int lineno) {
  try {
    std::size_t used = 0;
    auto v = std::stoull(value, &used);
    if (used == value.size() && value[0] != '-') return v;
  } catch (const std::exception &) {
  }
  throw ParseError("'" + key + "' expects a non-negative integer, got '" + value + "'", lineno);
}

bool ParseBool(const std::string &key, const std::string &value, int lineno) {
  if (value == "true" || value == "yes" || value == "1") return true;
  if (value == "false" || value == "no" || value == "0") return false;
  throw ParseError("'" + key + "' expects true or false, got '" + value + "'", lineno);
}

std::string FormatDouble(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::ifstream OpenInput(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return in;
}

}  // namespace

ExperimentConfig ParseConfig(std::istream &in, const std::string &base_dir) {
  ExperimentConfig c;
  std::map<std::string, std::string *> paths = {
      {"alphabet", &c.alphabet},     {"codas", &c.codas},
      {"rules", &c.rules},           {"tagset", &c.tagset},
      {"ortho", &c.ortho},           {"morph_matrix", &c.morph_matrix},
      {"dictionary", &c.dictionary}, {"phon_matrix", &c.phon_matrix},
      {"golden", &c.golden},         {"corpus", &c.corpus},
      {"confusion", &c.confusion},   {"report", &c.report},
  };
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = Trim(StripComment(line));
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", lineno);
    std::string key(Trim(body.substr(0, eq)));
    std::string value(Trim(body.substr(eq + 1)));
    if (auto it = paths.find(key); it != paths.end()) {
      *it->second = value.empty() ? value : (fs::path(base_dir) / value).lexically_normal().string();
    } else if (key == "p_keep") {
      c.p_keep.clear();
      for (const auto &v : SplitFields(value, ',')) {
        double p = ParseDouble(key, v, lineno);
        if (!(p > 0.0 && p <= 1.0)) throw ParseError("operating points must lie in (0, 1]", lineno);
        c.p_keep.push_back(p);
      }
    } else if (key == "correct_mass") {
      c.correct_mass = ParseDouble(key, value, lineno);
    } else if (key == "seed") {
      c.seed = ParseUnsigned(key, value, lineno);
    } else if (key == "beam") {
      c.beam = ParseDouble(key, value, lineno);
    } else if (key == "insertion_penalty") {
      c.insertion_penalty = ParseDouble(key, value, lineno);
    } else if (key == "lm") {
      c.lm_enabled = ParseBool(key, value, lineno);
    } else if (key == "surface_only") {
      c.surface_only = ParseBool(key, value, lineno);
    } else if (key == "sentences") {
      c.sentences = ParseUnsigned(key, value, lineno);
    } else if (key == "max_len") {
      c.max_len = ParseUnsigned(key, value, lineno);
    } else {
      throw ParseError("unknown config key '" + key + "'", lineno);
    }
  }
  for (const auto *p : {&c.alphabet, &c.codas, &c.rules, &c.tagset, &c.ortho, &c.morph_matrix, &c.golden,
                        &c.confusion})
    if (!p->empty() && !fs::exists(*p)) throw ParseError("config input does not exist: " + *p);
  return c;
}

ExperimentConfig LoadConfig(const std::string &path) {
  auto in = OpenInput(path);
  try {
    return ParseConfig(in, fs::path(path).parent_path().string());
  } catch (const ParseError &err) {
    throw ParseError(path + ": " + err.what());
  }
}

void WriteConfig(std::ostream &out, const ExperimentConfig &c) {
  std::string points;
  for (std::size_t i = 0; i < c.p_keep.size(); ++i) points += (i ? "," : "") + FormatDouble(c.p_keep[i]);
  out << "seed = " << c.seed << "\nbeam = " << FormatDouble(c.beam)
      << "\ninsertion_penalty = " << FormatDouble(c.insertion_penalty)
      << "\ncorrect_mass = " << FormatDouble(c.correct_mass) << "\np_keep = " << points
      << "\nsentences = " << c.sentences << "\nmax_len = " << c.max_len
      << "\nsurface_only = " << (c.surface_only ? "true" : "false")
      << "\nconfusion = " << (c.confusion.empty() ? "uniform" : fs::path(c.confusion).filename().string())
      << '\n';
}

Inventory LoadInventory(const std::string &alphabet_path, const std::string &codas_path) {
  Inventory inv{PhonemeAlphabet::Load(alphabet_path), {}};
  inv.codas = CodaTable::Load(codas_path, inv.alphabet);
  return inv;
}

void Resources::Index() {
  trie = LexiconTrie::Build(lexicon, inventory.alphabet);
  license = std::make_unique<PairwiseLicense>(lexicon, phon, morph);
}

Resources LoadResources(const ExperimentConfig &config, bool compiled) {
  Resources r;
  r.inventory = LoadInventory(config.alphabet, config.codas);
  r.engine = std::make_unique<RuleEngine>(r.inventory, RuleTable::Load(config.rules, r.inventory));
  if (!config.tagset.empty()) r.tagset = MorphTagSet::Load(config.tagset);
  const MorphTagSet *tags = r.tagset ? &*r.tagset : nullptr;
  r.ortho = LoadOrthoLexicon(config.ortho, *r.engine, tags);
  r.morph = LoadMatrix(config.morph_matrix, MatrixKind::kMorphological, nullptr, tags);
  if (compiled) {
    DictionaryOptions opts;
    opts.tagset = tags;
    r.lexicon = LoadDictionary(config.dictionary, r.inventory, opts).lexicon;
    r.phon = LoadMatrix(config.phon_matrix, MatrixKind::kPhonological, &r.inventory);
  } else {
    auto c = CompileLexicon(*r.engine, r.ortho, &r.morph);
    r.lexicon = std::move(c.lexicon);
    r.phon = std::move(c.phon_matrix);
  }
  r.Index();
  return r;
}

// ---------------------------------------------------------------------------
// Golden examples

std::vector<GoldenCase> ReadGolden(std::istream &in) {
  std::vector<GoldenCase> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = Trim(StripComment(line));
    if (body.empty()) continue;
    auto f = SplitFields(body, '|');
    if (f.size() != 2) throw ParseError("expected 'tokens | phonemes'", lineno);
    GoldenCase g{SplitWhitespace(f[0]), SplitWhitespace(f[1]), lineno};
    if (g.tokens.empty() || g.expected.empty()) throw ParseError("empty golden case", lineno);
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<GoldenCase> LoadGolden(const std::string &path) {
  auto in = OpenInput(path);
  try {
    return ReadGolden(in);
  } catch (const ParseError &err) {
    throw ParseError(path + ": " + err.what());
  }
}

std::vector<GoldenResult> CheckGolden(const RuleEngine &engine, std::span<const OrthoMorpheme> ortho,
                                      const std::vector<GoldenCase> &cases) {
  std::vector<GoldenResult> out;
  for (const auto &g : cases) {
    auto sentence = ResolveCorpus({g.tokens}, ortho).front();
    out.push_back({g, engine.SurfaceCompose(sentence).phonemes});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Decoding and the experiment

MorphemeGraph DecodeUtterance(const Resources &res, const PhonemeLattice &lattice, double beam,
                              bool use_lm) {
  DecodeOptions opts;
  opts.beam = beam;
  if (use_lm) opts.license = res.license.get();
  auto g = DecodeLattice(lattice, res.lexicon, res.trie, res.inventory.alphabet, opts);
  return use_lm ? g : PruneUnreachable(std::move(g));
}

namespace {

struct UtteranceResult {
  std::size_t slots = 0, correct_slots = 0;
  std::size_t nodes_lm = 0, nodes_no_lm = 0;
  bool empty_lm = false;
  AlignmentCounts graph_lm, graph_no_lm, best_lm;
};

UtteranceResult RunUtterance(const Resources &res, const Sentence &sentence, const ConfusionModel &model,
                             std::uint64_t seed, const std::string &id, const ExperimentConfig &config) {
  UtteranceResult r;
  auto ref = SentenceTokens(sentence);
  if (config.surface_only)
    for (auto &t : ref) t = SurfaceOnly(t);
  auto surface = res.engine->SurfaceCompose(sentence).phonemes;
  auto sim = MakeLattice(surface, res.inventory.alphabet, model, seed, id);
  r.slots = surface.size();
  r.correct_slots = sim.correct_slots;

  auto with_lm = DecodeUtterance(res, sim.lattice, config.beam, true);
  auto without = DecodeUtterance(res, sim.lattice, config.beam, false);
  r.nodes_lm = with_lm.nodes.size();
  r.nodes_no_lm = without.nodes.size();
  r.graph_lm = OracleAlign(with_lm, res.lexicon, ref, config.surface_only);
  r.graph_no_lm = OracleAlign(without, res.lexicon, ref, config.surface_only);

  std::vector<std::string> hyp;
  if (with_lm.empty()) {
    r.empty_lm = true;
  } else {
    auto best = BestPath(with_lm, res.lexicon, config.insertion_penalty);
    for (auto n : best.nodes)
      for (auto &t : MorphemeTokens(res.lexicon.entry(with_lm.nodes[n].entry)))
        hyp.push_back(config.surface_only ? SurfaceOnly(t) : t);
  }
  r.best_lm = Align(hyp, ref);
  return r;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads.  The first exception
// is rethrown after all workers stop.
template <typename Fn>
void ParallelFor(std::size_t n, unsigned jobs, Fn fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> workers;
  for (unsigned w = 0; w < jobs; ++w)
    workers.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  for (auto &t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

std::vector<ExperimentRow> RunExperiment(const Resources &res, const std::vector<Sentence> &corpus,
                                         const ExperimentConfig &config) {
  std::vector<ExperimentRow> rows;
  ConfusionModel model;
  if (!config.confusion.empty()) model = LoadConfusionMatrix(config.confusion, res.inventory.alphabet);
  model.correct_mass = config.correct_mass;

  for (std::size_t k = 0; k < config.p_keep.size(); ++k) {
    ExperimentRow row;
    row.p_keep = model.p_keep = config.p_keep[k];
    const std::uint64_t point_seed = SubSeed(config.seed, 1000 + k);
    std::vector<UtteranceResult> results(corpus.size());
    ParallelFor(corpus.size(), config.jobs, [&](std::size_t i) {
      results[i] = RunUtterance(res, corpus[i], model, SubSeed(point_seed, i), "u" + std::to_string(i + 1), config);
    });
    std::size_t correct_slots = 0;
    for (const auto &r : results) {
      row.slots += r.slots;
      correct_slots += r.correct_slots;
      row.nodes_lm += r.nodes_lm;
      row.nodes_no_lm += r.nodes_no_lm;
      row.empty_lm += r.empty_lm ? 1 : 0;
      row.graph_lm += r.graph_lm;
      row.graph_no_lm += r.graph_no_lm;
      row.best_lm += r.best_lm;
    }
    row.realized_accuracy =
        row.slots ? static_cast<double>(correct_slots) / static_cast<double>(row.slots) : 1.0;
    rows.push_back(row);
  }
  return rows;
}

void WriteExperimentReport(std::ostream &out, const ExperimentConfig &config,
                           const std::vector<ExperimentRow> &rows) {
  out << "# morpheme recognition under simulated phoneme accuracy\n";
  std::istringstream settings([&] {
    std::ostringstream s;
    WriteConfig(s, config);
    return s.str();
  }());
  for (std::string line; std::getline(settings, line);) out << "# " << line << '\n';
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-7s %7s %9s %10s %10s %10s %10s %9s %9s\n", "p_keep", "slots",
                "phon_acc", "graph_lm", "graph_nolm", "1best_cor", "1best_acc", "nodes_lm",
                "nodes_nolm");
  out << buf;
  for (const auto &r : rows) {
    auto pct = [](const AlignmentCounts &c) {
      return c.ref_len ? 100.0 * ComputeMetrics(c).pct_correct : 0.0;
    };
    std::snprintf(buf, sizeof buf, "%-7.2f %7zu %9.2f %10.2f %10.2f %10.2f %10.2f %9zu %9zu\n", r.p_keep,
                  r.slots, 100.0 * r.realized_accuracy, pct(r.graph_lm), pct(r.graph_no_lm),
                  pct(r.best_lm), r.best_lm.ref_len ? 100.0 * ComputeMetrics(r.best_lm).accuracy : 0.0,
                  r.nodes_lm, r.nodes_no_lm);
    out << buf;
  }
  for (const auto &r : rows) {
    std::snprintf(buf, sizeof buf,
                  "summary p_keep=%.2f ref_len=%zu graph_lm_C=%zu graph_nolm_C=%zu best_C=%zu best_S=%zu "
                  "best_D=%zu best_I=%zu empty_lm=%zu\n",
                  r.p_keep, r.graph_lm.ref_len, r.graph_lm.correct, r.graph_no_lm.correct, r.best_lm.correct,
                  r.best_lm.substitutions, r.best_lm.deletions, r.best_lm.insertions, r.empty_lm);
    out << buf;
  }
}

}  // namespace pairlm
