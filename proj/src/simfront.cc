#include "pairlm/simfront.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace pairlm {

std::uint64_t SubSeed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 over the pair
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Uniform01(std::mt19937_64 &rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t UniformIndex(std::mt19937_64 &rng, std::size_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

void ConfusionModel::Validate(std::size_t alphabet_size) const {
  if (!(correct_mass > 0.0 && correct_mass <= 1.0)) throw ParseError("correct_mass must lie in (0, 1]");
  if (!(p_keep >= 0.0 && p_keep <= 1.0)) throw ParseError("p_keep must lie in [0, 1]");
  if (alphabet_size < 2) throw ParseError("confusions need at least two phonemes");
  if (mode == Mode::kUniform) return;
  if (matrix.size() != alphabet_size) throw ParseError("confusion matrix has the wrong number of rows");
  for (std::size_t i = 0; i < alphabet_size; ++i) {
    const auto &row = matrix[i];
    if (row.size() != alphabet_size) throw ParseError("confusion matrix row has the wrong width");
    if (row[i] != 0.0) throw ParseError("confusion matrix diagonal must be zero");
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0)) throw ParseError("negative confusion probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw ParseError("confusion matrix row does not sum to 1");
  }
}

ConfusionModel ReadConfusionMatrix(std::istream &in, const PhonemeAlphabet &alphabet) {
  const std::size_t n = alphabet.size();
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto f = SplitWhitespace(StripComment(line));
    if (f.empty()) continue;
    if (f.size() != 3) throw ParseError("expected 'from to weight'", lineno);
    auto a = alphabet.index(f[0]), b = alphabet.index(f[1]);
    if (!a || !b) throw ParseError("unknown phoneme in confusion line", lineno);
    if (*a == *b) throw ParseError("a phoneme cannot be confused with itself", lineno);
    double w = 0.0;
    try {
      w = std::stod(f[2]);
    } catch (const std::exception &) {
      throw ParseError("bad weight '" + f[2] + "'", lineno);
    }
    if (!(w > 0.0)) throw ParseError("weights must be positive", lineno);
    m[*a][*b] += w;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (double w : m[i]) sum += w;
    for (std::size_t j = 0; j < n; ++j) {
      if (sum > 0.0) {
        m[i][j] /= sum;
      } else {
        m[i][j] = i == j ? 0.0 : 1.0 / static_cast<double>(n - 1);
      }
    }
  }
  ConfusionModel model;
  model.mode = ConfusionModel::Mode::kMatrix;
  model.matrix = std::move(m);
  return model;
}

ConfusionModel LoadConfusionMatrix(const std::string &path, const PhonemeAlphabet &alphabet) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return ReadConfusionMatrix(in, alphabet);
  } catch (const ParseError &err) {
    throw ParseError(path + ": " + err.what());
  }
}

std::size_t ArgMax(const std::vector<double> &v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

SimulatedLattice MakeLattice(std::span<const std::string> surface, const PhonemeAlphabet &alphabet,
                             const ConfusionModel &model, std::uint64_t seed, std::string id) {
  const std::size_t n = alphabet.size();
  model.Validate(n);
  std::mt19937_64 rng(seed);
  SimulatedLattice out;
  out.lattice.id = std::move(id);
  const double rest = (1.0 - model.correct_mass) / static_cast<double>(n - 1);
  for (const auto &symbol : surface) {
    auto truth = alphabet.index(symbol);
    if (!truth) throw ParseError("phoneme '" + symbol + "' not in alphabet");
    std::size_t peak = *truth;
    if (Uniform01(rng) >= model.p_keep) {
      if (model.mode == ConfusionModel::Mode::kUniform) {
        peak = UniformIndex(rng, n - 1);
        if (peak >= *truth) ++peak;
      } else {
        const auto &row = model.matrix[*truth];
        double u = Uniform01(rng), acc = 0.0;
        peak = n;
        for (std::size_t j = 0; j < n && peak == n; ++j) {
          acc += row[j];
          if (u < acc) peak = j;
        }
        if (peak == n) {  // rounding at the top of the row
          for (std::size_t j = n; j-- > 0;)
            if (row[j] > 0.0) {
              peak = j;
              break;
            }
        }
      }
    }
    std::vector<double> slot(n, rest);
    slot[peak] = model.correct_mass;
    if (ArgMax(slot) == *truth) ++out.correct_slots;
    out.lattice.slots.push_back(std::move(slot));
  }
  out.realized_accuracy =
      surface.empty() ? 1.0 : static_cast<double>(out.correct_slots) / static_cast<double>(surface.size());
  return out;
}

// ---------------------------------------------------------------------------
// Corpus

std::vector<Sentence> GenCorpus(std::span<const OrthoMorpheme> lexicon, const ConnectivityMatrix &morph,
                                std::size_t n, std::uint64_t seed, const CorpusOptions &options) {
  std::vector<Sentence> corpus;
  if (n == 0) return corpus;
  if (lexicon.empty()) throw ParseError("cannot generate sentences from an empty lexicon");
  if (options.max_len == 0) throw ParseError("max_len must be positive");
  const std::string sb(kBoundaryMorphTag);

  // Successor lists by left tag, in lexicon order.
  std::map<std::string, std::vector<std::size_t>> successors;
  auto successors_of = [&](const std::string &tag) -> const std::vector<std::size_t> & {
    auto it = successors.find(tag);
    if (it != successors.end()) return it->second;
    std::vector<std::size_t> next;
    for (std::size_t i = 0; i < lexicon.size(); ++i)
      if (morph.Allows(tag, lexicon[i].tag)) next.push_back(i);
    return successors.emplace(tag, std::move(next)).first->second;
  };

  for (std::size_t s = 0; s < n; ++s) {
    std::mt19937_64 rng(SubSeed(seed, s));
    bool done = false;
    for (int attempt = 0; attempt <= options.max_retries && !done; ++attempt) {
      Sentence sentence;
      std::string tag = sb;
      while (sentence.size() < options.max_len) {
        const auto &next = successors_of(tag);
        if (next.empty()) break;
        const auto &m = lexicon[next[UniformIndex(rng, next.size())]];
        sentence.push_back(m);
        tag = m.tag;
        if (morph.Allows(tag, sb) &&
            (sentence.size() == options.max_len || Uniform01(rng) < options.stop_probability)) {
          done = true;
          break;
        }
      }
      if (done) corpus.push_back(std::move(sentence));
    }
    if (!done)
      throw ParseError("no pause-licensed sentence found within " + std::to_string(options.max_retries) +
                       " retries (sentence " + std::to_string(s) + ")");
  }
  return corpus;
}

std::vector<std::string> SentenceTokens(const Sentence &sentence) {
  std::vector<std::string> out;
  for (const auto &m : sentence) out.push_back(m.Token());
  return out;
}

void WriteCorpus(std::ostream &out, const std::vector<Sentence> &corpus) {
  for (const auto &sentence : corpus) {
    auto tokens = SentenceTokens(sentence);
    for (std::size_t i = 0; i < tokens.size(); ++i) out << (i ? " " : "") << tokens[i];
    out << '\n';
  }
}

std::vector<std::vector<std::string>> ReadCorpusTokens(std::istream &in) {
  std::vector<std::vector<std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto tokens = SplitWhitespace(StripComment(line));
    if (tokens.empty()) continue;
    for (const auto &t : tokens) {
      auto slash = t.rfind('/');
      if (slash == std::string::npos || slash == 0 || slash + 1 == t.size())
        throw ParseError("token '" + t + "' is not surface/tag", lineno);
    }
    out.push_back(std::move(tokens));
  }
  return out;
}

std::vector<Sentence> ResolveCorpus(const std::vector<std::vector<std::string>> &tokens,
                                    std::span<const OrthoMorpheme> lexicon) {
  std::map<std::string, const OrthoMorpheme *> by_token;
  for (const auto &m : lexicon) by_token.emplace(m.Token(), &m);
  std::vector<Sentence> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    Sentence s;
    for (const auto &t : tokens[i]) {
      auto it = by_token.find(t);
      if (it == by_token.end())
        throw ParseError("sentence " + std::to_string(i + 1) + ": unknown morpheme '" + t + "'");
      s.push_back(*it->second);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace pairlm
