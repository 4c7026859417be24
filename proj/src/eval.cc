#include "pairlm/eval.h"

#include <algorithm>
#include <cstdio>
#include <tuple>

namespace pairlm {

AlignmentCounts &AlignmentCounts::operator+=(const AlignmentCounts &o) {
  correct += o.correct;
  substitutions += o.substitutions;
  deletions += o.deletions;
  insertions += o.insertions;
  ref_len += o.ref_len;
  return *this;
}

namespace {

// Partial alignment cost; compared as (distance, -correct, insertions,
// substitutions).
struct Cost {
  std::size_t c = 0, s = 0, d = 0, i = 0;
  bool valid = false;

  auto Key() const { return std::make_tuple(s + d + i, -static_cast<long>(c), i, s); }
  bool operator<(const Cost &o) const {
    if (!valid) return false;
    if (!o.valid) return true;
    return Key() < o.Key();
  }
};

Cost Step(Cost base, char op) {
  switch (op) {
    case 'C': ++base.c; break;
    case 'S': ++base.s; break;
    case 'D': ++base.d; break;
    case 'I': ++base.i; break;
  }
  return base;
}

void Relax(Cost &target, const Cost &candidate) {
  if (candidate.valid && candidate < target) target = candidate;
}

AlignmentCounts ToCounts(const Cost &c, std::size_t ref_len) {
  return {c.c, c.s, c.d, c.i, ref_len};
}

}  // namespace

AlignmentCounts Align(const std::vector<std::string> &hyp, const std::vector<std::string> &ref) {
  const std::size_t n = hyp.size(), m = ref.size();
  std::vector<std::vector<Cost>> dp(n + 1, std::vector<Cost>(m + 1));
  dp[0][0].valid = true;
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = 0; j <= m; ++j) {
      if (i > 0 && j > 0) Relax(dp[i][j], Step(dp[i - 1][j - 1], hyp[i - 1] == ref[j - 1] ? 'C' : 'S'));
      if (i > 0) Relax(dp[i][j], Step(dp[i - 1][j], 'I'));
      if (j > 0) Relax(dp[i][j], Step(dp[i][j - 1], 'D'));
    }
  }
  return ToCounts(dp[n][m], m);
}

std::string SurfaceOnly(const std::string &token) {
  auto slash = token.rfind('/');
  return slash == std::string::npos ? token : token.substr(0, slash);
}

std::vector<std::vector<std::string>> NodeTokens(const MorphemeGraph &graph, const Lexicon &lexicon,
                                                 bool surface_only) {
  std::vector<std::vector<std::string>> out;
  for (const auto &node : graph.nodes) {
    auto tokens = MorphemeTokens(lexicon.entry(node.entry));
    if (surface_only)
      for (auto &t : tokens) t = SurfaceOnly(t);
    out.push_back(std::move(tokens));
  }
  return out;
}

AlignmentCounts OracleAlign(const MorphemeGraph &graph, const Lexicon &lexicon,
                            const std::vector<std::string> &ref_in, bool surface_only) {
  std::vector<std::string> ref = ref_in;
  if (surface_only)
    for (auto &t : ref) t = SurfaceOnly(t);
  const std::size_t m = ref.size();
  auto deletions_only = [&] {
    Cost c;
    c.valid = true;
    c.d = m;
    return ToCounts(c, m);
  };
  if (graph.empty()) return deletions_only();

  const auto tokens = NodeTokens(graph, lexicon, surface_only);
  const std::size_t n = graph.nodes.size();
  std::vector<std::vector<std::int32_t>> preds(n);
  std::vector<std::int32_t> finals;
  for (auto [a, b] : graph.edges) {
    if (b == MorphemeGraph::kEos) {
      if (a >= 0) finals.push_back(a);
    } else if (b >= 0) {
      preds[b].push_back(a);
    }
  }

  // Row for BOS: the first j reference tokens deleted.
  std::vector<Cost> bos(m + 1);
  bos[0].valid = true;
  for (std::size_t j = 1; j <= m; ++j) bos[j] = Step(bos[j - 1], 'D');

  // out_row[v][j]: best cost after node v's last token with ref[:j] used.
  std::vector<std::vector<Cost>> out_row(n);
  for (std::size_t v = 0; v < n; ++v) {
    std::vector<Cost> row(m + 1);
    for (auto p : preds[v]) {
      const auto &src = p < 0 ? bos : out_row[p];
      for (std::size_t j = 0; j <= m; ++j) Relax(row[j], src[j]);
    }
    for (const auto &tok : tokens[v]) {
      std::vector<Cost> next(m + 1);
      for (std::size_t j = 0; j <= m; ++j) {
        if (row[j].valid) Relax(next[j], Step(row[j], 'I'));
        if (j > 0 && row[j - 1].valid) Relax(next[j], Step(row[j - 1], tok == ref[j - 1] ? 'C' : 'S'));
      }
      for (std::size_t j = 1; j <= m; ++j)
        if (next[j - 1].valid) Relax(next[j], Step(next[j - 1], 'D'));
      row = std::move(next);
    }
    out_row[v] = std::move(row);
  }
  Cost best;
  for (auto f : finals) Relax(best, out_row[f][m]);
  if (!best.valid) return deletions_only();
  return ToCounts(best, m);
}

Metrics ComputeMetrics(const AlignmentCounts &c) {
  if (c.ref_len == 0) throw ParseError("metrics need a non-empty reference");
  const double n = static_cast<double>(c.ref_len);
  return {static_cast<double>(c.correct) / n,
          (static_cast<double>(c.correct) - static_cast<double>(c.insertions)) / n};
}

void WriteReport(std::ostream &out, const std::string &title, const std::vector<UtteranceScore> &rows) {
  char buf[256];
  out << "# " << title << '\n';
  std::snprintf(buf, sizeof buf, "%-16s %6s %5s %5s %5s %5s %8s %8s\n", "utterance", "N", "C", "S", "D",
                "I", "%corr", "acc");
  out << buf;
  AlignmentCounts total;
  double macro_corr = 0.0, macro_acc = 0.0;
  std::size_t scored = 0;
  for (const auto &row : rows) {
    const auto &c = row.counts;
    total += c;
    std::string corr = "-", acc = "-";
    if (c.ref_len > 0) {
      auto m = ComputeMetrics(c);
      macro_corr += m.pct_correct;
      macro_acc += m.accuracy;
      ++scored;
      std::snprintf(buf, sizeof buf, "%.2f", 100.0 * m.pct_correct);
      corr = buf;
      std::snprintf(buf, sizeof buf, "%.2f", 100.0 * m.accuracy);
      acc = buf;
    }
    std::snprintf(buf, sizeof buf, "%-16s %6zu %5zu %5zu %5zu %5zu %8s %8s\n", row.id.c_str(), c.ref_len,
                  c.correct, c.substitutions, c.deletions, c.insertions, corr.c_str(), acc.c_str());
    out << buf;
  }
  Metrics pooled;
  if (total.ref_len > 0) pooled = ComputeMetrics(total);
  std::snprintf(buf, sizeof buf, "%-16s %6zu %5zu %5zu %5zu %5zu %8.2f %8.2f\n", "pooled", total.ref_len,
                total.correct, total.substitutions, total.deletions, total.insertions,
                100.0 * pooled.pct_correct, 100.0 * pooled.accuracy);
  out << buf;
  if (scored > 0) {
    std::snprintf(buf, sizeof buf, "%-16s %6s %5s %5s %5s %5s %8.2f %8.2f\n", "macro", "", "", "", "", "",
                  100.0 * macro_corr / static_cast<double>(scored),
                  100.0 * macro_acc / static_cast<double>(scored));
    out << buf;
  }
  std::snprintf(buf, sizeof buf,
                "summary utts=%zu ref_len=%zu C=%zu S=%zu D=%zu I=%zu pct_correct=%.4f accuracy=%.4f\n",
                rows.size(), total.ref_len, total.correct, total.substitutions, total.deletions,
                total.insertions, pooled.pct_correct, pooled.accuracy);
  out << buf;
}

}  // namespace pairlm
