#include "pairlm/connectivity.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace pairlm {

void ConnectivityMatrix::Add(MatrixEntry entry) {
  if (entry.left.empty() || entry.right.empty())
    throw ParseError("matrix entry needs at least one pattern on each side");
  entries_.push_back(std::move(entry));
}

bool ConnectivityMatrix::Allows(std::string_view left_tag, std::string_view right_tag) const {
  auto any = [](const std::vector<TagPattern> &pats, std::string_view tag) {
    return std::any_of(pats.begin(), pats.end(), [&](const TagPattern &p) { return p.Matches(tag); });
  };
  return std::any_of(entries_.begin(), entries_.end(), [&](const MatrixEntry &e) {
    return any(e.left, left_tag) && any(e.right, right_tag);
  });
}

bool MatrixAllows(const ConnectivityMatrix &matrix, std::string_view left_tag,
                  std::string_view right_tag) {
  return matrix.Allows(left_tag, right_tag);
}

namespace {

void ValidatePattern(const TagPattern &pattern, MatrixKind kind, const Inventory *inventory,
                     const MorphTagSet *tagset) {
  const auto &text = pattern.text();
  if (kind == MatrixKind::kPhonological) {
    if (text[0] != 'P' && text[0] != '?')
      throw ParseError("phonological pattern '" + text + "' must start with 'P'");
    if (inventory && !pattern.HasWildcards()) ParsePhonTag(text, *inventory);
  } else {
    if (tagset && !pattern.HasWildcards() && text != kBoundaryMorphTag && !tagset->contains(text))
      throw ParseError("unknown morphological tag '" + text + "'");
  }
}

std::vector<TagPattern> ParsePatternSet(std::string_view text, MatrixKind kind,
                                        const Inventory *inventory, const MorphTagSet *tagset) {
  std::vector<TagPattern> out;
  for (auto &field : SplitFields(text, ',')) {
    TagPattern pattern(field);
    ValidatePattern(pattern, kind, inventory, tagset);
    out.push_back(std::move(pattern));
  }
  return out;
}

}  // namespace

ConnectivityMatrix ParseMatrix(std::istream &in, MatrixKind kind, const Inventory *inventory,
                               const MorphTagSet *tagset) {
  ConnectivityMatrix matrix(kind);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto sides = SplitWhitespace(StripComment(line));
    if (sides.empty()) continue;
    if (sides.size() != 2)
      throw ParseError("expected 'left-set  right-set', got " + std::to_string(sides.size()) +
                           " fields",
                       lineno);
    try {
      matrix.Add({ParsePatternSet(sides[0], kind, inventory, tagset),
                  ParsePatternSet(sides[1], kind, inventory, tagset)});
    } catch (const ParseError &err) {
      throw ParseError(err.what(), lineno);
    }
  }
  return matrix;
}

ConnectivityMatrix LoadMatrix(const std::string &path, MatrixKind kind, const Inventory *inventory,
                              const MorphTagSet *tagset) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  try {
    return ParseMatrix(in, kind, inventory, tagset);
  } catch (const ParseError &err) {
    throw ParseError(path + ": " + err.what());
  }
}

void WriteMatrix(std::ostream &out, const ConnectivityMatrix &matrix) {
  auto join = [](const std::vector<TagPattern> &pats) {
    std::string s;
    for (const auto &p : pats) s += (s.empty() ? "" : ",") + p.text();
    return s;
  };
  for (const auto &e : matrix.entries()) out << join(e.left) << "  " << join(e.right) << '\n';
}

const DictEntry &BoundaryEntry() {
  static const DictEntry boundary = [] {
    DictEntry e;
    e.surface = "<s>";
    e.left_morph = e.right_morph = std::string(kBoundaryMorphTag);
    e.left_phon = e.right_phon = PhonTag::Pause();
    return e;
  }();
  return boundary;
}

bool Connectable(const DictEntry &a, const DictEntry &b, const ConnectivityMatrix &phon,
                 const ConnectivityMatrix &morph) {
  return morph.Allows(a.right_morph, b.left_morph) &&
         phon.Allows(RenderPhonTag(a.right_phon), RenderPhonTag(b.left_phon));
}

PairwiseLicense::PairwiseLicense(const Lexicon &lexicon, const ConnectivityMatrix &phon,
                                 const ConnectivityMatrix &morph) {
  // A class is the (morph tag, phon tag) pair an entry shows on one side.
  using Side = std::pair<std::string, std::string>;
  std::map<Side, std::size_t> rights, lefts;
  auto intern = [](std::map<Side, std::size_t> &m, Side s) {
    return m.emplace(std::move(s), m.size()).first->second;
  };
  for (const auto &e : lexicon.entries()) {
    right_class_.push_back(intern(rights, {e.right_morph, RenderPhonTag(e.right_phon)}));
    left_class_.push_back(intern(lefts, {e.left_morph, RenderPhonTag(e.left_phon)}));
  }
  const auto &b = BoundaryEntry();
  boundary_right_ = intern(rights, {b.right_morph, RenderPhonTag(b.right_phon)});
  boundary_left_ = intern(lefts, {b.left_morph, RenderPhonTag(b.left_phon)});
  num_right_ = rights.size();
  num_left_ = lefts.size();
  table_.assign(num_right_ * num_left_, 0);
  for (const auto &[r, ri] : rights)
    for (const auto &[l, li] : lefts)
      table_[ri * num_left_ + li] = morph.Allows(r.first, l.first) && phon.Allows(r.second, l.second);
}

LintReport LintPhonMatrix(const Lexicon &lexicon, const ConnectivityMatrix &phon) {
  LintReport report;
  std::set<std::string> right_tags, left_tags;
  const std::string pause(PhonTag::kPauseText);
  right_tags.insert(pause);
  left_tags.insert(pause);
  for (const auto &e : lexicon.entries()) {
    right_tags.insert(RenderPhonTag(e.right_phon));
    left_tags.insert(RenderPhonTag(e.left_phon));
    if (e.right_phon.kind == PhonTagKind::kNeutralized) {
      auto tag = RenderPhonTag(e.right_phon);
      if (!phon.Allows(tag, pause) &&
          std::find(report.missing_pause.begin(), report.missing_pause.end(), tag) ==
              report.missing_pause.end())
        report.missing_pause.push_back(tag);
    }
  }
  std::set<std::string> seen;
  auto check = [&](const std::vector<TagPattern> &pats, const std::set<std::string> &tags) {
    for (const auto &p : pats) {
      bool hit = std::any_of(tags.begin(), tags.end(), [&](const std::string &t) { return p.Matches(t); });
      if (!hit && seen.insert(p.text()).second) report.unreachable_patterns.push_back(p.text());
    }
  };
  for (const auto &e : phon.entries()) {
    check(e.left, right_tags);
    check(e.right, left_tags);
  }
  std::sort(report.missing_pause.begin(), report.missing_pause.end());
  return report;
}

}  // namespace pairlm
