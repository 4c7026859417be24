#include "pairlm/tagcore.h"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace pairlm {

namespace {

std::string WithLine(const std::string &message, int line) {
  if (line <= 0) return message;
  return "line " + std::to_string(line) + ": " + message;
}

std::ifstream OpenOrThrow(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return in;
}

bool HasSpace(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

ParseError::ParseError(const std::string &message, int line)
    : std::runtime_error(WithLine(message, line)), line_(line) {}

std::string_view Trim(std::string_view text) {
  std::size_t b = 0, e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  return text.substr(b, e - b);
}

std::string_view StripComment(std::string_view line) {
  auto pos = line.find('#');
  return pos == std::string_view::npos ? line : line.substr(0, pos);
}

std::vector<std::string> SplitWhitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> SplitFields(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find(sep, start);
    auto field = text.substr(start, pos == std::string_view::npos ? std::string_view::npos
                                                                  : pos - start);
    out.emplace_back(Trim(field));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// PhonemeAlphabet

PhonemeAlphabet::PhonemeAlphabet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    const auto &s = symbols_[i];
    if (s.empty() || HasSpace(s))
      throw ParseError("empty or blank phoneme symbol");
    if (s.find_first_of(kReservedChars) != std::string::npos)
      throw ParseError("phoneme symbol '" + s + "' contains a reserved character");
    if (s == PhonTag::kDeletion || s == PhonTag::kPauseText)
      throw ParseError("phoneme symbol '" + s + "' collides with a tag keyword");
    if (!index_.emplace(s, i).second) throw ParseError("duplicate phoneme symbol '" + s + "'");
    vowel_.push_back(IsVowelSymbol(s));
  }
}

PhonemeAlphabet PhonemeAlphabet::Read(std::istream &in) {
  std::vector<std::string> symbols;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto fields = SplitWhitespace(StripComment(line));
    if (fields.empty()) continue;
    if (fields.size() != 1) throw ParseError("expected one symbol per line", lineno);
    symbols.push_back(fields[0]);
  }
  try {
    return PhonemeAlphabet(std::move(symbols));
  } catch (const ParseError &e) {
    throw ParseError(std::string("alphabet: ") + e.what());
  }
}

PhonemeAlphabet PhonemeAlphabet::Load(const std::string &path) {
  auto in = OpenOrThrow(path);
  return Read(in);
}

std::optional<std::size_t> PhonemeAlphabet::index(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool PhonemeAlphabet::IsVowelSymbol(std::string_view symbol) {
  return symbol.find_first_of("aeiou") != std::string_view::npos;
}

// ---------------------------------------------------------------------------
// CodaTable

CodaTable CodaTable::Read(std::istream &in, const PhonemeAlphabet &alphabet) {
  static const std::set<std::string, std::less<>> kSevenCodas = {"k", "n", "t", "l",
                                                                 "m", "p", "ng"};
  CodaTable table;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto f = SplitWhitespace(StripComment(line));
    if (f.empty()) continue;
    if (f.size() < 2) throw ParseError("expected: token neutralized [components...]", lineno);
    Coda coda{f[0], f[1], {}};
    if (!kSevenCodas.count(coda.neutralized))
      throw ParseError("'" + coda.neutralized + "' is not one of the seven coda phonemes", lineno);
    if (f.size() == 2) {
      coda.components = {coda.token};
    } else {
      coda.components.assign(f.begin() + 2, f.end());
    }
    for (const auto &c : coda.components)
      if (!alphabet.contains(c)) throw ParseError("unknown phoneme '" + c + "'", lineno);
    if (coda.token.find_first_of(kReservedChars) != std::string::npos)
      throw ParseError("coda token '" + coda.token + "' contains a reserved character", lineno);
    if (!table.codas_.emplace(coda.token, coda).second)
      throw ParseError("duplicate coda token '" + coda.token + "'", lineno);
  }
  return table;
}

CodaTable CodaTable::Load(const std::string &path, const PhonemeAlphabet &alphabet) {
  auto in = OpenOrThrow(path);
  return Read(in, alphabet);
}

bool CodaTable::contains(std::string_view token) const { return codas_.find(token) != codas_.end(); }

const CodaTable::Coda &CodaTable::at(std::string_view token) const {
  auto it = codas_.find(token);
  if (it == codas_.end()) throw ParseError("unknown coda token '" + std::string(token) + "'");
  return it->second;
}

std::optional<std::string> CodaTable::TokenFor(const std::vector<std::string> &phonemes) const {
  for (const auto &[token, coda] : codas_)
    if (coda.components == phonemes) return token;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// PhonTag

PhonTag PhonTag::Unchanged(std::string boundary) {
  PhonTag t;
  t.kind = PhonTagKind::kUnchanged;
  t.boundary = std::move(boundary);
  return t;
}

PhonTag PhonTag::PronouncedAs(std::string source, std::string target) {
  PhonTag t;
  t.kind = PhonTagKind::kPronouncedAs;
  t.source = std::move(source);
  t.target = std::move(target);
  return t;
}

PhonTag PhonTag::Neutralized(std::string source, std::string target) {
  PhonTag t;
  t.kind = PhonTagKind::kNeutralized;
  t.source = std::move(source);
  t.target = std::move(target);
  return t;
}

PhonTag PhonTag::Pause() { return PhonTag{}; }

std::optional<std::string> PhonTag::EdgePhoneme() const {
  switch (kind) {
    case PhonTagKind::kUnchanged:
      return boundary;
    case PhonTagKind::kPronouncedAs:
    case PhonTagKind::kNeutralized:
      if (IsDeletion()) return std::nullopt;
      return target;
    case PhonTagKind::kPause:
      return std::nullopt;
  }
  return std::nullopt;
}

std::string RenderPhonTag(const PhonTag &tag) {
  switch (tag.kind) {
    case PhonTagKind::kUnchanged:
      return "P-" + tag.boundary;
    case PhonTagKind::kPronouncedAs:
      return "P" + tag.source + "=" + tag.target;
    case PhonTagKind::kNeutralized:
      return "P" + tag.source + "2" + tag.target;
    case PhonTagKind::kPause:
      return std::string(PhonTag::kPauseText);
  }
  return {};
}

PhonTag ParsePhonTag(std::string_view text, const Inventory &inventory) {
  const std::string quoted = "'" + std::string(text) + "'";
  if (text == PhonTag::kPauseText) return PhonTag::Pause();
  if (text.size() < 2 || text[0] != 'P')
    throw ParseError("phonological tag " + quoted + " must start with 'P'");
  auto body = text.substr(1);
  if (body[0] == '-') {
    std::string boundary(body.substr(1));
    if (!inventory.alphabet.contains(boundary))
      throw ParseError("unknown phoneme '" + boundary + "' in tag " + quoted);
    return PhonTag::Unchanged(boundary);
  }
  auto eq = body.find('=');
  auto two = body.find('2');
  if (eq != std::string_view::npos && two != std::string_view::npos)
    throw ParseError("tag " + quoted + " has both '=' and '2'");
  if (eq == std::string_view::npos && two == std::string_view::npos)
    throw ParseError("tag " + quoted + " has no '-', '=' or '2'");
  const bool neutralized = two != std::string_view::npos;
  const auto sep = neutralized ? two : eq;
  if (body.find(neutralized ? '2' : '=', sep + 1) != std::string_view::npos)
    throw ParseError("tag " + quoted + " has more than one separator");
  std::string source(body.substr(0, sep));
  std::string target(body.substr(sep + 1));
  if (source.empty() || !inventory.IsTagToken(source))
    throw ParseError("unknown source token '" + source + "' in tag " + quoted);
  if (target == PhonTag::kDeletion) {
    if (neutralized) throw ParseError("deletion target 'X' requires '=' in tag " + quoted);
  } else if (!inventory.alphabet.contains(target)) {
    throw ParseError("unknown target phoneme '" + target + "' in tag " + quoted);
  }
  return neutralized ? PhonTag::Neutralized(source, target) : PhonTag::PronouncedAs(source, target);
}

// ---------------------------------------------------------------------------
// MorphTagSet

MorphTagSet MorphTagSet::Read(std::istream &in) {
  MorphTagSet set;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto body = Trim(StripComment(line));
    if (body.empty()) continue;
    auto f = SplitWhitespace(body);
    const auto &tag = f[0];
    if (tag == kBoundaryMorphTag) throw ParseError("tag SB is reserved", lineno);
    if (tag.find_first_of("*?|,") != std::string::npos)
      throw ParseError("tag '" + tag + "' contains a reserved character", lineno);
    std::string desc(Trim(body.substr(tag.size())));
    if (!set.tags_.emplace(tag, desc).second)
      throw ParseError("duplicate tag '" + tag + "'", lineno);
    for (std::size_t n = 1; n <= tag.size(); ++n) set.prefixes_.insert(tag.substr(0, n));
  }
  return set;
}

MorphTagSet MorphTagSet::Load(const std::string &path) {
  auto in = OpenOrThrow(path);
  return Read(in);
}

bool MorphTagSet::contains(std::string_view tag) const { return prefixes_.count(tag) > 0; }

// ---------------------------------------------------------------------------
// TagPattern

TagPattern::TagPattern(std::string text) : text_(std::move(text)) {
  if (text_.empty()) throw ParseError("empty tag pattern");
  if (HasSpace(text_)) throw ParseError("tag pattern '" + text_ + "' contains whitespace");
  auto star = text_.find('*');
  if (star != std::string::npos && star + 1 != text_.size())
    throw ParseError("'*' must be the last character of pattern '" + text_ + "'");
}

bool TagPattern::HasWildcards() const { return text_.find_first_of("*?") != std::string::npos; }

bool TagPattern::Matches(std::string_view tag) const {
  const bool open = text_.back() == '*';
  const std::size_t fixed = open ? text_.size() - 1 : text_.size();
  if (open ? tag.size() < fixed : tag.size() != fixed) return false;
  for (std::size_t i = 0; i < fixed; ++i)
    if (text_[i] != '?' && text_[i] != tag[i]) return false;
  return true;
}

bool MatchPattern(const TagPattern &pattern, std::string_view tag) { return pattern.Matches(tag); }

}  // namespace pairlm
