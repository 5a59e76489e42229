#include "affect/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include "affect/util.hpp"

namespace affect {

namespace {

bool is_ascii_punct(char32_t cp) {
  return cp < 0x80 && std::ispunct(static_cast<unsigned char>(cp));
}

bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case U' ':
    case U'\t':
    case U'\n':
    case U'\r':
    case 0x0b:
    case 0x0c:
    case 0x85:    // NEL
    case 0xa0:    // NBSP
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202f:
    case 0x205f:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200a;
  }
}

bool is_emoji(char32_t cp) {
  return (cp >= 0x1f000 && cp <= 0x1ffff) || (cp >= 0x2600 && cp <= 0x27bf);
}

bool has_url_prefix(const std::string& chunk) {
  auto prefix = [&chunk](const char* p) {
    const size_t n = std::char_traits<char>::length(p);
    if (chunk.size() < n) return false;
    for (size_t i = 0; i < n; ++i)
      if (std::tolower(static_cast<unsigned char>(chunk[i])) != p[i]) return false;
    return true;
  };
  return prefix("http://") || prefix("https://") || prefix("www.");
}

std::string ascii_lower(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return c >= '0' && c <= '9';
  });
}

// Splits a lower-cased core into word tokens, pulling emoji code points out
// as standalone tokens and mapping all-digit runs to <number>.
void emit_core(const std::string& core, std::vector<Token>& out) {
  std::string run;
  auto flush = [&]() {
    if (run.empty()) return;
    if (all_digits(run))
      out.push_back(special_token(kNumberToken));
    else
      out.push_back(word_token(run));
    run.clear();
  };
  size_t i = 0;
  while (i < core.size()) {
    const size_t at = i;
    const char32_t cp = decode_utf8(core, i);
    if (is_emoji(cp)) {
      flush();
      out.push_back(word_token(core.substr(at, i - at)));
    } else {
      run.append(core, at, i - at);
    }
  }
  flush();
}

void tokenize_chunk(const std::string& chunk, std::vector<Token>& out) {
  if (has_url_prefix(chunk)) {
    out.push_back(special_token(kUrlToken));
    return;
  }

  // Peel trailing ASCII punctuation; emitted after the core token.
  std::string body = chunk;
  std::vector<Token> trailing;
  while (!body.empty()) {
    size_t i = 0;
    char32_t last = 0;
    size_t last_at = 0;
    while (i < body.size()) {
      last_at = i;
      last = decode_utf8(body, i);
    }
    if (!is_ascii_punct(last)) break;
    trailing.push_back(word_token(body.substr(last_at)));
    body.resize(last_at);
  }
  std::reverse(trailing.begin(), trailing.end());

  if (body.size() >= 2 && body[0] == '@') {
    out.push_back(special_token(kUserToken));
  } else if (body.size() >= 2 && body[0] == '#') {
    out.push_back({ascii_lower(body.substr(1)), TokenKind::hashtag_word});
  } else if (!body.empty()) {
    // Peel leading ASCII punctuation, then emit the lower-cased core.
    size_t start = 0;
    while (start < body.size()) {
      size_t i = start;
      const char32_t cp = decode_utf8(body, i);
      if (!is_ascii_punct(cp)) break;
      out.push_back(word_token(body.substr(start, i - start)));
      start = i;
    }
    emit_core(ascii_lower(body.substr(start)), out);
  }

  out.insert(out.end(), trailing.begin(), trailing.end());
}

}  // namespace

bool is_special_surface(const std::string& s) {
  return s == kUnkToken || s == kPadToken || s == kUrlToken ||
         s == kUserToken || s == kNumberToken;
}

std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> out;
  std::string chunk;
  size_t i = 0;
  auto flush = [&]() {
    if (!chunk.empty()) {
      tokenize_chunk(chunk, out);
      chunk.clear();
    }
  };
  while (i < text.size()) {
    const size_t at = i;
    const char32_t cp = decode_utf8(text, i);
    if (is_unicode_space(cp))
      flush();
    else
      chunk.append(text, at, i - at);
  }
  flush();
  return out;
}

Vocabulary Vocabulary::build(const std::vector<std::vector<Token>>& corpus,
                             int64_t min_count) {
  if (min_count < 1) throw UserError("min_count must be >= 1");
  std::map<std::string, int64_t> counts;
  for (const auto& sent : corpus)
    for (const auto& tok : sent) ++counts[tok.surface];

  std::vector<std::pair<std::string, int64_t>> kept;
  for (const auto& [token, count] : counts) {
    if (token == kUnkToken || token == kPadToken) continue;
    if (is_special_surface(token) || count >= min_count)
      kept.emplace_back(token, count);
  }
  // Specials other than <unk>/<pad> are always present, count 0 when unseen.
  for (const char* sp : {kUrlToken, kUserToken, kNumberToken})
    if (!counts.count(sp)) kept.emplace_back(sp, 0);

  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  std::vector<std::pair<std::string, int64_t>> entries;
  entries.reserve(kept.size() + 2);
  entries.emplace_back(kUnkToken, 0);
  entries.emplace_back(kPadToken, 0);
  entries.insert(entries.end(), kept.begin(), kept.end());
  return from_entries(std::move(entries));
}

Vocabulary Vocabulary::from_entries(
    std::vector<std::pair<std::string, int64_t>> entries) {
  Vocabulary v;
  const bool has_specials = entries.size() >= 2 && entries[0].first == kUnkToken &&
                            entries[1].first == kPadToken;
  if (!has_specials) {
    for (const auto& [token, count] : entries)
      if (token == kUnkToken || token == kPadToken)
        throw UserError(std::string(token) +
                        " present but not at its reserved index");
    entries.insert(entries.begin(), {{kUnkToken, 0}, {kPadToken, 0}});
  }
  v.entries_ = std::move(entries);
  for (size_t i = 0; i < v.entries_.size(); ++i) {
    auto [it, inserted] =
        v.index_.emplace(v.entries_[i].first, static_cast<int64_t>(i));
    if (!inserted)
      throw UserError("duplicate vocabulary token: " + v.entries_[i].first);
  }
  return v;
}

int64_t Vocabulary::find(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? -1 : it->second;
}

void Vocabulary::save_tsv(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write file: " + path);
  for (const auto& [token, count] : entries_)
    out << token << '\t' << count << '\n';
  if (!out) throw UserError("write failed: " + path);
}

Vocabulary Vocabulary::load_tsv(const std::string& path) {
  std::vector<std::pair<std::string, int64_t>> entries;
  size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    const auto fields = split_fields(line, '\t');
    if (fields.size() != 2)
      throw UserError(path + ":" + std::to_string(lineno) +
                      ": expected 'token<TAB>count'");
    entries.emplace_back(fields[0],
                         parse_int(fields[1], path + ":" + std::to_string(lineno)));
  }
  return from_entries(std::move(entries));
}

std::vector<int64_t> encode(const std::vector<Token>& tokens,
                            const Vocabulary& vocab) {
  std::vector<int64_t> out;
  out.reserve(tokens.size());
  for (const auto& tok : tokens) {
    const int64_t idx = vocab.find(tok.surface);
    out.push_back(idx < 0 ? Vocabulary::unk_index() : idx);
  }
  return out;
}

}  // namespace affect
