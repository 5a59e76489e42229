#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace affect {

enum class TokenKind { word, hashtag_word, special };

struct Token {
  std::string surface;
  TokenKind kind = TokenKind::word;

  bool operator==(const Token&) const = default;
};

inline Token word_token(std::string s) { return {std::move(s), TokenKind::word}; }
inline Token special_token(std::string s) { return {std::move(s), TokenKind::special}; }

inline constexpr const char* kUnkToken = "<unk>";
inline constexpr const char* kPadToken = "<pad>";
inline constexpr const char* kUrlToken = "<url>";
inline constexpr const char* kUserToken = "<user>";
inline constexpr const char* kNumberToken = "<number>";

bool is_special_surface(const std::string& s);

// Deterministic tweet tokenizer. Rules, applied per whitespace-separated
// chunk and in this order:
//   1. http://, https://, www. prefix (case-insensitive)  -> <url>
//   2. @name                                              -> <user>
//   3. #tag                                               -> "tag" (hashtag-word)
//   4. all-digit runs                                     -> <number>
//   5. lower-cased words with leading/trailing ASCII punctuation split off
//      as single-character tokens; emoji code points become standalone
//      word tokens.
std::vector<Token> tokenize(const std::string& text);

class Vocabulary {
 public:
  // Builds the vocabulary of all tokens with corpus frequency >= min_count,
  // plus the special tokens which are always present. <unk> and <pad> are
  // pinned to indices 0 and 1; everything else is ordered by descending
  // count, ties broken lexicographically.
  static Vocabulary build(const std::vector<std::vector<Token>>& corpus,
                          int64_t min_count);

  // Reconstructs a vocabulary from explicit (token, count) entries, e.g.
  // from a vocabulary file or an embedding file. Inserts <unk>/<pad> at the
  // front when missing; otherwise they must already sit at indices 0 and 1.
  static Vocabulary from_entries(std::vector<std::pair<std::string, int64_t>> entries);

  int64_t size() const { return static_cast<int64_t>(entries_.size()); }
  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  // -1 when absent.
  int64_t find(const std::string& token) const;
  const std::string& token_at(int64_t index) const { return entries_[index].first; }
  int64_t count_at(int64_t index) const { return entries_[index].second; }
  const std::vector<std::pair<std::string, int64_t>>& entries() const { return entries_; }

  static constexpr int64_t unk_index() { return 0; }
  static constexpr int64_t pad_index() { return 1; }

  void save_tsv(const std::string& path) const;
  static Vocabulary load_tsv(const std::string& path);

 private:
  std::vector<std::pair<std::string, int64_t>> entries_;
  std::unordered_map<std::string, int64_t> index_;
};

// Out-of-vocabulary tokens map to <unk>; length is preserved.
std::vector<int64_t> encode(const std::vector<Token>& tokens, const Vocabulary& vocab);

}  // namespace affect
