#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "downclose/error.hpp"

namespace downclose {

// Letters are indices into a PriorityAlphabet. Alphabets derived from another
// one (flattening, hash extension) keep the indices of the original letters.
using Letter = std::uint32_t;
using Word = std::vector<Letter>;

// Length first, then lexicographic on letter indices.
struct ShortLex {
  bool operator()(const Word& a, const Word& b) const {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  }
};

using WordSet = std::set<Word, ShortLex>;

inline Word concat(std::span<const Letter> a, std::span<const Letter> b) {
  Word out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

class PriorityAlphabet {
 public:
  PriorityAlphabet() = default;

  explicit PriorityAlphabet(const std::vector<std::pair<std::string, int>>& letters) {
    for (const auto& [token, priority] : letters) add(token, priority);
  }

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }

  const std::string& token(Letter a) const {
    check(a);
    return tokens_[a];
  }

  int priority(Letter a) const {
    check(a);
    return priorities_[a];
  }

  // d: the largest assigned priority (0 for an empty alphabet).
  int max_priority() const { return max_priority_; }

  bool contains(Letter a) const { return a < tokens_.size(); }

  std::optional<Letter> find(std::string_view token) const {
    auto it = index_.find(token);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  Letter letter(std::string_view token) const {
    if (auto a = find(token)) return *a;
    throw AlphabetMismatch("unknown letter '" + std::string(token) + "'");
  }

  std::vector<Letter> letters() const {
    std::vector<Letter> out(size());
    std::iota(out.begin(), out.end(), Letter{0});
    return out;
  }

  // Sigma_{=p}
  std::vector<Letter> letters_with_priority(int p) const {
    std::vector<Letter> out;
    for (Letter a = 0; a < size(); ++a)
      if (priorities_[a] == p) out.push_back(a);
    return out;
  }

  // Sigma_{<=p}
  std::vector<Letter> letters_up_to(int p) const {
    std::vector<Letter> out;
    for (Letter a = 0; a < size(); ++a)
      if (priorities_[a] <= p) out.push_back(a);
    return out;
  }

  // Each priority >= 1 is carried by at most one letter; priority 0 may be
  // shared.
  bool is_flat() const {
    std::set<int> seen;
    for (int p : priorities_)
      if (p >= 1 && !seen.insert(p).second) return false;
    return true;
  }

  bool same_tokens(const PriorityAlphabet& other) const { return tokens_ == other.tokens_; }

  // Copy with one more letter appended (existing indices unchanged).
  PriorityAlphabet with_letter(std::string token, int priority) const {
    PriorityAlphabet out = *this;
    out.add(std::move(token), priority);
    return out;
  }

  // Copy with the same tokens and new priorities.
  PriorityAlphabet with_priorities(const std::vector<int>& priorities) const {
    if (priorities.size() != size()) throw PreconditionError("priority vector has the wrong length");
    std::vector<std::pair<std::string, int>> letters;
    for (Letter a = 0; a < size(); ++a) letters.emplace_back(tokens_[a], priorities[a]);
    return PriorityAlphabet(letters);
  }

  void check(Letter a) const {
    if (!contains(a)) throw AlphabetMismatch("letter index " + std::to_string(a) + " outside alphabet");
  }

  void check(std::span<const Letter> w) const {
    for (Letter a : w) check(a);
  }

  friend bool operator==(const PriorityAlphabet& a, const PriorityAlphabet& b) {
    return a.tokens_ == b.tokens_ && a.priorities_ == b.priorities_;
  }

 private:
  void add(std::string token, int priority) {
    if (token.empty()) throw InvalidInput("letter tokens must be non-empty");
    if (token.find(',') != std::string::npos) throw InvalidInput("letter token '" + token + "' contains a comma");
    if (priority < 0) throw InvalidInput("letter '" + token + "' has a negative priority");
    if (index_.count(token)) throw InvalidInput("duplicate letter '" + token + "'");
    index_.emplace(token, static_cast<Letter>(tokens_.size()));
    tokens_.push_back(std::move(token));
    priorities_.push_back(priority);
    max_priority_ = std::max(max_priority_, priority);
  }

  std::vector<std::string> tokens_;
  std::vector<int> priorities_;
  std::map<std::string, Letter, std::less<>> index_;
  int max_priority_ = 0;
};

// Words are written as comma-separated tokens ("0a,1b,0a"); whitespace also
// separates, so "0a 1b 0a" parses the same. The empty string is the empty
// word.
inline Word parse_word(const PriorityAlphabet& alphabet, std::string_view text) {
  Word out;
  std::string token;
  auto flush = [&] {
    if (!token.empty()) out.push_back(alphabet.letter(token));
    token.clear();
  };
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '\t' || c == '\n' || c == '\r')
      flush();
    else
      token.push_back(c);
  }
  flush();
  return out;
}

inline std::string format_word(const PriorityAlphabet& alphabet, std::span<const Letter> w,
                               std::string_view separator = ",") {
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) out += separator;
    out += alphabet.token(w[i]);
  }
  return out;
}

// A linearization of the priority preorder: letters sorted by (priority,
// token) receive the distinct priorities 1..|alphabet|.
inline PriorityAlphabet flatten(const PriorityAlphabet& alphabet) {
  std::vector<Letter> order = alphabet.letters();
  std::sort(order.begin(), order.end(), [&](Letter a, Letter b) {
    if (alphabet.priority(a) != alphabet.priority(b)) return alphabet.priority(a) < alphabet.priority(b);
    return alphabet.token(a) < alphabet.token(b);
  });
  std::vector<int> priorities(alphabet.size());
  for (std::size_t i = 0; i < order.size(); ++i) priorities[order[i]] = static_cast<int>(i) + 1;
  return alphabet.with_priorities(priorities);
}

// Like flatten, but the priority-0 letters keep priority 0 and only the
// positive letters are linearized, to 1..k. Still refines the block order.
inline PriorityAlphabet flatten_positive(const PriorityAlphabet& alphabet) {
  std::vector<Letter> order;
  for (Letter a : alphabet.letters())
    if (alphabet.priority(a) > 0) order.push_back(a);
  std::sort(order.begin(), order.end(), [&](Letter a, Letter b) {
    if (alphabet.priority(a) != alphabet.priority(b)) return alphabet.priority(a) < alphabet.priority(b);
    return alphabet.token(a) < alphabet.token(b);
  });
  std::vector<int> priorities(alphabet.size(), 0);
  for (std::size_t i = 0; i < order.size(); ++i) priorities[order[i]] = static_cast<int>(i) + 1;
  return alphabet.with_priorities(priorities);
}

// All words of length <= n, in short-lex order.
inline std::vector<Word> all_words(const PriorityAlphabet& alphabet, std::size_t n) {
  std::vector<Word> out{Word{}};
  std::size_t begin = 0;
  for (std::size_t len = 1; len <= n; ++len) {
    std::size_t end = out.size();
    for (std::size_t i = begin; i < end; ++i)
      for (Letter a = 0; a < alphabet.size(); ++a) {
        Word w = out[i];
        w.push_back(a);
        out.push_back(std::move(w));
      }
    begin = end;
  }
  return out;
}

}  // namespace downclose
