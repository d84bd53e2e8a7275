#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "downclose/alphabet.hpp"

namespace downclose {

enum class OrderKind { subword, priority, block };

inline std::string_view to_string(OrderKind k) {
  switch (k) {
    case OrderKind::subword: return "subword";
    case OrderKind::priority: return "priority";
    case OrderKind::block: return "block";
  }
  return "?";
}

inline OrderKind parse_order(std::string_view s) {
  if (s == "subword") return OrderKind::subword;
  if (s == "priority") return OrderKind::priority;
  if (s == "block") return OrderKind::block;
  throw ParseError("unknown order '" + std::string(s) + "'");
}

// Largest priority among the letters of w, or -1 for the empty word.
inline int max_priority(const PriorityAlphabet& alphabet, std::span<const Letter> w) {
  int p = -1;
  for (Letter a : w) p = std::max(p, alphabet.priority(a));
  return p;
}

struct BlockDecomposition {
  std::vector<Word> blocks;
  std::vector<Letter> separators;
  int level = 0;
};

inline BlockDecomposition block_decompose(const PriorityAlphabet& alphabet, std::span<const Letter> w, int p) {
  BlockDecomposition d;
  d.level = p;
  d.blocks.emplace_back();
  for (Letter a : w) {
    int q = alphabet.priority(a);
    if (q > p)
      throw PreconditionError("letter '" + alphabet.token(a) + "' exceeds decomposition level " + std::to_string(p));
    if (q == p) {
      d.separators.push_back(a);
      d.blocks.emplace_back();
    } else {
      d.blocks.back().push_back(a);
    }
  }
  return d;
}

inline bool is_subword(std::span<const Letter> u, std::span<const Letter> v) {
  std::size_t i = 0;
  for (std::size_t j = 0; j < v.size() && i < u.size(); ++j)
    if (u[i] == v[j]) ++i;
  return i == u.size();
}

// Dynamic programme over (prefix of u, matched position in v). A greedy
// leftmost match is not enough: matching u[i] later can swallow a segment
// that would otherwise be dropped under a lower-priority letter.
inline bool leq_priority(const PriorityAlphabet& alphabet, std::span<const Letter> u, std::span<const Letter> v) {
  alphabet.check(u);
  alphabet.check(v);
  if (u.empty()) return true;
  if (v.empty() || u.back() != v.back()) return false;
  const std::size_t m = v.size();
  // reach[j]: u[0..i) embeds with u[i-1] placed at v[j-1] (j = 0 only for i = 0).
  std::vector<char> reach(m + 1, 0), next(m + 1, 0);
  reach[0] = 1;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const int pu = alphabet.priority(u[i]);
    std::fill(next.begin(), next.end(), 0);
    bool cur = false;
    for (std::size_t j = 0; j < m; ++j) {
      // cur: some start j0 <= j with reach[j0] and v[j0..j) all <= pu
      if (j > 0 && alphabet.priority(v[j - 1]) > pu) cur = false;
      if (reach[j]) cur = true;
      if (cur && v[j] == u[i]) next[j + 1] = 1;
    }
    std::swap(reach, next);
  }
  return reach[m] != 0;
}

// Block order decision with a memo keyed on word content; one instance may be
// reused for many queries over the same alphabet.
class BlockOrder {
 public:
  explicit BlockOrder(const PriorityAlphabet& alphabet) : alphabet_(alphabet) {}

  bool operator()(std::span<const Letter> u, std::span<const Letter> v) {
    alphabet_.check(u);
    alphabet_.check(v);
    return leq(Word(u.begin(), u.end()), Word(v.begin(), v.end()));
  }

  void clear() { memo_.clear(); }

 private:
  bool leq(const Word& u, const Word& v) {
    if (u.size() > v.size()) return false;
    const int p = std::max(max_priority(alphabet_, u), max_priority(alphabet_, v));
    if (p <= 0) return is_subword(u, v);
    if (!is_subword(u, v)) return false;
    auto key = std::make_pair(u, v);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    bool result = decide(u, v, p);
    memo_.emplace(std::move(key), result);
    return result;
  }

  bool decide(const Word& u, const Word& v, int p) {
    const BlockDecomposition du = block_decompose(alphabet_, u, p);
    const BlockDecomposition dv = block_decompose(alphabet_, v, p);
    const std::size_t n = du.separators.size();
    const std::size_t m = dv.separators.size();
    if (n > m) return false;
    // fits[i][j]: block i of u embeds into block j of v (computed lazily)
    std::vector<std::vector<signed char>> fits(n + 1, std::vector<signed char>(m + 1, -1));
    auto fit = [&](std::size_t i, std::size_t j) {
      auto& f = fits[i][j];
      if (f < 0) f = leq(du.blocks[i], dv.blocks[j]) ? 1 : 0;
      return f == 1;
    };
    if (!fit(0, 0)) return false;
    // reach[i][j]: blocks 0..i mapped with phi(i) = j
    std::vector<std::vector<char>> reach(n + 1, std::vector<char>(m + 1, 0));
    reach[0][0] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      const Letter x = du.separators[i];
      for (std::size_t j = 0; j < m; ++j) {
        if (!reach[i][j]) continue;
        bool seen = false;
        for (std::size_t jj = j + 1; jj <= m; ++jj) {
          if (dv.separators[jj - 1] == x) seen = true;
          // phi(i+1) = jj leaves room for the remaining n-i-1 blocks
          if (seen && m - jj >= n - i - 1 && !reach[i + 1][jj] && fit(i + 1, jj)) reach[i + 1][jj] = 1;
        }
      }
    }
    return reach[n][m] != 0;
  }

  const PriorityAlphabet& alphabet_;
  std::map<std::pair<Word, Word>, bool> memo_;
};

inline bool leq_block(const PriorityAlphabet& alphabet, std::span<const Letter> u, std::span<const Letter> v) {
  BlockOrder order(alphabet);
  return order(u, v);
}

inline bool leq(OrderKind kind, const PriorityAlphabet& alphabet, std::span<const Letter> u,
                std::span<const Letter> v) {
  switch (kind) {
    case OrderKind::subword:
      alphabet.check(u);
      alphabet.check(v);
      return is_subword(u, v);
    case OrderKind::priority: return leq_priority(alphabet, u, v);
    case OrderKind::block: return leq_block(alphabet, u, v);
  }
  return false;
}

}  // namespace downclose
