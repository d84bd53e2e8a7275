#pragma once

// Brute-force reference deciders that follow the textbook definitions as
// literally as possible: every candidate witness is enumerated explicitly.
// They share no code with the library deciders beyond the alphabet type.

#include <functional>
#include <vector>

#include "downclose/alphabet.hpp"

namespace oracle_defs {

using downclose::Letter;
using downclose::PriorityAlphabet;
using downclose::Word;

// Calls f on every strictly increasing sequence of k indices drawn from [lo, hi).
inline bool any_increasing(std::size_t k, std::size_t lo, std::size_t hi,
                           const std::function<bool(const std::vector<std::size_t>&)>& f) {
  std::vector<std::size_t> pick;
  std::function<bool(std::size_t)> rec = [&](std::size_t from) -> bool {
    if (pick.size() == k) return f(pick);
    for (std::size_t i = from; i < hi; ++i) {
      if (hi - i < k - pick.size()) break;
      pick.push_back(i);
      if (rec(i + 1)) return true;
      pick.pop_back();
    }
    return false;
  };
  return rec(lo);
}

// u is obtained from v by deleting letters: some increasing position map
// sends each letter of u onto an equal letter of v.
inline bool subword(const Word& u, const Word& v) {
  return any_increasing(u.size(), 0, v.size(), [&](const std::vector<std::size_t>& pos) {
    for (std::size_t i = 0; i < u.size(); ++i)
      if (u[i] != v[pos[i]]) return false;
    return true;
  });
}

// v = v_1 u_1 ... v_k u_k where each v_i only has letters of priority at most
// that of u_i. Enumerates the positions of the kept letters u_1..u_k in v.
inline bool priority(const PriorityAlphabet& al, const Word& u, const Word& v) {
  if (u.empty()) return true;
  return any_increasing(u.size(), 0, v.size(), [&](const std::vector<std::size_t>& pos) {
    if (pos.back() + 1 != v.size()) return false;
    std::size_t start = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (v[pos[i]] != u[i]) return false;
      for (std::size_t j = start; j < pos[i]; ++j)
        if (al.priority(v[j]) > al.priority(u[i])) return false;
      start = pos[i] + 1;
    }
    return true;
  });
}

struct Split {
  std::vector<Word> blocks;
  std::vector<Letter> seps;
};

inline Split split_at(const PriorityAlphabet& al, const Word& w, int p) {
  Split s;
  s.blocks.emplace_back();
  for (Letter a : w) {
    if (al.priority(a) == p) {
      s.seps.push_back(a);
      s.blocks.emplace_back();
    } else {
      s.blocks.back().push_back(a);
    }
  }
  return s;
}

// Block order. With p the largest priority in u and v: for p = 0 (or two
// empty words) it is the subword order; otherwise every strictly monotone
// block map phi with phi(0) = 0 and phi(n) = m is tried, requiring recursive
// domination of each block and each separator x_i to occur among the
// separators y_phi(i) .. y_phi(i+1)-1.
inline bool block(const PriorityAlphabet& al, const Word& u, const Word& v) {
  int p = -1;
  for (Letter a : u) p = std::max(p, al.priority(a));
  for (Letter a : v) p = std::max(p, al.priority(a));
  if (p <= 0) return subword(u, v);
  const Split su = split_at(al, u, p), sv = split_at(al, v, p);
  const std::size_t n = su.seps.size(), m = sv.seps.size();
  if (n == 0) return m == 0 && block(al, su.blocks[0], sv.blocks[0]);
  if (n > m) return false;
  // phi(0) = 0 and phi(n) = m are fixed; choose phi(1..n-1) inside (0, m).
  return any_increasing(n - 1, 1, m, [&](const std::vector<std::size_t>& inner) {
    std::vector<std::size_t> phi{0};
    phi.insert(phi.end(), inner.begin(), inner.end());
    phi.push_back(m);
    for (std::size_t i = 0; i <= n; ++i)
      if (!block(al, su.blocks[i], sv.blocks[phi[i]])) return false;
    for (std::size_t i = 0; i < n; ++i) {
      bool found = false;
      for (std::size_t t = phi[i]; t < phi[i + 1]; ++t) found = found || sv.seps[t] == su.seps[i];
      if (!found) return false;
    }
    return true;
  });
}

}  // namespace oracle_defs
