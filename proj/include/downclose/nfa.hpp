#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "downclose/alphabet.hpp"

namespace downclose {

using State = std::uint32_t;
using Label = std::optional<Letter>;  // nullopt is epsilon

struct Transition {
  Label label;
  State dst;
  friend auto operator<=>(const Transition&, const Transition&) = default;
};

class Nfa {
 public:
  Nfa() : Nfa(PriorityAlphabet{}) {}
  explicit Nfa(PriorityAlphabet alphabet) : alphabet_(std::move(alphabet)) { add_state(); }

  const PriorityAlphabet& alphabet() const { return alphabet_; }
  std::size_t size() const { return out_.size(); }
  State initial() const { return initial_; }
  bool is_final(State q) const { return final_[q] != 0; }

  std::vector<State> finals() const {
    std::vector<State> out;
    for (State q = 0; q < size(); ++q)
      if (final_[q]) out.push_back(q);
    return out;
  }

  const std::vector<Transition>& out(State q) const { return out_[q]; }

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& e : out_) n += e.size();
    return n;
  }

  State add_state(std::string name = {}) {
    out_.emplace_back();
    final_.push_back(0);
    names_.push_back(std::move(name));
    return static_cast<State>(out_.size() - 1);
  }

  void set_initial(State q) {
    check_state(q);
    initial_ = q;
  }

  void set_final(State q, bool f = true) {
    check_state(q);
    final_[q] = f ? 1 : 0;
  }

  void add_edge(State src, Label label, State dst) {
    check_state(src);
    check_state(dst);
    if (label) alphabet_.check(*label);
    out_[src].push_back({label, dst});
  }

  // Display name; "q<i>" when none was given.
  std::string name(State q) const {
    check_state(q);
    return names_[q].empty() ? "q" + std::to_string(q) : names_[q];
  }

  void set_name(State q, std::string name) {
    check_state(q);
    names_[q] = std::move(name);
  }

  // Sorts and deduplicates every adjacency list.
  void normalize() {
    for (auto& e : out_) {
      std::sort(e.begin(), e.end());
      e.erase(std::unique(e.begin(), e.end()), e.end());
    }
  }

  // Sorted epsilon-closure of a state set.
  std::vector<State> closure(std::span<const State> states) const {
    Marks marks(size());
    std::vector<State> members;
    for (State q : states)
      if (marks.insert(q)) members.push_back(q);
    epsilon_close(marks, members);
    std::sort(members.begin(), members.end());
    return members;
  }

  std::vector<State> step(std::span<const State> states, Letter a) const {
    Marks marks(size());
    std::vector<State> members;
    for (State q : states)
      for (const auto& t : out_[q])
        if (t.label == a && marks.insert(t.dst)) members.push_back(t.dst);
    epsilon_close(marks, members);
    std::sort(members.begin(), members.end());
    return members;
  }

  bool accepts(std::span<const Letter> w) const {
    alphabet_.check(w);
    std::vector<State> cur = closure(std::vector<State>{initial_});
    for (Letter a : w) {
      cur = step(cur, a);
      if (cur.empty()) return false;
    }
    return std::any_of(cur.begin(), cur.end(), [&](State q) { return is_final(q); });
  }

  // Fewest letters needed to reach a final state from each state (max() if none).
  std::vector<std::size_t> distance_to_final() const {
    constexpr std::size_t inf = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> dist(size(), inf);
    std::vector<std::vector<std::pair<State, std::size_t>>> rev(size());
    for (State q = 0; q < size(); ++q)
      for (const auto& t : out_[q]) rev[t.dst].push_back({q, t.label ? 1u : 0u});
    std::deque<State> queue;
    for (State q = 0; q < size(); ++q)
      if (final_[q]) {
        dist[q] = 0;
        queue.push_back(q);
      }
    // 0-1 BFS
    while (!queue.empty()) {
      State q = queue.front();
      queue.pop_front();
      for (auto [p, w] : rev[q]) {
        if (dist[q] + w < dist[p]) {
          dist[p] = dist[q] + w;
          if (w == 0)
            queue.push_front(p);
          else
            queue.push_back(p);
        }
      }
    }
    return dist;
  }

  // L ∩ Σ^{<=n}, via a depth-first walk over state sets pruned by the
  // distance to a final state.
  WordSet enumerate(std::size_t n) const {
    WordSet result;
    const auto dist = distance_to_final();
    Word prefix;
    auto live = [&](const std::vector<State>& s, std::size_t remaining) {
      return std::any_of(s.begin(), s.end(), [&](State q) { return dist[q] <= remaining; });
    };
    auto walk = [&](auto&& self, const std::vector<State>& cur) -> void {
      if (std::any_of(cur.begin(), cur.end(), [&](State q) { return is_final(q); })) result.insert(prefix);
      if (prefix.size() == n) return;
      for (Letter a = 0; a < alphabet_.size(); ++a) {
        auto next = step(cur, a);
        if (next.empty() || !live(next, n - prefix.size() - 1)) continue;
        prefix.push_back(a);
        self(self, next);
        prefix.pop_back();
      }
    };
    auto start = closure(std::vector<State>{initial_});
    if (live(start, n)) walk(walk, start);
    return result;
  }

  // Removes states that are unreachable or cannot reach a final state. The
  // initial state always survives (as state 0).
  Nfa trim() const {
    std::vector<char> fwd(size(), 0), bwd(size(), 0);
    std::vector<State> stack{initial_};
    fwd[initial_] = 1;
    while (!stack.empty()) {
      State q = stack.back();
      stack.pop_back();
      for (const auto& t : out_[q])
        if (!fwd[t.dst]) {
          fwd[t.dst] = 1;
          stack.push_back(t.dst);
        }
    }
    std::vector<std::vector<State>> rev(size());
    for (State q = 0; q < size(); ++q)
      for (const auto& t : out_[q]) rev[t.dst].push_back(q);
    for (State q = 0; q < size(); ++q)
      if (final_[q]) {
        bwd[q] = 1;
        stack.push_back(q);
      }
    while (!stack.empty()) {
      State q = stack.back();
      stack.pop_back();
      for (State p : rev[q])
        if (!bwd[p]) {
          bwd[p] = 1;
          stack.push_back(p);
        }
    }
    std::vector<State> remap(size(), std::numeric_limits<State>::max());
    Nfa out(alphabet_);
    remap[initial_] = 0;
    out.names_[0] = names_[initial_];
    out.final_[0] = final_[initial_] && bwd[initial_];
    for (State q = 0; q < size(); ++q)
      if (q != initial_ && fwd[q] && bwd[q]) {
        remap[q] = out.add_state(names_[q]);
        out.final_[remap[q]] = final_[q];
      }
    for (State q = 0; q < size(); ++q) {
      if (remap[q] == std::numeric_limits<State>::max()) continue;
      if (q == initial_ && !bwd[q]) continue;
      for (const auto& t : out_[q])
        if (remap[t.dst] != std::numeric_limits<State>::max() && bwd[t.dst])
          out.out_[remap[q]].push_back({t.label, remap[t.dst]});
    }
    out.normalize();
    return out;
  }

  bool is_empty() const {
    const auto dist = distance_to_final();
    return dist[initial_] == std::numeric_limits<std::size_t>::max();
  }

  // Same automaton over another alphabet carrying the same tokens (e.g. the
  // flattened or the original priority assignment).
  Nfa with_alphabet(PriorityAlphabet alphabet) const {
    if (!alphabet.same_tokens(alphabet_))
      throw AlphabetMismatch("relabelling requires an alphabet with the same letters");
    Nfa out = *this;
    out.alphabet_ = std::move(alphabet);
    return out;
  }

  // Copies all states of `other` into this automaton; returns the offset of
  // the copy. Alphabets must carry the same tokens.
  State embed(const Nfa& other) {
    if (!other.alphabet_.same_tokens(alphabet_)) throw AlphabetMismatch("embedding an NFA over another alphabet");
    const State offset = static_cast<State>(size());
    for (State q = 0; q < other.size(); ++q) add_state(other.names_[q]);
    for (State q = 0; q < other.size(); ++q)
      for (const auto& t : other.out_[q]) out_[offset + q].push_back({t.label, offset + t.dst});
    return offset;
  }

 private:
  // Visited set backed by per-thread generation stamps, so that a step over
  // a large automaton does not pay for clearing a full bitmap.
  class Marks {
   public:
    explicit Marks(std::size_t n) {
      auto& st = storage();
      if (st.stamps.size() < n) st.stamps.resize(n, 0);
      if (++st.generation == 0) {
        std::fill(st.stamps.begin(), st.stamps.end(), 0);
        st.generation = 1;
      }
    }
    bool insert(State q) {
      auto& st = storage();
      if (st.stamps[q] == st.generation) return false;
      st.stamps[q] = st.generation;
      return true;
    }

   private:
    struct Storage {
      std::vector<std::uint32_t> stamps;
      std::uint32_t generation = 0;
    };
    static Storage& storage() {
      thread_local Storage s;
      return s;
    }
  };

  void epsilon_close(Marks& marks, std::vector<State>& members) const {
    std::vector<State> stack(members.begin(), members.end());
    while (!stack.empty()) {
      State q = stack.back();
      stack.pop_back();
      for (const auto& t : out_[q])
        if (!t.label && marks.insert(t.dst)) {
          members.push_back(t.dst);
          stack.push_back(t.dst);
        }
    }
  }

  void check_state(State q) const {
    if (q >= out_.size()) throw PreconditionError("state " + std::to_string(q) + " does not exist");
  }

  PriorityAlphabet alphabet_;
  std::vector<std::vector<Transition>> out_;
  std::vector<char> final_;
  std::vector<std::string> names_;
  State initial_ = 0;
};

inline void require_same_alphabet(const PriorityAlphabet& a, const PriorityAlphabet& b) {
  if (!(a == b)) throw AlphabetMismatch("automata are over different alphabets");
}

inline Nfa nfa_empty(const PriorityAlphabet& alphabet) { return Nfa(alphabet); }

inline Nfa nfa_from_words(const PriorityAlphabet& alphabet, const std::vector<Word>& words) {
  Nfa out(alphabet);
  for (const Word& w : words) {
    alphabet.check(w);
    State q = out.initial();
    for (Letter a : w) {
      State next = out.add_state();
      out.add_edge(q, a, next);
      q = next;
    }
    out.set_final(q);
  }
  return out;
}

inline Nfa nfa_union(const Nfa& a, const Nfa& b) {
  require_same_alphabet(a.alphabet(), b.alphabet());
  Nfa out(a.alphabet());
  State oa = out.embed(a);
  State ob = out.embed(b);
  for (State q : a.finals()) out.set_final(oa + q);
  for (State q : b.finals()) out.set_final(ob + q);
  out.add_edge(out.initial(), std::nullopt, oa + a.initial());
  out.add_edge(out.initial(), std::nullopt, ob + b.initial());
  return out;
}

inline Nfa nfa_concat(const Nfa& a, const Nfa& b) {
  require_same_alphabet(a.alphabet(), b.alphabet());
  Nfa out(a.alphabet());
  State oa = out.embed(a);
  State ob = out.embed(b);
  out.add_edge(out.initial(), std::nullopt, oa + a.initial());
  for (State q : a.finals()) out.add_edge(oa + q, std::nullopt, ob + b.initial());
  for (State q : b.finals()) out.set_final(ob + q);
  return out;
}

// Synchronous product; epsilon moves of either side interleave freely.
inline Nfa nfa_intersect(const Nfa& a, const Nfa& b) {
  require_same_alphabet(a.alphabet(), b.alphabet());
  Nfa out(a.alphabet());
  std::map<std::pair<State, State>, State> index;
  std::deque<std::pair<State, State>> queue;
  auto get = [&](State p, State q) {
    auto [it, fresh] = index.try_emplace({p, q}, 0);
    if (fresh) {
      it->second = index.size() == 1 ? out.initial() : out.add_state();
      if (a.is_final(p) && b.is_final(q)) out.set_final(it->second);
      queue.push_back({p, q});
    }
    return it->second;
  };
  get(a.initial(), b.initial());
  while (!queue.empty()) {
    auto [p, q] = queue.front();
    queue.pop_front();
    State src = index.at({p, q});
    for (const auto& t : a.out(p)) {
      if (!t.label) {
        out.add_edge(src, std::nullopt, get(t.dst, q));
        continue;
      }
      for (const auto& s : b.out(q))
        if (s.label == t.label) out.add_edge(src, t.label, get(t.dst, s.dst));
    }
    for (const auto& s : b.out(q))
      if (!s.label) out.add_edge(src, std::nullopt, get(p, s.dst));
  }
  return out.trim();
}

inline Nfa nfa_star(const Nfa& a) {
  Nfa out(a.alphabet());
  State oa = out.embed(a);
  out.set_final(out.initial());
  out.add_edge(out.initial(), std::nullopt, oa + a.initial());
  for (State q : a.finals()) out.add_edge(oa + q, std::nullopt, out.initial());
  return out;
}

// Subset construction without the empty set; at most `state_cap` subsets.
// Subsets keep only states with a letter edge or a final flag: the others
// never contribute to a step or to acceptance.
inline Nfa nfa_determinize(const Nfa& a, std::size_t state_cap = 1'000'000) {
  Nfa out(a.alphabet());
  std::vector<char> relevant(a.size(), 0);
  for (State q = 0; q < a.size(); ++q) {
    relevant[q] = a.is_final(q) ? 1 : 0;
    for (const auto& t : a.out(q))
      if (t.label) relevant[q] = 1;
  }
  std::map<std::vector<State>, State> index;
  std::deque<std::vector<State>> queue;
  auto get = [&](std::vector<State> s) {
    std::erase_if(s, [&](State q) { return !relevant[q]; });
    auto [it, fresh] = index.try_emplace(std::move(s), 0);
    if (fresh) {
      if (index.size() > state_cap)
        throw ResourceLimit("determinization exceeds " + std::to_string(state_cap) + " states");
      it->second = index.size() == 1 ? out.initial() : out.add_state();
      if (std::any_of(it->first.begin(), it->first.end(), [&](State q) { return a.is_final(q); }))
        out.set_final(it->second);
      queue.push_back(it->first);
    }
    return it->second;
  };
  get(a.closure(std::vector<State>{a.initial()}));
  while (!queue.empty()) {
    std::vector<State> cur = std::move(queue.front());
    queue.pop_front();
    const State src = index.at(cur);
    for (Letter x = 0; x < a.alphabet().size(); ++x) {
      auto next = a.step(cur, x);
      if (std::any_of(next.begin(), next.end(), [&](State q) { return relevant[q]; }))
        out.add_edge(src, x, get(std::move(next)));
    }
  }
  return out;
}

// Minimal trim DFA (Moore partition refinement over the determinized,
// trimmed automaton). The empty language gives a single non-final state.
inline Nfa nfa_minimize(const Nfa& a, std::size_t state_cap = 1'000'000) {
  const Nfa d = nfa_determinize(a, state_cap).trim();
  const std::size_t n = d.size(), k = d.alphabet().size();
  constexpr State none = ~State{0};
  std::vector<std::vector<State>> delta(n, std::vector<State>(k, none));
  for (State q = 0; q < n; ++q)
    for (const auto& t : d.out(q)) delta[q][*t.label] = t.dst;
  std::vector<State> block(n);
  for (State q = 0; q < n; ++q) block[q] = d.is_final(q) ? 1 : 0;
  std::size_t blocks = 0;
  for (;;) {
    std::map<std::vector<State>, State> sig;
    std::vector<State> next(n);
    for (State q = 0; q < n; ++q) {
      std::vector<State> key{block[q]};
      for (std::size_t x = 0; x < k; ++x) key.push_back(delta[q][x] == none ? none : block[delta[q][x]]);
      next[q] = sig.try_emplace(std::move(key), static_cast<State>(sig.size())).first->second;
    }
    block.swap(next);
    if (sig.size() == blocks) break;
    blocks = sig.size();
  }
  // number blocks in BFS order from the initial state for stable output
  Nfa out(d.alphabet());
  std::vector<State> id(blocks, none);
  std::deque<State> queue;
  std::vector<State> rep(blocks, none);
  for (State q = 0; q < n; ++q)
    if (rep[block[q]] == none) rep[block[q]] = q;
  id[block[d.initial()]] = out.initial();
  queue.push_back(block[d.initial()]);
  while (!queue.empty()) {
    const State b = queue.front();
    queue.pop_front();
    const State q = rep[b];
    if (d.is_final(q)) out.set_final(id[b]);
    for (std::size_t x = 0; x < k; ++x) {
      if (delta[q][x] == none) continue;
      const State c = block[delta[q][x]];
      if (id[c] == none) {
        id[c] = out.add_state();
        queue.push_back(c);
      }
      out.add_edge(id[b], static_cast<Letter>(x), id[c]);
    }
  }
  return out;
}

// The minimal DFA when determinization stays within a few thousand states
// (or eight times the input), the trimmed input otherwise. Never larger than
// the trimmed input unless the DFA is small anyway.
inline Nfa nfa_reduce(const Nfa& a, std::size_t state_cap = 1'000'000) {
  Nfa t = a.trim();
  if (t.size() > state_cap) throw ResourceLimit("automaton exceeds " + std::to_string(state_cap) + " states");
  try {
    Nfa m = nfa_minimize(t, std::min(state_cap, std::max<std::size_t>(4096, 8 * t.size())));
    if (m.size() <= t.size() || m.size() <= 4096) return m;
  } catch (const ResourceLimit&) {
  }
  return t;
}

struct EquivalenceResult {
  bool equal = true;
  std::optional<Word> counterexample;  // shortest word in the symmetric difference
};

inline EquivalenceResult nfa_equivalent_up_to(const Nfa& a, const Nfa& b, std::size_t n) {
  require_same_alphabet(a.alphabet(), b.alphabet());
  const WordSet la = a.enumerate(n);
  const WordSet lb = b.enumerate(n);
  EquivalenceResult r;
  std::vector<Word> diff;
  std::set_symmetric_difference(la.begin(), la.end(), lb.begin(), lb.end(), std::back_inserter(diff), ShortLex{});
  if (!diff.empty()) {
    r.equal = false;
    r.counterexample = diff.front();
  }
  return r;
}

// Exact language equivalence by on-the-fly subset construction on both
// sides. Inputs larger than `state_cap` states are refused.
inline EquivalenceResult nfa_equivalent_exact(const Nfa& a, const Nfa& b, std::size_t state_cap = 12) {
  require_same_alphabet(a.alphabet(), b.alphabet());
  if (a.size() > state_cap || b.size() > state_cap)
    throw ResourceLimit("exact equivalence refused: an input has more than " + std::to_string(state_cap) + " states");
  using Config = std::pair<std::vector<State>, std::vector<State>>;
  auto accepting = [](const Nfa& n, const std::vector<State>& s) {
    return std::any_of(s.begin(), s.end(), [&](State q) { return n.is_final(q); });
  };
  std::map<Config, Word> seen;
  std::deque<Config> queue;
  Config start{a.closure(std::vector<State>{a.initial()}), b.closure(std::vector<State>{b.initial()})};
  seen.emplace(start, Word{});
  queue.push_back(start);
  EquivalenceResult r;
  while (!queue.empty()) {
    Config c = queue.front();
    queue.pop_front();
    const Word& w = seen.at(c);
    if (accepting(a, c.first) != accepting(b, c.second)) {
      r.equal = false;
      r.counterexample = w;
      return r;
    }
    for (Letter x = 0; x < a.alphabet().size(); ++x) {
      Config next{a.step(c.first, x), b.step(c.second, x)};
      if (seen.count(next)) continue;
      Word nw = w;
      nw.push_back(x);
      seen.emplace(next, std::move(nw));
      queue.push_back(std::move(next));
    }
  }
  return r;
}

}  // namespace downclose
