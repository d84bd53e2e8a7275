#pragma once

#include <algorithm>
#include <deque>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "downclose/nfa.hpp"
#include "downclose/transducer.hpp"

namespace downclose {

enum class CounterOp { inc, dec, noop, zero };
enum class AcceptMode { anyCounter, zeroCounter };

inline std::string_view to_string(CounterOp op) {
  switch (op) {
    case CounterOp::inc: return "inc";
    case CounterOp::dec: return "dec";
    case CounterOp::noop: return "noop";
    case CounterOp::zero: return "zero";
  }
  return "?";
}

inline CounterOp parse_counter_op(std::string_view s) {
  if (s == "inc") return CounterOp::inc;
  if (s == "dec") return CounterOp::dec;
  if (s == "noop") return CounterOp::noop;
  if (s == "zero") return CounterOp::zero;
  throw ParseError("unknown counter operation '" + std::string(s) + "'");
}

struct OcaTransition {
  State src;
  Label label;
  CounterOp op;
  State dst;
  friend auto operator<=>(const OcaTransition&, const OcaTransition&) = default;
};

class Oca {
 public:
  explicit Oca(PriorityAlphabet alphabet, std::size_t states = 1, AcceptMode mode = AcceptMode::anyCounter)
      : alphabet_(std::move(alphabet)), out_(states), final_(states, 0), names_(states), mode_(mode) {
    if (states == 0) throw PreconditionError("an OCA needs at least one state");
  }

  const PriorityAlphabet& alphabet() const { return alphabet_; }
  std::size_t size() const { return out_.size(); }
  State initial() const { return initial_; }
  AcceptMode accept_mode() const { return mode_; }
  bool is_final(State q) const { return final_.at(q) != 0; }
  const std::vector<OcaTransition>& out(State q) const { return out_.at(q); }

  std::vector<State> finals() const {
    std::vector<State> f;
    for (State q = 0; q < size(); ++q)
      if (final_[q]) f.push_back(q);
    return f;
  }

  std::vector<OcaTransition> transitions() const {
    std::vector<OcaTransition> all;
    for (const auto& e : out_) all.insert(all.end(), e.begin(), e.end());
    return all;
  }

  State add_state(std::string name = {}) {
    out_.emplace_back();
    final_.push_back(0);
    names_.push_back(std::move(name));
    return static_cast<State>(out_.size() - 1);
  }

  void set_initial(State q) { initial_ = checked(q); }
  void set_final(State q, bool f = true) { final_[checked(q)] = f ? 1 : 0; }
  void set_accept_mode(AcceptMode m) { mode_ = m; }
  void set_name(State q, std::string name) { names_[checked(q)] = std::move(name); }
  std::string name(State q) const {
    checked(q);
    return names_[q].empty() ? "q" + std::to_string(q) : names_[q];
  }

  void add_transition(State src, Label label, CounterOp op, State dst) {
    checked(src);
    checked(dst);
    if (label) alphabet_.check(*label);
    out_[src].push_back({src, label, op, dst});
  }

  Oca with_alphabet(PriorityAlphabet alphabet) const {
    if (!alphabet.same_tokens(alphabet_)) throw AlphabetMismatch("relabelling requires the same letters");
    Oca o = *this;
    o.alphabet_ = std::move(alphabet);
    return o;
  }

 private:
  State checked(State q) const {
    if (q >= out_.size()) throw PreconditionError("OCA state " + std::to_string(q) + " does not exist");
    return q;
  }

  PriorityAlphabet alphabet_;
  std::vector<std::vector<OcaTransition>> out_;
  std::vector<char> final_;
  std::vector<std::string> names_;
  State initial_ = 0;
  AcceptMode mode_;
};

// No zero tests, one final state, acceptance at counter zero.
class SimpleOca {
 public:
  explicit SimpleOca(Oca oca) : oca_(std::move(oca)) {
    for (const auto& t : oca_.transitions())
      if (t.op == CounterOp::zero) throw InvalidInput("a simple OCA has no zero tests");
    if (oca_.finals().size() != 1) throw InvalidInput("a simple OCA has exactly one final state");
    oca_.set_accept_mode(AcceptMode::zeroCounter);
  }

  const Oca& oca() const { return oca_; }
  State final_state() const { return oca_.finals().front(); }

 private:
  Oca oca_;
};

namespace detail {

using Config = std::pair<State, std::size_t>;

// Closes a configuration set under epsilon moves with counters kept in [0, cap].
inline void oca_epsilon_close(const Oca& a, std::set<Config>& configs, std::size_t cap) {
  std::vector<Config> stack(configs.begin(), configs.end());
  while (!stack.empty()) {
    auto [q, c] = stack.back();
    stack.pop_back();
    for (const auto& t : a.out(q)) {
      if (t.label) continue;
      std::size_t nc = c;
      switch (t.op) {
        case CounterOp::inc:
          if (c == cap) continue;
          nc = c + 1;
          break;
        case CounterOp::dec:
          if (c == 0) continue;
          nc = c - 1;
          break;
        case CounterOp::zero:
          if (c != 0) continue;
          break;
        case CounterOp::noop: break;
      }
      if (configs.insert({t.dst, nc}).second) stack.push_back({t.dst, nc});
    }
  }
}

inline std::set<Config> oca_step(const Oca& a, const std::set<Config>& configs, Letter x, std::size_t cap) {
  std::set<Config> next;
  for (auto [q, c] : configs)
    for (const auto& t : a.out(q)) {
      if (t.label != x) continue;
      switch (t.op) {
        case CounterOp::inc:
          if (c < cap) next.insert({t.dst, c + 1});
          break;
        case CounterOp::dec:
          if (c > 0) next.insert({t.dst, c - 1});
          break;
        case CounterOp::zero:
          if (c == 0) next.insert({t.dst, c});
          break;
        case CounterOp::noop: next.insert({t.dst, c}); break;
      }
    }
  oca_epsilon_close(a, next, cap);
  return next;
}

inline bool oca_accepting(const Oca& a, const std::set<Config>& configs) {
  for (auto [q, c] : configs)
    if (a.is_final(q) && (a.accept_mode() == AcceptMode::anyCounter || c == 0)) return true;
  return false;
}

// Reachability in the control graph, ignoring the counter.
inline std::vector<char> oca_forward(const Oca& a, State from) {
  std::vector<char> seen(a.size(), 0);
  std::vector<State> stack{from};
  seen[from] = 1;
  while (!stack.empty()) {
    State q = stack.back();
    stack.pop_back();
    for (const auto& t : a.out(q))
      if (!seen[t.dst]) {
        seen[t.dst] = 1;
        stack.push_back(t.dst);
      }
  }
  return seen;
}

inline std::vector<char> oca_backward(const Oca& a, const std::vector<State>& targets) {
  std::vector<std::vector<State>> rev(a.size());
  for (const auto& t : a.transitions()) rev[t.dst].push_back(t.src);
  std::vector<char> seen(a.size(), 0);
  std::vector<State> stack;
  for (State q : targets)
    if (!seen[q]) {
      seen[q] = 1;
      stack.push_back(q);
    }
  while (!stack.empty()) {
    State q = stack.back();
    stack.pop_back();
    for (State p : rev[q])
      if (!seen[p]) {
        seen[p] = 1;
        stack.push_back(p);
      }
  }
  return seen;
}

// Fewest letters from each state to a final state in the control graph.
inline std::vector<std::size_t> oca_letter_distance(const Oca& a) {
  Nfa shadow(a.alphabet());
  for (std::size_t i = 1; i < a.size(); ++i) shadow.add_state();
  for (const auto& t : a.transitions()) shadow.add_edge(t.src, t.label, t.dst);
  for (State f : a.finals()) shadow.set_final(f);
  return shadow.distance_to_final();
}

}  // namespace detail

inline bool oca_accepts_bounded(const Oca& a, std::span<const Letter> w, std::size_t counter_cap) {
  a.alphabet().check(w);
  std::set<detail::Config> cur{{a.initial(), 0}};
  detail::oca_epsilon_close(a, cur, counter_cap);
  for (Letter x : w) {
    cur = detail::oca_step(a, cur, x, counter_cap);
    if (cur.empty()) return false;
  }
  return detail::oca_accepting(a, cur);
}

inline std::size_t oca_enumeration_cap(const Oca& a, std::size_t n) {
  const std::size_t k = a.size();
  return k * k * (n + 2) + k + 1;
}

inline WordSet oca_enumerate(const Oca& a, std::size_t n, std::optional<std::size_t> counter_cap = std::nullopt) {
  const std::size_t cap = counter_cap.value_or(oca_enumeration_cap(a, n));
  const auto dist = detail::oca_letter_distance(a);
  WordSet result;
  Word prefix;
  auto live = [&](const std::set<detail::Config>& s, std::size_t remaining) {
    return std::any_of(s.begin(), s.end(), [&](const detail::Config& c) { return dist[c.first] <= remaining; });
  };
  auto walk = [&](auto&& self, const std::set<detail::Config>& cur) -> void {
    if (detail::oca_accepting(a, cur)) result.insert(prefix);
    if (prefix.size() == n) return;
    for (Letter x = 0; x < a.alphabet().size(); ++x) {
      auto next = detail::oca_step(a, cur, x, cap);
      if (next.empty() || !live(next, n - prefix.size() - 1)) continue;
      prefix.push_back(x);
      self(self, next);
      prefix.pop_back();
    }
  };
  std::set<detail::Config> start{{a.initial(), 0}};
  detail::oca_epsilon_close(a, start, cap);
  if (live(start, n)) walk(walk, start);
  return result;
}

// Number of states of the three-mode automaton before trimming.
inline std::size_t soca_closure_bound(std::size_t k) {
  const std::size_t u = k * k + k + 1;
  return 2 * k * (k + 1) + (k * k + k) * (u + 1);
}

struct SocaClosureStats {
  std::size_t constructed_states = 0;
  std::size_t bound = 0;
};

// Three-mode NFA: mode 1 and mode 3 track counters up to K, mode 2 up to
// K^2+K+1 and may run control loops q -> q with the counter frozen.
inline Nfa soca_closure_nfa(const SimpleOca& simple, SocaClosureStats* stats = nullptr) {
  const Oca& a = simple.oca();
  const std::size_t K = a.size();
  const std::size_t U = K * K + K + 1;
  const State qf = simple.final_state();

  Nfa b(a.alphabet());
  // index layout: mode 1, mode 2, mode 3, loop states
  const std::size_t m1 = 0, m2 = K * (K + 1), m3 = m2 + K * (U + 1), lp = m3 + K * (K + 1);
  const std::size_t total = lp + K * K * (U + 1);
  for (std::size_t i = 1; i < total; ++i) b.add_state();
  auto s1 = [&](State q, std::size_t n) { return static_cast<State>(m1 + q * (K + 1) + n); };
  auto s2 = [&](State q, std::size_t n) { return static_cast<State>(m2 + q * (U + 1) + n); };
  auto s3 = [&](State q, std::size_t n) { return static_cast<State>(m3 + q * (K + 1) + n); };
  auto sl = [&](State q1, State q2, std::size_t n) { return static_cast<State>(lp + (q1 * K + q2) * (U + 1) + n); };
  for (State q = 0; q < K; ++q) {
    for (std::size_t n = 0; n <= K; ++n) {
      b.set_name(s1(q, n), "(" + a.name(q) + "," + std::to_string(n) + ",1)");
      b.set_name(s3(q, n), "(" + a.name(q) + "," + std::to_string(n) + ",3)");
    }
    for (std::size_t n = 0; n <= U; ++n) {
      b.set_name(s2(q, n), "(" + a.name(q) + "," + std::to_string(n) + ",2)");
      for (State q2 = 0; q2 < K; ++q2)
        b.set_name(sl(q, q2, n), "(" + a.name(q) + "," + a.name(q2) + "," + std::to_string(n) + ")");
    }
  }
  b.set_initial(s1(a.initial(), 0));
  b.set_final(s1(qf, 0));
  b.set_final(s3(qf, 0));

  for (const auto& t : a.transitions()) {
    // modes 1 and 3
    for (std::size_t n = 0; n <= K; ++n) {
      switch (t.op) {
        case CounterOp::noop:
          b.add_edge(s1(t.src, n), t.label, s1(t.dst, n));
          b.add_edge(s3(t.src, n), t.label, s3(t.dst, n));
          break;
        case CounterOp::dec:
          if (n >= 1) {
            b.add_edge(s1(t.src, n), t.label, s1(t.dst, n - 1));
            b.add_edge(s3(t.src, n), t.label, s3(t.dst, n - 1));
          }
          break;
        case CounterOp::inc:
          if (n < K) {
            b.add_edge(s1(t.src, n), t.label, s1(t.dst, n + 1));
            b.add_edge(s3(t.src, n), t.label, s3(t.dst, n + 1));
          } else {
            b.add_edge(s1(t.src, K), t.label, s2(t.dst, K + 1));
          }
          break;
        case CounterOp::zero: break;
      }
    }
    // mode 2
    for (std::size_t n = 0; n <= U; ++n) {
      switch (t.op) {
        case CounterOp::noop: b.add_edge(s2(t.src, n), t.label, s2(t.dst, n)); break;
        case CounterOp::dec:
          if (n >= 1) b.add_edge(s2(t.src, n), t.label, s2(t.dst, n - 1));
          if (n == K + 1) b.add_edge(s2(t.src, n), t.label, s3(t.dst, K));
          break;
        case CounterOp::inc:
          if (n < U) b.add_edge(s2(t.src, n), t.label, s2(t.dst, n + 1));
          break;
        case CounterOp::zero: break;
      }
      // loop walks ignore the counter operation
      for (State q2 = 0; q2 < K; ++q2) b.add_edge(sl(t.src, q2, n), t.label, sl(t.dst, q2, n));
    }
  }
  for (State q = 0; q < K; ++q)
    for (std::size_t n = 0; n <= U; ++n) {
      b.add_edge(s2(q, n), std::nullopt, sl(q, q, n));
      b.add_edge(sl(q, q, n), std::nullopt, s2(q, n));
    }
  if (stats) {
    stats->constructed_states = b.size();
    stats->bound = soca_closure_bound(K);
  }
  return b.trim();
}

inline Nfa soca_closure_nfa(const Oca& a, SocaClosureStats* stats = nullptr) {
  return soca_closure_nfa(SimpleOca(a), stats);
}

namespace detail {

// The zero-test-free OCA running from p to q (restricted to states on some
// p -> q path), or from p to any counter value at q when `drained`.
inline std::optional<SimpleOca> segment_oca(const Oca& a, State p, State q, bool drained) {
  Oca free_a(a.alphabet(), a.size(), AcceptMode::zeroCounter);
  for (const auto& t : a.transitions())
    if (t.op != CounterOp::zero) free_a.add_transition(t.src, t.label, t.op, t.dst);
  const auto fwd = oca_forward(free_a, p);
  if (!fwd[q]) return std::nullopt;
  const auto bwd = oca_backward(free_a, {q});
  std::vector<State> keep(a.size(), std::numeric_limits<State>::max());
  Oca seg(a.alphabet(), 1, AcceptMode::zeroCounter);
  keep[p] = 0;
  seg.set_name(0, a.name(p));
  for (State s = 0; s < a.size(); ++s)
    if (s != p && fwd[s] && bwd[s]) keep[s] = seg.add_state(a.name(s));
  for (const auto& t : free_a.transitions())
    if (keep[t.src] != std::numeric_limits<State>::max() && keep[t.dst] != std::numeric_limits<State>::max())
      seg.add_transition(keep[t.src], t.label, t.op, keep[t.dst]);
  seg.set_initial(0);
  if (drained) {
    const State top = seg.add_state("drain");
    seg.add_transition(keep[q], std::nullopt, CounterOp::noop, top);
    seg.add_transition(top, std::nullopt, CounterOp::dec, top);
    seg.set_final(top);
  } else {
    seg.set_final(keep[q]);
  }
  return SimpleOca(std::move(seg));
}

}  // namespace detail

struct OcaClosureStats {
  std::size_t segments = 0;
  std::size_t glued_states = 0;
  std::vector<SocaClosureStats> soca;
};

// Glues, between every pair of control states, an NFA for the zero-test-free
// segments and keeps zero-test transitions as plain edges; the result is then
// closed under the block order.
inline Nfa oca_block_closure(const Oca& a, OcaClosureStats* stats = nullptr) {
  Nfa b(a.alphabet());
  for (std::size_t i = 1; i < a.size(); ++i) b.add_state();
  for (State q = 0; q < a.size(); ++q) b.set_name(q, a.name(q));
  b.set_initial(a.initial());
  const State top = b.add_state("top");
  b.set_final(top);
  for (State f : a.finals()) b.set_final(f);

  const auto reach = detail::oca_forward(a, a.initial());
  const auto coreach = detail::oca_backward(a, a.finals());
  for (const auto& t : a.transitions())
    if (t.op == CounterOp::zero) b.add_edge(t.src, t.label, t.dst);

  auto glue = [&](const SimpleOca& seg, State from, State to) {
    SocaClosureStats s;
    const Nfa piece = nfa_reduce(closure_regular(soca_closure_nfa(seg, &s).trim(), OrderKind::block));
    if (stats) {
      stats->soca.push_back(s);
      ++stats->segments;
    }
    if (piece.is_empty()) return;
    const State off = b.embed(piece);
    b.add_edge(from, std::nullopt, off + piece.initial());
    for (State f : piece.finals()) b.add_edge(off + f, std::nullopt, to);
  };

  for (State p = 0; p < a.size(); ++p) {
    if (!reach[p] || !coreach[p]) continue;
    for (State q = 0; q < a.size(); ++q) {
      if (!coreach[q]) continue;
      if (auto seg = detail::segment_oca(a, p, q, false)) glue(*seg, p, q);
    }
    if (a.accept_mode() == AcceptMode::anyCounter)
      for (State f : a.finals())
        if (auto seg = detail::segment_oca(a, p, f, true)) glue(*seg, p, top);
  }
  if (stats) stats->glued_states = b.size();
  return nfa_reduce(closure_regular(b.trim(), OrderKind::block));
}

// Intersection with the words ending in letter x (product with a two-state
// automaton that remembers whether the last letter read was x).
inline Oca oca_ending_with(const Oca& a, Letter x) {
  a.alphabet().check(x);
  Oca out(a.alphabet(), 2 * a.size(), a.accept_mode());
  for (State q = 0; q < a.size(); ++q) {
    out.set_name(2 * q, a.name(q) + "/0");
    out.set_name(2 * q + 1, a.name(q) + "/1");
    if (a.is_final(q)) out.set_final(2 * q + 1);
  }
  out.set_initial(2 * a.initial());
  for (const auto& t : a.transitions())
    for (State bit = 0; bit < 2; ++bit) {
      State nbit = t.label ? (*t.label == x ? 1 : 0) : bit;
      out.add_transition(2 * t.src + bit, t.label, t.op, 2 * t.dst + nbit);
    }
  return out;
}

inline Nfa oca_priority_closure(const Oca& a) {
  const PriorityAlphabet flat = flatten(a.alphabet());
  Nfa result(a.alphabet());
  bool any = false;
  for (Letter x = 0; x < a.alphabet().size(); ++x) {
    Oca ax = oca_ending_with(a, x).with_alphabet(flat);
    Nfa blocks = oca_block_closure(ax).with_alphabet(a.alphabet());
    if (blocks.is_empty()) continue;
    Nfa part = nfa_reduce(closure_regular(blocks, OrderKind::priority));
    result = any ? nfa_reduce(nfa_union(result, part)) : part;
    any = true;
  }
  if (oca_accepts_bounded(a, Word{}, oca_enumeration_cap(a, 0))) {
    Nfa eps(a.alphabet());
    eps.set_final(eps.initial());
    result = any ? nfa_union(result, eps) : eps;
  }
  return result.trim();
}

// With every letter at priority 0 the block order is the subword order.
inline Nfa oca_subword_closure(const Oca& a) {
  const PriorityAlphabet zero = a.alphabet().with_priorities(std::vector<int>(a.alphabet().size(), 0));
  return oca_block_closure(a.with_alphabet(zero)).with_alphabet(a.alphabet());
}

}  // namespace downclose
