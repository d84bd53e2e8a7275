#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "downclose/cfg.hpp"
#include "downclose/nfa.hpp"
#include "downclose/transducer.hpp"

namespace downclose {

struct KleeneItem {
  enum class Kind : std::uint8_t { nt, star, t };
  Kind kind = Kind::nt;
  std::uint32_t id = 0;

  static KleeneItem nt(Nonterminal x) { return {Kind::nt, x}; }
  static KleeneItem star(Nonterminal x) { return {Kind::star, x}; }
  static KleeneItem t(Letter a) { return {Kind::t, a}; }
  friend auto operator<=>(const KleeneItem&, const KleeneItem&) = default;
};

struct KleeneProduction {
  Nonterminal lhs = 0;
  std::vector<KleeneItem> rhs;
  friend auto operator<=>(const KleeneProduction&, const KleeneProduction&) = default;
};

// Right-hand sides are a single terminal or up to three nonterminals, each
// possibly starred.
class KleeneGrammar {
 public:
  KleeneGrammar() = default;
  explicit KleeneGrammar(PriorityAlphabet alphabet, const std::string& start = "S") : alphabet_(std::move(alphabet)) {
    start_ = add_nonterminal(start);
  }

  const PriorityAlphabet& alphabet() const { return alphabet_; }
  Nonterminal start() const { return start_; }
  void set_start(Nonterminal x) { start_ = checked(x); }
  std::size_t nonterminal_count() const { return names_.size(); }
  const std::string& name(Nonterminal x) const { return names_.at(x); }
  const std::vector<KleeneProduction>& productions() const { return productions_; }

  std::optional<Nonterminal> find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  Nonterminal add_nonterminal(std::string name) {
    if (name.empty()) name = "N";
    while (index_.count(name) || alphabet_.find(name)) name += "'";
    const auto x = static_cast<Nonterminal>(names_.size());
    index_.emplace(name, x);
    names_.push_back(std::move(name));
    return x;
  }

  void add_production(Nonterminal lhs, std::vector<KleeneItem> rhs) {
    checked(lhs);
    const bool terminal = rhs.size() == 1 && rhs[0].kind == KleeneItem::Kind::t;
    if (!terminal) {
      if (rhs.size() > 3) throw InvalidInput("a Kleene production has at most three items");
      for (const auto& it : rhs) {
        if (it.kind == KleeneItem::Kind::t) throw InvalidInput("terminals must stand alone on a right-hand side");
        checked(it.id);
      }
    } else {
      alphabet_.check(rhs[0].id);
    }
    productions_.push_back({lhs, std::move(rhs)});
  }

  void normalize() {
    std::sort(productions_.begin(), productions_.end());
    productions_.erase(std::unique(productions_.begin(), productions_.end()), productions_.end());
  }

  std::string format_production(const KleeneProduction& p) const {
    std::string s = names_[p.lhs] + " ->";
    if (p.rhs.empty()) s += " ε";
    for (const auto& it : p.rhs) {
      if (it.kind == KleeneItem::Kind::t)
        s += " " + alphabet_.token(it.id);
      else
        s += " " + names_[it.id] + (it.kind == KleeneItem::Kind::star ? "*" : "");
    }
    return s;
  }

 private:
  Nonterminal checked(Nonterminal x) const {
    if (x >= names_.size()) throw PreconditionError("nonterminal " + std::to_string(x) + " does not exist");
    return x;
  }

  PriorityAlphabet alphabet_;
  std::vector<std::string> names_;
  std::map<std::string, Nonterminal> index_;
  std::vector<KleeneProduction> productions_;
  Nonterminal start_ = 0;
};

// A CNF grammar read as a Kleene grammar (same nonterminal ids).
inline KleeneGrammar kleene_from_cfg(const Cfg& g) {
  KleeneGrammar k(g.alphabet(), g.name(0));
  for (Nonterminal x = 1; x < g.nonterminal_count(); ++x) k.add_nonterminal(g.name(x));
  k.set_start(g.start());
  for (const auto& p : g.productions()) {
    std::vector<KleeneItem> rhs;
    for (const Symbol& s : p.rhs) rhs.push_back(s.terminal ? KleeneItem::t(s.id) : KleeneItem::nt(s.id));
    k.add_production(p.lhs, std::move(rhs));
  }
  return k;
}

// Removes productions that cannot finish and nonterminals unreachable from the
// start. A starred occurrence of a dead nonterminal is simply dropped since it
// may be repeated zero times.
inline KleeneGrammar prune(const KleeneGrammar& g) {
  const std::size_t n = g.nonterminal_count();
  std::vector<char> live(n, 0);
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& p : g.productions()) {
      if (live[p.lhs]) continue;
      if (std::all_of(p.rhs.begin(), p.rhs.end(),
                      [&](const KleeneItem& it) { return it.kind != KleeneItem::Kind::nt || live[it.id]; })) {
        live[p.lhs] = 1;
        changed = true;
      }
    }
  }
  std::vector<std::vector<std::vector<KleeneItem>>> kept(n);
  for (const auto& p : g.productions()) {
    if (!live[p.lhs]) continue;
    std::vector<KleeneItem> rhs;
    bool ok = true;
    for (const auto& it : p.rhs) {
      if (it.kind == KleeneItem::Kind::t || live[it.id])
        rhs.push_back(it);
      else if (it.kind == KleeneItem::Kind::nt)
        ok = false;
    }
    if (ok) kept[p.lhs].push_back(std::move(rhs));
  }
  std::vector<Nonterminal> order{g.start()};
  std::vector<char> seen(n, 0);
  seen[g.start()] = 1;
  for (std::size_t i = 0; i < order.size(); ++i)
    for (const auto& rhs : kept[order[i]])
      for (const auto& it : rhs)
        if (it.kind != KleeneItem::Kind::t && !seen[it.id]) {
          seen[it.id] = 1;
          order.push_back(it.id);
        }
  KleeneGrammar out(g.alphabet(), g.name(g.start()));
  std::vector<Nonterminal> remap(n, 0);
  remap[g.start()] = out.start();
  for (std::size_t i = 1; i < order.size(); ++i) remap[order[i]] = out.add_nonterminal(g.name(order[i]));
  for (Nonterminal x : order)
    for (auto rhs : kept[x]) {
      for (auto& it : rhs)
        if (it.kind != KleeneItem::Kind::t) it.id = remap[it.id];
      out.add_production(remap[x], std::move(rhs));
    }
  out.normalize();
  return out;
}

namespace detail {

inline std::vector<Letter> base_letters(const HatAlphabet& h, int lo, int hi) {
  std::vector<Letter> out;
  for (Letter a = 0; a < h.base_size; ++a)
    if (h.alphabet.priority(a) >= lo && h.alphabet.priority(a) <= hi) out.push_back(a);
  return out;
}

inline void loop(Transducer& t, State q, const std::vector<Letter>& letters, bool copy) {
  for (Letter a : letters) t.add_edge(q, a, copy ? Label(a) : Label(), q);
}

// Accepts (without output) a word of Max_r followed by the separator; returns
// the state reached after the separator.
inline State check_max_then_hash(Transducer& t, const HatAlphabet& h, State from, int r) {
  const State after = t.add_state("after#");
  if (r == 0) {
    loop(t, from, base_letters(h, 0, 0), false);
    t.add_edge(from, h.hash, std::nullopt, after);
    return after;
  }
  const State seen = t.add_state("seen" + std::to_string(r));
  loop(t, from, base_letters(h, 0, r - 1), false);
  for (Letter a : base_letters(h, r, r)) t.add_edge(from, a, std::nullopt, seen);
  loop(t, seen, base_letters(h, 0, r), false);
  t.add_edge(seen, h.hash, std::nullopt, after);
  return after;
}

// Accepts a word of Max_s without output; the returned state is final.
inline State check_max(Transducer& t, const HatAlphabet& h, State from, int s) {
  if (s == 0) {
    loop(t, from, base_letters(h, 0, 0), false);
    return from;
  }
  const State seen = t.add_state("seen" + std::to_string(s));
  loop(t, from, base_letters(h, 0, s - 1), false);
  for (Letter a : base_letters(h, s, s)) t.add_edge(from, a, std::nullopt, seen);
  loop(t, seen, base_letters(h, 0, s), false);
  return seen;
}

// Copies the part before the first level-k letter, writes `marker` for the
// stretch between the first and last level-k letters, then copies the rest.
// For k = 0 the whole side is replaced by the marker. Returns the exit state.
inline State ends_side(Transducer& t, const HatAlphabet& h, State from, int k, Letter marker) {
  if (k == 0) {
    const State z = t.add_state("drop0");
    t.add_edge(from, std::nullopt, marker, z);
    loop(t, z, base_letters(h, 0, 0), false);
    return z;
  }
  const auto lower = base_letters(h, 0, k - 1), top = base_letters(h, k, k);
  const State mid = t.add_state("inside"), post = t.add_state("after");
  loop(t, from, lower, true);
  loop(t, mid, lower, false);
  loop(t, post, lower, true);
  for (Letter a : top) {
    t.add_edge(from, a, marker, mid);
    t.add_edge(from, a, marker, post);
    t.add_edge(mid, a, std::nullopt, mid);
    t.add_edge(mid, a, std::nullopt, post);
  }
  return post;
}

// Outputs one block strictly between two consecutive level-k letters (followed
// by the closing letter unless `strip`), or a single letter when k = 0.
// Returns the state after the chosen block, which drops what follows.
inline State repeat_side(Transducer& t, const HatAlphabet& h, State from, int k, bool strip) {
  const State done = t.add_state("done");
  if (k == 0) {
    const auto zero = base_letters(h, 0, 0);
    loop(t, from, zero, false);
    for (Letter a : zero) t.add_edge(from, a, a, done);
    loop(t, done, zero, false);
    return done;
  }
  const auto upto = base_letters(h, 0, k), lower = base_letters(h, 0, k - 1), top = base_letters(h, k, k);
  const State inside = t.add_state("block");
  loop(t, from, upto, false);
  for (Letter a : top) {
    t.add_edge(from, a, std::nullopt, inside);
    t.add_edge(inside, a, strip ? Label() : Label(a), done);
  }
  loop(t, inside, lower, true);
  loop(t, done, upto, false);
  return done;
}

}  // namespace detail

// Maps u # v to τ_r(u) # τ_s(v), where τ_r keeps what lies before the first
// and after the last letter of priority r and writes a marker in between.
inline Transducer ends_transducer(const HatAlphabet& h, int r, int s) {
  Transducer t(h.alphabet, h.alphabet, 1);
  t.set_name(0, "start");
  const State left = detail::ends_side(t, h, 0, r, h.hash_left);
  const State right = t.add_state("right");
  t.add_edge(left, h.hash, h.hash, right);
  t.set_final(detail::ends_side(t, h, right, s, h.hash_right));
  return t;
}

// Left repeats: one block between consecutive priority-r letters of u, with
// v checked against Max_s. Output lives over the base alphabet.
inline Transducer repeats_left_transducer(const HatAlphabet& h, int r, int s, bool strip) {
  Transducer t(h.alphabet, h.alphabet, 1);
  const State done = detail::repeat_side(t, h, 0, r, strip);
  const State right = t.add_state("right");
  t.add_edge(done, h.hash, std::nullopt, right);
  t.set_final(detail::check_max(t, h, right, s));
  return t;
}

inline Transducer repeats_right_transducer(const HatAlphabet& h, int r, int s, bool strip) {
  Transducer t(h.alphabet, h.alphabet, 1);
  const State right = detail::check_max_then_hash(t, h, 0, r);
  t.set_final(detail::repeat_side(t, h, right, s, strip));
  return t;
}

namespace detail {

inline void require_flat_cnf(const Cfg& g) {
  if (!g.alphabet().is_flat()) throw PreconditionError("the grammar alphabet must be flat");
  if (!g.is_cnf()) throw PreconditionError("the grammar must be in Chomsky normal form");
}

inline void require_level(const Cfg& g, int r, int s) {
  const int p = g.alphabet().max_priority();
  if (r < 0 || s < 0 || r > p || s > p)
    throw PreconditionError("priority levels must lie in [0, " + std::to_string(p) + "]");
}

// Grammar over the hat alphabet restricted back to the base letters.
inline Cfg drop_hat(const Cfg& g, const HatAlphabet& h) {
  std::vector<std::pair<std::string, int>> letters;
  for (Letter a = 0; a < h.base_size; ++a) letters.emplace_back(h.alphabet.token(a), h.alphabet.priority(a));
  const PriorityAlphabet base(letters);
  Cfg out(base, g.name(0));
  for (Nonterminal x = 1; x < g.nonterminal_count(); ++x) out.add_nonterminal(g.name(x));
  out.set_start(g.start());
  for (const auto& p : g.productions()) {
    bool ok = true;
    for (const Symbol& s : p.rhs) ok = ok && (!s.terminal || s.id < h.base_size);
    if (!ok) throw PreconditionError("a repeat grammar cannot contain a marker letter");
    out.add_production(p.lhs, p.rhs);
  }
  return out;
}

inline Cfg repeats(const Cfg& pump, const HatAlphabet& h, int r, int s, bool left, bool strip) {
  const Transducer t = left ? repeats_left_transducer(h, r, s, strip) : repeats_right_transducer(h, r, s, strip);
  return drop_hat(apply_transducer_to_cfg(t, pump), h);
}

}  // namespace detail

// E_{X,r,s}: for every pump X =>* u X v with u in Max_r and v in Max_s, the
// word τ_r(u) # τ_s(v) over the hat alphabet.
inline Cfg ends_grammar(const Cfg& g, Nonterminal x, int r, int s) {
  detail::require_flat_cnf(g);
  detail::require_level(g, r, s);
  const HatAlphabet h = hat(g.alphabet());
  return apply_transducer_to_cfg(ends_transducer(h, r, s), pump_pair_grammar(g, x, h));
}

// Left and right repeats over the base alphabet. For a level k >= 1 each word
// is y k with y a block strictly between two consecutive k letters; for level 0
// the words are the single letters occurring on that side.
inline std::pair<Cfg, Cfg> repeats_grammars(const Cfg& g, Nonterminal x, int r, int s) {
  detail::require_flat_cnf(g);
  detail::require_level(g, r, s);
  const HatAlphabet h = hat(g.alphabet());
  const Cfg pump = pump_pair_grammar(g, x, h);
  return {detail::repeats(pump, h, r, s, true, false), detail::repeats(pump, h, r, s, false, false)};
}

// Letters occurring left (first) and right (second) of the separator in the
// pump pairs of X.
inline std::pair<std::vector<Letter>, std::vector<Letter>> side_alphabets(const Cfg& g, Nonterminal x) {
  if (!g.is_cnf()) throw PreconditionError("the grammar must be in Chomsky normal form");
  const HatAlphabet h = hat(g.alphabet());
  const Cfg pump = pump_pair_grammar(g, x, h);
  std::vector<Letter> left, right;
  for (Letter a = 0; a < h.base_size; ++a) {
    // Σ* a Σ* # Σ* and Σ* # Σ* a Σ*
    for (int side = 0; side < 2; ++side) {
      Nfa n(h.alphabet);
      const State mid = n.add_state(), end = n.add_state();
      const State before = side == 0 ? n.initial() : mid, after = side == 0 ? mid : end;
      for (Letter b = 0; b < h.base_size; ++b) {
        n.add_edge(n.initial(), b, n.initial());
        n.add_edge(mid, b, mid);
        n.add_edge(end, b, end);
      }
      if (side == 0) {
        n.add_edge(before, a, after);
        n.add_edge(mid, h.hash, end);
      } else {
        n.add_edge(n.initial(), h.hash, mid);
        n.add_edge(before, a, after);
      }
      n.set_final(end);
      if (!cfg_intersect_regular_empty(pump, n)) (side == 0 ? left : right).push_back(a);
    }
  }
  return {left, right};
}

// One record per (recursive) construction call.
struct KleeneLevel {
  std::size_t depth = 0;
  std::size_t input_nonterminals = 0;
  int max_priority = 0;
  std::size_t largest_part = 0;  // largest spliced sub-grammar
  std::size_t output_nonterminals = 0;

  // n + 3 n (p+1)^2 f + p + 1
  std::size_t bound() const {
    const std::size_t p1 = static_cast<std::size_t>(max_priority) + 1;
    return input_nonterminals + 3 * input_nonterminals * p1 * p1 * largest_part + p1;
  }
};

struct KleeneStats {
  std::vector<KleeneLevel> levels;
};

namespace detail {

inline int used_priority(const Cfg& g) {
  int p = 0;
  for (const auto& prod : g.productions())
    for (const Symbol& s : prod.rhs)
      if (s.terminal) p = std::max(p, g.alphabet().priority(s.id));
  return p;
}

// Copies every production of `part` into `into` under fresh names and returns
// the id map. `splice` may replace a terminal production; it returns true when
// it has handled the production.
template <class Splice>
std::vector<Nonterminal> embed(KleeneGrammar& into, const KleeneGrammar& part, const std::string& prefix,
                               Splice&& splice) {
  std::vector<Nonterminal> ids(part.nonterminal_count());
  for (Nonterminal y = 0; y < part.nonterminal_count(); ++y) ids[y] = into.add_nonterminal(prefix + part.name(y));
  for (const auto& p : part.productions()) {
    if (p.rhs.size() == 1 && p.rhs[0].kind == KleeneItem::Kind::t && splice(ids[p.lhs], p.rhs[0].id)) continue;
    auto rhs = p.rhs;
    for (auto& it : rhs)
      if (it.kind != KleeneItem::Kind::t) it.id = ids[it.id];
    into.add_production(ids[p.lhs], std::move(rhs));
  }
  return ids;
}

inline KleeneGrammar kleene(const Cfg& g, KleeneStats* stats, std::size_t depth, Nfa* automaton,
                            std::size_t state_cap);

// Tarjan, iteratively. Returns the component index of every vertex.
inline std::vector<std::size_t> strong_components(const std::vector<std::vector<Nonterminal>>& succ) {
  const std::size_t n = succ.size();
  constexpr std::size_t unset = ~std::size_t{0};
  std::vector<std::size_t> low(n, unset), num(n, unset), comp(n, unset);
  std::vector<Nonterminal> stack;
  std::vector<char> on_stack(n, 0);
  std::size_t counter = 0, comps = 0;
  for (Nonterminal root = 0; root < n; ++root) {
    if (num[root] != unset) continue;
    std::vector<std::pair<Nonterminal, std::size_t>> work{{root, 0}};
    num[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!work.empty()) {
      auto& [v, i] = work.back();
      if (i < succ[v].size()) {
        const Nonterminal w = succ[v][i++];
        if (num[w] == unset) {
          num[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          work.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], num[w]);
        }
        continue;
      }
      if (low[v] == num[v]) {
        Nonterminal w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = comps;
        } while (w != v);
        ++comps;
      }
      const Nonterminal done = v;
      work.pop_back();
      if (!work.empty()) low[work.back().first] = std::min(low[work.back().first], low[done]);
    }
  }
  return comp;
}

inline Nfa epsilon_nfa(const PriorityAlphabet& al) {
  Nfa e(al);
  e.set_final(e.initial());
  return e;
}

inline Nfa letter_nfa(const PriorityAlphabet& al, Letter a) { return nfa_from_words(al, {Word{a}}); }

// Replaces every marker edge of `over_hat` by a fresh copy of the matching
// language; the result is over the base alphabet.
inline Nfa substitute_markers(const Nfa& over_hat, const HatAlphabet& h, const PriorityAlphabet& al,
                              const Nfa& hash, const Nfa& left, const Nfa& right) {
  Nfa out(al);
  for (State q = 1; q < over_hat.size(); ++q) out.add_state();
  out.set_initial(over_hat.initial());
  for (State q : over_hat.finals()) out.set_final(q);
  for (State q = 0; q < over_hat.size(); ++q)
    for (const auto& t : over_hat.out(q)) {
      if (!t.label || !h.is_hash(*t.label)) {
        out.add_edge(q, t.label, t.dst);
        continue;
      }
      const Nfa& part = *t.label == h.hash ? hash : *t.label == h.hash_left ? left : right;
      const State off = out.embed(part);
      out.add_edge(q, std::nullopt, off + part.initial());
      for (State f : part.finals()) out.add_edge(off + f, std::nullopt, t.dst);
    }
  return out;
}

// Kleene grammar for a repeat side, as a nonterminal of `into` generating
// (block Z_k)-shaped words. Returns nothing when there are no repeats.
inline std::optional<Nonterminal> repeat_part(KleeneGrammar& into, const Cfg& pump, const HatAlphabet& h, int r,
                                              int s, bool left, std::optional<Nonterminal> zk,
                                              const std::string& prefix, KleeneStats* stats, std::size_t depth,
                                              std::size_t& part_size, Nfa* automaton, std::size_t state_cap) {
  const int k = left ? r : s;
  const Cfg rep = repeats(pump, h, r, s, left, true);
  if (k == 0) {
    const WordSet letters = cfg_enumerate(rep, 1);
    if (letters.empty()) return std::nullopt;
    const Nonterminal sr = into.add_nonterminal(prefix + "letters");
    if (automaton) *automaton = Nfa(into.alphabet());
    for (const Word& w : letters)
      if (w.size() == 1) {
        into.add_production(sr, {KleeneItem::t(w[0])});
        if (automaton) *automaton = nfa_union(*automaton, letter_nfa(into.alphabet(), w[0]));
      }
    part_size = std::max<std::size_t>(part_size, 1);
    return sr;
  }
  const CnfResult c = to_cnf(rep);
  const bool has_block = !cfg_is_empty(c.grammar);
  if (!has_block && !c.derives_epsilon) return std::nullopt;
  const Nonterminal sr = into.add_nonterminal(prefix + "rep");
  std::size_t size = 1;
  const PriorityAlphabet& al = into.alphabet();
  if (automaton) *automaton = Nfa(al);
  // Z_k is the unique letter of level k
  const Letter zletter = al.letters_with_priority(k).front();
  if (has_block) {
    Nfa sub_aut;
    const KleeneGrammar sub = kleene(c.grammar, stats, depth + 1, automaton ? &sub_aut : nullptr, state_cap);
    if (automaton) *automaton = nfa_concat(sub_aut.with_alphabet(al), letter_nfa(al, zletter));
    const auto ids = embed(into, sub, prefix, [](Nonterminal, Letter) { return false; });
    into.add_production(sr, {KleeneItem::nt(ids[sub.start()]), KleeneItem::nt(*zk)});
    size += sub.nonterminal_count();
  }
  if (c.derives_epsilon) {
    into.add_production(sr, {KleeneItem::nt(*zk)});
    if (automaton) *automaton = nfa_union(*automaton, letter_nfa(al, zletter));
  }
  part_size = std::max(part_size, size);
  return sr;
}

// Words of acyclic derivations of the grammar built below, computed along the
// construction. A nonterminal introduced for one (X, r, s) only occurs below
// X, so a repetition of it on a path forces a repetition of X. Hence a path is
// repetition-free iff no nonterminal of g repeats on it and every spliced part
// is repetition-free on its own, which lets each part be solved once.
struct Segment {
  Nfa ends;  // over the hat alphabet
  Nfa left, right;
};

// With `close`, every piece is replaced by its block downward closure. The
// order is compatible with concatenation, so the final closure is unchanged;
// this is only done over the base alphabet, where no marker letter can be
// dropped.
inline Nfa acyclic_over(const Cfg& g, const std::vector<std::vector<Segment>>& segments, std::size_t state_cap,
                        bool close) {
  const PriorityAlphabet& al = g.alphabet();
  const HatAlphabet h = hat(al);
  const std::size_t n = g.nonterminal_count();
  std::vector<std::vector<const Production*>> by_lhs(n);
  std::vector<std::vector<Nonterminal>> succ(n);
  for (const auto& prod : g.productions()) {
    by_lhs[prod.lhs].push_back(&prod);
    for (const Symbol& sym : prod.rhs)
      if (!sym.terminal) succ[prod.lhs].push_back(sym.id);
  }
  const auto comp = strong_components(succ);
  const Nfa eps = epsilon_nfa(al);
  std::map<std::pair<Nonterminal, std::vector<Nonterminal>>, Nfa> memo;

  auto build = [&](auto&& self, Nonterminal y, const std::vector<Nonterminal>& above) -> const Nfa& {
    const auto key = std::make_pair(y, above);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::vector<Nonterminal> with_y = above;
    with_y.insert(std::upper_bound(with_y.begin(), with_y.end(), y), y);
    // words of the right-hand sides of y below a y-node
    Nfa rhs_words(al);
    for (const Production* prod : by_lhs[y]) {
      Nfa cur = eps;
      bool dead = false;
      for (const Symbol& sym : prod->rhs) {
        if (sym.terminal) {
          cur = nfa_concat(cur, letter_nfa(al, sym.id));
          continue;
        }
        if (std::binary_search(with_y.begin(), with_y.end(), sym.id)) {
          dead = true;
          break;
        }
        const Nfa& sub = self(self, sym.id, comp[sym.id] == comp[y] ? with_y : std::vector<Nonterminal>{});
        if (sub.is_empty()) {
          dead = true;
          break;
        }
        cur = nfa_concat(cur, sub);
      }
      if (!dead) rhs_words = nfa_union(rhs_words, cur);
    }
    if (close) rhs_words = closure_regular(rhs_words, OrderKind::block);
    rhs_words = nfa_reduce(rhs_words, state_cap);
    Nfa result = rhs_words;
    for (const Segment& seg : segments[y])
      result = nfa_union(result, substitute_markers(seg.ends, h, al, rhs_words, seg.left, seg.right));
    if (close) result = closure_regular(result, OrderKind::block);
    return memo.emplace(key, nfa_reduce(result, state_cap)).first->second;
  };
  return build(build, g.start(), {});
}

inline KleeneGrammar kleene(const Cfg& g, KleeneStats* stats, std::size_t depth, Nfa* automaton,
                            std::size_t state_cap) {
  KleeneGrammar out = kleene_from_cfg(g);
  const std::size_t level_index = stats ? stats->levels.size() : 0;
  if (stats) stats->levels.push_back({depth, g.nonterminal_count(), 0, 0, 0});
  if (automaton) *automaton = Nfa(g.alphabet());
  if (cfg_is_empty(g)) return out;
  const int p = used_priority(g);
  const HatAlphabet h = hat(g.alphabet());
  const PriorityAlphabet& al = g.alphabet();

  std::vector<std::optional<Nonterminal>> z(p + 1);
  auto level_letter = [&](int k) -> std::optional<Nonterminal> {
    if (k > 0 && al.letters_with_priority(k).empty()) return std::nullopt;
    if (!z[k]) {
      z[k] = out.add_nonterminal("Z" + std::to_string(k));
      if (k == 0)
        out.add_production(*z[k], {});
      else
        out.add_production(*z[k], {KleeneItem::t(al.letters_with_priority(k).front())});
    }
    return z[k];
  };

  std::vector<std::vector<const Production*>> by_lhs(g.nonterminal_count());
  for (const auto& prod : g.productions()) by_lhs[prod.lhs].push_back(&prod);

  std::vector<std::vector<Segment>> segments(g.nonterminal_count());
  std::size_t largest = 0;
  for (Nonterminal x = 0; x < g.nonterminal_count(); ++x) {
    if (!is_self_embedding(g, x)) continue;
    const Cfg pump = pump_pair_grammar(g, x, h);
    for (int r = 0; r <= p; ++r) {
      if (r > 0 && al.letters_with_priority(r).empty()) continue;
      for (int s = 0; s <= p; ++s) {
        if (s > 0 && al.letters_with_priority(s).empty()) continue;
        const Cfg e = apply_transducer_to_cfg(ends_transducer(h, r, s), pump);
        if (cfg_is_empty(e)) continue;
        const std::string prefix = g.name(x) + "[" + std::to_string(r) + "," + std::to_string(s) + "]" + ".";

        KleeneGrammar ends(h.alphabet, "E");
        Segment seg;
        if (r == 0 && s == 0) {
          // E = {#L # #R}
          const Nonterminal a = ends.add_nonterminal("L"), b = ends.add_nonterminal("H"), c = ends.add_nonterminal("R");
          ends.add_production(ends.start(), {KleeneItem::nt(a), KleeneItem::nt(b), KleeneItem::nt(c)});
          ends.add_production(a, {KleeneItem::t(h.hash_left)});
          ends.add_production(b, {KleeneItem::t(h.hash)});
          ends.add_production(c, {KleeneItem::t(h.hash_right)});
          if (automaton) seg.ends = nfa_from_words(h.alphabet, {Word{h.hash_left, h.hash, h.hash_right}});
        } else {
          ends = kleene(to_cnf(e).grammar, stats, depth + 1, automaton ? &seg.ends : nullptr, state_cap);
        }

        std::size_t part = ends.nonterminal_count();
        const auto zr = level_letter(r), zs = level_letter(s);
        Nfa left_rep, right_rep;
        const auto left = repeat_part(out, pump, h, r, s, true, zr, prefix + "L.", stats, depth, part,
                                      automaton ? &left_rep : nullptr, state_cap);
        const auto right = repeat_part(out, pump, h, r, s, false, zs, prefix + "R.", stats, depth, part,
                                       automaton ? &right_rep : nullptr, state_cap);
        if (automaton) {
          // Z_k followed by repeats
          auto side = [&](int k, bool has, const Nfa& rep) {
            Nfa zk = k == 0 ? epsilon_nfa(al) : letter_nfa(al, al.letters_with_priority(k).front());
            return nfa_reduce(has ? nfa_concat(zk, nfa_star(rep)) : zk, state_cap);
          };
          seg.left = side(r, left.has_value(), left_rep);
          seg.right = side(s, right.has_value(), right_rep);
          seg.ends = seg.ends.with_alphabet(h.alphabet);
          segments[x].push_back(std::move(seg));
        }
        largest = std::max(largest, part);

        const auto ids = embed(out, ends, prefix, [&](Nonterminal y, Letter a) {
          if (a == h.hash_left || a == h.hash_right) {
            const bool l = a == h.hash_left;
            std::vector<KleeneItem> rhs{KleeneItem::nt(*(l ? zr : zs))};
            if (auto rep = l ? left : right) rhs.push_back(KleeneItem::star(*rep));
            out.add_production(y, std::move(rhs));
            return true;
          }
          if (a == h.hash) {
            for (const Production* prod : by_lhs[x]) {
              std::vector<KleeneItem> rhs;
              for (const Symbol& sym : prod->rhs)
                rhs.push_back(sym.terminal ? KleeneItem::t(sym.id) : KleeneItem::nt(sym.id));
              out.add_production(y, std::move(rhs));
            }
            return true;
          }
          if (h.is_hash(a)) throw PreconditionError("unexpected marker letter");
          return false;
        });
        out.add_production(x, {KleeneItem::nt(ids[ends.start()])});
      }
    }
  }
  KleeneGrammar result = prune(out);
  if (automaton) *automaton = acyclic_over(g, segments, state_cap, depth == 0);
  // the hat letters were only ever spliced away
  for (const auto& prod : result.productions())
    for (const auto& it : prod.rhs)
      if (it.kind == KleeneItem::Kind::t && it.id >= al.size()) throw PreconditionError("marker letter left over");
  if (stats) {
    KleeneLevel& lv = stats->levels[level_index];
    lv.max_priority = p;
    lv.largest_part = largest;
    lv.output_nonterminals = out.nonterminal_count();
  }
  return result;
}

inline void reject_reserved(const PriorityAlphabet& al) {
  for (const char* tok : {"#", "#L", "#R"})
    if (al.find(tok)) throw InvalidInput(std::string("the token '") + tok + "' is reserved");
}

}  // namespace detail

// Kleene grammar H with L(g) ⊆ acyclic(H) and L(H) ⊆ L(g)⇓ under the block
// order, for g in CNF over a flat alphabet.
inline KleeneGrammar kleene_closure_grammar(const Cfg& g, KleeneStats* stats = nullptr) {
  detail::require_flat_cnf(g);
  detail::reject_reserved(g.alphabet());
  return detail::kleene(g, stats, 0, nullptr, 0);
}

// Automaton for the words of acyclic derivation trees: no nonterminal repeats
// along a root-to-leaf path. Built bottom-up: the sub-automaton of Y depends
// only on the ancestors of Y in its own strongly connected component, since an
// ancestor reachable from Y lies on a cycle through Y. Each piece is minimized
// when that stays cheap; `state_cap` bounds the size of every piece.
inline Nfa acyclic_nfa(const KleeneGrammar& g, std::size_t state_cap = 1'000'000) {
  const std::size_t n = g.nonterminal_count();
  std::vector<std::vector<const KleeneProduction*>> by_lhs(n);
  std::vector<std::vector<Nonterminal>> succ(n);
  for (const auto& p : g.productions()) {
    by_lhs[p.lhs].push_back(&p);
    for (const auto& it : p.rhs)
      if (it.kind != KleeneItem::Kind::t) succ[p.lhs].push_back(it.id);
  }

  const auto comp = detail::strong_components(succ);

  const PriorityAlphabet& al = g.alphabet();
  Nfa epsilon(al);
  epsilon.set_final(epsilon.initial());
  std::map<std::pair<Nonterminal, std::vector<Nonterminal>>, Nfa> memo;

  // `above`: sorted ancestors of y that share its component
  auto build = [&](auto&& self, Nonterminal y, const std::vector<Nonterminal>& above) -> const Nfa& {
    const auto key = std::make_pair(y, above);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::vector<Nonterminal> with_y = above;
    with_y.insert(std::upper_bound(with_y.begin(), with_y.end(), y), y);
    auto child = [&](Nonterminal z) -> const Nfa* {
      if (std::binary_search(with_y.begin(), with_y.end(), z)) return nullptr;
      return &self(self, z, comp[z] == comp[y] ? with_y : std::vector<Nonterminal>{});
    };
    Nfa result(al);
    for (const KleeneProduction* p : by_lhs[y]) {
      Nfa cur = epsilon;
      bool dead = false;
      for (const auto& it : p->rhs) {
        if (it.kind == KleeneItem::Kind::t) {
          cur = nfa_concat(cur, nfa_from_words(al, {Word{it.id}}));
          continue;
        }
        const Nfa* sub = child(it.id);
        if (it.kind == KleeneItem::Kind::star) {
          if (sub && !sub->is_empty()) cur = nfa_concat(cur, nfa_star(*sub));
          continue;
        }
        if (!sub || sub->is_empty()) {
          dead = true;
          break;
        }
        cur = nfa_concat(cur, *sub);
      }
      if (!dead) result = nfa_union(result, cur);
    }
    return memo.emplace(key, nfa_reduce(result, state_cap)).first->second;
  };
  return build(build, g.start(), {});
}

// Block downward closure of a context-free language as an NFA. The Kleene
// grammar is built over a flat refinement of the alphabet and its acyclic
// words are closed under the original order.
inline Nfa cfg_block_closure(const Cfg& g, KleeneStats* stats = nullptr, std::size_t state_cap = 1'000'000) {
  detail::reject_reserved(g.alphabet());
  const CnfResult c = to_cnf(g);
  Nfa result(g.alphabet());
  if (!cfg_is_empty(c.grammar)) {
    const Cfg flat = c.grammar.with_alphabet(flatten_positive(g.alphabet()));
    detail::require_flat_cnf(flat);
    Nfa acyclic;
    detail::kleene(flat, stats, 0, &acyclic, state_cap);
    result = closure_regular(acyclic.with_alphabet(g.alphabet()), OrderKind::block);
  }
  if (c.derives_epsilon) result = nfa_union(result, nfa_from_words(g.alphabet(), {Word{}}));
  return nfa_reduce(result, state_cap);
}

// Priority downward closure: per last letter x, the block closure of the
// words ending in x over the flattened alphabet, closed under the priority
// order of the original alphabet.
inline Nfa cfg_priority_closure(const Cfg& g, std::size_t state_cap = 1'000'000) {
  detail::reject_reserved(g.alphabet());
  const PriorityAlphabet flat = flatten(g.alphabet());
  const Cfg gf = g.with_alphabet(flat);
  Nfa result(g.alphabet());
  for (Letter x = 0; x < flat.size(); ++x) {
    Nfa ends_with(flat);
    const State last = ends_with.add_state();
    for (Letter a = 0; a < flat.size(); ++a) ends_with.add_edge(ends_with.initial(), a, ends_with.initial());
    ends_with.add_edge(ends_with.initial(), x, last);
    ends_with.set_final(last);
    const Cfg gx = cfg_intersect_regular(gf, ends_with);
    if (cfg_is_empty(gx)) continue;
    const Nfa block = cfg_block_closure(gx, nullptr, state_cap).with_alphabet(g.alphabet());
    result = nfa_reduce(nfa_union(result, closure_regular(block, OrderKind::priority)), state_cap);
  }
  if (!cfg_is_empty(g)) result = nfa_union(result, nfa_from_words(g.alphabet(), {Word{}}));
  return nfa_reduce(result, state_cap);
}

inline Nfa cfg_subword_closure(const Cfg& g, std::size_t state_cap = 1'000'000) {
  const PriorityAlphabet zero = g.alphabet().with_priorities(std::vector<int>(g.alphabet().size(), 0));
  return cfg_block_closure(g.with_alphabet(zero), nullptr, state_cap).with_alphabet(g.alphabet());
}

}  // namespace downclose
