#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "downclose/nfa.hpp"
#include "downclose/transducer.hpp"

namespace downclose {

using Nonterminal = std::uint32_t;

struct Symbol {
  bool terminal = false;
  std::uint32_t id = 0;  // Letter when terminal, Nonterminal otherwise

  static Symbol t(Letter a) { return {true, a}; }
  static Symbol nt(Nonterminal x) { return {false, x}; }
  friend auto operator<=>(const Symbol&, const Symbol&) = default;
};

using Rhs = std::vector<Symbol>;

struct Production {
  Nonterminal lhs = 0;
  Rhs rhs;
  friend auto operator<=>(const Production&, const Production&) = default;
};

// Nonterminal names are unique and never collide with a letter token.
class Cfg {
 public:
  Cfg() = default;
  explicit Cfg(PriorityAlphabet alphabet, const std::string& start = "S") : alphabet_(std::move(alphabet)) {
    start_ = add_nonterminal(start);
  }

  const PriorityAlphabet& alphabet() const { return alphabet_; }
  Nonterminal start() const { return start_; }
  void set_start(Nonterminal x) { start_ = checked(x); }
  std::size_t nonterminal_count() const { return names_.size(); }
  const std::string& name(Nonterminal x) const { return names_.at(x); }
  const std::vector<Production>& productions() const { return productions_; }

  std::optional<Nonterminal> find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  Nonterminal nonterminal(const std::string& name) const {
    if (auto x = find(name)) return *x;
    throw PreconditionError("unknown nonterminal '" + name + "'");
  }

  // Adds a nonterminal; the name gets primes appended until it is unused.
  Nonterminal add_nonterminal(std::string name) {
    if (name.empty()) name = "N";
    while (index_.count(name) || alphabet_.find(name)) name += "'";
    const auto x = static_cast<Nonterminal>(names_.size());
    index_.emplace(name, x);
    names_.push_back(std::move(name));
    return x;
  }

  void add_production(Nonterminal lhs, Rhs rhs) {
    checked(lhs);
    for (const Symbol& s : rhs) {
      if (s.terminal)
        alphabet_.check(s.id);
      else
        checked(s.id);
    }
    productions_.push_back({lhs, std::move(rhs)});
  }

  // Sorts and removes duplicate productions.
  void normalize() {
    std::sort(productions_.begin(), productions_.end());
    productions_.erase(std::unique(productions_.begin(), productions_.end()), productions_.end());
  }

  Cfg with_alphabet(PriorityAlphabet alphabet) const {
    if (!alphabet.same_tokens(alphabet_)) throw AlphabetMismatch("relabelling requires the same letters");
    Cfg g = *this;
    g.alphabet_ = std::move(alphabet);
    return g;
  }

  // Every production is A -> B C or A -> a.
  bool is_cnf() const {
    for (const auto& p : productions_) {
      if (p.rhs.size() == 1 && p.rhs[0].terminal) continue;
      if (p.rhs.size() == 2 && !p.rhs[0].terminal && !p.rhs[1].terminal) continue;
      return false;
    }
    return true;
  }

  std::string format_production(const Production& p) const {
    std::string s = names_[p.lhs] + " ->";
    if (p.rhs.empty()) s += " ε";
    for (const Symbol& x : p.rhs) s += " " + (x.terminal ? alphabet_.token(x.id) : names_[x.id]);
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
  std::vector<Production> productions_;
  Nonterminal start_ = 0;
};

// Nonterminals that derive some terminal word.
inline std::vector<char> generating(const Cfg& g) {
  std::vector<char> gen(g.nonterminal_count(), 0);
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& p : g.productions()) {
      if (gen[p.lhs]) continue;
      if (std::all_of(p.rhs.begin(), p.rhs.end(), [&](const Symbol& s) { return s.terminal || gen[s.id]; })) {
        gen[p.lhs] = 1;
        changed = true;
      }
    }
  }
  return gen;
}

inline bool cfg_is_empty(const Cfg& g) { return !generating(g)[g.start()]; }

// Drops non-generating and unreachable nonterminals; nonterminal ids are
// renumbered with the start first.
inline Cfg reduce(const Cfg& g) {
  const auto gen = generating(g);
  std::vector<std::vector<const Production*>> by_lhs(g.nonterminal_count());
  for (const auto& p : g.productions()) {
    if (!gen[p.lhs]) continue;
    if (std::all_of(p.rhs.begin(), p.rhs.end(), [&](const Symbol& s) { return s.terminal || gen[s.id]; }))
      by_lhs[p.lhs].push_back(&p);
  }
  std::vector<Nonterminal> order;
  std::vector<char> seen(g.nonterminal_count(), 0);
  seen[g.start()] = 1;
  order.push_back(g.start());
  for (std::size_t i = 0; i < order.size(); ++i)
    for (const Production* p : by_lhs[order[i]])
      for (const Symbol& s : p->rhs)
        if (!s.terminal && !seen[s.id]) {
          seen[s.id] = 1;
          order.push_back(s.id);
        }
  Cfg out(g.alphabet(), g.name(g.start()));
  std::vector<Nonterminal> remap(g.nonterminal_count(), 0);
  remap[g.start()] = out.start();
  for (std::size_t i = 1; i < order.size(); ++i) remap[order[i]] = out.add_nonterminal(g.name(order[i]));
  for (Nonterminal x : order)
    for (const Production* p : by_lhs[x]) {
      Rhs rhs = p->rhs;
      for (Symbol& s : rhs)
        if (!s.terminal) s.id = remap[s.id];
      out.add_production(remap[x], std::move(rhs));
    }
  out.normalize();
  return out;
}

struct CnfResult {
  Cfg grammar;  // generates L \ {ε}
  bool derives_epsilon = false;
};

inline CnfResult to_cnf(const Cfg& input) {
  Cfg g = input;
  std::vector<Production> prods = g.productions();

  // Terminals inside long right-hand sides get their own nonterminal.
  std::map<Letter, Nonterminal> term;
  for (auto& p : prods) {
    if (p.rhs.size() < 2) continue;
    for (Symbol& s : p.rhs)
      if (s.terminal) {
        auto it = term.find(s.id);
        if (it == term.end()) it = term.emplace(s.id, g.add_nonterminal("T_" + g.alphabet().token(s.id))).first;
        s = Symbol::nt(it->second);
      }
  }
  for (auto [a, x] : term) prods.push_back({x, {Symbol::t(a)}});

  // Binarize.
  std::vector<Production> bin;
  for (auto& p : prods) {
    if (p.rhs.size() <= 2) {
      bin.push_back(p);
      continue;
    }
    Nonterminal cur = p.lhs;
    for (std::size_t i = 0; i + 2 < p.rhs.size(); ++i) {
      Nonterminal next = g.add_nonterminal(g.name(p.lhs) + "_" + std::to_string(i + 1));
      bin.push_back({cur, {p.rhs[i], Symbol::nt(next)}});
      cur = next;
    }
    bin.push_back({cur, {p.rhs[p.rhs.size() - 2], p.rhs.back()}});
  }

  // Remove epsilon productions.
  const std::size_t n = g.nonterminal_count();
  std::vector<char> nullable(n, 0);
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& p : bin)
      if (!nullable[p.lhs] &&
          std::all_of(p.rhs.begin(), p.rhs.end(), [&](const Symbol& s) { return !s.terminal && nullable[s.id]; })) {
        nullable[p.lhs] = 1;
        changed = true;
      }
  }
  std::set<Production> noeps;
  for (const auto& p : bin) {
    if (p.rhs.empty()) continue;
    noeps.insert(p);
    if (p.rhs.size() == 2) {
      if (!p.rhs[0].terminal && nullable[p.rhs[0].id]) noeps.insert({p.lhs, {p.rhs[1]}});
      if (!p.rhs[1].terminal && nullable[p.rhs[1].id]) noeps.insert({p.lhs, {p.rhs[0]}});
    }
  }

  // Remove unit productions.
  std::vector<std::set<Nonterminal>> unit(n);
  for (Nonterminal x = 0; x < n; ++x) unit[x].insert(x);
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& p : noeps)
      if (p.rhs.size() == 1 && !p.rhs[0].terminal)
        for (Nonterminal x = 0; x < n; ++x)
          if (unit[x].count(p.lhs) && unit[x].insert(p.rhs[0].id).second) changed = true;
  }
  std::vector<std::vector<const Production*>> by_lhs(n);
  for (const auto& p : noeps)
    if (!(p.rhs.size() == 1 && !p.rhs[0].terminal)) by_lhs[p.lhs].push_back(&p);

  // same names in the same order, hence the same ids
  Cfg out(g.alphabet(), g.name(0));
  for (Nonterminal x = 1; x < n; ++x) out.add_nonterminal(g.name(x));
  out.set_start(g.start());
  for (Nonterminal x = 0; x < n; ++x)
    for (Nonterminal y : unit[x])
      for (const Production* p : by_lhs[y]) out.add_production(x, p->rhs);
  out.normalize();
  return {reduce(out), nullable[g.start()] != 0};
}

// L(g) ∩ Σ^{<=n}: yields of the CNF grammar computed by increasing length.
inline WordSet cfg_enumerate(const Cfg& g, std::size_t n) {
  const CnfResult c = to_cnf(g);
  const Cfg& h = c.grammar;
  WordSet out;
  if (c.derives_epsilon) out.insert(Word{});
  if (cfg_is_empty(h) || n == 0) return out;
  const std::size_t k = h.nonterminal_count();
  std::vector<std::vector<std::vector<Word>>> yields(k, std::vector<std::vector<Word>>(n + 1));
  for (const auto& p : h.productions())
    if (p.rhs.size() == 1) yields[p.lhs][1].push_back({p.rhs[0].id});
  for (auto& per : yields) {
    std::sort(per[1].begin(), per[1].end());
    per[1].erase(std::unique(per[1].begin(), per[1].end()), per[1].end());
  }
  for (std::size_t len = 2; len <= n; ++len) {
    for (const auto& p : h.productions()) {
      if (p.rhs.size() != 2) continue;
      auto& dst = yields[p.lhs][len];
      for (std::size_t i = 1; i < len; ++i)
        for (const Word& u : yields[p.rhs[0].id][i])
          for (const Word& v : yields[p.rhs[1].id][len - i]) dst.push_back(concat(u, v));
    }
    for (auto& per : yields) {
      std::sort(per[len].begin(), per[len].end());
      per[len].erase(std::unique(per[len].begin(), per[len].end()), per[len].end());
    }
  }
  for (std::size_t len = 1; len <= n; ++len) out.insert(yields[h.start()][len].begin(), yields[h.start()][len].end());
  return out;
}

struct TripleStats {
  std::size_t input_nonterminals = 0;  // of the CNF form of the input
  std::size_t transducer_states = 0;
  std::size_t triple_nonterminals = 0;  // (p, X, q) nonterminals
  std::size_t output_nonterminals = 0;  // all, before reduction; adds a start and ε-run nonterminals
};

// Triple construction: (p, X, q) generates the outputs of transducer runs
// from p to q that read a word derived from X.
inline Cfg apply_transducer_to_cfg(const Transducer& t, const Cfg& g, TripleStats* stats = nullptr) {
  if (!(t.input_alphabet() == g.alphabet()))
    throw AlphabetMismatch("transducer input alphabet differs from the grammar alphabet");
  const CnfResult c = to_cnf(g);
  const Cfg& h = c.grammar;
  const std::size_t Q = t.size();

  // epsilon-input reachability and whether such moves ever write a letter
  std::vector<std::vector<char>> eps(Q, std::vector<char>(Q, 0));
  bool eps_output = false;
  for (State p = 0; p < Q; ++p) {
    eps[p][p] = 1;
    std::vector<State> stack{p};
    while (!stack.empty()) {
      State q = stack.back();
      stack.pop_back();
      for (const auto& e : t.out(q)) {
        if (e.in) continue;
        if (e.out) eps_output = true;
        if (!eps[p][e.dst]) {
          eps[p][e.dst] = 1;
          stack.push_back(e.dst);
        }
      }
    }
  }
  std::vector<std::vector<const TransducerEdge*>> by_letter(g.alphabet().size());
  for (State p = 0; p < Q; ++p)
    for (const auto& e : t.out(p))
      if (e.in) by_letter[*e.in].push_back(&e);

  Cfg out(t.output_alphabet(), "S");
  std::map<std::tuple<State, Nonterminal, State>, Nonterminal> triples;
  std::map<std::pair<State, State>, Nonterminal> eps_nt;
  std::deque<std::tuple<State, Nonterminal, State>> work;
  std::deque<std::pair<State, State>> eps_work;

  auto triple = [&](State p, Nonterminal x, State q) {
    auto [it, fresh] = triples.try_emplace({p, x, q}, 0);
    if (fresh) {
      it->second = out.add_nonterminal("(" + t.name(p) + "," + h.name(x) + "," + t.name(q) + ")");
      work.push_back({p, x, q});
    }
    return it->second;
  };
  auto epsilon_path = [&](State p, State q) {
    auto [it, fresh] = eps_nt.try_emplace({p, q}, 0);
    if (fresh) {
      it->second = out.add_nonterminal("(" + t.name(p) + ",ε," + t.name(q) + ")");
      eps_work.push_back({p, q});
    }
    return it->second;
  };

  std::vector<std::vector<const Production*>> by_lhs(h.nonterminal_count());
  for (const auto& p : h.productions()) by_lhs[p.lhs].push_back(&p);

  for (State f = 0; f < Q; ++f) {
    if (!t.is_final(f)) continue;
    if (!cfg_is_empty(h)) out.add_production(out.start(), {Symbol::nt(triple(t.initial(), h.start(), f))});
    if (c.derives_epsilon && eps[t.initial()][f]) {
      if (eps_output)
        out.add_production(out.start(), {Symbol::nt(epsilon_path(t.initial(), f))});
      else
        out.add_production(out.start(), {});
    }
  }
  while (!work.empty() || !eps_work.empty()) {
    if (!eps_work.empty()) {
      auto [p, q] = eps_work.front();
      eps_work.pop_front();
      const Nonterminal lhs = eps_nt.at({p, q});
      if (p == q) out.add_production(lhs, {});
      for (const auto& e : t.out(p)) {
        if (e.in || !eps[e.dst][q]) continue;
        Rhs rhs;
        if (e.out) rhs.push_back(Symbol::t(*e.out));
        rhs.push_back(Symbol::nt(epsilon_path(e.dst, q)));
        out.add_production(lhs, std::move(rhs));
      }
      continue;
    }
    auto [p, x, q] = work.front();
    work.pop_front();
    const Nonterminal lhs = triples.at({p, x, q});
    for (const Production* prod : by_lhs[x]) {
      if (prod->rhs.size() == 2) {
        for (State r = 0; r < Q; ++r)
          out.add_production(lhs, {Symbol::nt(triple(p, prod->rhs[0].id, r)), Symbol::nt(triple(r, prod->rhs[1].id, q))});
        continue;
      }
      for (const TransducerEdge* e : by_letter[prod->rhs[0].id]) {
        if (!eps[p][e->src] || !eps[e->dst][q]) continue;
        Rhs rhs;
        if (eps_output) rhs.push_back(Symbol::nt(epsilon_path(p, e->src)));
        if (e->out) rhs.push_back(Symbol::t(*e->out));
        if (eps_output) rhs.push_back(Symbol::nt(epsilon_path(e->dst, q)));
        out.add_production(lhs, std::move(rhs));
      }
    }
  }
  if (stats) {
    stats->input_nonterminals = h.nonterminal_count();
    stats->transducer_states = Q;
    stats->triple_nonterminals = triples.size();
    stats->output_nonterminals = out.nonterminal_count();
  }
  out.normalize();
  return reduce(out);
}

// Transducer copying exactly the words accepted by the automaton.
inline Transducer identity_transducer(const Nfa& a) {
  Transducer t(a.alphabet(), a.alphabet(), a.size());
  t.set_initial(a.initial());
  for (State q = 0; q < a.size(); ++q) {
    t.set_name(q, a.name(q));
    if (a.is_final(q)) t.set_final(q);
    for (const auto& e : a.out(q)) t.add_edge(q, e.label, e.label, e.dst);
  }
  return t;
}

inline Cfg cfg_intersect_regular(const Cfg& g, const Nfa& a) {
  return apply_transducer_to_cfg(identity_transducer(a), g);
}

inline bool cfg_intersect_regular_empty(const Cfg& g, const Nfa& a) {
  return cfg_is_empty(cfg_intersect_regular(g, a));
}

// Base alphabet plus three fresh priority-0 letters: the separator and the
// left and right end markers. Tokens are "#", "#L", "#R", primed as often as
// needed to stay fresh.
struct HatAlphabet {
  PriorityAlphabet alphabet;
  std::size_t base_size = 0;
  Letter hash = 0, hash_left = 0, hash_right = 0;

  bool is_hash(Letter a) const { return a >= base_size; }
};

inline HatAlphabet hat(const PriorityAlphabet& base) {
  std::string suffix;
  while (base.find("#" + suffix) || base.find("#L" + suffix) || base.find("#R" + suffix)) suffix += "'";
  HatAlphabet h;
  h.base_size = base.size();
  h.alphabet = base.with_letter("#" + suffix, 0).with_letter("#L" + suffix, 0).with_letter("#R" + suffix, 0);
  h.hash = static_cast<Letter>(base.size());
  h.hash_left = h.hash + 1;
  h.hash_right = h.hash + 2;
  return h;
}

// Same grammar over a larger alphabet that extends the current one.
inline Cfg extend_alphabet(const Cfg& g, const PriorityAlphabet& bigger) {
  for (Letter a = 0; a < g.alphabet().size(); ++a)
    if (a >= bigger.size() || bigger.token(a) != g.alphabet().token(a) ||
        bigger.priority(a) != g.alphabet().priority(a))
      throw AlphabetMismatch("alphabet is not an extension");
  Cfg out(bigger, g.name(0));
  for (Nonterminal x = 1; x < g.nonterminal_count(); ++x) out.add_nonterminal(g.name(x));
  out.set_start(g.start());
  for (const auto& p : g.productions()) out.add_production(p.lhs, p.rhs);
  return out;
}

// {u # v : X =>* u X v}. Spine nonterminals <Y> generate {u # v : Y =>* u X v}.
inline Cfg pump_pair_grammar(const Cfg& g, Nonterminal x, const HatAlphabet& h) {
  if (!g.is_cnf()) throw PreconditionError("pump pair grammar needs a grammar in Chomsky normal form");
  if (x >= g.nonterminal_count()) throw PreconditionError("undeclared nonterminal");
  Cfg out = extend_alphabet(g, h.alphabet);
  std::vector<Nonterminal> spine(g.nonterminal_count());
  for (Nonterminal y = 0; y < g.nonterminal_count(); ++y) spine[y] = out.add_nonterminal("<" + g.name(y) + ">");
  out.set_start(spine[x]);
  out.add_production(spine[x], {Symbol::t(h.hash)});
  for (const auto& p : g.productions()) {
    if (p.rhs.size() != 2) continue;
    const Nonterminal a = p.rhs[0].id, b = p.rhs[1].id;
    out.add_production(spine[p.lhs], {Symbol::nt(a), Symbol::nt(spine[b])});
    out.add_production(spine[p.lhs], {Symbol::nt(spine[a]), Symbol::nt(b)});
  }
  return reduce(out);
}

inline Cfg pump_pair_grammar(const Cfg& g, Nonterminal x) { return pump_pair_grammar(g, x, hat(g.alphabet())); }

// X =>+ ... X ... (X occurs below itself in some derivation).
inline bool is_self_embedding(const Cfg& g, Nonterminal x) {
  std::vector<std::vector<Nonterminal>> succ(g.nonterminal_count());
  for (const auto& p : g.productions())
    for (const Symbol& s : p.rhs)
      if (!s.terminal) succ[p.lhs].push_back(s.id);
  std::vector<char> seen(g.nonterminal_count(), 0);
  std::vector<Nonterminal> stack(succ[x].begin(), succ[x].end());
  while (!stack.empty()) {
    Nonterminal y = stack.back();
    stack.pop_back();
    if (y == x) return true;
    if (seen[y]) continue;
    seen[y] = 1;
    for (Nonterminal z : succ[y]) stack.push_back(z);
  }
  return false;
}

}  // namespace downclose
