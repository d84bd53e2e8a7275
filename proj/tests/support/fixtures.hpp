#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "downclose/downclose.hpp"

namespace fixtures {

using namespace downclose;

// Two letters per priority 0, 1, 2.
inline PriorityAlphabet ex31() {
  return PriorityAlphabet({{"0a", 0}, {"0b", 0}, {"1a", 1}, {"1b", 1}, {"2a", 2}, {"2b", 2}});
}

inline PriorityAlphabet abc() { return PriorityAlphabet({{"a", 0}, {"b", 1}, {"c", 2}}); }

// Letters "0".."k" with priority equal to the digit.
inline PriorityAlphabet digits(int k) {
  std::vector<std::pair<std::string, int>> letters;
  for (int i = 0; i <= k; ++i) letters.emplace_back(std::to_string(i), i);
  return PriorityAlphabet(letters);
}

inline PriorityAlphabet ab(int pa, int pb) { return PriorityAlphabet({{"a", pa}, {"b", pb}}); }

inline Word w(const PriorityAlphabet& al, const std::string& text) { return parse_word(al, text); }

inline std::vector<Word> words(const PriorityAlphabet& al, const std::vector<std::string>& texts) {
  std::vector<Word> out;
  for (const auto& t : texts) out.push_back(parse_word(al, t));
  return out;
}

inline WordSet word_set(const PriorityAlphabet& al, const std::vector<std::string>& texts) {
  WordSet out;
  for (const auto& t : texts) out.insert(parse_word(al, t));
  return out;
}

// Single-state-per-letter NFA for x1* x2* ... (each listed letter starred, in order).
inline Nfa starred_sequence(const PriorityAlphabet& al, const std::vector<std::string>& letters) {
  Nfa n(al);
  State q = n.initial();
  n.set_final(q);
  for (const auto& tok : letters) {
    State next = n.add_state();
    n.add_edge(q, std::nullopt, next);
    n.add_edge(next, al.letter(tok), next);
    n.set_final(next);
    q = next;
  }
  return n;
}

// a^n b^n as a simple OCA: push on a, pop on b.
inline Oca anbn(const PriorityAlphabet& al) {
  Oca o(al, 2, AcceptMode::zeroCounter);
  o.set_initial(0);
  o.set_final(1);
  o.add_transition(0, al.letter("a"), CounterOp::inc, 0);
  o.add_transition(0, std::nullopt, CounterOp::noop, 1);
  o.add_transition(1, al.letter("b"), CounterOp::dec, 1);
  return o;
}

// a^n b^n c where c is read by a zero test.
inline Oca anbnc(const PriorityAlphabet& al) {
  Oca o(al, 3, AcceptMode::anyCounter);
  o.set_initial(0);
  o.set_final(2);
  o.add_transition(0, al.letter("a"), CounterOp::inc, 0);
  o.add_transition(0, std::nullopt, CounterOp::noop, 1);
  o.add_transition(1, al.letter("b"), CounterOp::dec, 1);
  o.add_transition(1, al.letter("c"), CounterOp::zero, 2);
  return o;
}

// Grammar from lines "X -> A b C"; left-hand sides are the nonterminals, the
// first one is the start symbol, "ε" or nothing after the arrow is the empty
// right-hand side.
inline Cfg grammar(const PriorityAlphabet& al, const std::vector<std::string>& lines) {
  std::vector<std::pair<std::string, std::vector<std::string>>> rules;
  for (const auto& line : lines) {
    std::istringstream in(line);
    std::string lhs, arrow, tok;
    in >> lhs >> arrow;
    std::vector<std::string> rhs;
    while (in >> tok)
      if (tok != "ε") rhs.push_back(tok);
    rules.emplace_back(lhs, rhs);
  }
  Cfg g(al, rules.front().first);
  for (const auto& [lhs, rhs] : rules)
    if (!g.find(lhs)) g.add_nonterminal(lhs);
  for (const auto& [lhs, rhs] : rules) {
    Rhs r;
    for (const auto& tok : rhs) r.push_back(g.find(tok) ? Symbol::nt(*g.find(tok)) : Symbol::t(al.letter(tok)));
    g.add_production(g.nonterminal(lhs), r);
  }
  return g;
}

}  // namespace fixtures
