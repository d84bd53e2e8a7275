#pragma once

#include <deque>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "downclose/nfa.hpp"
#include "downclose/orders.hpp"

namespace downclose {

// Edges read at most one letter and write at most one letter.
struct TransducerEdge {
  State src;
  Label in;
  Label out;
  State dst;
  friend auto operator<=>(const TransducerEdge&, const TransducerEdge&) = default;
};

class Transducer {
 public:
  Transducer(PriorityAlphabet input, PriorityAlphabet output, std::size_t states)
      : input_(std::move(input)), output_(std::move(output)), final_(states, 0), out_(states), names_(states) {
    if (states == 0) throw PreconditionError("a transducer needs at least one state");
  }

  const PriorityAlphabet& input_alphabet() const { return input_; }
  const PriorityAlphabet& output_alphabet() const { return output_; }
  std::size_t size() const { return out_.size(); }
  State initial() const { return initial_; }
  bool is_final(State q) const { return final_.at(q) != 0; }
  const std::vector<TransducerEdge>& out(State q) const { return out_.at(q); }

  State add_state(std::string name = {}) {
    out_.emplace_back();
    final_.push_back(0);
    names_.push_back(std::move(name));
    return static_cast<State>(out_.size() - 1);
  }

  void set_initial(State q) { initial_ = checked(q); }
  void set_final(State q, bool f = true) { final_[checked(q)] = f ? 1 : 0; }
  void set_name(State q, std::string name) { names_[checked(q)] = std::move(name); }
  std::string name(State q) const {
    checked(q);
    return names_[q].empty() ? "t" + std::to_string(q) : names_[q];
  }

  void add_edge(State src, Label in, Label out, State dst) {
    checked(src);
    checked(dst);
    if (in) input_.check(*in);
    if (out) output_.check(*out);
    out_[src].push_back({src, in, out, dst});
  }

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& e : out_) n += e.size();
    return n;
  }

 private:
  State checked(State q) const {
    if (q >= out_.size()) throw PreconditionError("transducer state " + std::to_string(q) + " does not exist");
    return q;
  }

  PriorityAlphabet input_, output_;
  std::vector<char> final_;
  std::vector<std::vector<TransducerEdge>> out_;
  std::vector<std::string> names_;
  State initial_ = 0;
};

// Keep or drop each letter.
inline Transducer subword_transducer(const PriorityAlphabet& alphabet) {
  Transducer t(alphabet, alphabet, 1);
  t.set_name(0, "q");
  t.set_final(0);
  for (Letter a = 0; a < alphabet.size(); ++a) {
    t.add_edge(0, a, a, 0);
    t.add_edge(0, a, std::nullopt, 0);
  }
  return t;
}

// state_r remembers the largest priority dropped since the last kept letter.
// acc is entered by keeping the last letter; drain reads everything with empty
// output. The initial state behaves like state_0 but is the only one with the
// epsilon edge to drain: state_0 is re-entered after every kept letter, where
// such an edge would drop arbitrary suffixes.
inline Transducer priority_transducer(const PriorityAlphabet& alphabet) {
  const int d = alphabet.max_priority();
  Transducer t(alphabet, alphabet, static_cast<std::size_t>(d) + 4);
  const State acc = d + 1, drain = d + 2, start = d + 3;
  for (int r = 0; r <= d; ++r) t.set_name(r, "state_" + std::to_string(r));
  t.set_name(acc, "acc");
  t.set_name(drain, "drain");
  t.set_name(start, "start");
  t.set_initial(start);
  t.set_final(acc);
  t.set_final(drain);
  t.add_edge(start, std::nullopt, std::nullopt, drain);
  for (Letter a = 0; a < alphabet.size(); ++a) {
    const int s = alphabet.priority(a);
    for (int r = 0; r <= d; ++r) {
      if (s < r) {
        t.add_edge(r, a, std::nullopt, r);
      } else {
        t.add_edge(r, a, std::nullopt, s);
        t.add_edge(r, a, a, 0);
        t.add_edge(r, a, a, acc);
      }
    }
    t.add_edge(start, a, std::nullopt, s);
    t.add_edge(start, a, a, 0);
    t.add_edge(start, a, a, acc);
    t.add_edge(drain, a, std::nullopt, drain);
  }
  return t;
}

// From state_0 a dropped letter of priority s opens state_s, which drops
// letters of priority <= s until a letter of priority exactly s is kept. When
// level s has several letters the kept separator need not be the last one of
// its range: post_s drops the rest of the range, which ends with a dropped
// letter of priority s. With one letter per level post_s is never needed.
inline Transducer block_transducer(const PriorityAlphabet& alphabet) {
  const int d = alphabet.max_priority();
  Transducer t(alphabet, alphabet, static_cast<std::size_t>(d) + 2);
  const State sink = d + 1;
  for (int r = 0; r <= d; ++r) t.set_name(r, "state_" + std::to_string(r));
  t.set_name(sink, "sink");
  t.set_final(0);
  std::vector<std::optional<State>> post(d + 1);
  for (int r = 1; r <= d; ++r)
    if (alphabet.letters_with_priority(r).size() > 1) post[r] = t.add_state("post_" + std::to_string(r));
  for (Letter a = 0; a < alphabet.size(); ++a) {
    const int s = alphabet.priority(a);
    t.add_edge(0, a, a, 0);
    t.add_edge(0, a, std::nullopt, s);
    if (s >= 1 && post[s]) t.add_edge(0, a, a, *post[s]);
    for (int r = 1; r <= d; ++r) {
      if (s <= r) t.add_edge(r, a, std::nullopt, r);
      if (s == r) t.add_edge(r, a, a, 0);
      if (s == r && post[r]) t.add_edge(r, a, a, *post[r]);
      if (s > r) t.add_edge(r, a, std::nullopt, sink);
      if (!post[r]) continue;
      if (s <= r) t.add_edge(*post[r], a, std::nullopt, *post[r]);
      if (s == r) t.add_edge(*post[r], a, std::nullopt, 0);
    }
    t.add_edge(sink, a, std::nullopt, sink);
  }
  return t;
}

inline Transducer order_transducer(OrderKind kind, const PriorityAlphabet& alphabet) {
  switch (kind) {
    case OrderKind::subword: return subword_transducer(alphabet);
    case OrderKind::priority: return priority_transducer(alphabet);
    case OrderKind::block: return block_transducer(alphabet);
  }
  throw PreconditionError("unknown order");
}

// Product of an NFA with a transducer, restricted to reachable and
// co-reachable pairs. An empty image is a single non-final state.
inline Nfa apply_transduction(const Transducer& t, const Nfa& a) {
  if (!(t.input_alphabet() == a.alphabet()))
    throw AlphabetMismatch("transducer input alphabet differs from the automaton alphabet");
  // transducer edges by (state, input letter); index size() holds epsilon input
  const std::size_t k = a.alphabet().size();
  std::vector<std::vector<std::vector<const TransducerEdge*>>> by_input(
      t.size(), std::vector<std::vector<const TransducerEdge*>>(k + 1));
  for (State s = 0; s < t.size(); ++s)
    for (const auto& e : t.out(s)) by_input[s][e.in ? *e.in : k].push_back(&e);

  Nfa out(t.output_alphabet());
  std::map<std::pair<State, State>, State> index;
  std::deque<std::pair<State, State>> queue;
  auto get = [&](State q, State s) {
    auto [it, fresh] = index.try_emplace({q, s}, 0);
    if (fresh) {
      it->second = index.size() == 1 ? out.initial() : out.add_state();
      if (a.is_final(q) && t.is_final(s)) out.set_final(it->second);
      queue.push_back({q, s});
    }
    return it->second;
  };
  get(a.initial(), t.initial());
  while (!queue.empty()) {
    auto [q, s] = queue.front();
    queue.pop_front();
    const State src = index.at({q, s});
    for (const auto& e : a.out(q)) {
      if (!e.label) {
        out.add_edge(src, std::nullopt, get(e.dst, s));
        continue;
      }
      for (const TransducerEdge* te : by_input[s][*e.label]) out.add_edge(src, te->out, get(e.dst, te->dst));
    }
    for (const TransducerEdge* te : by_input[s][k]) out.add_edge(src, te->out, get(q, te->dst));
  }
  return out.trim();
}

inline Nfa closure_regular(const Nfa& a, OrderKind kind) {
  return apply_transduction(order_transducer(kind, a.alphabet()), a);
}

}  // namespace downclose
