#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "downclose/cfg.hpp"
#include "downclose/nfa.hpp"
#include "downclose/oca.hpp"
#include "downclose/orders.hpp"

namespace downclose {

namespace detail {

// Calls f once per distinct subword of v of length at most n, together with
// its index in bijective base-|Σ| numbering. Each step jumps to the next
// occurrence of the chosen letter, so duplicates never arise.
template <class F>
void distinct_subwords(const Word& v, std::size_t alphabet_size, std::size_t n, F&& f) {
  const std::size_t len = v.size();
  // next[i][a]: first position >= i holding a, or len
  std::vector<std::vector<std::size_t>> next(len + 1, std::vector<std::size_t>(alphabet_size, len));
  for (std::size_t i = len; i-- > 0;) {
    next[i] = next[i + 1];
    next[i][v[i]] = i;
  }
  Word u;
  auto rec = [&](auto&& self, std::size_t from, std::uint64_t code) -> void {
    f(static_cast<const Word&>(u), code);
    if (u.size() == n) return;
    for (Letter a = 0; a < alphabet_size; ++a) {
      const std::size_t at = next[from][a];
      if (at == len) continue;
      u.push_back(a);
      self(self, at + 1, code * alphabet_size + a + 1);
      u.pop_back();
    }
  };
  rec(rec, 0, 0);
}

// Number of words of length at most n, or nullopt above `limit`.
inline std::optional<std::uint64_t> count_words(std::size_t alphabet_size, std::size_t n, std::uint64_t limit) {
  std::uint64_t total = 1, layer = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (layer > limit / std::max<std::size_t>(alphabet_size, 1)) return std::nullopt;
    layer *= alphabet_size;
    total += layer;
    if (total > limit) return std::nullopt;
  }
  return total;
}

}  // namespace detail

// {u ∈ Σ^{<=n} : u ≤ v for some v in words}. Every order here refines the
// subword order, so only subwords of members are candidates.
inline WordSet closure_bounded(const WordSet& words, OrderKind order, const PriorityAlphabet& alphabet, std::size_t n) {
  WordSet out;
  BlockOrder block(alphabet);
  // Candidates already found, by index when the candidate space is small.
  const auto space = detail::count_words(alphabet.size(), n, std::uint64_t{1} << 26);
  std::vector<char> found(space.value_or(0), 0);
  for (const Word& v : words) {
    alphabet.check(v);
    detail::distinct_subwords(v, alphabet.size(), n, [&](const Word& u, std::uint64_t code) {
      if (space ? found[code] : out.count(u)) return;
      bool related = false;
      switch (order) {
        case OrderKind::subword: related = true; break;
        case OrderKind::priority: related = leq_priority(alphabet, u, v); break;
        case OrderKind::block: related = block(u, v); break;
      }
      if (related) {
        out.insert(u);
        if (space) found[code] = 1;
      }
    });
  }
  return out;
}

using Model = std::variant<Nfa, Oca, Cfg>;

inline const PriorityAlphabet& model_alphabet(const Model& m) {
  return std::visit([](const auto& x) -> const PriorityAlphabet& { return x.alphabet(); }, m);
}

inline std::string model_type(const Model& m) {
  switch (m.index()) {
    case 0: return "nfa";
    case 1: return "oca";
    default: return "cfg";
  }
}

// ℒ(model) ∩ Σ^{<=n}; the counter cap only applies to OCAs.
inline WordSet enumerate_model(const Model& m, std::size_t n, std::optional<std::size_t> counter_cap = std::nullopt) {
  if (const auto* a = std::get_if<Nfa>(&m)) return a->enumerate(n);
  if (const auto* o = std::get_if<Oca>(&m)) return oca_enumerate(*o, n, counter_cap);
  return cfg_enumerate(std::get<Cfg>(m), n);
}

struct ClosureReport {
  std::string model;
  OrderKind order = OrderKind::block;
  std::size_t bound = 0;
  std::size_t dom_bound = 0;
  bool equal = true;
  std::vector<Word> missing;  // in the oracle closure, not accepted
  std::vector<Word> extra;    // accepted, not in the oracle closure
  double enumerate_ms = 0, oracle_ms = 0, compare_ms = 0;
};

inline ClosureReport compare_closure(const Model& model, OrderKind order, const Nfa& constructed, std::size_t bound,
                                     std::optional<std::size_t> dom_bound = std::nullopt,
                                     std::optional<std::size_t> counter_cap = std::nullopt,
                                     std::string model_id = {}) {
  using Clock = std::chrono::steady_clock;
  auto ms = [](Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
  };
  const PriorityAlphabet& al = model_alphabet(model);
  require_same_alphabet(al, constructed.alphabet());
  ClosureReport r;
  r.model = model_id.empty() ? model_type(model) : std::move(model_id);
  r.order = order;
  r.bound = bound;
  r.dom_bound = dom_bound.value_or(2 * bound);
  if (r.dom_bound < bound) throw PreconditionError("the dominator bound must be at least the comparison bound");

  const auto t0 = Clock::now();
  const WordSet lang = enumerate_model(model, r.dom_bound, counter_cap);
  const auto t1 = Clock::now();
  const WordSet expected = closure_bounded(lang, order, al, bound);
  const auto t2 = Clock::now();
  const WordSet got = constructed.enumerate(bound);
  for (const Word& w : expected)
    if (!got.count(w)) r.missing.push_back(w);
  for (const Word& w : got)
    if (!expected.count(w)) r.extra.push_back(w);
  const auto t3 = Clock::now();
  r.equal = r.missing.empty() && r.extra.empty();
  r.enumerate_ms = ms(t0, t1);
  r.oracle_ms = ms(t1, t2);
  r.compare_ms = ms(t2, t3);
  return r;
}

}  // namespace downclose
