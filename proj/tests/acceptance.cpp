// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support/definitional.hpp"
#include "support/fixtures.hpp"
#include "support/random_models.hpp"
#include "support/regular_oracle.hpp"

using namespace downclose;
using fixtures::w;

namespace {

constexpr OrderKind kOrders[] = {OrderKind::subword, OrderKind::priority, OrderKind::block};

// Collects the first few failure messages of a criterion.
struct Log {
  std::size_t failures = 0;
  std::vector<std::string> notes;
  std::vector<std::string> info;

  void fail(const std::string& msg) {
    if (failures++ < 5) notes.push_back(msg);
  }
  void check(bool ok, const std::string& msg) {
    if (!ok) fail(msg);
  }
};

struct Instance {
  std::string name;
  Model model;
  OrderKind order;
  Nfa closure;
};

std::vector<Instance> corpus;

bool defined_leq(OrderKind k, const PriorityAlphabet& al, const Word& u, const Word& v) {
  switch (k) {
    case OrderKind::subword: return oracle_defs::subword(u, v);
    case OrderKind::priority: return oracle_defs::priority(al, u, v);
    case OrderKind::block: return oracle_defs::block(al, u, v);
  }
  return false;
}

std::string show(const PriorityAlphabet& al, const Word& x) { return "\"" + format_word(al, x, " ") + "\""; }

// Every word of `words` lies below some word of the model; dominators are
// searched with increasing length bounds.
std::vector<Word> undominated(const Model& m, const WordSet& words, OrderKind k, std::vector<std::size_t> bounds) {
  const auto& al = model_alphabet(m);
  std::vector<Word> pending(words.begin(), words.end());
  for (std::size_t b : bounds) {
    const WordSet doms = enumerate_model(m, b);
    std::erase_if(pending, [&](const Word& u) {
      for (const Word& v : doms)
        if (v.size() >= u.size() && leq(k, al, u, v)) return true;
      return false;
    });
    if (pending.empty()) break;
  }
  return pending;
}

bool includes(const WordSet& big, const WordSet& small) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end(), ShortLex{});
}

// ---------------------------------------------------------------------------

void order_decisions(Log& log) {
  const auto ex = fixtures::ex31();
  const auto flat = fixtures::abc();

  // Flat three-priority alphabet: every pair up to length 6.
  {
    const auto all = all_words(flat, 6);
    BlockOrder block(flat);
    std::size_t pairs = 0;
    for (const Word& u : all)
      for (const Word& v : all) {
        ++pairs;
        if (block(u, v) != oracle_defs::block(flat, u, v)) log.fail("block " + show(flat, u) + " " + show(flat, v));
        if (leq_priority(flat, u, v) != oracle_defs::priority(flat, u, v))
          log.fail("priority " + show(flat, u) + " " + show(flat, v));
      }
    log.info.push_back(std::to_string(pairs) + " pairs over a,b,c");
  }

  // Two letters per priority: all pairs up to length 3, all pairs with a
  // left side up to length 2 against right sides up to length 6, and a
  // random sample of pairs up to length 6.
  {
    BlockOrder block(ex);
    std::size_t pairs = 0;
    auto compare = [&](const Word& u, const Word& v) {
      ++pairs;
      if (block(u, v) != oracle_defs::block(ex, u, v)) log.fail("block " + show(ex, u) + " " + show(ex, v));
      if (leq_priority(ex, u, v) != oracle_defs::priority(ex, u, v))
        log.fail("priority " + show(ex, u) + " " + show(ex, v));
    };
    const auto short_words = all_words(ex, 3);
    for (const Word& u : short_words)
      for (const Word& v : short_words) compare(u, v);
    const auto all = all_words(ex, 6);
    for (const Word& u : all_words(ex, 2))
      for (const Word& v : all) compare(u, v);
    std::mt19937 rng(1);
    const std::vector<Word> pool(all.begin(), all.end());
    for (int i = 0; i < 1'000'000; ++i) {
      const Word& v = pool[rng() % pool.size()];
      // draw u among subwords of v half of the time so that both answers occur
      Word u;
      if (rng() % 2) {
        for (Letter c : v)
          if (rng() % 3) u.push_back(c);
      } else {
        u = pool[rng() % pool.size()];
      }
      compare(u, v);
    }
    log.info.push_back(std::to_string(pairs) + " pairs over two letters per priority");
  }

  // Worked examples.
  auto bo = [&](const char* u, const char* v) { return leq_block(ex, w(ex, u), w(ex, v)); };
  log.check(bo("", "0a") && bo("0a", "0a 0b"), "ε ⊑ 0a ⊑ 0a 0b");
  log.check(bo("1b 0a", "0a 1b 0a 0a 1a 0a 0b"), "1b 0a ⊑ 0a 1b 0a 0a 1a 0a 0b");
  log.check(!bo("1b 0a", "0a 1b 0a 0a 1a 0b 0b"), "1b 0a ⋢ 0a 1b 0a 0a 1a 0b 0b");
  log.check(bo("2a 1b 0a", "0a 2a 0a 1b 0a 0a 1a 0a 0b"), "2a 1b 0a ⊑ 0a 2a 0a 1b 0a 0a 1a 0a 0b");
  log.check(!bo("2a 1b 0a", "0a 2b 0a 1b 0a 0a 1a 0a 0b"), "2a 1b 0a ⋢ 0a 2b 0a 1b 0a 0a 1a 0a 0b");
  log.check(!bo("1a 1b", "1a 2a 1b"), "1a 1b ⋢ 1a 2a 1b");
  log.check(bo("1a 0a", "1a 1b 0a"), "1a 0a ⊑ 1a 1b 0a");
  log.check(!leq_priority(ex, w(ex, "1a 0a"), w(ex, "1a 1b 0a")), "1a 0a ⋠ 1a 1b 0a");
  const auto dg = fixtures::digits(2);
  log.check(leq_block(dg, w(dg, "1 2 0 1 2 1 1 2 1 0"), w(dg, "1 2 0 1 0 1 2 1 1 2 1 1 2 1 1 2 1 0")),
            "pumped pair");
}

void algebraic_laws(Log& log) {
  // Multiplicativity of the block order, exhaustive at length 4.
  for (const auto& al : {fixtures::abc(), PriorityAlphabet({{"a", 0}, {"b", 0}, {"c", 1}})}) {
    BlockOrder block(al);
    const auto all = all_words(al, 4);
    std::vector<std::pair<Word, Word>> related;
    for (const Word& u : all)
      for (const Word& v : all)
        if (block(u, v)) related.emplace_back(u, v);
    for (const auto& [u, u2] : related)
      for (const auto& [v, v2] : related)
        if (!block(concat(u, v), concat(u2, v2)))
          log.fail("multiplicativity " + show(al, u) + "," + show(al, u2) + " / " + show(al, v) + "," + show(al, v2));
  }
  // Pumping: u v w ⊑ u v v w over every 3-split of every word up to length 6.
  {
    const auto ex = fixtures::ex31();
    BlockOrder block(ex);
    for (const Word& x : all_words(ex, 6))
      for (std::size_t i = 0; i <= x.size(); ++i)
        for (std::size_t j = i; j <= x.size(); ++j) {
          Word pumped(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(j));
          pumped.insert(pumped.end(), x.begin() + static_cast<std::ptrdiff_t>(i), x.end());
          if (!block(x, pumped)) log.fail("pumping " + show(ex, x) + " at " + std::to_string(i) + "," + std::to_string(j));
        }
  }
  // Flat refinement: equal last letters and ⊑ imply ⪯_P.
  {
    const auto flat = fixtures::digits(2);
    BlockOrder block(flat);
    const auto all = all_words(flat, 6);
    for (const Word& u : all)
      for (const Word& v : all)
        if (!u.empty() && !v.empty() && u.back() == v.back() && block(u, v) && !leq_priority(flat, u, v))
          log.fail("flat refinement " + show(flat, u) + " " + show(flat, v));
  }
}

void transducer_exactness(Log& log) {
  auto check_exact = [&](const PriorityAlphabet& al, std::size_t n) {
    const auto all = all_words(al, n);
    for (OrderKind k : kOrders) {
      const Transducer t = order_transducer(k, al);
      for (const Word& v : all) {
        WordSet below;
        for (const Word& u : all)
          if (u.size() <= v.size() && defined_leq(k, al, u, v)) below.insert(u);
        if (apply_transduction(t, nfa_from_words(al, {v})).enumerate(n) != below)
          log.fail(std::string(to_string(k)) + " transducer on " + show(al, v));
      }
    }
  };
  check_exact(fixtures::abc(), 6);
  check_exact(fixtures::ex31(), 3);

  const std::pair<std::string, PriorityAlphabet> alphabets[] = {
      {"a,b,c", fixtures::abc()}, {"two letters per priority", fixtures::ex31()}, {"0..4", fixtures::digits(4)}};
  for (const auto& [label, al] : alphabets) {
    const std::size_t d = static_cast<std::size_t>(al.max_priority());
    const std::size_t p = priority_transducer(al).size(), b = block_transducer(al).size(),
                      s = subword_transducer(al).size();
    std::ostringstream sizes;
    sizes << label << ", d=" << d << ": priority " << p << ", block " << b << ", subword " << s;
    log.info.push_back(sizes.str());
    if (p != d + 4 || b != d + 2 || s != 1)
      log.fail("sizes " + sizes.str() + " (expected " + std::to_string(d + 4) + ", " + std::to_string(d + 2) + ", 1)");
  }
}

void regular_closures(Log& log) {
  std::mt19937 rng(4);
  std::size_t artifacts = 0;
  for (int i = 0; i < 50; ++i) {
    const auto al = random_models::alphabet(rng, 2 + rng() % 2, 2);
    const Nfa a = random_models::nfa(rng, al, 5);
    regular_oracle::Decider exact(a);
    for (OrderKind k : kOrders) {
      const Nfa c = closure_regular(a, k);
      const std::string tag = "nfa " + std::to_string(i) + " " + std::string(to_string(k));
      if (c.enumerate(6) != exact.closure(k, 6)) log.fail(tag + ": differs from the exact closure");
      const auto r = compare_closure(a, k, c, 6, 12);
      if (!r.missing.empty()) log.fail(tag + ": missing " + show(al, r.missing.front()));
      artifacts += r.extra.size();
      corpus.push_back({tag, Model(a), k, c});
    }
  }
  log.info.push_back(std::to_string(artifacts) +
                     " words without a dominator of length <= 12 (all inside the exact closure)");
}

void oca_closures(Log& log) {
  // Sandwich and state bound for simple OCAs.
  std::vector<std::pair<std::string, Oca>> simple;
  for (auto [pa, pb] : {std::pair{0, 0}, {0, 1}, {1, 0}}) {
    const auto al = fixtures::ab(pa, pb);
    simple.emplace_back("a^n b^n (" + std::to_string(pa) + "," + std::to_string(pb) + ")", fixtures::anbn(al));
  }
  std::mt19937 rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto al = random_models::alphabet(rng, 2 + rng() % 2, 2);
    simple.emplace_back("soca " + std::to_string(i), random_models::soca(rng, al, 4));
  }
  for (const auto& [name, o] : simple) {
    SocaClosureStats stats;
    const Nfa b = soca_closure_nfa(o, &stats);
    log.check(stats.constructed_states <= stats.bound, name + ": state bound");
    const WordSet accepted = b.enumerate(7);
    log.check(includes(accepted, oca_enumerate(o, 7)), name + ": language not contained");
    const auto loose = undominated(Model(o), accepted, OrderKind::block, {7, 10, 12, 14, 16});
    if (!loose.empty()) log.fail(name + ": " + show(o.alphabet(), loose.front()) + " has no dominator");
  }

  // Full closures on OCAs with zero tests.
  std::vector<std::pair<std::string, Oca>> full;
  full.emplace_back("a^n b^n c", fixtures::anbnc(PriorityAlphabet({{"a", 0}, {"b", 0}, {"c", 1}})));
  full.emplace_back("a^n b^n c, c low", fixtures::anbnc(PriorityAlphabet({{"a", 1}, {"b", 2}, {"c", 0}})));
  {
    Oca o = fixtures::anbn(fixtures::ab(0, 1));
    o.set_accept_mode(AcceptMode::anyCounter);
    full.emplace_back("a^n b^m, m <= n", o);
  }
  std::mt19937 rng2(5);
  const CounterOp ops[] = {CounterOp::inc, CounterOp::dec, CounterOp::noop, CounterOp::zero};
  for (int i = 0; i < 8; ++i) {
    const auto al = random_models::alphabet(rng2, 2, 2);
    const std::size_t n = 1 + rng2() % 3;
    Oca o(al, n, AcceptMode::anyCounter);
    for (std::size_t e = 0, m = n + rng2() % (2 * n + 1); e < m; ++e) {
      const std::size_t l = rng2() % (al.size() + 1);
      o.add_transition(static_cast<State>(rng2() % n), l == al.size() ? Label{} : Label{static_cast<Letter>(l)},
                       ops[rng2() % 4], static_cast<State>(rng2() % n));
    }
    o.set_final(static_cast<State>(rng2() % n));
    full.emplace_back("oca " + std::to_string(i), o);
  }
  for (const auto& [name, o] : full) {
    for (OrderKind k : {OrderKind::block, OrderKind::priority}) {
      const Nfa c = k == OrderKind::block ? oca_block_closure(o) : oca_priority_closure(o);
      const auto r = compare_closure(Model(o), k, c, 6, 12);
      if (!r.missing.empty()) log.fail(name + " " + std::string(to_string(k)) + ": missing " + show(o.alphabet(), r.missing.front()));
      const auto loose = undominated(Model(o), WordSet(r.extra.begin(), r.extra.end()), k, {14, 16});
      if (!loose.empty()) log.fail(name + " " + std::string(to_string(k)) + ": extra " + show(o.alphabet(), loose.front()));
      corpus.push_back({name + " " + std::string(to_string(k)), Model(o), k, c});
    }
  }

  // {ε} ∪ a*b⁺
  const auto al = fixtures::ab(0, 1);
  const Nfa c = closure_regular(soca_closure_nfa(fixtures::anbn(al)), OrderKind::block);
  Nfa expect = nfa_concat(fixtures::starred_sequence(al, {"a"}),
                          nfa_concat(nfa_from_words(al, {w(al, "b")}), fixtures::starred_sequence(al, {"b"})));
  expect = nfa_union(expect, nfa_from_words(al, {Word{}}));
  const auto eq = nfa_equivalent_up_to(c, expect, 7);
  if (!eq.equal) log.fail("a^n b^n block closure differs at " + show(al, *eq.counterexample));
  corpus.push_back({"a^n b^n block", Model(fixtures::anbn(al)), OrderKind::block, c});
}

void cfg_closures(Log& log) {
  auto recurrence = [&](const std::string& name, const KleeneStats& stats) {
    for (const auto& lv : stats.levels)
      if (lv.output_nonterminals > lv.bound())
        log.fail(name + ": " + std::to_string(lv.output_nonterminals) + " nonterminals at depth " +
                 std::to_string(lv.depth) + ", bound " + std::to_string(lv.bound()));
  };

  const auto d12 = PriorityAlphabet({{"1", 1}, {"2", 2}});
  const Cfg x1x1 = fixtures::grammar(d12, {"X -> 1 X 1", "X -> 2"});
  {
    KleeneStats stats;
    const Nfa c = cfg_block_closure(x1x1, &stats);
    recurrence("X -> 1 X 1 | 2", stats);
    Nfa one_two(d12);
    const State mid = one_two.add_state();
    one_two.add_edge(0, d12.letter("1"), 0);
    one_two.add_edge(0, d12.letter("2"), mid);
    one_two.add_edge(mid, d12.letter("1"), mid);
    one_two.set_final(mid);
    const auto eq = nfa_equivalent_up_to(c, one_two, 8);
    if (!eq.equal) log.fail("X -> 1 X 1 | 2 block closure differs from 1*21* at " + show(d12, *eq.counterexample));
    corpus.push_back({"X -> 1 X 1 | 2 block", Model(x1x1), OrderKind::block, c});
  }
  {
    const Nfa c = cfg_priority_closure(x1x1);
    const auto r = compare_closure(Model(x1x1), OrderKind::priority, c, 7, 14);
    if (!r.equal) log.fail("X -> 1 X 1 | 2 priority closure report not equal");
    corpus.push_back({"X -> 1 X 1 | 2 priority", Model(x1x1), OrderKind::priority, c});
  }
  {
    const auto al = fixtures::ab(0, 0);
    const Cfg g = fixtures::grammar(al, {"S -> a S b", "S -> ε"});
    KleeneStats stats;
    const Nfa c = cfg_block_closure(g, &stats);
    recurrence("a^n b^n", stats);
    if (!nfa_equivalent_up_to(c, fixtures::starred_sequence(al, {"a", "b"}), 6).equal)
      log.fail("a^n b^n at priority 0 differs from a*b*");
    if (c.enumerate(6) != closure_bounded(cfg_enumerate(g, 12), OrderKind::subword, al, 6))
      log.fail("a^n b^n at priority 0 differs from its subword closure");
    corpus.push_back({"a^n b^n block", Model(g), OrderKind::block, c});
  }

  std::mt19937 rng(23);
  for (int i = 0; i < 20; ++i) {
    const auto al = random_models::alphabet(rng, 2 + i % 2, 2);
    const Cfg g = random_models::cfg(rng, al, 4, 3);
    const std::string name = "cfg " + std::to_string(i);
    KleeneStats stats;
    const Nfa c = cfg_block_closure(g, &stats);
    recurrence(name, stats);
    const auto r = compare_closure(Model(g), OrderKind::block, c, 5, 10);
    if (!r.missing.empty()) log.fail(name + ": missing " + show(al, r.missing.front()));
    const auto loose = undominated(Model(g), WordSet(r.extra.begin(), r.extra.end()), OrderKind::block, {14, 18});
    if (!loose.empty()) log.fail(name + ": extra " + show(al, loose.front()));
    corpus.push_back({name + " block", Model(g), OrderKind::block, c});
  }
}

void idempotence_and_soundness(Log& log) {
  for (const auto& inst : corpus) {
    if (!nfa_equivalent_up_to(closure_regular(inst.closure, inst.order), inst.closure, 6).equal)
      log.fail(inst.name + ": re-closing changes the language");
    if (!includes(inst.closure.enumerate(6), enumerate_model(inst.model, 6)))
      log.fail(inst.name + ": model word outside the closure");
  }
  log.info.push_back(std::to_string(corpus.size()) + " closure automata");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Log&)>>> criteria{
      {"1 order decisions", order_decisions},       {"2 algebraic laws", algebraic_laws},
      {"3 transducer exactness", transducer_exactness}, {"4 regular closures", regular_closures},
      {"5 one-counter closures", oca_closures},     {"6 context-free closures", cfg_closures},
      {"7 idempotence and soundness", idempotence_and_soundness},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Log log;
    const auto start = std::chrono::steady_clock::now();
    try {
      run(log);
    } catch (const std::exception& e) {
      log.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (log.failures ? "FAIL" : "PASS") << "  criterion " << name << "  (" << std::fixed
              << std::setprecision(1) << secs << " s)\n";
    for (const auto& s : log.info) std::cout << "      " << s << "\n";
    for (const auto& s : log.notes) std::cout << "      ! " << s << "\n";
    if (log.failures > log.notes.size())
      std::cout << "      ! ... " << log.failures - log.notes.size() << " more\n";
    failed += log.failures ? 1 : 0;
  }
  return failed ? 1 : 0;
}
