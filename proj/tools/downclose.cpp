// Command-line front end: order checks, closure construction, verification
// against the bounded oracle, enumeration and DOT rendering.
//
// Exit status: 0 success / related / equal, 1 negative answer, 2 error.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "downclose/downclose.hpp"
#include "downclose/json_io.hpp"

using namespace downclose;

namespace {

struct Options {
  std::string alphabet, order = "block", type = "nfa", input, output, dot, closure;
  std::string u, v;
  std::size_t bound = 6;
  std::optional<std::size_t> dom_bound, counter_cap;
  std::size_t state_cap = 1'000'000;
};

Model load_model(const Options& o, const PriorityAlphabet& al) {
  const Json j = read_json_file(o.input);
  if (o.type == "nfa") return nfa_from_json(j, al);
  if (o.type == "oca") return oca_from_json(j, al);
  if (o.type == "cfg") return cfg_from_json(j, al);
  throw ParseError("unknown model type '" + o.type + "'");
}

Nfa construct(const Model& m, OrderKind k, std::size_t state_cap) {
  if (const auto* a = std::get_if<Nfa>(&m)) return closure_regular(*a, k);
  if (const auto* o = std::get_if<Oca>(&m)) {
    switch (k) {
      case OrderKind::block: return oca_block_closure(*o);
      case OrderKind::priority: return oca_priority_closure(*o);
      case OrderKind::subword: return oca_subword_closure(*o);
    }
  }
  const Cfg& g = std::get<Cfg>(m);
  switch (k) {
    case OrderKind::block: return cfg_block_closure(g, nullptr, state_cap);
    case OrderKind::priority: return cfg_priority_closure(g, state_cap);
    case OrderKind::subword: return cfg_subword_closure(g, state_cap);
  }
  return Nfa(g.alphabet());
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out << text;
}

int check_order(const Options& o) {
  const PriorityAlphabet al = alphabet_from_json(read_json_file(o.alphabet));
  const bool rel = leq(parse_order(o.order), al, parse_word(al, o.u), parse_word(al, o.v));
  std::cout << (rel ? "true" : "false") << "\n";
  return rel ? 0 : 1;
}

int closure(const Options& o) {
  const PriorityAlphabet al = alphabet_from_json(read_json_file(o.alphabet));
  const Model m = load_model(o, al);
  const auto start = std::chrono::steady_clock::now();
  const Nfa c = construct(m, parse_order(o.order), o.state_cap);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  write_text(o.output, nfa_to_json(c).dump(2) + "\n");
  if (!o.dot.empty()) write_text(o.dot, nfa_to_dot(c));
  std::cerr << "states: " << c.size() << "\ntime: " << ms << " ms\n";
  return 0;
}

int verify(const Options& o) {
  const PriorityAlphabet al = alphabet_from_json(read_json_file(o.alphabet));
  const Model m = load_model(o, al);
  const OrderKind k = parse_order(o.order);
  const Nfa c = o.closure.empty() ? construct(m, k, o.state_cap) : nfa_from_json(read_json_file(o.closure), al);
  const ClosureReport r = compare_closure(m, k, c, o.bound, o.dom_bound, o.counter_cap, o.input);
  write_text(o.output, report_to_json(r, al).dump(2) + "\n");
  return r.equal ? 0 : 1;
}

int enumerate(const Options& o) {
  const PriorityAlphabet al = alphabet_from_json(read_json_file(o.alphabet));
  std::string text;
  for (const Word& x : enumerate_model(load_model(o, al), o.bound, o.counter_cap)) text += format_word(al, x) + "\n";
  write_text(o.output, text);
  return 0;
}

int render(const Options& o) {
  const PriorityAlphabet al = alphabet_from_json(read_json_file(o.alphabet));
  const Model m = load_model(o, al);
  std::string dot;
  if (const auto* a = std::get_if<Nfa>(&m))
    dot = nfa_to_dot(*a);
  else if (const auto* c = std::get_if<Oca>(&m))
    dot = oca_to_dot(*c);
  else
    throw InvalidInput("render supports nfa and oca inputs");
  write_text(o.dot.empty() ? o.output : o.dot, dot);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Downward closures under the subword, priority and block orders"};
  app.require_subcommand(1);
  Options o;
  const std::vector<std::string> orders{"subword", "priority", "block"}, types{"nfa", "oca", "cfg"};

  auto common = [&](CLI::App* sub) {
    sub->add_option("--alphabet", o.alphabet, "priority alphabet JSON")->required()->check(CLI::ExistingFile);
  };
  auto model = [&](CLI::App* sub) {
    sub->add_option("--type", o.type, "input model type")->check(CLI::IsMember(types));
    sub->add_option("--input", o.input, "model JSON")->required()->check(CLI::ExistingFile);
  };

  auto* check = app.add_subcommand("check-order", "decide u <= v");
  common(check);
  check->add_option("--order", o.order)->check(CLI::IsMember(orders));
  check->add_option("u", o.u, "comma-separated word")->required();
  check->add_option("v", o.v, "comma-separated word")->required();

  auto* clo = app.add_subcommand("closure", "build the downward closure NFA");
  common(clo);
  model(clo);
  clo->add_option("--order", o.order)->check(CLI::IsMember(orders));
  clo->add_option("--output", o.output, "closure NFA JSON (default stdout)");
  clo->add_option("--dot", o.dot, "also write DOT here");
  clo->add_option("--state-cap", o.state_cap, "largest intermediate automaton");

  auto* ver = app.add_subcommand("verify", "compare a closure against the bounded oracle");
  common(ver);
  model(ver);
  ver->add_option("--order", o.order)->check(CLI::IsMember(orders));
  ver->add_option("--bound", o.bound, "compare words up to this length");
  ver->add_option("--dom-bound", o.dom_bound, "dominator length bound (default 2*bound)");
  ver->add_option("--counter-cap", o.counter_cap, "counter cap for OCA enumeration");
  ver->add_option("--state-cap", o.state_cap, "largest intermediate automaton");
  ver->add_option("--closure", o.closure, "check this closure NFA instead of constructing one")
      ->check(CLI::ExistingFile);
  ver->add_option("--output", o.output, "report JSON (default stdout)");

  auto* en = app.add_subcommand("enumerate", "list the words of the model up to a length");
  common(en);
  model(en);
  en->add_option("--bound", o.bound, "largest word length");
  en->add_option("--counter-cap", o.counter_cap, "counter cap for OCA enumeration");
  en->add_option("--output", o.output);

  auto* ren = app.add_subcommand("render", "write an NFA or OCA as DOT");
  common(ren);
  model(ren);
  ren->add_option("--dot", o.dot);
  ren->add_option("--output", o.output);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (check->parsed()) return check_order(o);
    if (clo->parsed()) return closure(o);
    if (ver->parsed()) return verify(o);
    if (en->parsed()) return enumerate(o);
    return render(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
