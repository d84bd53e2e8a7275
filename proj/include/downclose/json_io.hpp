#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "downclose/cfg.hpp"
#include "downclose/kleene.hpp"
#include "downclose/nfa.hpp"
#include "downclose/oca.hpp"
#include "downclose/oracle.hpp"
#include "json.hpp"

namespace downclose {

using Json = nlohmann::json;

inline Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_json(buf.str());
}

namespace detail {

// Field access that reports schema violations as parse errors.
template <class T>
T field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ParseError(std::string("field '") + key + "': " + e.what());
  }
}

inline const Json& array_field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_array())
    throw ParseError(std::string("field '") + key + "' must be an array");
  return j.at(key);
}

inline Label label_from_json(const PriorityAlphabet& al, const Json& j) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_string()) throw ParseError("edge labels are letter tokens or null");
  return al.letter(j.get<std::string>());
}

inline Json label_to_json(const PriorityAlphabet& al, Label l) { return l ? Json(al.token(*l)) : Json(nullptr); }

class StateNames {
 public:
  explicit StateNames(const Json& states) {
    if (!states.is_array() || states.empty()) throw ParseError("'states' must be a non-empty array");
    for (const Json& s : states) {
      if (!s.is_string()) throw ParseError("state names are strings");
      if (!ids_.emplace(s.get<std::string>(), ids_.size()).second)
        throw ParseError("duplicate state '" + s.get<std::string>() + "'");
    }
  }
  std::size_t size() const { return ids_.size(); }
  State operator()(const Json& s) const {
    if (!s.is_string()) throw ParseError("state references are strings");
    auto it = ids_.find(s.get<std::string>());
    if (it == ids_.end()) throw ParseError("unknown state '" + s.get<std::string>() + "'");
    return static_cast<State>(it->second);
  }

 private:
  std::map<std::string, std::size_t> ids_;
};

// Display names made pairwise distinct: repeated names get "@<index>".
inline std::vector<std::string> unique_names(std::vector<std::string> names) {
  for (bool clash = true; clash;) {
    std::map<std::string, std::size_t> count;
    for (const auto& n : names) ++count[n];
    clash = false;
    for (std::size_t i = 0; i < names.size(); ++i)
      if (count[names[i]] > 1) {
        names[i] += "@" + std::to_string(i);
        clash = true;
      }
  }
  return names;
}

template <class A>
std::vector<std::string> state_names(const A& a) {
  std::vector<std::string> names;
  for (State q = 0; q < a.size(); ++q) names.push_back(a.name(q));
  return unique_names(std::move(names));
}

inline std::string escape_dot(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace detail

inline PriorityAlphabet alphabet_from_json(const Json& j) {
  std::vector<std::pair<std::string, int>> letters;
  for (const Json& l : detail::array_field(j, "letters"))
    letters.emplace_back(detail::field<std::string>(l, "symbol"), detail::field<int>(l, "priority"));
  return PriorityAlphabet(letters);
}

inline Json alphabet_to_json(const PriorityAlphabet& al) {
  Json letters = Json::array();
  for (Letter a = 0; a < al.size(); ++a) letters.push_back({{"symbol", al.token(a)}, {"priority", al.priority(a)}});
  return {{"letters", letters}};
}

inline Nfa nfa_from_json(const Json& j, const PriorityAlphabet& al) {
  const detail::StateNames names(j.contains("states") ? j.at("states") : Json());
  Nfa n(al);
  for (std::size_t i = 1; i < names.size(); ++i) n.add_state();
  for (const Json& s : j.at("states")) n.set_name(names(s), s.get<std::string>());
  n.set_initial(names(j.contains("initial") ? j.at("initial") : Json()));
  for (const Json& f : detail::array_field(j, "finals")) n.set_final(names(f));
  for (const Json& e : detail::array_field(j, "edges")) {
    if (!e.is_array() || e.size() != 3) throw ParseError("NFA edges are [source, letter or null, target]");
    n.add_edge(names(e[0]), detail::label_from_json(al, e[1]), names(e[2]));
  }
  return n;
}

inline Json nfa_to_json(const Nfa& n) {
  const auto name = detail::state_names(n);
  Json states = Json::array(), finals = Json::array(), edges = Json::array();
  for (State q = 0; q < n.size(); ++q) {
    states.push_back(name[q]);
    if (n.is_final(q)) finals.push_back(name[q]);
    for (const auto& e : n.out(q)) edges.push_back({name[q], detail::label_to_json(n.alphabet(), e.label), name[e.dst]});
  }
  return {{"states", states}, {"initial", name[n.initial()]}, {"finals", finals}, {"edges", edges}};
}

inline Oca oca_from_json(const Json& j, const PriorityAlphabet& al) {
  const detail::StateNames names(j.contains("states") ? j.at("states") : Json());
  const std::string mode = j.contains("acceptMode") ? detail::field<std::string>(j, "acceptMode") : "anyCounter";
  AcceptMode m;
  if (mode == "anyCounter")
    m = AcceptMode::anyCounter;
  else if (mode == "zeroCounter")
    m = AcceptMode::zeroCounter;
  else
    throw ParseError("acceptMode is anyCounter or zeroCounter");
  Oca o(al, names.size(), m);
  for (const Json& s : j.at("states")) o.set_name(names(s), s.get<std::string>());
  o.set_initial(names(j.contains("initial") ? j.at("initial") : Json()));
  for (const Json& f : detail::array_field(j, "finals")) o.set_final(names(f));
  for (const Json& e : detail::array_field(j, "edges")) {
    if (!e.is_array() || e.size() != 4 || !e[2].is_string())
      throw ParseError("OCA edges are [source, letter or null, op, target]");
    o.add_transition(names(e[0]), detail::label_from_json(al, e[1]), parse_counter_op(e[2].get<std::string>()),
                     names(e[3]));
  }
  return o;
}

inline Json oca_to_json(const Oca& o) {
  const auto name = detail::state_names(o);
  Json states = Json::array(), edges = Json::array();
  for (State q = 0; q < o.size(); ++q) {
    states.push_back(name[q]);
    for (const auto& t : o.out(q))
      edges.push_back({name[q], detail::label_to_json(o.alphabet(), t.label), std::string(to_string(t.op)),
                       name[t.dst]});
  }
  Json finals = Json::array();
  for (State q : o.finals()) finals.push_back(name[q]);
  return {{"states", states},
          {"initial", name[o.initial()]},
          {"finals", finals},
          {"acceptMode", o.accept_mode() == AcceptMode::anyCounter ? "anyCounter" : "zeroCounter"},
          {"edges", edges}};
}

inline Cfg cfg_from_json(const Json& j, const PriorityAlphabet& al) {
  const auto start = detail::field<std::string>(j, "start");
  std::vector<std::string> nts;
  for (const Json& x : detail::array_field(j, "nonterminals")) {
    if (!x.is_string()) throw ParseError("nonterminal names are strings");
    nts.push_back(x.get<std::string>());
  }
  if (j.contains("terminals"))
    for (const Json& t : detail::array_field(j, "terminals")) {
      if (!t.is_string()) throw ParseError("terminal names are strings");
      al.letter(t.get<std::string>());
    }
  if (std::find(nts.begin(), nts.end(), start) == nts.end()) nts.insert(nts.begin(), start);
  std::map<std::string, Nonterminal> ids;
  Cfg g(al, nts.front());
  for (std::size_t i = 0; i < nts.size(); ++i) {
    if (al.find(nts[i])) throw ParseError("'" + nts[i] + "' is both a nonterminal and a letter");
    if (ids.count(nts[i])) throw ParseError("duplicate nonterminal '" + nts[i] + "'");
    ids[nts[i]] = i == 0 ? g.start() : g.add_nonterminal(nts[i]);
  }
  g.set_start(ids.at(start));
  for (const Json& p : detail::array_field(j, "productions")) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_array())
      throw ParseError("productions are [lhs, [symbols...]]");
    auto lhs = ids.find(p[0].get<std::string>());
    if (lhs == ids.end()) throw ParseError("undeclared nonterminal '" + p[0].get<std::string>() + "'");
    Rhs rhs;
    for (const Json& s : p[1]) {
      if (!s.is_string()) throw ParseError("right-hand side symbols are strings");
      const auto name = s.get<std::string>();
      if (auto it = ids.find(name); it != ids.end())
        rhs.push_back(Symbol::nt(it->second));
      else
        rhs.push_back(Symbol::t(al.letter(name)));
    }
    g.add_production(lhs->second, std::move(rhs));
  }
  return g;
}

inline Json cfg_to_json(const Cfg& g) {
  Json nts = Json::array(), terms = Json::array(), prods = Json::array();
  for (Nonterminal x = 0; x < g.nonterminal_count(); ++x) nts.push_back(g.name(x));
  for (Letter a = 0; a < g.alphabet().size(); ++a) terms.push_back(g.alphabet().token(a));
  for (const auto& p : g.productions()) {
    Json rhs = Json::array();
    for (const Symbol& s : p.rhs) rhs.push_back(s.terminal ? g.alphabet().token(s.id) : g.name(s.id));
    prods.push_back({g.name(p.lhs), rhs});
  }
  return {{"start", g.name(g.start())}, {"nonterminals", nts}, {"terminals", terms}, {"productions", prods}};
}

inline Json kleene_to_json(const KleeneGrammar& g) {
  Json nts = Json::array(), terms = Json::array(), prods = Json::array();
  for (Nonterminal x = 0; x < g.nonterminal_count(); ++x) nts.push_back(g.name(x));
  for (Letter a = 0; a < g.alphabet().size(); ++a) terms.push_back(g.alphabet().token(a));
  for (const auto& p : g.productions()) {
    Json rhs = Json::array();
    for (const auto& it : p.rhs) switch (it.kind) {
        case KleeneItem::Kind::t: rhs.push_back({{"t", g.alphabet().token(it.id)}}); break;
        case KleeneItem::Kind::nt: rhs.push_back({{"nt", g.name(it.id)}}); break;
        case KleeneItem::Kind::star: rhs.push_back({{"star", g.name(it.id)}}); break;
      }
    prods.push_back({g.name(p.lhs), rhs});
  }
  return {{"start", g.name(g.start())}, {"nonterminals", nts}, {"terminals", terms}, {"productions", prods}};
}

inline KleeneGrammar kleene_from_json(const Json& j, const PriorityAlphabet& al) {
  const auto start = detail::field<std::string>(j, "start");
  std::vector<std::string> nts;
  for (const Json& x : detail::array_field(j, "nonterminals")) nts.push_back(x.get<std::string>());
  if (std::find(nts.begin(), nts.end(), start) == nts.end()) nts.insert(nts.begin(), start);
  KleeneGrammar g(al, nts.front());
  std::map<std::string, Nonterminal> ids;
  for (std::size_t i = 0; i < nts.size(); ++i) {
    if (al.find(nts[i])) throw ParseError("'" + nts[i] + "' is both a nonterminal and a letter");
    if (ids.count(nts[i])) throw ParseError("duplicate nonterminal '" + nts[i] + "'");
    ids[nts[i]] = i == 0 ? g.start() : g.add_nonterminal(nts[i]);
  }
  g.set_start(ids.at(start));
  auto nt = [&](const Json& s) {
    auto it = ids.find(s.get<std::string>());
    if (it == ids.end()) throw ParseError("undeclared nonterminal '" + s.get<std::string>() + "'");
    return it->second;
  };
  for (const Json& p : detail::array_field(j, "productions")) {
    if (!p.is_array() || p.size() != 2 || !p[1].is_array()) throw ParseError("productions are [lhs, [items...]]");
    std::vector<KleeneItem> rhs;
    for (const Json& it : p[1]) {
      if (it.contains("t"))
        rhs.push_back(KleeneItem::t(al.letter(it.at("t").get<std::string>())));
      else if (it.contains("nt"))
        rhs.push_back(KleeneItem::nt(nt(it.at("nt"))));
      else if (it.contains("star"))
        rhs.push_back(KleeneItem::star(nt(it.at("star"))));
      else
        throw ParseError("Kleene items are {\"t\"}, {\"nt\"} or {\"star\"}");
    }
    g.add_production(nt(p[0]), std::move(rhs));
  }
  return g;
}

inline Json report_to_json(const ClosureReport& r, const PriorityAlphabet& al) {
  Json missing = Json::array(), extra = Json::array();
  for (const Word& w : r.missing) missing.push_back(format_word(al, w));
  for (const Word& w : r.extra) extra.push_back(format_word(al, w));
  return {{"model", r.model},
          {"order", std::string(to_string(r.order))},
          {"bound", r.bound},
          {"domBound", r.dom_bound},
          {"equal", r.equal},
          {"missingWords", missing},
          {"extraWords", extra},
          {"timings", {{"enumerateMs", r.enumerate_ms}, {"oracleMs", r.oracle_ms}, {"compareMs", r.compare_ms}}}};
}

inline std::string nfa_to_dot(const Nfa& n) {
  const auto name = detail::state_names(n);
  std::ostringstream out;
  out << "digraph nfa {\n  rankdir=LR;\n  __start [shape=point];\n";
  for (State q = 0; q < n.size(); ++q)
    out << "  \"" << detail::escape_dot(name[q]) << "\" [shape=" << (n.is_final(q) ? "doublecircle" : "circle")
        << "];\n";
  out << "  __start -> \"" << detail::escape_dot(name[n.initial()]) << "\";\n";
  for (State q = 0; q < n.size(); ++q)
    for (const auto& e : n.out(q))
      out << "  \"" << detail::escape_dot(name[q]) << "\" -> \"" << detail::escape_dot(name[e.dst])
          << "\" [label=\"" << detail::escape_dot(e.label ? n.alphabet().token(*e.label) : "ε") << "\"];\n";
  out << "}\n";
  return out.str();
}

inline std::string oca_to_dot(const Oca& o) {
  const auto name = detail::state_names(o);
  std::ostringstream out;
  out << "digraph oca {\n  rankdir=LR;\n  __start [shape=point];\n";
  for (State q = 0; q < o.size(); ++q)
    out << "  \"" << detail::escape_dot(name[q]) << "\" [shape=" << (o.is_final(q) ? "doublecircle" : "circle")
        << "];\n";
  out << "  __start -> \"" << detail::escape_dot(name[o.initial()]) << "\";\n";
  for (State q = 0; q < o.size(); ++q)
    for (const auto& t : o.out(q))
      out << "  \"" << detail::escape_dot(name[q]) << "\" -> \"" << detail::escape_dot(name[t.dst])
          << "\" [label=\"" << detail::escape_dot(t.label ? o.alphabet().token(*t.label) : "ε") << " / "
          << to_string(t.op) << "\"];\n";
  out << "}\n";
  return out.str();
}

}  // namespace downclose
