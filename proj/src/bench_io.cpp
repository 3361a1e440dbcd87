#include "sand/bench_io.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace sand {

namespace {

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '[' || c == ']';
}

struct Cursor {
  const std::string& s;
  size_t pos = 0;
  size_t line;

  void skip_ws() {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  }
  bool eat(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  std::string name() {
    skip_ws();
    size_t start = pos;
    while (pos < s.size() && is_name_char(s[pos])) ++pos;
    if (pos == start) throw Error("line " + std::to_string(line) + ": expected identifier", line);
    return s.substr(start, pos - start);
  }
  bool at_end() {
    skip_ws();
    return pos >= s.size();
  }
};

}  // namespace

Netlist parse_bench(const std::string& text, const std::string& name) {
  Netlist nl;
  nl.name = name;

  std::istringstream in(text);
  std::string raw;
  size_t lineno = 0;
  bool saw_anything = false;

  while (std::getline(in, raw)) {
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    // Strip comment.
    size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.resize(hash);
    Cursor c{raw, 0, lineno};
    if (c.at_end()) continue;
    saw_anything = true;

    std::string first = c.name();
    if (first == "INPUT" || first == "OUTPUT") {
      if (!c.eat('(')) throw Error("line " + std::to_string(lineno) + ": expected '(' after " + first, lineno);
      std::string net = c.name();
      if (!c.eat(')')) throw Error("line " + std::to_string(lineno) + ": expected ')'", lineno);
      if (!c.at_end()) throw Error("line " + std::to_string(lineno) + ": trailing characters", lineno);
      (first == "INPUT" ? nl.inputs : nl.outputs).push_back(net);
      continue;
    }

    if (!c.eat('=')) throw Error("line " + std::to_string(lineno) + ": expected '=' after net name", lineno);
    std::string kind_name = c.name();
    auto kind = gate_kind_from_name(kind_name);
    if (!kind) throw Error("line " + std::to_string(lineno) + ": unknown gate kind '" + kind_name + "'", lineno);
    if (!c.eat('(')) throw Error("line " + std::to_string(lineno) + ": expected '(' after gate kind", lineno);

    Gate g;
    g.output = first;
    g.kind = *kind;
    if (!c.eat(')')) {
      g.inputs.push_back(c.name());
      while (c.eat(',')) g.inputs.push_back(c.name());
      if (!c.eat(')')) throw Error("line " + std::to_string(lineno) + ": expected ')'", lineno);
    }
    if (!c.at_end()) throw Error("line " + std::to_string(lineno) + ": trailing characters", lineno);

    if (is_unary(g.kind) && g.inputs.size() != 1)
      throw Error("line " + std::to_string(lineno) + ": " + gate_kind_name(g.kind) + " requires exactly 1 input",
                  lineno);
    if (!is_unary(g.kind) && g.inputs.size() < 2)
      throw Error("line " + std::to_string(lineno) + ": " + gate_kind_name(g.kind) + " requires >= 2 inputs",
                  lineno);
    nl.gates.push_back(std::move(g));
  }

  if (nl.inputs.empty() && nl.outputs.empty()) {
    throw Error(saw_anything ? "no primary inputs/outputs declared" : "no primary inputs/outputs (empty text)");
  }

  auto violations = validate(nl);
  if (!violations.empty()) {
    const Violation& v = violations[0];
    throw Error(v.rule + (v.subject.empty() ? "" : " (" + v.subject + ")") + ": " + v.detail);
  }
  return nl;
}

Netlist load_bench_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  std::string name = path;
  size_t slash = name.find_last_of('/');
  if (slash != std::string::npos) name = name.substr(slash + 1);
  size_t dot = name.rfind(".bench");
  if (dot != std::string::npos) name = name.substr(0, dot);
  return parse_bench(buf.str(), name);
}

std::string write_bench(const Netlist& netlist) {
  std::ostringstream out;
  if (!netlist.name.empty()) out << "# " << netlist.name << "\n";
  for (const std::string& in : netlist.inputs) out << "INPUT(" << in << ")\n";
  for (const std::string& po : netlist.outputs) out << "OUTPUT(" << po << ")\n";
  for (const Gate& g : netlist.gates) {
    out << g.output << " = " << gate_kind_name(g.kind) << "(";
    for (size_t i = 0; i < g.inputs.size(); ++i) {
      if (i) out << ", ";
      out << g.inputs[i];
    }
    out << ")\n";
  }
  return out.str();
}

void save_bench_file(const Netlist& netlist, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path + "'");
  f << write_bench(netlist);
}

}  // namespace sand
