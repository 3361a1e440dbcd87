#pragma once

#include <iosfwd>
#include <string>

#include "sand/netlist.hpp"

namespace sand {

// ISCAS `.bench` reader. Accepts `INPUT(n)`, `OUTPUT(n)`, `n = KIND(a, b)`,
// `#` comments and blank lines; `\n` or `\r\n` endings. The returned
// netlist satisfies all structural invariants; gate order follows file
// order. Throws Error with the offending 1-based line on any problem.
Netlist parse_bench(const std::string& text, const std::string& name = "");
Netlist load_bench_file(const std::string& path);

// Canonical `.bench` writer: INPUT lines, OUTPUT lines, then gates in
// declaration order, `\n` endings. parse_bench(write_bench(n)) == n.
std::string write_bench(const Netlist& netlist);
void save_bench_file(const Netlist& netlist, const std::string& path);

}  // namespace sand
