#pragma once

#include <cstdint>

#include "sand/netlist.hpp"

namespace sand {

// Seeded random gate-level circuit used for the desk corpora. Gate kinds
// are weighted toward AND/NOR families so deep nets carry rare signals;
// sequential circuits mix in DFFs.
struct SynthSpec {
  std::string name = "synth";
  size_t n_gates = 100;
  size_t n_inputs = 10;
  size_t n_outputs = 4;
  bool sequential = false;
  uint64_t seed = 1;
};

Netlist synth_circuit(const SynthSpec& spec);

}  // namespace sand
