#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace sand {

// Error type shared across the library. `what()` is a one-line message;
// parse errors carry the 1-based source line.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg, size_t line = 0) : std::runtime_error(msg), line_(line) {}
  size_t line() const { return line_; }

 private:
  size_t line_;
};

enum class GateKind : uint8_t { AND, OR, NAND, NOR, NOT, XOR, XNOR, BUFF, DFF };

constexpr size_t kGateKindCount = 9;

const char* gate_kind_name(GateKind k);
std::optional<GateKind> gate_kind_from_name(const std::string& name);

// NOT, BUFF and DFF take exactly one input; everything else takes >= 2.
inline bool is_unary(GateKind k) {
  return k == GateKind::NOT || k == GateKind::BUFF || k == GateKind::DFF;
}

struct Gate {
  std::string output;
  GateKind kind;
  std::vector<std::string> inputs;
};

// Gate-level circuit. Net names are the identity; declaration order is
// part of the structural model and survives round-trips.
struct Netlist {
  std::string name;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<Gate> gates;

  bool operator==(const Netlist& other) const;

  // Index of the gate driving each net. Primary inputs have no entry.
  std::unordered_map<std::string, size_t> driver_index() const;

  // Frame interface: DFF outputs are treated as pseudo primary inputs and
  // DFF inputs as pseudo primary outputs, reducing the circuit to one
  // combinational frame.
  std::vector<std::string> frame_inputs() const;   // inputs + DFF output nets
  std::vector<std::string> frame_outputs() const;  // outputs + DFF state nets (next value)

  bool has_dff() const;
};

struct Violation {
  std::string rule;     // "duplicate-driver", "undriven-net", "combinational-cycle", ...
  std::string subject;  // net or gate output the rule fired on
  std::string detail;
};

// Empty result iff all Netlist invariants hold. Violations are data, not
// failures.
std::vector<Violation> validate(const Netlist& netlist);

// Throws Error with the first violation's message if the netlist is invalid.
void require_valid(const Netlist& netlist);

}  // namespace sand
