#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "sand/netlist.hpp"

namespace sand {

// Bit value per frame-input net (primary inputs plus DFF outputs).
using FrameAssignment = std::unordered_map<std::string, uint8_t>;

struct SignalProfile {
  std::unordered_map<std::string, double> probability;  // net -> P(net = 1)
  uint64_t n_vectors = 0;
  uint64_t seed = 0;
};

// Compiled single-frame evaluator. DFF outputs are pseudo primary inputs,
// DFF inputs pseudo primary outputs; gates are evaluated once in
// topological order, 64 vectors per machine word.
class Simulator {
 public:
  explicit Simulator(const Netlist& netlist);

  const std::vector<std::string>& net_names() const { return net_names_; }
  const std::vector<std::string>& frame_input_names() const { return frame_inputs_; }
  const std::vector<std::string>& frame_output_names() const { return frame_output_names_; }
  size_t net_count() const { return net_names_.size(); }
  size_t frame_input_count() const { return frame_inputs_.size(); }

  // in_words[i] carries 64 lanes of frame input i; fills one word per net.
  void eval_words(const std::vector<uint64_t>& in_words, std::vector<uint64_t>& net_words) const;

  // Frame output lanes in frame_output_names() order (PO value, or the
  // DFF next state for a state net).
  void frame_outputs(const std::vector<uint64_t>& net_words, std::vector<uint64_t>& out_words) const;

  size_t net_index(const std::string& net) const;

 private:
  std::vector<std::string> net_names_;
  std::unordered_map<std::string, size_t> net_index_;
  std::vector<std::string> frame_inputs_;
  std::vector<std::string> frame_output_names_;
  std::vector<size_t> frame_output_nets_;  // net whose value is the frame output
  struct Op {
    GateKind kind;
    uint32_t out;
    std::vector<uint32_t> in;
  };
  std::vector<Op> ops_;  // topological order, DFFs excluded
};

// Naive reference evaluation of one assignment, gate by gate with
// recursive net resolution. Kept independent of the word-parallel engine;
// the two are compared bit for bit in tests.
std::unordered_map<std::string, uint8_t> simulate_reference(const Netlist& netlist,
                                                            const FrameAssignment& frame_in);

// Combinational value of every net under one frame assignment.
std::unordered_map<std::string, uint8_t> simulate(const Netlist& netlist, const FrameAssignment& frame_in);

// Frame output values (primary outputs and DFF next states) under one
// assignment, keyed by frame output name.
std::unordered_map<std::string, uint8_t> simulate_frame_outputs(const Netlist& netlist,
                                                                const FrameAssignment& frame_in);

struct EqOptions {
  bool exhaustive = true;
  uint64_t n_vectors = 4096;  // random mode sample count
  uint64_t seed = 0;
};

struct EqResult {
  bool equivalent = false;
  FrameAssignment counterexample;    // populated when not equivalent
  std::string differing_output;
};

// Frame-functional equivalence. Exhaustive mode enumerates all 2^k frame
// assignments (k <= 24 enforced); random mode samples seeded vectors.
// Both circuits must expose identical frame input/output name sets.
EqResult check_equivalence(const Netlist& a, const Netlist& b, const EqOptions& opts);

// Restriction equivalence for an extracted cone: every frame input and
// output of `cone` names a net of `anchor`; under every assignment to the
// anchor's frame inputs, driving the cone's inputs with the anchor's
// simulated net values must reproduce the anchor's values on the cone's
// outputs. Enumeration is over the anchor's frame inputs.
EqResult check_cone_equivalence(const Netlist& anchor, const Netlist& cone, const EqOptions& opts);

// P(net = 1) per net under n_vectors uniform i.i.d. seeded frame inputs.
SignalProfile random_signal_profile(const Netlist& netlist, uint64_t n_vectors, uint64_t seed);

std::string profile_to_csv(const SignalProfile& profile, const Netlist& netlist);

// Deterministic assignment scheme shared by the batched evaluators:
// frame input i of vector v = w*64 + lane takes bit `lane` of
// counter_hash(seed, w * n_inputs + i).
uint64_t random_input_word(uint64_t seed, uint64_t block, size_t input_index, size_t input_count);

// Exhaustive enumeration scheme: input i of vector v = block*64 + lane
// carries bit i of v.
uint64_t exhaustive_input_word(uint64_t block, size_t input_index);

}  // namespace sand
