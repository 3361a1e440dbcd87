#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sand/logicsim.hpp"
#include "sand/netlist.hpp"

namespace sand {

struct TrojanInfo {
  std::vector<std::string> trigger_nets;   // distinct pre-existing nets
  std::vector<uint8_t> trigger_polarity;   // required value per trigger net
  size_t trigger_width = 0;
  std::string payload_net;                 // victim net the XOR taps
  std::vector<std::string> inserted_gates; // outputs of the added gates
  FrameAssignment distinguishing;          // activates the trigger and flips a frame output
  std::string flipped_output;
  // Rarity certificate: firing count over the seeded vector batch.
  uint64_t rarity_seed = 0;
  uint64_t rarity_vectors = 1000;
  uint64_t fire_count = 0;
};

// Gate-local rewrites that preserve the function:
//   AND -> NOT(NAND), OR -> NOT(NOR), NAND -> NOT(AND), NOR -> NOT(OR),
//   XOR -> NOT(XNOR), XNOR -> NOT(XOR), BUFF -> NOT(NOT).
// Applies `count` rewrites at seeded random sites.
Netlist demorgan_rewrite(const Netlist& netlist, uint64_t seed, size_t count);

// Fan-in cone of a seeded random frame output, breadth-first up to
// max_nodes gates; cut nets become primary inputs. The cone's outputs
// reproduce the anchor's values on the same nets (check_cone_equivalence).
Netlist extract_subcircuit(const Netlist& netlist, uint64_t seed, size_t max_nodes);

// Seeded gate-order permutation plus a bijective renaming of internal
// nets (primary inputs/outputs and DFF state nets keep their names).
Netlist relocate(const Netlist& netlist, uint64_t seed);

// Explicit-permutation form used by relocate and by tests: gate_perm[i] is
// the source index of the i-th output gate; net_rename maps internal net
// names bijectively.
Netlist apply_relocation(const Netlist& netlist, const std::vector<size_t>& gate_perm,
                         const std::vector<std::pair<std::string, std::string>>& net_rename);

struct InjectOptions {
  double rarity_threshold = 0.2;
  size_t retry_budget = 64;
  uint64_t rarity_vectors = 1000;
  uint64_t rarity_fire_max = 10;  // max firings allowed over rarity_vectors
};

// Rare-trigger Trojan: an AND of trigger_width rare-polarity literals
// XOR-ed into a single fan-out path of a seeded victim net. The returned
// info carries the activating assignment found by constrained search.
std::pair<Netlist, TrojanInfo> inject_trojan(const Netlist& netlist, uint64_t seed,
                                             size_t trigger_width, const SignalProfile& profile,
                                             const InjectOptions& opts = {});

enum class SampleRole : uint8_t { Anchor, Positive, Negative };
const char* sample_role_name(SampleRole r);

struct SampleRecord {
  std::string id;
  std::string origin;     // anchor name
  SampleRole role = SampleRole::Anchor;
  std::string transform;  // anchor | demorgan | extract | relocate | trojan
  uint64_t seed = 0;
  int label = 0;          // 0 benign, 1 malicious
  Netlist circuit;
  std::optional<TrojanInfo> trojan;
};

struct SampleSet {
  std::vector<SampleRecord> records;  // anchor, its positives, its negatives, next anchor, ...
  // Per-anchor signal profiles used for trigger selection (name, profile).
  std::vector<std::pair<std::string, SignalProfile>> anchor_profiles;
};

struct AugmentConfig {
  size_t n_pos = 6;
  size_t n_neg = 6;
  size_t trigger_width = 3;
  double rarity_threshold = 0.2;
  uint64_t profile_vectors = 10000;
  size_t demorgan_max_count = 3;
  size_t retry_budget = 64;
  uint64_t cert_vectors = 4096;  // certification sample when frame inputs > 12
  // Anchors that cannot host a compliant trigger hand their negatives to
  // anchors that can instead of failing the whole run.
  bool reallocate_uninjectable = false;
};

// Deterministic labeled dataset: per anchor, n_pos positives drawn
// uniformly over the three transforms and n_neg distinct injections, each
// certified (equivalence, or a verified distinguishing assignment) before
// inclusion.
SampleSet make_dataset(const std::vector<Netlist>& anchors, const AugmentConfig& config, uint64_t seed);

// `sample_id,origin,role,transform,seed,label,bench_path` rows; paths are
// `<dir>/<sample_id>.bench`.
std::string manifest_csv(const SampleSet& set, const std::string& bench_dir);

}  // namespace sand
