#include "sand/logicsim.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

#include "sand/rng.hpp"

namespace sand {

namespace {

// Lane patterns for exhaustive enumeration: bit `lane` of word w for
// enumeration variable i equals bit i of the global index w*64 + lane.
constexpr uint64_t kLanePattern[6] = {
    0xAAAAAAAAAAAAAAAAULL, 0xCCCCCCCCCCCCCCCCULL, 0xF0F0F0F0F0F0F0F0ULL,
    0xFF00FF00FF00FF00ULL, 0xFFFF0000FFFF0000ULL, 0xFFFFFFFF00000000ULL,
};

uint64_t eval_gate_word(GateKind kind, const std::vector<uint64_t>& nets, const std::vector<uint32_t>& in) {
  switch (kind) {
    case GateKind::AND: {
      uint64_t w = nets[in[0]];
      for (size_t i = 1; i < in.size(); ++i) w &= nets[in[i]];
      return w;
    }
    case GateKind::OR: {
      uint64_t w = nets[in[0]];
      for (size_t i = 1; i < in.size(); ++i) w |= nets[in[i]];
      return w;
    }
    case GateKind::NAND: {
      uint64_t w = nets[in[0]];
      for (size_t i = 1; i < in.size(); ++i) w &= nets[in[i]];
      return ~w;
    }
    case GateKind::NOR: {
      uint64_t w = nets[in[0]];
      for (size_t i = 1; i < in.size(); ++i) w |= nets[in[i]];
      return ~w;
    }
    case GateKind::XOR: {
      uint64_t w = nets[in[0]];
      for (size_t i = 1; i < in.size(); ++i) w ^= nets[in[i]];
      return w;
    }
    case GateKind::XNOR: {
      uint64_t w = nets[in[0]];
      for (size_t i = 1; i < in.size(); ++i) w ^= nets[in[i]];
      return ~w;
    }
    case GateKind::NOT:
      return ~nets[in[0]];
    case GateKind::BUFF:
      return nets[in[0]];
    case GateKind::DFF:
      break;
  }
  return 0;
}

}  // namespace

Simulator::Simulator(const Netlist& netlist) {
  require_valid(netlist);

  frame_inputs_ = netlist.frame_inputs();
  auto add_net = [&](const std::string& n) {
    if (net_index_.emplace(n, net_names_.size()).second) net_names_.push_back(n);
  };
  for (const std::string& n : frame_inputs_) add_net(n);
  for (const Gate& g : netlist.gates) add_net(g.output);

  // Kahn topological order over non-DFF gates. DFF outputs are sources.
  auto drivers = netlist.driver_index();
  size_t n_gates = netlist.gates.size();
  std::vector<uint32_t> pending(n_gates, 0);
  std::vector<std::vector<uint32_t>> dependents(n_gates);
  std::vector<uint32_t> ready;
  for (size_t gi = 0; gi < n_gates; ++gi) {
    const Gate& g = netlist.gates[gi];
    if (g.kind == GateKind::DFF) continue;
    for (const std::string& in : g.inputs) {
      auto it = drivers.find(in);
      if (it == drivers.end()) continue;  // primary input
      if (netlist.gates[it->second].kind == GateKind::DFF) continue;
      dependents[it->second].push_back(static_cast<uint32_t>(gi));
      ++pending[gi];
    }
    if (pending[gi] == 0) ready.push_back(static_cast<uint32_t>(gi));
  }
  std::vector<uint32_t> order;
  order.reserve(n_gates);
  for (size_t head = 0; head < ready.size(); ++head) {
    uint32_t gi = ready[head];
    order.push_back(gi);
    for (uint32_t dep : dependents[gi])
      if (--pending[dep] == 0) ready.push_back(dep);
  }

  ops_.reserve(order.size());
  for (uint32_t gi : order) {
    const Gate& g = netlist.gates[gi];
    Op op;
    op.kind = g.kind;
    op.out = static_cast<uint32_t>(net_index_.at(g.output));
    op.in.reserve(g.inputs.size());
    for (const std::string& in : g.inputs) op.in.push_back(static_cast<uint32_t>(net_index_.at(in)));
    ops_.push_back(std::move(op));
  }

  for (const std::string& po : netlist.outputs) {
    frame_output_names_.push_back(po);
    frame_output_nets_.push_back(net_index_.at(po));
  }
  for (const Gate& g : netlist.gates) {
    if (g.kind != GateKind::DFF) continue;
    frame_output_names_.push_back(g.output);  // next value of the state net
    frame_output_nets_.push_back(net_index_.at(g.inputs[0]));
  }
}

void Simulator::eval_words(const std::vector<uint64_t>& in_words, std::vector<uint64_t>& net_words) const {
  net_words.resize(net_names_.size());
  for (size_t i = 0; i < frame_inputs_.size(); ++i) net_words[i] = in_words[i];
  for (const Op& op : ops_) net_words[op.out] = eval_gate_word(op.kind, net_words, op.in);
}

void Simulator::frame_outputs(const std::vector<uint64_t>& net_words, std::vector<uint64_t>& out_words) const {
  out_words.resize(frame_output_nets_.size());
  for (size_t i = 0; i < frame_output_nets_.size(); ++i) out_words[i] = net_words[frame_output_nets_[i]];
}

size_t Simulator::net_index(const std::string& net) const {
  auto it = net_index_.find(net);
  if (it == net_index_.end()) throw Error("unknown net '" + net + "'");
  return it->second;
}

std::unordered_map<std::string, uint8_t> simulate_reference(const Netlist& netlist,
                                                            const FrameAssignment& frame_in) {
  require_valid(netlist);
  auto drivers = netlist.driver_index();
  std::unordered_map<std::string, uint8_t> values;

  auto frame_value = [&](const std::string& net) -> uint8_t {
    auto it = frame_in.find(net);
    if (it == frame_in.end()) throw Error("incomplete frame assignment: missing '" + net + "'");
    return it->second ? 1 : 0;
  };

  // Recursive resolution with an explicit stack.
  std::vector<std::string> todo;
  auto resolve = [&](const std::string& root) {
    todo.push_back(root);
    while (!todo.empty()) {
      std::string net = todo.back();
      if (values.count(net)) {
        todo.pop_back();
        continue;
      }
      auto dit = drivers.find(net);
      if (dit == drivers.end() || netlist.gates[dit->second].kind == GateKind::DFF) {
        values[net] = frame_value(net);
        todo.pop_back();
        continue;
      }
      const Gate& g = netlist.gates[dit->second];
      bool have_all = true;
      for (const std::string& in : g.inputs) {
        if (!values.count(in)) {
          todo.push_back(in);
          have_all = false;
        }
      }
      if (!have_all) continue;
      uint8_t acc = values[g.inputs[0]];
      switch (g.kind) {
        case GateKind::AND:
        case GateKind::NAND:
          for (size_t i = 1; i < g.inputs.size(); ++i) acc &= values[g.inputs[i]];
          if (g.kind == GateKind::NAND) acc ^= 1;
          break;
        case GateKind::OR:
        case GateKind::NOR:
          for (size_t i = 1; i < g.inputs.size(); ++i) acc |= values[g.inputs[i]];
          if (g.kind == GateKind::NOR) acc ^= 1;
          break;
        case GateKind::XOR:
        case GateKind::XNOR:
          for (size_t i = 1; i < g.inputs.size(); ++i) acc ^= values[g.inputs[i]];
          if (g.kind == GateKind::XNOR) acc ^= 1;
          break;
        case GateKind::NOT:
          acc ^= 1;
          break;
        case GateKind::BUFF:
        case GateKind::DFF:
          break;
      }
      values[net] = acc;
      todo.pop_back();
    }
  };

  // Make sure every frame input is present and no extras were passed.
  for (const std::string& fi : netlist.frame_inputs()) values[fi] = frame_value(fi);
  if (frame_in.size() != netlist.frame_inputs().size())
    throw Error("frame assignment covers nets outside the frame input set");

  for (const Gate& g : netlist.gates) resolve(g.output);
  for (const Gate& g : netlist.gates)
    for (const std::string& in : g.inputs) resolve(in);
  return values;
}

std::unordered_map<std::string, uint8_t> simulate(const Netlist& netlist, const FrameAssignment& frame_in) {
  Simulator sim(netlist);
  const auto& fi = sim.frame_input_names();
  if (frame_in.size() != fi.size()) throw Error("frame assignment covers nets outside the frame input set");
  std::vector<uint64_t> in_words(fi.size());
  for (size_t i = 0; i < fi.size(); ++i) {
    auto it = frame_in.find(fi[i]);
    if (it == frame_in.end()) throw Error("incomplete frame assignment: missing '" + fi[i] + "'");
    in_words[i] = it->second ? ~0ULL : 0ULL;
  }
  std::vector<uint64_t> net_words;
  sim.eval_words(in_words, net_words);
  std::unordered_map<std::string, uint8_t> out;
  out.reserve(sim.net_count());
  for (size_t i = 0; i < sim.net_count(); ++i) out[sim.net_names()[i]] = net_words[i] & 1;
  return out;
}

std::unordered_map<std::string, uint8_t> simulate_frame_outputs(const Netlist& netlist,
                                                                const FrameAssignment& frame_in) {
  Simulator sim(netlist);
  const auto& fi = sim.frame_input_names();
  std::vector<uint64_t> in_words(fi.size());
  for (size_t i = 0; i < fi.size(); ++i) {
    auto it = frame_in.find(fi[i]);
    if (it == frame_in.end()) throw Error("incomplete frame assignment: missing '" + fi[i] + "'");
    in_words[i] = it->second ? ~0ULL : 0ULL;
  }
  std::vector<uint64_t> net_words, out_words;
  sim.eval_words(in_words, net_words);
  sim.frame_outputs(net_words, out_words);
  std::unordered_map<std::string, uint8_t> out;
  for (size_t i = 0; i < out_words.size(); ++i) out[sim.frame_output_names()[i]] = out_words[i] & 1;
  return out;
}

uint64_t random_input_word(uint64_t seed, uint64_t block, size_t input_index, size_t input_count) {
  return counter_hash(seed, block * input_count + input_index);
}

uint64_t exhaustive_input_word(uint64_t block, size_t input_index) {
  if (input_index < 6) return kLanePattern[input_index];
  return (block >> (input_index - 6)) & 1 ? ~0ULL : 0ULL;
}

namespace {

// Shared word-parallel comparison loop. `input_of` maps (block, sim, input
// index) to the input word; mismatch search returns the smallest failing
// global vector index for determinism under any parallel schedule.
struct MismatchScan {
  bool found = false;
  uint64_t vector_index = 0;
  size_t output_index = 0;
};

template <typename InputWordFn>
MismatchScan scan_blocks(const Simulator& sa, const Simulator& sb, uint64_t n_vectors,
                         const std::vector<size_t>& out_map, InputWordFn input_word) {
  const uint64_t n_blocks = (n_vectors + 63) / 64;
  MismatchScan best;

#pragma omp parallel
  {
    std::vector<uint64_t> ia(sa.frame_input_count()), ib(sb.frame_input_count());
    std::vector<uint64_t> na, nb, oa, ob;
    MismatchScan local;

#pragma omp for schedule(static)
    for (int64_t blk = 0; blk < static_cast<int64_t>(n_blocks); ++blk) {
      if (local.found) continue;
      uint64_t block = static_cast<uint64_t>(blk);
      uint64_t lane_mask = ~0ULL;
      if ((block + 1) * 64 > n_vectors) {
        uint64_t tail = n_vectors - block * 64;
        lane_mask = (tail == 64) ? ~0ULL : ((1ULL << tail) - 1);
      }
      input_word(block, ia, ib);
      sa.eval_words(ia, na);
      sb.eval_words(ib, nb);
      sa.frame_outputs(na, oa);
      sb.frame_outputs(nb, ob);
      for (size_t oi = 0; oi < oa.size(); ++oi) {
        uint64_t diff = (oa[oi] ^ ob[out_map[oi]]) & lane_mask;
        if (diff) {
          uint64_t v = block * 64 + static_cast<uint64_t>(std::countr_zero(diff));
          if (!local.found || v < local.vector_index) {
            local.found = true;
            local.vector_index = v;
            local.output_index = oi;
          }
        }
      }
    }

#pragma omp critical
    {
      if (local.found && (!best.found || local.vector_index < best.vector_index)) best = local;
    }
  }
  return best;
}

}  // namespace

EqResult check_equivalence(const Netlist& a, const Netlist& b, const EqOptions& opts) {
  Simulator sa(a), sb(b);

  auto sorted = [](std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  if (sorted(sa.frame_input_names()) != sorted(sb.frame_input_names()))
    throw Error("frame input name sets differ");
  if (sorted(sa.frame_output_names()) != sorted(sb.frame_output_names()))
    throw Error("frame output name sets differ");

  // Map a's input/output positions onto b's.
  std::vector<size_t> in_map(sa.frame_input_count());
  {
    std::unordered_map<std::string, size_t> bidx;
    for (size_t i = 0; i < sb.frame_input_names().size(); ++i) bidx[sb.frame_input_names()[i]] = i;
    for (size_t i = 0; i < sa.frame_input_names().size(); ++i) in_map[i] = bidx.at(sa.frame_input_names()[i]);
  }
  std::vector<size_t> out_map(sa.frame_output_names().size());
  {
    std::unordered_map<std::string, size_t> bidx;
    for (size_t i = 0; i < sb.frame_output_names().size(); ++i) bidx[sb.frame_output_names()[i]] = i;
    for (size_t i = 0; i < sa.frame_output_names().size(); ++i) out_map[i] = bidx.at(sa.frame_output_names()[i]);
  }

  const size_t k = sa.frame_input_count();
  uint64_t n_vectors;
  if (opts.exhaustive) {
    if (k > 24) throw Error("exhaustive equivalence limited to 24 frame inputs, got " + std::to_string(k));
    n_vectors = 1ULL << k;
  } else {
    n_vectors = opts.n_vectors;
  }

  auto fill_inputs = [&](uint64_t block, std::vector<uint64_t>& ia, std::vector<uint64_t>& ib) {
    for (size_t i = 0; i < k; ++i) {
      uint64_t w = opts.exhaustive ? exhaustive_input_word(block, i)
                                   : random_input_word(opts.seed, block, i, k);
      ia[i] = w;
      ib[in_map[i]] = w;
    }
  };

  MismatchScan m = scan_blocks(sa, sb, n_vectors, out_map, fill_inputs);
  EqResult res;
  res.equivalent = !m.found;
  if (m.found) {
    res.differing_output = sa.frame_output_names()[m.output_index];
    uint64_t block = m.vector_index / 64, lane = m.vector_index % 64;
    for (size_t i = 0; i < k; ++i) {
      uint64_t w = opts.exhaustive ? exhaustive_input_word(block, i)
                                   : random_input_word(opts.seed, block, i, k);
      res.counterexample[sa.frame_input_names()[i]] = (w >> lane) & 1;
    }
  }
  return res;
}

EqResult check_cone_equivalence(const Netlist& anchor, const Netlist& cone, const EqOptions& opts) {
  Simulator sa(anchor), sc(cone);

  // Every cone frame input/output must name an anchor net. Cone inputs are
  // driven from the anchor's simulated values; cone frame outputs are
  // compared against the anchor's values of the same nets.
  std::vector<size_t> cone_in_src(sc.frame_input_count());
  for (size_t i = 0; i < sc.frame_input_count(); ++i)
    cone_in_src[i] = sa.net_index(sc.frame_input_names()[i]);
  std::vector<size_t> cone_out_ref(sc.frame_output_names().size());
  for (size_t i = 0; i < sc.frame_output_names().size(); ++i)
    cone_out_ref[i] = sa.net_index(sc.frame_output_names()[i]);

  const size_t k = sa.frame_input_count();
  uint64_t n_vectors;
  if (opts.exhaustive) {
    if (k > 24) throw Error("exhaustive equivalence limited to 24 frame inputs, got " + std::to_string(k));
    n_vectors = 1ULL << k;
  } else {
    n_vectors = opts.n_vectors;
  }
  const uint64_t n_blocks = (n_vectors + 63) / 64;

  MismatchScan best;
#pragma omp parallel
  {
    std::vector<uint64_t> ia(k), ic(sc.frame_input_count());
    std::vector<uint64_t> na, nc, oc;
    MismatchScan local;

#pragma omp for schedule(static)
    for (int64_t blk = 0; blk < static_cast<int64_t>(n_blocks); ++blk) {
      if (local.found) continue;
      uint64_t block = static_cast<uint64_t>(blk);
      uint64_t lane_mask = ~0ULL;
      if ((block + 1) * 64 > n_vectors) {
        uint64_t tail = n_vectors - block * 64;
        lane_mask = (tail == 64) ? ~0ULL : ((1ULL << tail) - 1);
      }
      for (size_t i = 0; i < k; ++i)
        ia[i] = opts.exhaustive ? exhaustive_input_word(block, i)
                                : random_input_word(opts.seed, block, i, k);
      sa.eval_words(ia, na);
      for (size_t i = 0; i < ic.size(); ++i) ic[i] = na[cone_in_src[i]];
      sc.eval_words(ic, nc);
      sc.frame_outputs(nc, oc);
      for (size_t oi = 0; oi < oc.size(); ++oi) {
        uint64_t diff = (oc[oi] ^ na[cone_out_ref[oi]]) & lane_mask;
        if (diff) {
          uint64_t v = block * 64 + static_cast<uint64_t>(std::countr_zero(diff));
          if (!local.found || v < local.vector_index) {
            local.found = true;
            local.vector_index = v;
            local.output_index = oi;
          }
        }
      }
    }

#pragma omp critical
    {
      if (local.found && (!best.found || local.vector_index < best.vector_index)) best = local;
    }
  }

  EqResult res;
  res.equivalent = !best.found;
  if (best.found) {
    res.differing_output = sc.frame_output_names()[best.output_index];
    uint64_t block = best.vector_index / 64, lane = best.vector_index % 64;
    for (size_t i = 0; i < k; ++i) {
      uint64_t w = opts.exhaustive ? exhaustive_input_word(block, i)
                                   : random_input_word(opts.seed, block, i, k);
      res.counterexample[sa.frame_input_names()[i]] = (w >> lane) & 1;
    }
  }
  return res;
}

SignalProfile random_signal_profile(const Netlist& netlist, uint64_t n_vectors, uint64_t seed) {
  if (n_vectors < 1) throw Error("random_signal_profile requires n_vectors >= 1");
  Simulator sim(netlist);
  const size_t k = sim.frame_input_count();
  const size_t n_nets = sim.net_count();
  const uint64_t n_blocks = (n_vectors + 63) / 64;

  std::vector<uint64_t> counts(n_nets, 0);
#pragma omp parallel
  {
    std::vector<uint64_t> in_words(k), net_words;
    std::vector<uint64_t> local(n_nets, 0);
#pragma omp for schedule(static)
    for (int64_t blk = 0; blk < static_cast<int64_t>(n_blocks); ++blk) {
      uint64_t block = static_cast<uint64_t>(blk);
      uint64_t lane_mask = ~0ULL;
      if ((block + 1) * 64 > n_vectors) {
        uint64_t tail = n_vectors - block * 64;
        lane_mask = (tail == 64) ? ~0ULL : ((1ULL << tail) - 1);
      }
      for (size_t i = 0; i < k; ++i) in_words[i] = random_input_word(seed, block, i, k);
      sim.eval_words(in_words, net_words);
      for (size_t n = 0; n < n_nets; ++n) local[n] += std::popcount(net_words[n] & lane_mask);
    }
#pragma omp critical
    for (size_t n = 0; n < n_nets; ++n) counts[n] += local[n];
  }

  SignalProfile profile;
  profile.n_vectors = n_vectors;
  profile.seed = seed;
  for (size_t n = 0; n < n_nets; ++n)
    profile.probability[sim.net_names()[n]] = static_cast<double>(counts[n]) / static_cast<double>(n_vectors);
  return profile;
}

std::string profile_to_csv(const SignalProfile& profile, const Netlist& netlist) {
  std::ostringstream out;
  out << "net,probability\n";
  out.precision(17);
  auto emit = [&](const std::string& net) {
    auto it = profile.probability.find(net);
    if (it != profile.probability.end()) out << net << "," << it->second << "\n";
  };
  for (const std::string& n : netlist.inputs) emit(n);
  for (const Gate& g : netlist.gates) emit(g.output);
  return out.str();
}

}  // namespace sand
