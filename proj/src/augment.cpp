#include "sand/augment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "sand/rng.hpp"

namespace sand {

namespace {

struct RewriteRule {
  GateKind from;
  GateKind inner;
};

constexpr RewriteRule kRewriteRules[] = {
    {GateKind::AND, GateKind::NAND}, {GateKind::OR, GateKind::NOR},
    {GateKind::NAND, GateKind::AND}, {GateKind::NOR, GateKind::OR},
    {GateKind::XOR, GateKind::XNOR}, {GateKind::XNOR, GateKind::XOR},
    {GateKind::BUFF, GateKind::NOT},
};

const RewriteRule* rule_for(GateKind k) {
  for (const RewriteRule& r : kRewriteRules)
    if (r.from == k) return &r;
  return nullptr;
}

std::unordered_set<std::string> all_net_names(const Netlist& nl) {
  std::unordered_set<std::string> names(nl.inputs.begin(), nl.inputs.end());
  for (const Gate& g : nl.gates) names.insert(g.output);
  for (const std::string& o : nl.outputs) names.insert(o);
  return names;
}

std::string fresh_net(std::unordered_set<std::string>& taken, const std::string& stem, size_t& counter) {
  for (;;) {
    std::string candidate = stem + std::to_string(counter++);
    if (taken.insert(candidate).second) return candidate;
  }
}

}  // namespace

Netlist demorgan_rewrite(const Netlist& netlist, uint64_t seed, size_t count) {
  if (count < 1) throw Error("demorgan_rewrite: count must be >= 1");
  Netlist out = netlist;
  Rng rng(derive_seed(seed, 0x444D4F));
  auto taken = all_net_names(out);
  size_t fresh_counter = 0;

  for (size_t step = 0; step < count; ++step) {
    std::vector<size_t> sites;
    for (size_t i = 0; i < out.gates.size(); ++i)
      if (rule_for(out.gates[i].kind)) sites.push_back(i);
    if (sites.empty()) throw Error("demorgan_rewrite: no rewritable gate exists");

    size_t gi = sites[rng.next_below(sites.size())];
    const RewriteRule* rule = rule_for(out.gates[gi].kind);
    std::string inner_net = fresh_net(taken, "_dm", fresh_counter);

    Gate inner;
    inner.output = inner_net;
    inner.kind = rule->inner;
    inner.inputs = out.gates[gi].inputs;

    Gate& outer = out.gates[gi];
    outer.kind = GateKind::NOT;
    outer.inputs = {inner_net};
    out.gates.insert(out.gates.begin() + static_cast<long>(gi), std::move(inner));
  }
  return out;
}

Netlist extract_subcircuit(const Netlist& netlist, uint64_t seed, size_t max_nodes) {
  if (max_nodes < 3) throw Error("extract_subcircuit: max_nodes must be >= 3");
  if (netlist.gates.empty()) throw Error("extract_subcircuit: netlist has no gates");
  Rng rng(derive_seed(seed, 0x455854));

  auto drivers = netlist.driver_index();

  // Frame outputs as cone roots; a DFF state net's root is the next-state
  // (the DFF's input net).
  std::vector<std::string> roots = netlist.outputs;
  for (const Gate& g : netlist.gates)
    if (g.kind == GateKind::DFF) roots.push_back(g.inputs[0]);
  std::string root = roots[rng.next_below(roots.size())];

  // Breadth-first over driving gates until the budget is spent.
  std::vector<size_t> admitted;
  std::unordered_set<size_t> admitted_set;
  std::vector<std::string> frontier{root};
  std::unordered_set<std::string> visited{root};
  while (!frontier.empty() && admitted.size() < max_nodes) {
    std::vector<std::string> next;
    for (const std::string& net : frontier) {
      if (admitted.size() >= max_nodes) break;
      auto it = drivers.find(net);
      if (it == drivers.end()) continue;  // primary input: cut ends here
      if (admitted_set.insert(it->second).second) {
        admitted.push_back(it->second);
        for (const std::string& in : netlist.gates[it->second].inputs)
          if (visited.insert(in).second) next.push_back(in);
      }
    }
    frontier = std::move(next);
  }

  // Cut nets: inputs of admitted gates not driven inside the cone.
  std::unordered_set<std::string> inside;
  for (size_t gi : admitted) inside.insert(netlist.gates[gi].output);

  std::vector<std::string> cut;
  std::unordered_set<std::string> cut_set;
  for (size_t gi : admitted) {
    for (const std::string& in : netlist.gates[gi].inputs) {
      if (inside.count(in) || cut_set.count(in)) continue;
      cut_set.insert(in);
      cut.push_back(in);
    }
  }
  if (admitted.empty()) {
    // Root driven by a primary input (degenerate); expose it directly.
    cut_set.insert(root);
    cut.push_back(root);
  }

  Netlist sub;
  sub.name = netlist.name + "_cone";
  // Anchor primary inputs first, in anchor order, then the other cut nets
  // in first-encounter order.
  for (const std::string& in : netlist.inputs)
    if (cut_set.count(in)) sub.inputs.push_back(in);
  for (const std::string& c : cut)
    if (std::find(netlist.inputs.begin(), netlist.inputs.end(), c) == netlist.inputs.end())
      sub.inputs.push_back(c);
  sub.outputs.push_back(root);
  std::sort(admitted.begin(), admitted.end());  // keep declaration order
  for (size_t gi : admitted) sub.gates.push_back(netlist.gates[gi]);

  require_valid(sub);
  return sub;
}

Netlist apply_relocation(const Netlist& netlist, const std::vector<size_t>& gate_perm,
                         const std::vector<std::pair<std::string, std::string>>& net_rename) {
  if (gate_perm.size() != netlist.gates.size()) throw Error("apply_relocation: bad permutation size");
  std::unordered_map<std::string, std::string> rename(net_rename.begin(), net_rename.end());
  auto mapped = [&](const std::string& n) {
    auto it = rename.find(n);
    return it == rename.end() ? n : it->second;
  };

  Netlist out;
  out.name = netlist.name;
  out.inputs = netlist.inputs;
  out.outputs = netlist.outputs;
  out.gates.reserve(netlist.gates.size());
  for (size_t i = 0; i < gate_perm.size(); ++i) {
    const Gate& src = netlist.gates[gate_perm[i]];
    Gate g;
    g.output = mapped(src.output);
    g.kind = src.kind;
    g.inputs.reserve(src.inputs.size());
    for (const std::string& in : src.inputs) g.inputs.push_back(mapped(in));
    out.gates.push_back(std::move(g));
  }
  return out;
}

Netlist relocate(const Netlist& netlist, uint64_t seed) {
  Rng rng(derive_seed(seed, 0x52454C));

  // Renameable: gate outputs that are neither primary outputs nor DFF
  // state nets (those carry the frame interface).
  std::unordered_set<std::string> protected_names(netlist.outputs.begin(), netlist.outputs.end());
  for (const Gate& g : netlist.gates)
    if (g.kind == GateKind::DFF) protected_names.insert(g.output);

  std::vector<std::string> internal;
  for (const Gate& g : netlist.gates)
    if (!protected_names.count(g.output)) internal.push_back(g.output);

  std::vector<size_t> net_perm = rng.permutation(internal.size());
  std::vector<std::pair<std::string, std::string>> rename;
  rename.reserve(internal.size());
  for (size_t i = 0; i < internal.size(); ++i)
    rename.emplace_back(internal[i], internal[net_perm[i]]);

  std::vector<size_t> gate_perm = rng.permutation(netlist.gates.size());
  return apply_relocation(netlist, gate_perm, rename);
}

namespace {

// Trigger candidate: a net with its rare polarity and that polarity's
// probability.
struct TriggerCandidate {
  std::string net;
  uint8_t polarity;
  double rarity;
};

// Weighted priority order without replacement (exponential race): smaller
// -ln(u)/w wins, weight = threshold - rarity, so the rarest nets come
// first while seeds still diversify the order.
std::vector<size_t> weighted_order(const std::vector<TriggerCandidate>& eligible, double threshold,
                                   Rng& rng) {
  std::vector<std::pair<double, size_t>> keyed;
  keyed.reserve(eligible.size());
  for (size_t i = 0; i < eligible.size(); ++i) {
    double w = std::max(1e-6, threshold - eligible[i].rarity);
    double u = std::max(1e-300, rng.next_double());
    keyed.emplace_back(-std::log(u) / w, i);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<size_t> order;
  order.reserve(keyed.size());
  for (const auto& [key, idx] : keyed) order.push_back(idx);
  return order;
}

// Word-parallel count of satisfied trigger literals per lane plus the
// all-satisfied mask.
struct TriggerEval {
  const Simulator* sim;
  std::vector<size_t> literal_net;  // net index per literal
  std::vector<uint8_t> polarity;

  uint64_t fire_mask(const std::vector<uint64_t>& net_words) const {
    uint64_t m = ~0ULL;
    for (size_t i = 0; i < literal_net.size(); ++i) {
      uint64_t w = net_words[literal_net[i]];
      m &= polarity[i] ? w : ~w;
    }
    return m;
  }

};

// One trigger proposal with a satisfying witness found during selection.
struct TriggerPick {
  std::vector<TriggerCandidate> trig;
  std::vector<uint8_t> witness;  // frame input bits
};

// Sorted net-name key identifying a trigger set; rejected sets go on a
// tabu list so retries explore genuinely new candidates.
std::string trigger_key(const std::vector<TriggerCandidate>& trig) {
  std::vector<std::string> names;
  for (const TriggerCandidate& t : trig) names.push_back(t.net);
  std::sort(names.begin(), names.end());
  std::string key;
  for (const std::string& n : names) {
    key += n;
    key += ';';
  }
  return key;
}

// Trigger selection over an exhaustively tabulated input space: every
// eligible net's satisfying set is known exactly, so candidates are grown
// by greedy intersection (rarest-biased order) and the joint firing
// probability is exact.
class ExactTriggerPicker {
 public:
  ExactTriggerPicker(const Simulator& sim, const std::vector<TriggerCandidate>& eligible,
                     double threshold, double joint_limit)
      : eligible_(eligible), threshold_(threshold), joint_limit_(joint_limit) {
    k_ = sim.frame_input_count();
    n_lanes_ = 1ULL << k_;
    n_blocks_ = (n_lanes_ + 63) / 64;
    tables_.assign(eligible.size(), std::vector<uint64_t>(n_blocks_, 0));

    std::vector<size_t> net_of(eligible.size());
    for (size_t i = 0; i < eligible.size(); ++i) net_of[i] = sim.net_index(eligible[i].net);

    std::vector<uint64_t> in_words(k_), net_words;
    for (uint64_t block = 0; block < n_blocks_; ++block) {
      uint64_t lane_mask = ~0ULL;
      if ((block + 1) * 64 > n_lanes_) lane_mask = (1ULL << (n_lanes_ - block * 64)) - 1;
      for (size_t i = 0; i < k_; ++i) in_words[i] = exhaustive_input_word(block, i);
      sim.eval_words(in_words, net_words);
      for (size_t i = 0; i < eligible.size(); ++i) {
        uint64_t w = net_words[net_of[i]];
        tables_[i][block] = (eligible[i].polarity ? w : ~w) & lane_mask;
      }
    }
  }

  // Every qualifying set of the given width in a seeded order (width <= 3
  // enumerates exhaustively; wider triggers fall back to beam attempts).
  std::vector<TriggerPick> enumerate_all(size_t width, Rng& rng) const {
    std::vector<TriggerPick> out;
    if (width > 3) return out;
    const size_t n = eligible_.size();
    std::vector<uint64_t> joint2(n_blocks_);
    std::vector<uint64_t> joint3(n_blocks_);

    auto emit = [&](const std::vector<size_t>& chosen, const std::vector<uint64_t>& joint,
                    uint64_t lanes) {
      if (static_cast<double>(lanes) / static_cast<double>(n_lanes_) > joint_limit_) return;
      TriggerPick pick;
      for (size_t idx : chosen) pick.trig.push_back(eligible_[idx]);
      for (uint64_t b = 0; b < n_blocks_; ++b) {
        if (!joint[b]) continue;
        uint64_t index = b * 64 + static_cast<uint64_t>(std::countr_zero(joint[b]));
        pick.witness.resize(k_);
        for (size_t i = 0; i < k_; ++i) pick.witness[i] = static_cast<uint8_t>((index >> i) & 1);
        break;
      }
      out.push_back(std::move(pick));
    };

    for (size_t i = 0; i < n; ++i) {
      for (size_t j = i + 1; j < n; ++j) {
        uint64_t lanes2 = 0;
        for (uint64_t b = 0; b < n_blocks_; ++b) {
          joint2[b] = tables_[i][b] & tables_[j][b];
          lanes2 += std::popcount(joint2[b]);
        }
        if (lanes2 == 0) continue;
        if (width == 2) {
          emit({i, j}, joint2, lanes2);
          continue;
        }
        for (size_t l = j + 1; l < n; ++l) {
          uint64_t lanes3 = 0;
          for (uint64_t b = 0; b < n_blocks_; ++b) {
            joint3[b] = joint2[b] & tables_[l][b];
            lanes3 += std::popcount(joint3[b]);
          }
          if (lanes3 == 0) continue;
          emit({i, j, l}, joint3, lanes3);
        }
      }
    }
    rng.shuffle(out);
    return out;
  }

  std::optional<TriggerPick> attempt(size_t width, Rng& rng,
                                     const std::unordered_set<std::string>& tabu) const {
    // Seeded start net for diversity, then a small beam over compatible
    // nets, always extending toward the smallest joint satisfying set so
    // the firing probability sinks to the granularity floor of the space.
    struct State {
      std::vector<size_t> chosen;
      std::vector<uint64_t> joint;
      uint64_t lanes;
    };
    constexpr size_t kBeam = 8;

    std::vector<size_t> order = weighted_order(eligible_, threshold_, rng);
    State init;
    init.chosen = {order[0]};
    init.joint = tables_[order[0]];
    init.lanes = 0;
    for (uint64_t w : init.joint) init.lanes += std::popcount(w);
    if (init.lanes == 0) return std::nullopt;

    std::vector<State> beam{std::move(init)};
    for (size_t depth = 1; depth < width; ++depth) {
      std::vector<State> next;
      for (const State& st : beam) {
        for (size_t idx : order) {
          if (std::find(st.chosen.begin(), st.chosen.end(), idx) != st.chosen.end()) continue;
          uint64_t lanes = 0;
          for (uint64_t b = 0; b < n_blocks_; ++b) lanes += std::popcount(st.joint[b] & tables_[idx][b]);
          if (lanes == 0) continue;
          State ext;
          ext.chosen = st.chosen;
          ext.chosen.push_back(idx);
          ext.joint.resize(n_blocks_);
          for (uint64_t b = 0; b < n_blocks_; ++b) ext.joint[b] = st.joint[b] & tables_[idx][b];
          ext.lanes = lanes;
          next.push_back(std::move(ext));
        }
      }
      if (next.empty()) return std::nullopt;
      std::sort(next.begin(), next.end(), [](const State& a, const State& b) { return a.lanes < b.lanes; });
      // Drop states that only differ in the order of the same chosen set.
      std::vector<State> kept;
      for (State& st : next) {
        std::vector<size_t> key = st.chosen;
        std::sort(key.begin(), key.end());
        bool dup = false;
        for (const State& k : kept) {
          std::vector<size_t> kk = k.chosen;
          std::sort(kk.begin(), kk.end());
          dup |= kk == key;
        }
        if (!dup) kept.push_back(std::move(st));
        if (kept.size() == kBeam) break;
      }
      beam = std::move(kept);
    }

    // Safest non-tabu finalist below the limit; beam is already sorted by
    // joint size, so certificate rejections walk to the next candidate.
    const State* best = nullptr;
    for (const State& st : beam) {
      if (static_cast<double>(st.lanes) / static_cast<double>(n_lanes_) > joint_limit_) continue;
      std::vector<TriggerCandidate> trig;
      for (size_t idx : st.chosen) trig.push_back(eligible_[idx]);
      if (tabu.count(trigger_key(trig))) continue;
      best = &st;
      break;
    }
    if (!best) return std::nullopt;

    TriggerPick pick;
    for (size_t idx : best->chosen) pick.trig.push_back(eligible_[idx]);
    for (uint64_t b = 0; b < n_blocks_; ++b) {
      if (!best->joint[b]) continue;
      uint64_t index = b * 64 + static_cast<uint64_t>(std::countr_zero(best->joint[b]));
      pick.witness.resize(k_);
      for (size_t i = 0; i < k_; ++i) pick.witness[i] = static_cast<uint8_t>((index >> i) & 1);
      break;
    }
    return pick;
  }

 private:
  const std::vector<TriggerCandidate>& eligible_;
  double threshold_, joint_limit_;
  size_t k_;
  uint64_t n_lanes_, n_blocks_;
  std::vector<std::vector<uint64_t>> tables_;
};

// Trigger selection for wide input spaces: draw a 64-vector random batch,
// look for a lane where at least `width` eligible nets sit at their rare
// polarity, and pick the trigger from that lane's holders. The lane is a
// satisfying witness by construction; the rarity certificate screens out
// candidates that fire too often.
std::optional<TriggerPick> sampled_trigger_attempt(const Simulator& sim,
                                                   const std::vector<TriggerCandidate>& eligible,
                                                   double threshold, size_t width, Rng& rng) {
  const size_t k = sim.frame_input_count();
  std::vector<uint64_t> in_words(k), net_words;
  for (size_t i = 0; i < k; ++i) in_words[i] = rng.next_u64();
  sim.eval_words(in_words, net_words);

  std::vector<uint64_t> matched(eligible.size());
  for (size_t i = 0; i < eligible.size(); ++i) {
    uint64_t w = net_words[sim.net_index(eligible[i].net)];
    matched[i] = eligible[i].polarity ? w : ~w;
  }

  for (size_t lane = 0; lane < 64; ++lane) {
    std::vector<TriggerCandidate> holders;
    for (size_t i = 0; i < eligible.size(); ++i)
      if ((matched[i] >> lane) & 1) holders.push_back(eligible[i]);
    if (holders.size() < width) continue;

    std::vector<size_t> order = weighted_order(holders, threshold, rng);
    TriggerPick pick;
    for (size_t i = 0; i < width; ++i) pick.trig.push_back(holders[order[i]]);
    pick.witness.resize(k);
    for (size_t i = 0; i < k; ++i) pick.witness[i] = static_cast<uint8_t>((in_words[i] >> lane) & 1);
    return pick;
  }
  return std::nullopt;
}

// One victim location: a tap on net `victim` feeding either gate input
// slot (gate_index, slot) or primary output position po_index.
struct VictimEdge {
  std::string victim;
  bool is_po = false;
  size_t gate_index = 0;
  size_t slot = 0;
  size_t po_index = 0;
};

// Nets reachable combinationally downstream of `start` (paths stop at DFF
// inputs).
std::unordered_set<std::string> comb_fanout(const Netlist& nl, const std::string& start) {
  std::unordered_map<std::string, std::vector<size_t>> consumers;
  for (size_t gi = 0; gi < nl.gates.size(); ++gi)
    for (const std::string& in : nl.gates[gi].inputs) consumers[in].push_back(gi);

  std::unordered_set<std::string> seen{start};
  std::vector<std::string> todo{start};
  while (!todo.empty()) {
    std::string net = todo.back();
    todo.pop_back();
    auto it = consumers.find(net);
    if (it == consumers.end()) continue;
    for (size_t gi : it->second) {
      if (nl.gates[gi].kind == GateKind::DFF) continue;
      const std::string& out = nl.gates[gi].output;
      if (seen.insert(out).second) todo.push_back(out);
    }
  }
  return seen;
}

}  // namespace

std::pair<Netlist, TrojanInfo> inject_trojan(const Netlist& netlist, uint64_t seed,
                                             size_t trigger_width, const SignalProfile& profile,
                                             const InjectOptions& opts) {
  if (trigger_width < 2 || trigger_width > 6)
    throw Error("inject_trojan: trigger_width must be in [2, 6]");
  require_valid(netlist);

  Rng rng(derive_seed(seed, 0x544A4E));
  Simulator sim(netlist);
  auto drivers = netlist.driver_index();

  // Eligible trigger nets: rare polarity below the threshold.
  std::vector<TriggerCandidate> eligible;
  {
    std::vector<std::string> nets = netlist.inputs;
    for (const Gate& g : netlist.gates) nets.push_back(g.output);
    for (const std::string& net : nets) {
      auto it = profile.probability.find(net);
      if (it == profile.probability.end()) throw Error("inject_trojan: profile missing net '" + net + "'");
      double p1 = it->second;
      uint8_t pol = p1 <= 1.0 - p1 ? 1 : 0;
      double rarity = pol ? p1 : 1.0 - p1;
      // rarity 0 means the polarity never showed up in the profile; such
      // nets are almost always structurally constant and can never fire.
      if (rarity > 0.0 && rarity < opts.rarity_threshold) eligible.push_back({net, pol, rarity});
    }
  }
  std::sort(eligible.begin(), eligible.end(), [](const TriggerCandidate& a, const TriggerCandidate& b) {
    return a.rarity != b.rarity ? a.rarity < b.rarity : a.net < b.net;
  });
  if (eligible.size() < trigger_width)
    throw Error("inject_trojan: fewer than " + std::to_string(trigger_width) +
                " nets below rarity threshold " + std::to_string(opts.rarity_threshold));

  // Victim candidates: taps on gate-driven nets.
  std::vector<VictimEdge> victims;
  for (size_t gi = 0; gi < netlist.gates.size(); ++gi) {
    for (size_t s = 0; s < netlist.gates[gi].inputs.size(); ++s) {
      const std::string& v = netlist.gates[gi].inputs[s];
      if (drivers.count(v)) victims.push_back({v, false, gi, s, 0});
    }
  }
  for (size_t oi = 0; oi < netlist.outputs.size(); ++oi) {
    const std::string& v = netlist.outputs[oi];
    auto it = drivers.find(v);
    if (it == drivers.end()) continue;
    if (netlist.gates[it->second].kind == GateKind::DFF) continue;  // renaming would move the frame interface
    victims.push_back({v, true, 0, 0, oi});
  }
  if (victims.empty()) throw Error("inject_trojan: no internal victim nets");

  const size_t k = sim.frame_input_count();

  // Exact satisfying tables fit comfortably up to 2^20 lanes; wider
  // frames use witness-lane sampling instead. The exact-probability limit
  // matches the certificate bound; the seeded batch recount below stays
  // the binding check.
  const double joint_limit =
      static_cast<double>(opts.rarity_fire_max) / static_cast<double>(opts.rarity_vectors);
  std::optional<ExactTriggerPicker> exact_picker;
  if (k <= 20) exact_picker.emplace(sim, eligible, opts.rarity_threshold, joint_limit);

  // With exact tables and narrow triggers, every qualifying set is known
  // up front; the attempt loop walks them in seeded order.
  std::vector<TriggerPick> queue;
  size_t queue_pos = 0;
  if (exact_picker) queue = exact_picker->enumerate_all(trigger_width, rng);

  std::unordered_set<std::string> rejected;
  const size_t budget = std::max(opts.retry_budget, queue.size());
  for (size_t attempt = 0; attempt < budget; ++attempt) {
    std::optional<TriggerPick> pick;
    if (!queue.empty()) {
      if (queue_pos >= queue.size()) break;
      pick = queue[queue_pos++];
    } else if (exact_picker) {
      pick = exact_picker->attempt(trigger_width, rng, rejected);
    } else {
      pick = sampled_trigger_attempt(sim, eligible, opts.rarity_threshold, trigger_width, rng);
    }
    if (!pick) continue;
    if (rejected.count(trigger_key(pick->trig))) continue;
    std::vector<TriggerCandidate>& trig = pick->trig;
    std::sort(trig.begin(), trig.end(),
              [](const TriggerCandidate& a, const TriggerCandidate& b) { return a.net < b.net; });

    TriggerEval te;
    te.sim = &sim;
    for (const TriggerCandidate& t : trig) {
      te.literal_net.push_back(sim.net_index(t.net));
      te.polarity.push_back(t.polarity);
    }

    // Joint rarity certificate. The batch seed is re-derived per attempt:
    // with the exact-probability filter the true firing rate is already
    // under the bound, and a fresh batch keeps one unlucky sample from
    // vetoing every candidate in a correlated rare region.
    const uint64_t rarity_seed = derive_seed(seed, 0x52415245, attempt);
    uint64_t fire_count = 0;
    {
      const uint64_t n_blocks = (opts.rarity_vectors + 63) / 64;
      std::vector<uint64_t> in_words(k), net_words;
      for (uint64_t block = 0; block < n_blocks; ++block) {
        uint64_t lane_mask = ~0ULL;
        if ((block + 1) * 64 > opts.rarity_vectors) {
          uint64_t tail = opts.rarity_vectors - block * 64;
          lane_mask = (tail == 64) ? ~0ULL : ((1ULL << tail) - 1);
        }
        for (size_t i = 0; i < k; ++i) in_words[i] = random_input_word(rarity_seed, block, i, k);
        sim.eval_words(in_words, net_words);
        fire_count += std::popcount(te.fire_mask(net_words) & lane_mask);
      }
    }
    if (fire_count > opts.rarity_fire_max) {
      rejected.insert(trigger_key(trig));
      continue;
    }

    FrameAssignment fa;
    for (size_t i = 0; i < k; ++i) fa[sim.frame_input_names()[i]] = pick->witness[i];
    auto anchor_outs = simulate_frame_outputs(netlist, fa);

    std::unordered_set<std::string> trigger_names;
    for (const TriggerCandidate& t : trig) trigger_names.insert(t.net);

    // Try victim taps in seeded random order under this assignment.
    std::vector<size_t> victim_order = rng.permutation(victims.size());
    for (size_t vo : victim_order) {
      const VictimEdge& ve = victims[vo];
      if (ve.is_po && trigger_names.count(ve.victim)) continue;
      if (!ve.is_po && netlist.gates[ve.gate_index].kind != GateKind::DFF) {
        auto reach = comb_fanout(netlist, netlist.gates[ve.gate_index].output);
        bool cycle = reach.count(ve.victim) > 0;
        for (const std::string& t : trigger_names)
          if (reach.count(t)) cycle = true;
        if (cycle) continue;
      }

      // Build the trojaned netlist.
      Netlist tj = netlist;
      auto taken = all_net_names(tj);
      size_t fresh_counter = 0;
      TrojanInfo info;
      info.trigger_width = trigger_width;
      info.payload_net = ve.victim;
      info.rarity_seed = rarity_seed;
      info.rarity_vectors = opts.rarity_vectors;
      info.fire_count = fire_count;

      std::vector<std::string> literal_nets;
      for (const TriggerCandidate& t : trig) {
        info.trigger_nets.push_back(t.net);
        info.trigger_polarity.push_back(t.polarity);
        if (t.polarity) {
          literal_nets.push_back(t.net);
        } else {
          std::string ln = fresh_net(taken, "_tjn", fresh_counter);
          tj.gates.push_back({ln, GateKind::NOT, {t.net}});
          info.inserted_gates.push_back(ln);
          literal_nets.push_back(ln);
        }
      }
      std::string trig_out = fresh_net(taken, "_tja", fresh_counter);
      tj.gates.push_back({trig_out, GateKind::AND, literal_nets});
      info.inserted_gates.push_back(trig_out);

      if (ve.is_po) {
        // Keep the output name: the old driver moves to a fresh net, all
        // other consumers follow it, and the XOR takes over the name.
        size_t di = tj.driver_index().at(ve.victim);
        std::string pre = fresh_net(taken, "_tjp", fresh_counter);
        tj.gates[di].output = pre;
        for (Gate& g : tj.gates)
          for (std::string& in : g.inputs)
            if (in == ve.victim) in = pre;
        tj.gates.push_back({ve.victim, GateKind::XOR, {pre, trig_out}});
        info.inserted_gates.push_back(ve.victim);
      } else {
        std::string tap = fresh_net(taken, "_tjx", fresh_counter);
        tj.gates.push_back({tap, GateKind::XOR, {ve.victim, trig_out}});
        info.inserted_gates.push_back(tap);
        tj.gates[ve.gate_index].inputs[ve.slot] = tap;
      }
      if (!validate(tj).empty()) continue;

      auto tj_outs = simulate_frame_outputs(tj, fa);
      std::string flipped;
      for (const auto& [name, val] : anchor_outs) {
        auto it = tj_outs.find(name);
        if (it != tj_outs.end() && it->second != val) {
          flipped = name;
          break;
        }
      }
      if (flipped.empty()) continue;

      info.distinguishing = fa;
      info.flipped_output = flipped;
      return {std::move(tj), std::move(info)};
    }
  }
  throw Error("inject_trojan: no victim with observable effect found after " +
              std::to_string(opts.retry_budget) + " retries");
}

const char* sample_role_name(SampleRole r) {
  switch (r) {
    case SampleRole::Anchor: return "anchor";
    case SampleRole::Positive: return "pos";
    case SampleRole::Negative: return "neg";
  }
  return "?";
}

namespace {

EqOptions certification_mode(const Netlist& anchor, uint64_t cert_vectors, uint64_t seed) {
  EqOptions eq;
  size_t k = anchor.frame_inputs().size();
  if (k <= 12) {
    eq.exhaustive = true;
  } else {
    eq.exhaustive = false;
    eq.n_vectors = cert_vectors;
    eq.seed = seed;
  }
  return eq;
}

}  // namespace

SampleSet make_dataset(const std::vector<Netlist>& anchors, const AugmentConfig& config, uint64_t seed) {
  if (config.n_pos < 1 || config.n_neg < 1) throw Error("make_dataset: n_pos and n_neg must be >= 1");
  if (anchors.empty()) throw Error("make_dataset: no anchors");

  SampleSet set;
  const char* transforms[] = {"demorgan", "extract", "relocate"};

  // Probe which anchors can host a trigger (enough rare nets).
  std::vector<SignalProfile> profiles(anchors.size());
  std::vector<bool> injectable(anchors.size(), false);
  for (size_t ai = 0; ai < anchors.size(); ++ai) {
    profiles[ai] = random_signal_profile(anchors[ai], config.profile_vectors, derive_seed(seed, 0x50524F46, ai));
    size_t rare = 0;
    for (const auto& [net, p1] : profiles[ai].probability) {
      double rarity = std::min(p1, 1.0 - p1);
      if (rarity < config.rarity_threshold) ++rare;
    }
    injectable[ai] = rare >= config.trigger_width;
  }

  // Negative allocation per anchor, with optional reallocation away from
  // anchors that cannot host a compliant trigger.
  std::vector<size_t> neg_quota(anchors.size(), config.n_neg);
  if (config.reallocate_uninjectable) {
    std::vector<size_t> hosts;
    for (size_t ai = 0; ai < anchors.size(); ++ai)
      if (injectable[ai]) hosts.push_back(ai);
    if (hosts.empty()) throw Error("make_dataset: no anchor can host a trigger");
    size_t orphaned = 0;
    for (size_t ai = 0; ai < anchors.size(); ++ai) {
      if (!injectable[ai]) {
        orphaned += neg_quota[ai];
        neg_quota[ai] = 0;
      }
    }
    for (size_t i = 0; i < orphaned; ++i) neg_quota[hosts[i % hosts.size()]] += 1;
  }

  for (size_t ai = 0; ai < anchors.size(); ++ai) {
    const Netlist& anchor = anchors[ai];
    require_valid(anchor);
    std::string origin = anchor.name.empty() ? ("anchor" + std::to_string(ai)) : anchor.name;

    set.anchor_profiles.emplace_back(origin, profiles[ai]);

    SampleRecord arec;
    arec.id = origin;
    arec.origin = origin;
    arec.role = SampleRole::Anchor;
    arec.transform = "anchor";
    arec.seed = seed;
    arec.label = 0;
    arec.circuit = anchor;
    set.records.push_back(std::move(arec));

    // Positives: transform drawn uniformly, certified before inclusion.
    for (size_t pi = 0; pi < config.n_pos; ++pi) {
      uint64_t sample_seed = derive_seed(seed, ai * 2 + 0, pi);
      Rng rng(sample_seed);
      bool done = false;
      for (size_t retry = 0; retry < config.retry_budget && !done; ++retry) {
        size_t choice = static_cast<size_t>(rng.next_below(3));
        const char* transform = transforms[choice];
        try {
          Netlist pos;
          if (choice == 0) {
            size_t count = 1 + static_cast<size_t>(rng.next_below(config.demorgan_max_count));
            pos = demorgan_rewrite(anchor, rng.next_u64(), count);
          } else if (choice == 1) {
            size_t span = anchor.gates.size() > 3 ? anchor.gates.size() - 2 : 1;
            size_t max_nodes = 3 + static_cast<size_t>(rng.next_below(span));
            pos = extract_subcircuit(anchor, rng.next_u64(), max_nodes);
          } else {
            pos = relocate(anchor, rng.next_u64());
          }
          EqOptions eq = certification_mode(anchor, config.cert_vectors, derive_seed(sample_seed, 0x43455254));
          EqResult res = (choice == 1) ? check_cone_equivalence(anchor, pos, eq)
                                       : check_equivalence(anchor, pos, eq);
          if (!res.equivalent) continue;

          SampleRecord rec;
          rec.id = origin + "_pos" + std::to_string(pi);
          rec.origin = origin;
          rec.role = SampleRole::Positive;
          rec.transform = transform;
          rec.seed = sample_seed;
          rec.label = 0;
          rec.circuit = std::move(pos);
          rec.circuit.name = rec.id;
          set.records.push_back(std::move(rec));
          done = true;
        } catch (const Error&) {
          // transform inapplicable at this site; retry with the next draw
        }
      }
      if (!done)
        throw Error("make_dataset: could not certify a positive for '" + origin + "' within the retry budget");
    }

    // Negatives: distinct seeded injections, each verified.
    for (size_t ni = 0; ni < neg_quota[ai]; ++ni) {
      uint64_t sample_seed = derive_seed(seed, ai * 2 + 1, ni);
      InjectOptions opts;
      opts.rarity_threshold = config.rarity_threshold;
      opts.retry_budget = config.retry_budget;
      auto [tj, info] = inject_trojan(anchor, sample_seed, config.trigger_width, profiles[ai], opts);

      auto a_out = simulate_frame_outputs(anchor, info.distinguishing);
      auto t_out = simulate_frame_outputs(tj, info.distinguishing);
      if (a_out.at(info.flipped_output) == t_out.at(info.flipped_output))
        throw Error("make_dataset: distinguishing assignment failed verification");

      SampleRecord rec;
      rec.id = origin + "_neg" + std::to_string(ni);
      rec.origin = origin;
      rec.role = SampleRole::Negative;
      rec.transform = "trojan";
      rec.seed = sample_seed;
      rec.label = 1;
      rec.circuit = std::move(tj);
      rec.circuit.name = rec.id;
      rec.trojan = std::move(info);
      set.records.push_back(std::move(rec));
    }
  }
  return set;
}

std::string manifest_csv(const SampleSet& set, const std::string& bench_dir) {
  std::ostringstream out;
  out << "sample_id,origin,role,transform,seed,label,bench_path\n";
  for (const SampleRecord& r : set.records) {
    out << r.id << "," << r.origin << "," << sample_role_name(r.role) << "," << r.transform << ","
        << r.seed << "," << r.label << "," << bench_dir << "/" << r.id << ".bench\n";
  }
  return out.str();
}

}  // namespace sand
