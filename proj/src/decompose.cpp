#include "lamina/decompose.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "lamina/detect.hpp"

namespace lamina {

std::vector<EdgeId> outward_edges(const BranchedSurfaceComplex& b, const SectorId& s) {
  std::vector<EdgeId> out;
  for (const auto& [eid, e] : b.edges)
    if (e.source_a.sector == s || e.source_b.sector == s) out.push_back(eid);
  return out;
}

std::string to_string(CoreKind k) {
  switch (k) {
    case CoreKind::annulus: return "ANNULUS";
    case CoreKind::mobius: return "MOBIUS";
    case CoreKind::unknown: return "UNKNOWN";
  }
  return "?";
}

namespace {

using Mask = std::vector<bool>;

// Exact maximum packing of vertex-disjoint directed cycles. Memoized on the
// remaining vertex set; the lowest remaining vertex is either skipped or put on
// some simple cycle through it.
class Packer {
 public:
  explicit Packer(std::vector<std::vector<int>> adj) : adj_(std::move(adj)) {}

  std::vector<std::vector<int>> solve() {
    Mask all(adj_.size(), true);
    std::vector<std::vector<int>> out;
    Mask cur = all;
    while (true) {
      best(cur);
      const auto& m = memo_.at(cur);
      if (m.value == 0) break;
      // Replay the choices: skip vertices until one carries a cycle.
      if (m.cycle.empty()) {
        cur[static_cast<std::size_t>(first(cur))] = false;
        continue;
      }
      out.push_back(m.cycle);
      for (int v : m.cycle) cur[static_cast<std::size_t>(v)] = false;
    }
    return out;
  }

 private:
  struct Entry {
    int value = 0;
    std::vector<int> cycle;  // empty: the lowest vertex is skipped
  };

  static int first(const Mask& s) {
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i]) return static_cast<int>(i);
    return -1;
  }

  int best(const Mask& s) {
    if (auto it = memo_.find(s); it != memo_.end()) return it->second.value;
    const int v = first(s);
    Entry e;
    if (v >= 0) {
      Mask rest = s;
      rest[static_cast<std::size_t>(v)] = false;
      e.value = best(rest);
      for (const auto& c : cycles_through(v, s)) {
        Mask r = s;
        for (int x : c) r[static_cast<std::size_t>(x)] = false;
        const int val = 1 + best(r);
        if (val > e.value) {
          e.value = val;
          e.cycle = c;
        }
      }
    }
    memo_[s] = e;
    return e.value;
  }

  std::vector<std::vector<int>> cycles_through(int v, const Mask& s) const {
    std::vector<std::vector<int>> found;
    std::vector<int> path{v};
    Mask on(s.size(), false);
    on[static_cast<std::size_t>(v)] = true;
    std::function<void(int)> dfs = [&](int u) {
      for (int w : adj_[static_cast<std::size_t>(u)]) {
        if (w == v) {
          found.push_back(path);
        } else if (s[static_cast<std::size_t>(w)] && !on[static_cast<std::size_t>(w)]) {
          on[static_cast<std::size_t>(w)] = true;
          path.push_back(w);
          dfs(w);
          path.pop_back();
          on[static_cast<std::size_t>(w)] = false;
        }
      }
    };
    dfs(v);
    return found;
  }

  std::vector<std::vector<int>> adj_;
  std::map<Mask, Entry> memo_;
};

}  // namespace

ChainCycleDecomposition decompose_chains_cycles(const BranchedSurfaceComplex& b) {
  require_valid(b);
  if (auto sinks = find_sink_disks(b); !sinks.empty())
    throw DecompositionError("sink disk present: " + *sinks.begin());

  std::vector<SectorId> disks;
  std::map<SectorId, int, IdLess> index;
  for (const auto& [sid, s] : b.sectors)
    if (s.is_disk()) {
      index[sid] = static_cast<int>(disks.size());
      disks.push_back(sid);
    }

  std::map<SectorId, std::vector<EdgeId>, IdLess> outs;
  std::vector<std::vector<int>> adj(disks.size());
  for (std::size_t i = 0; i < disks.size(); ++i) {
    outs[disks[i]] = outward_edges(b, disks[i]);
    if (outs[disks[i]].empty())
      throw DecompositionError("disk " + disks[i] + " has no outward edge (only free or sink boundary)");
    std::set<int> targets;
    for (const auto& e : outs[disks[i]])
      if (auto it = index.find(b.edges.at(e).sink.sector); it != index.end()) targets.insert(it->second);
    adj[i].assign(targets.begin(), targets.end());
  }

  ChainCycleDecomposition d;
  auto edge_to = [&](const SectorId& from, const SectorId& to) {
    for (const auto& e : outs.at(from))
      if (b.edges.at(e).sink.sector == to) return e;
    throw DecompositionError("internal: no edge " + from + " -> " + to);
  };

  std::set<SectorId, IdLess> on_cycle;
  for (const auto& c : Packer(adj).solve()) {
    Cycle cyc;
    for (int v : c) cyc.push_back(disks[static_cast<std::size_t>(v)]);
    std::rotate(cyc.begin(), std::min_element(cyc.begin(), cyc.end(), id_less), cyc.end());
    for (std::size_t k = 0; k < cyc.size(); ++k) {
      d.out_edge[cyc[k]] = edge_to(cyc[k], cyc[(k + 1) % cyc.size()]);
      on_cycle.insert(cyc[k]);
    }
    d.cycles.push_back(std::move(cyc));
  }
  std::sort(d.cycles.begin(), d.cycles.end(),
            [](const Cycle& x, const Cycle& y) { return id_less(x.front(), y.front()); });

  // The remaining disks span no cycle (the packing is maximum), so any choice
  // of out-edges among them is acyclic; take the lowest edge id.
  std::map<SectorId, SectorId, IdLess> next;
  for (const auto& sid : disks) {
    if (on_cycle.count(sid)) continue;
    d.out_edge[sid] = outs.at(sid).front();
    next[sid] = b.edges.at(d.out_edge[sid]).sink.sector;
  }

  // Path partition of the in-forest: start at the deepest leaf each time.
  std::map<SectorId, int, IdLess> depth;
  std::function<int(const SectorId&)> depth_of = [&](const SectorId& s) -> int {
    auto nx = next.find(s);
    if (nx == next.end()) return 0;
    if (auto it = depth.find(s); it != depth.end()) return it->second;
    return depth[s] = 1 + depth_of(nx->second);
  };
  std::set<SectorId, IdLess> has_pred;
  for (const auto& [s, t] : next) {
    depth_of(s);
    if (next.count(t)) has_pred.insert(t);
  }
  std::vector<SectorId> starts;
  for (const auto& [s, t] : next) starts.push_back(s);
  std::stable_sort(starts.begin(), starts.end(),
                   [&](const SectorId& x, const SectorId& y) { return depth.at(x) > depth.at(y); });
  std::set<SectorId, IdLess> used;
  std::vector<Chain> built;
  for (const auto& s0 : starts) {
    if (used.count(s0) || has_pred.count(s0)) continue;
    Chain ch;
    SectorId cur = s0;
    while (next.count(cur) && !used.count(cur)) {
      ch.disks.push_back(cur);
      used.insert(cur);
      cur = next.at(cur);
    }
    ch.target = cur;
    built.push_back(std::move(ch));
  }
  // A chain only ever ends into a chain built before it; reversed build order
  // puts feeders first.
  d.chains.assign(built.rbegin(), built.rend());
  return d;
}

CoreAnnulus cycle_core(const BranchedSurfaceComplex& b, const Cycle& cycle,
                       const std::map<SectorId, EdgeId, IdLess>& out_edge) {
  if (cycle.empty()) throw DecompositionError("empty cycle");
  std::set<SectorId> seen(cycle.begin(), cycle.end());
  if (seen.size() != cycle.size()) throw DecompositionError("cycle repeats a disk");

  CoreAnnulus core;
  bool unknown = false;
  int flips = 0;
  for (std::size_t k = 0; k < cycle.size(); ++k) {
    const auto& di = cycle[k];
    const auto& dn = cycle[(k + 1) % cycle.size()];
    auto sec = b.sectors.find(di);
    if (sec == b.sectors.end() || !sec->second.is_disk()) throw DecompositionError(di + " is not a disk sector");
    auto oe = out_edge.find(di);
    if (oe == out_edge.end()) throw DecompositionError("no out-edge for " + di);
    const auto eit = b.edges.find(oe->second);
    if (eit == b.edges.end()) throw DecompositionError("unknown edge " + oe->second);
    const LocusEdge& e = eit->second;
    if (e.sink.sector != dn) throw DecompositionError("edge " + oe->second + " does not lead from " + di + " to " + dn);
    CoreStep st;
    st.edge = oe->second;
    if (e.source_a.sector == di) {
      st.exit = e.source_a;
      st.tail = e.source_b;
    } else if (e.source_b.sector == di) {
      st.exit = e.source_b;
      st.tail = e.source_a;
    } else {
      throw DecompositionError(di + " is not a source sheet of " + st.edge);
    }
    st.enter = e.sink;
    const Side a = b.entry(st.exit).side;
    const Side c = b.entry(st.enter).side;
    if (a == Side::unknown || c == Side::unknown) unknown = true;
    else if (a != c) ++flips;
    core.steps.push_back(st);
  }
  core.kind = unknown ? CoreKind::unknown : (flips % 2 ? CoreKind::mobius : CoreKind::annulus);
  return core;
}

std::optional<Cycle> all_disk_cycle_witness(const BranchedSurfaceComplex& b) {
  try {
    auto d = decompose_chains_cycles(b);
    if (d.cycles.empty()) return std::nullopt;
    return d.cycles.front();
  } catch (const DecompositionError&) {
    return std::nullopt;
  }
}

namespace {
std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}
}  // namespace

std::string export_dot(const BranchedSurfaceComplex& b, const ChainCycleDecomposition& d) {
  std::set<SectorId, IdLess> on_cycle;
  for (const auto& c : d.cycles) on_cycle.insert(c.begin(), c.end());
  std::ostringstream os;
  os << "digraph " << quoted(b.name.empty() ? "complex" : b.name) << " {\n";
  std::set<SectorId, IdLess> others;
  for (const auto& [sid, s] : b.sectors)
    if (s.is_disk())
      os << "  " << quoted(sid) << " [shape=ellipse" << (on_cycle.count(sid) ? ", style=bold" : "") << "];\n";
  for (const auto& [disk, e] : d.out_edge) {
    const auto& t = b.edges.at(e).sink.sector;
    if (!b.sectors.at(t).is_disk()) others.insert(t);
  }
  for (const auto& t : others) os << "  " << quoted(t) << " [shape=box];\n";
  for (const auto& [disk, e] : d.out_edge)
    os << "  " << quoted(disk) << " -> " << quoted(b.edges.at(e).sink.sector) << " [label=" << quoted(e) << "];\n";
  os << "}\n";
  return os.str();
}

}  // namespace lamina
