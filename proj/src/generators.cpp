#include "lamina/generators.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <tuple>
#include <random>
#include <string>

namespace lamina::gen {

namespace {

BoundaryEntry at(const EdgeId& e, Slot slot, Side side = Side::left) { return BoundaryEntry{e, slot, side}; }

Sector disk(Circuit c) {
  Sector s;
  s.circuits = {std::move(c)};
  return s;
}

Sector annulus(std::vector<Circuit> cs, bool essential) {
  Sector s;
  s.euler_char = 0;
  s.circuits = std::move(cs);
  s.essential_curve = essential;
  return s;
}

BranchedSurfaceComplex finish(BranchedSurfaceComplex b) {
  b.reindex();
  require_valid(b);
  return b;
}

std::string edge_name(int i) { return "E" + std::to_string(i); }

// Subdivision vertices v1..vk on a circle; E_i runs from v_i to v_{i+1}.
void circle_locus(BranchedSurfaceComplex& b, int k) {
  for (int i = 1; i <= k; ++i) {
    const int next = i % k + 1;
    LocusEdge e;
    e.endpoints = std::array<VertexEnd, 2>{VertexEnd{"v" + std::to_string(i), 1}, VertexEnd{"v" + std::to_string(next), 0}};
    b.edges[edge_name(i)] = e;
  }
  for (int i = 1; i <= k; ++i) {
    const int prev = (i + k - 2) % k + 1;
    b.vertices["v" + std::to_string(i)] = LocusVertex{VertexKind::subdivision, {{edge_name(prev), 1}, {edge_name(i), 0}}};
  }
}

void necklace_disks(BranchedSurfaceComplex& b, int k) {
  for (int i = 1; i <= k; ++i) {
    const int prev = (i + k - 2) % k + 1;
    b.sectors["D" + std::to_string(i)] =
        disk({at(edge_name(prev), Slot::sink), at(edge_name(i), Slot::source_through)});
  }
}

Circuit necklace_tail_circuit(int k) {
  Circuit c;
  for (int i = 1; i <= k; ++i) c.push_back(at(edge_name(i), Slot::source_merge));
  return c;
}

void require_k(int k) {
  if (k < 2) throw GeneratorError("necklace length must be at least 2, got " + std::to_string(k));
}

}  // namespace

BranchedSurfaceComplex disk_sink() {
  BranchedSurfaceComplex b;
  b.name = "disk_sink";
  b.sectors["S"] = disk({at("c", Slot::sink)});
  b.sectors["W"] = annulus({{at("c", Slot::source_through)}, {at("c", Slot::source_merge, Side::right)}}, true);
  b.edges["c"] = LocusEdge{};
  return finish(std::move(b));
}

BranchedSurfaceComplex pita() {
  BranchedSurfaceComplex b;
  b.name = "pita";
  b.sectors["D1"] = disk({at("e", Slot::source_through)});
  b.sectors["D2"] = disk({at("e", Slot::source_merge, Side::right)});
  b.sectors["E"] = annulus({{at("e", Slot::sink)}, {BoundaryEntry::free_arc()}}, false);
  b.edges["e"] = LocusEdge{};
  return finish(std::move(b));
}

BranchedSurfaceComplex bubble_over_sink() {
  BranchedSurfaceComplex b;
  b.name = "bubble_over_sink";
  b.sectors["S"] = annulus({{at("c", Slot::sink)}, {at("b", Slot::sink)}}, false);
  b.sectors["W"] = annulus({{at("c", Slot::source_through)}, {at("c", Slot::source_merge, Side::right)}}, true);
  b.sectors["D1"] = disk({at("b", Slot::source_through)});
  b.sectors["D2"] = disk({at("b", Slot::source_merge, Side::right)});
  b.edges["b"] = LocusEdge{};
  b.edges["c"] = LocusEdge{};
  b.confirmed_bubbles = {{"D1", "D2"}};
  return finish(std::move(b));
}

BranchedSurfaceComplex necklace(int k) {
  require_k(k);
  BranchedSurfaceComplex b;
  b.name = "necklace" + std::to_string(k);
  necklace_disks(b, k);
  b.sectors["T"] = annulus({necklace_tail_circuit(k), {BoundaryEntry::free_arc()}}, true);
  circle_locus(b, k);
  return finish(std::move(b));
}

BranchedSurfaceComplex necklace_all_disk(int k) {
  require_k(k);
  BranchedSurfaceComplex b;
  b.name = "necklace_all_disk" + std::to_string(k);
  necklace_disks(b, k);
  b.sectors["T"] = disk(necklace_tail_circuit(k));
  circle_locus(b, k);
  return finish(std::move(b));
}

BranchedSurfaceComplex coherent_mobius(int k) {
  auto b = necklace(k);
  b.name = "coherent_mobius" + std::to_string(k);
  // D1 is entered through the sink slot of E_k; flipping that side makes the core twist once.
  b.sectors.at("D1").circuits[0][0].side = Side::right;
  return finish(std::move(b));
}

BranchedSurfaceComplex closed_surface(int genus) {
  if (genus < 1) throw GeneratorError("closed sector genus must be at least 1");
  BranchedSurfaceComplex b;
  b.name = "closed_genus" + std::to_string(genus);
  Sector s;
  s.euler_char = 2 - 2 * genus;
  s.essential_curve = true;
  b.sectors["F"] = s;
  return finish(std::move(b));
}

namespace {

struct Rng {
  std::mt19937_64 engine;
  bool coin(double p) { return std::bernoulli_distribution(p)(engine); }
  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine); }
  template <class V>
  auto& pick(V& v) { return v[static_cast<std::size_t>(uniform(0, static_cast<int>(v.size()) - 1))]; }
};

// Closed loops plus crossings/subdivisions over the remaining edge ends.
void random_locus(BranchedSurfaceComplex& b, int n_edges, Rng& rng, int& vcount) {
  std::vector<EdgeEnd> ends;
  for (int i = 1; i <= n_edges; ++i) {
    const auto e = "e" + std::to_string(i);
    b.edges[e] = LocusEdge{};
    if (!rng.coin(0.3)) {
      b.edges[e].endpoints = std::array<VertexEnd, 2>{};
      ends.push_back({e, 0});
      ends.push_back({e, 1});
    }
  }
  std::shuffle(ends.begin(), ends.end(), rng.engine);
  for (std::size_t k = 0; k < ends.size();) {
    const std::size_t take = (ends.size() - k >= 4 && rng.coin(0.35)) ? 4 : 2;
    const VertexId vid = "v" + std::to_string(++vcount);
    LocusVertex v{take == 4 ? VertexKind::crossing : VertexKind::subdivision, {}};
    for (std::size_t p = 0; p < take; ++p) {
      const auto& end = ends[k + p];
      v.ends.push_back(end);
      (*b.edges[end.edge].endpoints)[static_cast<std::size_t>(end.end)] = VertexEnd{vid, static_cast<int>(p)};
    }
    b.vertices[vid] = v;
    k += take;
  }
}

constexpr Slot kSlots[3] = {Slot::sink, Slot::source_through, Slot::source_merge};

// Each (edge, slot) sheet strip is joined to another strip at both of its ends;
// following the joins yields closed boundary walks.
struct Stub {
  EdgeId edge;
  int slot;
  int end;
  bool operator<(const Stub& o) const { return std::tie(edge, slot, end) < std::tie(o.edge, o.slot, o.end); }
};

std::map<Stub, Stub> join_stubs(const BranchedSurfaceComplex& b, Rng& rng) {
  std::map<Stub, Stub> joined;
  for (const auto& [vid, v] : b.vertices) {
    if (v.kind == VertexKind::subdivision) {
      // Smooth continuation: sink to sink, sources to sources.
      const auto& a = v.ends[0];
      const auto& c = v.ends[1];
      const bool swap = rng.coin(0.5);
      const int to[3] = {0, swap ? 2 : 1, swap ? 1 : 2};
      for (int k = 0; k < 3; ++k) {
        const Stub x{a.edge, k, a.end}, y{c.edge, to[k], c.end};
        joined[x] = y;
        joined[y] = x;
      }
      continue;
    }
    // Crossing: pair stubs of distinct edge ends at random.
    for (;;) {
      std::vector<Stub> stubs;
      for (const auto& end : v.ends)
        for (int k = 0; k < 3; ++k) stubs.push_back({end.edge, k, end.end});
      std::shuffle(stubs.begin(), stubs.end(), rng.engine);
      bool ok = true;
      for (std::size_t i = 0; i < stubs.size(); i += 2)
        ok &= !(stubs[i].edge == stubs[i + 1].edge && stubs[i].end == stubs[i + 1].end);
      if (!ok) continue;
      for (std::size_t i = 0; i < stubs.size(); i += 2) {
        joined[stubs[i]] = stubs[i + 1];
        joined[stubs[i + 1]] = stubs[i];
      }
      break;
    }
  }
  return joined;
}

// Each (edge, slot) sheet strip is joined to another strip at both of its
// ends; following the joins yields closed boundary walks. A walk that meets a
// strip from both ends is not the boundary of a surface, so such joins are redrawn.
std::vector<Circuit> walk_circuits(const BranchedSurfaceComplex& b, Rng& rng, const std::function<Side()>& side) {
  for (;;) {
    const auto joined = join_stubs(b, rng);
    std::vector<Circuit> out;
    std::set<std::pair<EdgeId, int>> used;
    bool ok = true;
    for (const auto& [eid, e] : b.edges) {
      for (int k = 0; k < 3 && ok; ++k) {
        if (used.count({eid, k})) continue;
        Circuit c;
        EdgeId cur = eid;
        int slot = k, enter = 0;
        for (;;) {
          if (!used.insert({cur, slot}).second) {
            ok = false;
            break;
          }
          // Sides follow the walk: equal sides across an edge mean opposite traversal.
          Side sd = ((enter == 0) != (slot == 0)) ? Side::left : Side::right;
          if (side() == Side::unknown) sd = Side::unknown;
          c.push_back(at(cur, kSlots[slot], sd));
          if (b.edges.at(cur).closed_loop()) break;
          const Stub next = joined.at(Stub{cur, slot, 1 - enter});
          if (next.edge == eid && next.slot == k) {
            ok = next.end == 0;
            break;
          }
          cur = next.edge;
          slot = next.slot;
          enter = next.end;
        }
        out.push_back(std::move(c));
      }
    }
    if (ok) return out;
  }
}

}  // namespace

BranchedSurfaceComplex random(std::uint64_t seed, int size, const RandomOptions& opts) {
  if (size < 1 || size > kRandomSizeCap)
    throw GeneratorError("random size must be in [1, " + std::to_string(kRandomSizeCap) + "]");
  Rng rng{std::mt19937_64(seed)};
  auto pick_side = [&] {
    if (opts.allow_unknown && rng.coin(0.05)) return Side::unknown;
    return rng.coin(0.5) ? Side::left : Side::right;
  };

  const bool bubble = size >= 3 && rng.coin(opts.bubble_chance);
  const int cap = std::min(size - (bubble ? 2 : 0), opts.max_sectors);
  int n_sectors = rng.uniform(1, cap);
  const int n_edges = rng.uniform(std::max(1, (n_sectors + 2) / 3), std::max(opts.max_edges, (n_sectors + 2) / 3));

  BranchedSurfaceComplex b;
  b.name = "random_" + std::to_string(seed) + "_" + std::to_string(size);
  int vcount = 0;
  random_locus(b, n_edges, rng, vcount);

  std::vector<std::vector<Circuit>> grouped;
  if (opts.walks) {
    auto circuits = walk_circuits(b, rng, pick_side);
    std::shuffle(circuits.begin(), circuits.end(), rng.engine);
    n_sectors = opts.all_disk ? static_cast<int>(circuits.size()) : std::min<int>(n_sectors, static_cast<int>(circuits.size()));
    if (n_sectors > cap) throw GeneratorError("walk decomposition has more circuits than the sector cap");
    grouped.resize(static_cast<std::size_t>(n_sectors));
    for (std::size_t i = 0; i < circuits.size(); ++i) {
      auto& g = i < grouped.size() ? grouped[i] : rng.pick(grouped);
      g.push_back(std::move(circuits[i]));
    }
  } else {
    std::vector<BoundaryEntry> entries;
    for (const auto& [eid, e] : b.edges)
      for (auto slot : kSlots) entries.push_back(at(eid, slot, pick_side()));
    std::shuffle(entries.begin(), entries.end(), rng.engine);
    // Each sector gets at least one entry in all-disk mode; elsewhere closed sectors are allowed.
    std::vector<std::vector<BoundaryEntry>> owned(static_cast<std::size_t>(n_sectors));
    std::size_t next = 0;
    if (opts.all_disk)
      for (auto& o : owned) o.push_back(entries[next++]);
    for (; next < entries.size(); ++next) rng.pick(owned).push_back(entries[next]);
    for (auto& own : owned) {
      if (opts.all_disk) {
        grouped.push_back({own});
        continue;
      }
      const int nc = own.empty() ? 0 : rng.uniform(1, std::min<int>(3, static_cast<int>(own.size())));
      std::vector<Circuit> cs(static_cast<std::size_t>(nc));
      for (std::size_t j = 0; j < own.size(); ++j)
        (j < cs.size() ? cs[j] : rng.pick(cs)).push_back(own[j]);
      if (opts.allow_free)
        for (auto& c : cs)
          if (rng.coin(0.15)) c.insert(c.begin() + rng.uniform(0, static_cast<int>(c.size())), BoundaryEntry::free_arc());
      grouped.push_back(std::move(cs));
    }
  }

  std::vector<SectorId> ids;
  for (int i = 1; i <= n_sectors; ++i) {
    const SectorId sid = "S" + std::to_string(i);
    ids.push_back(sid);
    Sector s;
    s.circuits = std::move(grouped[static_cast<std::size_t>(i - 1)]);
    if (opts.all_disk) {
      b.sectors[sid] = s;
      continue;
    }
    if (opts.allow_free && rng.coin(0.1)) s.circuits.push_back({BoundaryEntry::free_arc()});

    const int nb = static_cast<int>(s.circuits.size());
    if (nb == 1 && rng.coin(0.6)) {
      s.euler_char = 1;
    } else {
      const int r = rng.uniform(0, 9);
      if (r < 7) {
        const int genus = nb == 0 ? rng.uniform(1, 2) : rng.uniform(0, 1);
        s.euler_char = 2 - 2 * genus - nb;
        if (s.euler_char == 1) s.euler_char = -1;  // a disk was not chosen above
      } else if (r < 9 || !opts.allow_unknown) {
        s.orientable = Orientability::nonorientable;
        s.euler_char = 2 - rng.uniform(1, 2) - nb;
      } else {
        s.orientable = Orientability::unknown;
        s.euler_char = 2 - nb - rng.uniform(nb == 0 ? 1 : 0, 2);
      }
      s.essential_curve = rng.coin(0.7);
    }
    b.sectors[sid] = s;
  }

  if (bubble) {
    std::vector<SectorId> hosts;
    for (const auto& sid : ids)
      if (!b.sectors[sid].circuits.empty()) hosts.push_back(sid);
    if (!hosts.empty()) {
      const int m = rng.uniform(1, 2);
      Circuit rim_a, rim_b;
      for (int j = 0; j < m; ++j) {
        const auto e = "e" + std::to_string(n_edges + 1 + j);
        rim_a.push_back(at(e, Slot::source_through, pick_side()));
        rim_b.push_back(at(e, Slot::source_merge, pick_side()));
        auto& host = b.sectors[rng.pick(hosts)];
        auto& c = rng.pick(host.circuits);
        c.insert(c.begin() + rng.uniform(0, static_cast<int>(c.size())), at(e, Slot::sink, pick_side()));
        b.edges[e] = LocusEdge{};
      }
      if (m == 2) {
        const auto e1 = "e" + std::to_string(n_edges + 1);
        const auto e2 = "e" + std::to_string(n_edges + 2);
        const VertexId va = "v" + std::to_string(++vcount);
        const VertexId vb = "v" + std::to_string(++vcount);
        b.edges[e1].endpoints = std::array<VertexEnd, 2>{VertexEnd{va, 0}, VertexEnd{vb, 0}};
        b.edges[e2].endpoints = std::array<VertexEnd, 2>{VertexEnd{vb, 1}, VertexEnd{va, 1}};
        b.vertices[va] = LocusVertex{VertexKind::subdivision, {{e1, 0}, {e2, 1}}};
        b.vertices[vb] = LocusVertex{VertexKind::subdivision, {{e1, 1}, {e2, 0}}};
        if (rng.coin(0.5)) std::reverse(rim_b.begin(), rim_b.end());
      }
      const SectorId da = "S" + std::to_string(n_sectors + 1);
      const SectorId db = "S" + std::to_string(n_sectors + 2);
      b.sectors[da] = disk(rim_a);
      b.sectors[db] = disk(rim_b);
      if (rng.coin(0.5)) b.confirmed_bubbles = {{da, db}};
    }
  }
  return finish(std::move(b));
}

}  // namespace lamina::gen
