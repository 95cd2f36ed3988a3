#include "lamina/complex.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace lamina {

bool id_less(const std::string& a, const std::string& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i])) != 0;
    const bool db = std::isdigit(static_cast<unsigned char>(b[j])) != 0;
    if (da && db) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      // strip leading zeros, then compare by length and lexicographically
      std::size_t is = i, js = j;
      while (is + 1 < ie && a[is] == '0') ++is;
      while (js + 1 < je && b[js] == '0') ++js;
      const auto la = ie - is, lb = je - js;
      if (la != lb) return la < lb;
      const int c = a.compare(is, la, b, js, lb);
      if (c != 0) return c < 0;
      if ((ie - i) != (je - j)) return (ie - i) < (je - j);
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  return (a.size() - i) < (b.size() - j);
}

bool Sector::has_free_boundary() const {
  for (const auto& c : circuits)
    for (const auto& e : c)
      if (e.is_free()) return true;
  return false;
}

std::vector<std::pair<std::string, Tri>> GoFlags::items() const {
  return {{"horizontal_boundary_incompressible", horizontal_boundary_incompressible},
          {"no_monogon", no_monogon},
          {"no_reeb_component", no_reeb_component},
          {"complement_irreducible", complement_irreducible},
          {"no_sphere_boundary", no_sphere_boundary}};
}

std::vector<std::string> GoFlags::missing() const {
  std::vector<std::string> out;
  for (const auto& [name, value] : items())
    if (value != Tri::asserted_true) out.push_back(name);
  return out;
}

const BoundaryEntry& BranchedSurfaceComplex::entry(const Occurrence& occ) const {
  return sectors.at(occ.sector).circuits.at(occ.circuit).at(occ.position);
}

std::array<Occurrence, 3> BranchedSurfaceComplex::occurrences(const EdgeId& e) const {
  const auto& edge = edges.at(e);
  return {edge.sink, edge.source_a, edge.source_b};
}

void BranchedSurfaceComplex::reindex() {
  std::map<EdgeId, std::vector<Occurrence>, IdLess> sinks, sources;
  for (const auto& [sid, sector] : sectors) {
    for (std::size_t c = 0; c < sector.circuits.size(); ++c) {
      for (std::size_t p = 0; p < sector.circuits[c].size(); ++p) {
        const auto& en = sector.circuits[c][p];
        if (en.is_free()) continue;
        (is_source(en.slot) ? sources : sinks)[*en.edge].push_back({sid, c, p});
      }
    }
  }
  for (auto& [eid, edge] : edges) {
    auto& sk = sinks[eid];
    auto& sr = sources[eid];
    if (sk.size() != 1 || sr.size() != 2) continue;
    edge.sink = sk[0];
    edge.source_a = sr[0];
    edge.source_b = sr[1];
  }
}

bool BranchedSurfaceComplex::is_confirmed_bubble(const SectorId& a, const SectorId& b) const {
  for (const auto& [x, y] : confirmed_bubbles)
    if ((x == a && y == b) || (x == b && y == a)) return true;
  return false;
}

namespace {

struct Collector {
  std::vector<Violation> out;
  void add(std::string code, std::string msg, std::vector<std::string> ids) {
    out.push_back({std::move(code), std::move(msg), std::move(ids)});
  }
};

std::string occ_str(const Occurrence& o) {
  std::ostringstream s;
  s << o.sector << ":" << o.circuit << ":" << o.position;
  return s.str();
}

bool occurrence_exists(const BranchedSurfaceComplex& b, const Occurrence& o) {
  auto it = b.sectors.find(o.sector);
  if (it == b.sectors.end()) return false;
  if (o.circuit >= it->second.circuits.size()) return false;
  return o.position < it->second.circuits[o.circuit].size();
}

void check_sector_topology(const SectorId& id, const Sector& s, Collector& c) {
  const int chi = s.euler_char;
  const int nb = static_cast<int>(s.circuits.size());
  if (chi >= 2) {
    c.add("sphere_sector", "sector " + id + " has euler characteristic " + std::to_string(chi) +
                               " (closed sphere sectors are not allowed)", {id});
    return;
  }
  for (std::size_t k = 0; k < s.circuits.size(); ++k) {
    if (s.circuits[k].empty())
      c.add("empty_circuit", "sector " + id + " circuit " + std::to_string(k) + " is empty", {id});
  }
  switch (s.orientable) {
    case Orientability::orientable:
      if (chi > 2 - nb || (chi + nb) % 2 != 0)
        c.add("impossible_surface",
              "no orientable surface has euler characteristic " + std::to_string(chi) + " and " +
                  std::to_string(nb) + " boundary circles (sector " + id + ")",
              {id});
      break;
    case Orientability::nonorientable:
      if (chi > 1 - nb)
        c.add("impossible_surface",
              "no nonorientable surface has euler characteristic " + std::to_string(chi) + " and " +
                  std::to_string(nb) + " boundary circles (sector " + id + ")",
              {id});
      break;
    case Orientability::unknown:
      if (chi > 2 - nb)
        c.add("impossible_surface", "sector " + id + " has too many boundary circles for its euler characteristic",
              {id});
      break;
  }
}

}  // namespace

std::vector<Violation> validate(const BranchedSurfaceComplex& b) {
  Collector c;

  for (const auto& [sid, sector] : b.sectors) check_sector_topology(sid, sector, c);

  // Circuit entries: each non-free entry names an existing edge and is referenced exactly once.
  std::map<Occurrence, int> referenced;
  for (const auto& [eid, edge] : b.edges) {
    for (const auto& o : {edge.sink, edge.source_a, edge.source_b}) referenced[o] += 1;
  }
  std::map<EdgeId, std::pair<int, int>, IdLess> slot_counts;  // (sinks, sources)
  for (const auto& [sid, sector] : b.sectors) {
    for (std::size_t ci = 0; ci < sector.circuits.size(); ++ci) {
      for (std::size_t p = 0; p < sector.circuits[ci].size(); ++p) {
        const auto& en = sector.circuits[ci][p];
        const Occurrence here{sid, ci, p};
        if (en.is_free()) {
          if (referenced.count(here))
            c.add("free_entry_referenced", "free boundary entry " + occ_str(here) + " is referenced by an edge", {sid});
          continue;
        }
        if (!b.edges.count(*en.edge)) {
          c.add("dangling_entry", "entry " + occ_str(here) + " names unknown edge " + *en.edge, {sid, *en.edge});
          continue;
        }
        auto& cnt = slot_counts[*en.edge];
        (is_source(en.slot) ? cnt.second : cnt.first) += 1;
        const int refs = referenced.count(here) ? referenced[here] : 0;
        if (refs != 1)
          c.add("entry_reference_count",
                "entry " + occ_str(here) + " is referenced " + std::to_string(refs) + " times (expected 1)",
                {sid, *en.edge});
      }
    }
  }

  for (const auto& [eid, edge] : b.edges) {
    const auto [sinks, sources] = slot_counts.count(eid) ? slot_counts[eid] : std::pair<int, int>{0, 0};
    if (sinks != 1 || sources != 2)
      c.add("edge_slot_count",
            "edge " + eid + " has " + std::to_string(sinks) + " SINK and " + std::to_string(sources) +
                " SOURCE occurrences (expected 1 and 2)",
            {eid});
    const std::array<std::pair<const Occurrence*, bool>, 3> occs{
        {{&edge.sink, false}, {&edge.source_a, true}, {&edge.source_b, true}}};
    std::set<Occurrence> distinct;
    for (const auto& [o, want_source] : occs) {
      distinct.insert(*o);
      if (!occurrence_exists(b, *o)) {
        c.add("dangling_occurrence", "edge " + eid + " references missing occurrence " + occ_str(*o), {eid, o->sector});
        continue;
      }
      const auto& en = b.entry(*o);
      if (en.is_free() || *en.edge != eid)
        c.add("occurrence_mismatch", "edge " + eid + " occurrence " + occ_str(*o) + " holds a different edge",
              {eid, o->sector});
      else if (is_source(en.slot) != want_source)
        c.add("occurrence_slot", "edge " + eid + " occurrence " + occ_str(*o) + " has the wrong slot kind",
              {eid, o->sector});
    }
    if (distinct.size() != 3) c.add("duplicate_occurrence", "edge " + eid + " lists an occurrence twice", {eid});

    if (edge.endpoints) {
      for (int end = 0; end < 2; ++end) {
        const auto& ve = (*edge.endpoints)[end];
        auto vit = b.vertices.find(ve.vertex);
        if (vit == b.vertices.end()) {
          c.add("dangling_endpoint", "edge " + eid + " ends at unknown vertex " + ve.vertex, {eid, ve.vertex});
          continue;
        }
        const auto& ends = vit->second.ends;
        if (ve.port < 0 || ve.port >= static_cast<int>(ends.size()) || ends[ve.port] != EdgeEnd{eid, end})
          c.add("asymmetric_endpoint",
                "edge " + eid + " end " + std::to_string(end) + " names port " + std::to_string(ve.port) +
                    " of vertex " + ve.vertex + " which does not list it back",
                {eid, ve.vertex});
      }
    }
  }

  for (const auto& [vid, v] : b.vertices) {
    const std::size_t want = v.kind == VertexKind::crossing ? 4 : 2;
    if (v.ends.size() != want)
      c.add("vertex_valence",
            "vertex " + vid + " (" + to_string(v.kind) + ") has " + std::to_string(v.ends.size()) + " edge-ends, expected " +
                std::to_string(want),
            {vid});
    for (std::size_t port = 0; port < v.ends.size(); ++port) {
      const auto& ee = v.ends[port];
      auto eit = b.edges.find(ee.edge);
      if (eit == b.edges.end()) {
        c.add("dangling_vertex_end", "vertex " + vid + " lists unknown edge " + ee.edge, {vid, ee.edge});
        continue;
      }
      const auto& ep = eit->second.endpoints;
      if (ee.end < 0 || ee.end > 1 || !ep ||
          (*ep)[ee.end] != VertexEnd{vid, static_cast<int>(port)})
        c.add("asymmetric_vertex_end",
              "vertex " + vid + " port " + std::to_string(port) + " lists edge " + ee.edge + " which does not end there",
              {vid, ee.edge});
    }
  }

  for (const auto& [x, y] : b.confirmed_bubbles) {
    if (!b.sectors.count(x) || !b.sectors.count(y))
      c.add("unknown_bubble_sector", "confirmed bubble names an unknown sector", {x, y});
  }
  return c.out;
}

std::vector<Violation> lint(const BranchedSurfaceComplex& b) {
  Collector c;
  for (const auto& [eid, edge] : b.edges) {
    std::set<SectorId> s{edge.sink.sector, edge.source_a.sector, edge.source_b.sector};
    if (s.size() < 3)
      c.add("self_adjacency", "edge " + eid + " has a sector occupying more than one of its slots", {eid});
  }
  // Boundary data no surface can have: a whole locus circle sharing a circuit
  // with other arcs, or a circuit turning back along the edge it just ran along.
  for (const auto& [sid, sector] : b.sectors) {
    for (const auto& circ : sector.circuits) {
      if (circ.size() < 2) continue;
      for (std::size_t i = 0; i < circ.size(); ++i) {
        const auto& x = circ[i];
        const auto& y = circ[(i + 1) % circ.size()];
        if (x.is_free() || !b.edges.count(*x.edge)) continue;
        const auto& e = b.edges.at(*x.edge);
        if (e.closed_loop()) {
          c.add("closed_loop_in_circuit", "sector " + sid + " runs along closed loop " + *x.edge + " inside a longer circuit", {sid, *x.edge});
        } else if (!y.is_free() && *y.edge == *x.edge && (*e.endpoints)[0].vertex != (*e.endpoints)[1].vertex) {
          c.add("fold_back", "sector " + sid + " turns back along " + *x.edge, {sid, *x.edge});
        }
      }
    }
  }
  for (const auto& [sid, sector] : b.sectors) {
    if (sector.orientable == Orientability::unknown)
      c.add("unknown_orientability", "sector " + sid + " has unknown orientability", {sid});
  }
  return c.out;
}

namespace {
std::string summarize(const std::vector<Violation>& v) {
  std::string s = "invalid complex";
  for (const auto& x : v) s += "\n  " + x.code + ": " + x.message;
  return s;
}
}  // namespace

InvalidComplex::InvalidComplex(std::vector<Violation> violations)
    : std::runtime_error(summarize(violations)), violations_(std::move(violations)) {}

void require_valid(const BranchedSurfaceComplex& b) {
  auto v = validate(b);
  if (!v.empty()) throw InvalidComplex(std::move(v));
}

std::string to_string(Slot s) {
  switch (s) {
    case Slot::sink: return "sink";
    case Slot::source_through: return "source_through";
    case Slot::source_merge: return "source_merge";
  }
  return "?";
}

std::string to_string(Side s) {
  switch (s) {
    case Side::left: return "left";
    case Side::right: return "right";
    case Side::unknown: return "unknown";
  }
  return "?";
}

std::string to_string(Orientability o) {
  switch (o) {
    case Orientability::orientable: return "yes";
    case Orientability::nonorientable: return "no";
    case Orientability::unknown: return "unknown";
  }
  return "?";
}

std::string to_string(Tri t) {
  switch (t) {
    case Tri::asserted_true: return "true";
    case Tri::asserted_false: return "false";
    case Tri::unknown: return "unknown";
  }
  return "?";
}

std::string to_string(VertexKind k) { return k == VertexKind::crossing ? "crossing" : "subdivision"; }

Side opposite(Side s) {
  if (s == Side::left) return Side::right;
  if (s == Side::right) return Side::left;
  return Side::unknown;
}

}  // namespace lamina
