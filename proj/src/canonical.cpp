#include "lamina/canonical.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <vector>

namespace lamina {

namespace {

using Color = std::size_t;

Color hash_of(const std::string& s) { return std::hash<std::string>{}(s); }

std::string join(std::vector<std::string> parts, bool sort) {
  if (sort) std::sort(parts.begin(), parts.end());
  std::string out;
  for (const auto& p : parts) out += p + ",";
  return out;
}

// Least rotation of a cyclic word or of its reverse.
std::string cyclic_min(std::vector<std::string> word) {
  std::string best;
  bool first = true;
  for (int flip = 0; flip < 2; ++flip) {
    for (std::size_t r = 0; r < word.size(); ++r) {
      std::vector<std::string> rot(word.begin() + static_cast<std::ptrdiff_t>(r), word.end());
      rot.insert(rot.end(), word.begin(), word.begin() + static_cast<std::ptrdiff_t>(r));
      auto s = join(rot, false);
      if (first || s < best) best = s;
      first = false;
    }
    std::reverse(word.begin(), word.end());
  }
  return "(" + best + ")";
}

struct Colors {
  std::map<SectorId, Color, IdLess> sector;
  std::map<EdgeId, Color, IdLess> edge;
};

Colors refine(const BranchedSurfaceComplex& b, bool with_sides) {
  std::map<SectorId, Color, IdLess> sector_color;
  std::map<EdgeId, Color, IdLess> edge_color;
  for (const auto& [sid, s] : b.sectors)
    sector_color[sid] = hash_of(std::to_string(s.euler_char) + to_string(s.orientable) +
                                (s.essential_curve ? "E" : "-") + std::to_string(s.circuits.size()));
  for (const auto& [eid, e] : b.edges) {
    std::string ends = e.closed_loop() ? "loop" : "";
    if (!e.closed_loop())
      for (const auto& ve : *e.endpoints) ends += to_string(b.vertices.at(ve.vertex).kind) + ";";
    edge_color[eid] = hash_of(ends);
  }

  auto role = [with_sides](const BoundaryEntry& en) {
    std::string r = en.is_free() ? "F" : is_source(en.slot) ? "o" : "i";
    if (with_sides) r += to_string(en.side);
    return r;
  };

  for (int round = 0; round < 4; ++round) {
    std::map<SectorId, Color, IdLess> next_sector;
    for (const auto& [sid, s] : b.sectors) {
      std::vector<std::string> circuits;
      for (const auto& c : s.circuits) {
        std::vector<std::string> word;
        for (const auto& en : c)
          word.push_back(role(en) + (en.is_free() ? "" : std::to_string(edge_color.at(*en.edge))));
        circuits.push_back(cyclic_min(word));
      }
      next_sector[sid] = hash_of(std::to_string(sector_color.at(sid)) + "|" + join(circuits, true));
    }
    std::map<EdgeId, Color, IdLess> next_edge;
    for (const auto& [eid, e] : b.edges) {
      std::vector<std::string> nbrs;
      if (!e.closed_loop())
        for (const auto& ve : *e.endpoints) {
          std::vector<std::string> around;
          for (const auto& end : b.vertices.at(ve.vertex).ends) around.push_back(std::to_string(edge_color.at(end.edge)));
          nbrs.push_back(join(around, true));
        }
      const std::string sheets = std::to_string(sector_color.at(e.sink.sector)) + ">" +
                                 join({std::to_string(sector_color.at(e.source_a.sector)),
                                       std::to_string(sector_color.at(e.source_b.sector))},
                                      true);
      next_edge[eid] = hash_of(std::to_string(edge_color.at(eid)) + "|" + sheets + "|" + join(nbrs, true));
    }
    sector_color = std::move(next_sector);
    edge_color = std::move(next_edge);
  }
  return {sector_color, edge_color};
}

template <class Map>
std::vector<std::string> ranked(const Map& colors) {
  std::vector<std::pair<Color, std::string>> v;
  for (const auto& [id, c] : colors) v.emplace_back(c, id);
  std::sort(v.begin(), v.end(), [](const auto& x, const auto& y) {
    return x.first != y.first ? x.first < y.first : id_less(x.second, y.second);
  });
  std::vector<std::string> out;
  for (const auto& [c, id] : v) out.push_back(id);
  return out;
}

}  // namespace

std::string canonical_signature(const BranchedSurfaceComplex& b) {
  const auto [sector_color, edge_color] = refine(b, false);

  std::vector<std::string> ss, es;
  for (const auto& [sid, c] : sector_color) ss.push_back(std::to_string(c));
  for (const auto& [eid, c] : edge_color) es.push_back(std::to_string(c));
  return "S{" + join(ss, true) + "}E{" + join(es, true) + "}V" + std::to_string(b.vertices.size());
}

BranchedSurfaceComplex canonicalize(const BranchedSurfaceComplex& b) {
  const auto colors = refine(b, true);
  std::map<SectorId, SectorId> sname;
  std::map<EdgeId, EdgeId> ename;
  std::map<VertexId, VertexId> vname;
  const auto sectors = ranked(colors.sector);
  for (std::size_t i = 0; i < sectors.size(); ++i) sname[sectors[i]] = "C" + std::to_string(i + 1);
  const auto edges = ranked(colors.edge);
  for (std::size_t i = 0; i < edges.size(); ++i) ename[edges[i]] = "c" + std::to_string(i + 1);
  std::map<VertexId, Color, IdLess> vertex_color;
  for (const auto& [vid, v] : b.vertices) {
    std::string around;
    for (const auto& end : v.ends) around += ename.at(end.edge) + ".";
    vertex_color[vid] = hash_of(to_string(v.kind) + around);
  }
  const auto vertices = ranked(vertex_color);
  for (std::size_t i = 0; i < vertices.size(); ++i) vname[vertices[i]] = "w" + std::to_string(i + 1);

  BranchedSurfaceComplex out;
  out.name = b.name;
  out.assertions = b.assertions;
  for (const auto& [sid, s] : b.sectors) {
    Sector t = s;
    for (auto& c : t.circuits)
      for (auto& en : c)
        if (en.edge) en.edge = ename.at(*en.edge);
    out.sectors[sname.at(sid)] = std::move(t);
  }
  for (const auto& [eid, e] : b.edges) {
    LocusEdge f = e;
    if (f.endpoints)
      for (auto& ve : *f.endpoints) ve.vertex = vname.at(ve.vertex);
    out.edges[ename.at(eid)] = f;
  }
  for (const auto& [vid, v] : b.vertices) {
    LocusVertex w = v;
    for (auto& end : w.ends) end.edge = ename.at(end.edge);
    out.vertices[vname.at(vid)] = w;
  }
  for (const auto& [x, y] : b.confirmed_bubbles) {
    const auto a = sname.at(x), c = sname.at(y);
    out.confirmed_bubbles.emplace_back(id_less(a, c) ? a : c, id_less(a, c) ? c : a);
  }
  out.reindex();
  return out;
}

}  // namespace lamina
