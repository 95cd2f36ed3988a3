#include "lamina/rewrite.hpp"

#include <algorithm>
#include <vector>

namespace lamina {

namespace {

struct Hit {
  SectorId sector;
  std::size_t circuit;
  std::size_t position;
  BoundaryEntry entry;
};

std::vector<Hit> find_hits(const BranchedSurfaceComplex& b, const EdgeId& e) {
  std::vector<Hit> hits;
  for (const auto& [sid, s] : b.sectors)
    for (std::size_t c = 0; c < s.circuits.size(); ++c)
      for (std::size_t p = 0; p < s.circuits[c].size(); ++p)
        if (s.circuits[c][p].edge == e) hits.push_back({sid, c, p, s.circuits[c][p]});
  return hits;
}

// The circuit read from just after position p around to just before it.
Circuit path_after(const Circuit& c, std::size_t p) {
  Circuit out;
  for (std::size_t k = 1; k < c.size(); ++k) out.push_back(c[(p + k) % c.size()]);
  return out;
}

Orientability combine(Orientability a, Orientability b) {
  if (a == Orientability::nonorientable || b == Orientability::nonorientable) return Orientability::nonorientable;
  if (a == Orientability::unknown || b == Orientability::unknown) return Orientability::unknown;
  return Orientability::orientable;
}

// Whether identifying the arc through these two entries preserves a local orientation.
std::optional<bool> preserving(Side a, Side b) {
  if (a == Side::unknown || b == Side::unknown) return std::nullopt;
  return a == b;
}

void rename_sector(SectorImage& image, const SectorId& from, const SectorId& to) {
  for (auto& [orig, img] : image)
    if (img == from) img = to;
}

// Reading a stretch of boundary backwards also swaps which side the cusps lie on.
Circuit reversed(Circuit c) {
  std::reverse(c.begin(), c.end());
  for (auto& en : c) en.side = opposite(en.side);
  return c;
}

void erase_circuits(Sector& s, std::vector<std::size_t> idx) {
  std::sort(idx.rbegin(), idx.rend());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  for (auto i : idx) s.circuits.erase(s.circuits.begin() + static_cast<std::ptrdiff_t>(i));
}

}  // namespace

void splice_across(BranchedSurfaceComplex& b, const EdgeId& e, SectorImage& image) {
  auto hits = find_hits(b, e);
  if (hits.size() != 2)
    throw RewriteError("cannot splice across edge " + e + ": " + std::to_string(hits.size()) +
                       " sheets remain (expected 2)");
  const Hit& u = hits[0];
  const Hit& t = hits[1];
  const auto pres = preserving(u.entry.side, t.entry.side);

  if (u.sector != t.sector) {
    // Distinct sectors merge; the lower id survives.
    const SectorId keep = id_less(u.sector, t.sector) ? u.sector : t.sector;
    const SectorId gone = keep == u.sector ? t.sector : u.sector;
    const Hit& hk = keep == u.sector ? u : t;
    const Hit& hg = keep == u.sector ? t : u;
    Sector sk = b.sectors.at(keep);
    Sector sg = b.sectors.at(gone);
    if (pres == false) {
      // Reorient the absorbed sector so the identification is orientation-consistent.
      for (auto& c : sg.circuits) c = reversed(c);
    }
    const Circuit ck = sk.circuits[hk.circuit];
    const Circuit cg = sg.circuits[hg.circuit];
    const std::size_t pos_g = pres == false ? cg.size() - 1 - hg.position : hg.position;
    const Circuit pk = path_after(ck, hk.position);
    const Circuit pg = path_after(cg, pos_g);

    Sector merged;
    merged.essential_curve = sk.essential_curve || sg.essential_curve;
    merged.orientable = combine(sk.orientable, sg.orientable);
    if (!pres.has_value() && merged.orientable == Orientability::orientable) merged.orientable = Orientability::unknown;
    for (std::size_t i = 0; i < sk.circuits.size(); ++i)
      if (i != hk.circuit) merged.circuits.push_back(sk.circuits[i]);
    for (std::size_t i = 0; i < sg.circuits.size(); ++i)
      if (i != hg.circuit) merged.circuits.push_back(sg.circuits[i]);
    if (pk.empty() && pg.empty()) {
      // Two whole boundary circles glued together.
      merged.euler_char = sk.euler_char + sg.euler_char;
    } else {
      Circuit joined = pk;
      joined.insert(joined.end(), pg.begin(), pg.end());
      merged.circuits.push_back(joined);
      merged.euler_char = sk.euler_char + sg.euler_char - 1;
    }
    b.sectors.erase(gone);
    b.sectors[keep] = std::move(merged);
    rename_sector(image, gone, keep);
    return;
  }

  Sector& s = b.sectors.at(u.sector);
  Orientability orient = s.orientable;
  if (pres == false) orient = Orientability::nonorientable;
  if (!pres.has_value() && orient == Orientability::orientable) orient = Orientability::unknown;
  const bool keep_orientation = pres.value_or(true);

  if (u.circuit != t.circuit) {
    const Circuit pu = path_after(s.circuits[u.circuit], u.position);
    const Circuit pt = keep_orientation ? path_after(s.circuits[t.circuit], t.position)
                                        : reversed(path_after(s.circuits[t.circuit], t.position));
    erase_circuits(s, {u.circuit, t.circuit});
    if (pu.empty() && pt.empty()) {
      // circle to circle: euler characteristic unchanged
    } else {
      Circuit joined = pu;
      joined.insert(joined.end(), pt.begin(), pt.end());
      s.circuits.push_back(joined);
      s.euler_char -= 1;
    }
    s.orientable = orient;
    return;
  }

  // Both sheets lie on the same boundary circuit.
  const Circuit c = s.circuits[u.circuit];
  const std::size_t i = std::min(u.position, t.position);
  const std::size_t j = std::max(u.position, t.position);
  Circuit x(c.begin() + static_cast<std::ptrdiff_t>(i + 1), c.begin() + static_cast<std::ptrdiff_t>(j));
  Circuit y(c.begin() + static_cast<std::ptrdiff_t>(j + 1), c.end());
  y.insert(y.end(), c.begin(), c.begin() + static_cast<std::ptrdiff_t>(i));
  erase_circuits(s, {u.circuit});
  if (keep_orientation) {
    if (!x.empty() && !y.empty()) {
      s.circuits.push_back(x);
      s.circuits.push_back(y);
      s.euler_char -= 1;
    } else if (x.empty() != y.empty()) {
      // folding two adjacent arcs together leaves the euler characteristic alone
      s.circuits.push_back(x.empty() ? y : x);
    } else {
      s.euler_char += 1;
    }
  } else {
    y = reversed(std::move(y));
    Circuit joined = x;
    joined.insert(joined.end(), y.begin(), y.end());
    if (!joined.empty()) {
      s.circuits.push_back(joined);
      s.euler_char -= 1;
    }
  }
  s.orientable = orient;
}

VertexId fresh_vertex_id(const BranchedSurfaceComplex& b, const VertexId& base) {
  for (int k = 1;; ++k) {
    VertexId cand = base + "_" + std::to_string(k);
    if (!b.vertices.count(cand)) return cand;
  }
}

void drop_edges(BranchedSurfaceComplex& b, const std::set<EdgeId, IdLess>& doomed) {
  for (const auto& e : doomed) b.edges.erase(e);

  struct Lone {
    VertexId origin;
    EdgeEnd end;
  };
  std::vector<Lone> lone;
  std::vector<VertexId> dead;

  for (auto& [vid, v] : b.vertices) {
    std::vector<bool> alive(v.ends.size());
    std::size_t remaining = 0;
    for (std::size_t p = 0; p < v.ends.size(); ++p) {
      alive[p] = !doomed.count(v.ends[p].edge);
      remaining += alive[p];
    }
    if (remaining == v.ends.size()) continue;

    std::vector<EdgeEnd> kept;
    if (remaining == 2) {
      for (std::size_t p = 0; p < v.ends.size(); ++p)
        if (alive[p]) kept.push_back(v.ends[p]);
    } else if (remaining == 3 && v.kind == VertexKind::crossing) {
      for (std::size_t strand = 0; strand < 2; ++strand) {
        const std::size_t p0 = 2 * strand, p1 = 2 * strand + 1;
        if (alive[p0] && alive[p1]) {
          kept = {v.ends[p0], v.ends[p1]};
        } else if (alive[p0] || alive[p1]) {
          lone.push_back({vid, v.ends[alive[p0] ? p0 : p1]});
        }
      }
    } else {
      for (std::size_t p = 0; p < v.ends.size(); ++p)
        if (alive[p]) lone.push_back({vid, v.ends[p]});
    }

    if (kept.empty()) {
      dead.push_back(vid);
      continue;
    }
    v.kind = VertexKind::subdivision;
    v.ends = kept;
    for (std::size_t port = 0; port < kept.size(); ++port)
      (*b.edges.at(kept[port].edge).endpoints)[kept[port].end] = VertexEnd{vid, static_cast<int>(port)};
  }
  for (const auto& vid : dead) b.vertices.erase(vid);

  // Dangling ends come in pairs (every edge has two ends); join them in order.
  for (std::size_t k = 0; k + 1 < lone.size(); k += 2) {
    const auto& a = lone[k];
    const auto& c = lone[k + 1];
    auto& edge_a = b.edges.at(a.end.edge);
    if (a.end.edge == c.end.edge) {
      edge_a.endpoints.reset();
      continue;
    }
    const VertexId nv = fresh_vertex_id(b, a.origin);
    b.vertices[nv] = LocusVertex{VertexKind::subdivision, {a.end, c.end}};
    (*edge_a.endpoints)[a.end.end] = VertexEnd{nv, 0};
    (*b.edges.at(c.end.edge).endpoints)[c.end.end] = VertexEnd{nv, 1};
  }
}

SectorImage excise_sector(BranchedSurfaceComplex& b, const SectorId& s) {
  SectorImage image;
  for (const auto& [sid, sec] : b.sectors)
    if (sid != s) image[sid] = sid;

  std::vector<EdgeId> boundary;
  std::set<EdgeId, IdLess> seen;
  for (const auto& c : b.sectors.at(s).circuits)
    for (const auto& en : c)
      if (!en.is_free() && seen.insert(*en.edge).second) boundary.push_back(*en.edge);
  b.sectors.erase(s);
  for (const auto& e : boundary) splice_across(b, e, image);
  drop_edges(b, seen);

  std::vector<std::pair<SectorId, SectorId>> bubbles;
  for (const auto& [x, y] : b.confirmed_bubbles) {
    if (!image.count(x) || !image.count(y)) continue;
    const auto& ix = image[x];
    const auto& iy = image[y];
    if (ix != iy) bubbles.emplace_back(id_less(ix, iy) ? ix : iy, id_less(ix, iy) ? iy : ix);
  }
  b.confirmed_bubbles = bubbles;
  b.reindex();
  return image;
}

void require_valid_after_rewrite(const BranchedSurfaceComplex& b, const std::string& op) {
  auto v = validate(b);
  for (const auto& x : v)
    if (x.code == "sphere_sector") throw RewriteError(op + " would create a sphere sector (" + x.ids.front() + ")");
  if (!v.empty()) throw InvalidComplex(std::move(v));
}

}  // namespace lamina
