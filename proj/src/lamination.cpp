#include "lamina/lamination.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>

namespace lamina {

namespace {

const Rational kOne(1), kMinusOne(-1);

Rational third(long k) {
  Rational r(k, 3);
  r.canonicalize();
  return r;
}

HoloMap identity() { return HoloMap(); }

}  // namespace

// ---------------------------------------------------------------------------
// Annulus laminations

namespace {

std::vector<std::string> fiber_problems(const std::vector<FiberElement>& fibers) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < fibers.size(); ++i) {
    const auto& f = fibers[i];
    const std::string where = "element " + std::to_string(i) + " (" + f.label + ")";
    if (f.lo > f.hi) out.push_back(where + " has lo > hi");
    if (f.lo < kMinusOne || f.hi > kOne) out.push_back(where + " leaves [-1, 1]");
    if (i > 0 && !(fibers[i - 1].hi < f.lo)) out.push_back(where + " overlaps or precedes its predecessor");
  }
  return out;
}

std::vector<Spiral> derive_spirals(const std::vector<FiberElement>& fibers, const HoloMap& f) {
  std::vector<Spiral> out;
  const auto moved = moved_intervals(f);
  for (std::size_t i = 0; i < fibers.size(); ++i) {
    if (fibers[i].is_point()) continue;
    for (const auto& m : moved)
      if (fibers[i].lo <= m.lo && m.hi <= fibers[i].hi) out.push_back({i, m.lo, m.hi, m.sign});
  }
  return out;
}

}  // namespace

AnnulusLamination make_annulus_lamination(std::vector<FiberElement> fibers, HoloMap return_map) {
  for (auto& f : fibers) {
    f.lo.canonicalize();
    f.hi.canonicalize();
  }
  AnnulusLamination mu{std::move(fibers), std::move(return_map), {}};
  if (!mu.return_map.is_exact()) throw LaminationError("return map must be an exact PL map");
  mu.spirals = derive_spirals(mu.fibers, mu.return_map);
  if (auto p = lamination_problems(mu); !p.empty()) throw LaminationError(p.front());
  return mu;
}

std::vector<std::string> lamination_problems(const AnnulusLamination& mu) {
  auto out = fiber_problems(mu.fibers);
  if (!mu.return_map.is_exact()) {
    out.push_back("return map is not exact");
    return out;
  }
  for (std::size_t i = 0; i < mu.fibers.size(); ++i) {
    const auto& e = mu.fibers[i];
    if (apply_exact(mu.return_map, e.lo) != e.lo || apply_exact(mu.return_map, e.hi) != e.hi)
      out.push_back("return map does not preserve element " + std::to_string(i) + " (" + e.label + ")");
  }
  if (out.empty() && derive_spirals(mu.fibers, mu.return_map) != mu.spirals)
    out.push_back("spiral annotations do not match the return map");
  for (const auto& s : mu.spirals) {
    if (s.element >= mu.fibers.size()) {
      out.push_back("spiral refers to a missing element");
      continue;
    }
    if (apply_exact(mu.return_map, s.from) != s.from || apply_exact(mu.return_map, s.to) != s.to)
      out.push_back("spiral limit is not a fixed point");
  }
  return out;
}

bool same_lamination(const AnnulusLamination& a, const AnnulusLamination& b) {
  return a.fibers == b.fibers && same_function(a.return_map, b.return_map) && a.spirals == b.spirals;
}

// ---------------------------------------------------------------------------
// Tracks and regluing

std::string to_string(AttachPattern p) {
  switch (p) {
    case AttachPattern::plain: return "plain";
    case AttachPattern::one_corner: return "one_corner";
    case AttachPattern::two_corners: return "two_corners";
  }
  return "?";
}

std::string to_string(TailSide s) {
  switch (s) {
    case TailSide::above: return "above";
    case TailSide::below: return "below";
    case TailSide::unknown: return "unknown";
  }
  return "?";
}

int fiber_points(const BoundaryTrainTrack& t, const TrackSite& at) {
  if (at.circle >= t.circles.size() || at.position >= t.circles[at.circle].size())
    throw LaminationError("track site outside the track of " + t.sector);
  const auto& p = t.circles[at.circle][at.position];
  return p.edge && p.slot == Slot::sink ? 2 : 1;
}

std::pair<AnnulusLamination, CutRecord> reglue_to_circles(const AnnulusLamination& mu, const BoundaryTrainTrack& track) {
  if (auto p = lamination_problems(mu); !p.empty()) throw LaminationError("not a lamination: " + p.front());
  if (!track.puncture) throw LaminationError("track of " + track.sector + " has no puncture");
  const int n = fiber_points(track, *track.puncture);
  if (n != 1)
    throw LaminationError("puncture fiber of " + track.sector + " meets the track in " + std::to_string(n) + " points");
  return {make_annulus_lamination(mu.fibers, identity()), CutRecord{*track.puncture, mu.return_map}};
}

AnnulusLamination unreglue(const AnnulusLamination& mu, const CutRecord& record) {
  return make_annulus_lamination(mu.fibers, simplify(compose(record.cut, mu.return_map)));
}

// ---------------------------------------------------------------------------
// Collar

namespace {

AttachPattern pattern_of(const BranchedSurfaceComplex& b, const EdgeId& e) {
  const auto& edge = b.edges.at(e);
  if (edge.closed_loop()) return AttachPattern::plain;
  int corners = 0;
  for (const auto& end : *edge.endpoints)
    if (b.vertices.at(end.vertex).kind == VertexKind::crossing) ++corners;
  return corners == 0 ? AttachPattern::plain : corners == 1 ? AttachPattern::one_corner : AttachPattern::two_corners;
}

int switch_of(Side s) { return s == Side::left ? 1 : s == Side::right ? -1 : 0; }

BoundaryTrainTrack sector_track(const BranchedSurfaceComplex& b, const SectorId& id, const Sector& s) {
  BoundaryTrainTrack t;
  t.sector = id;
  for (std::size_t c = 0; c < s.circuits.size(); ++c) {
    std::vector<TrackPosition> circle;
    for (std::size_t p = 0; p < s.circuits[c].size(); ++p) {
      const auto& e = s.circuits[c][p];
      circle.push_back({e.edge, e.slot, e.side});
      if (e.edge && e.slot == Slot::sink)
        t.tails.push_back({c, p, *e.edge, pattern_of(b, *e.edge), switch_of(e.side), TailSide::unknown});
      if (e.edge && is_source(e.slot) && !t.puncture) t.puncture = TrackSite{c, p};
    }
    t.circles.push_back(std::move(circle));
  }
  return t;
}

// Edges joined through subdivision vertices form one arc of the collar's locus;
// crossings cut them apart.
std::vector<LocusArc> locus_arcs(const BranchedSurfaceComplex& b) {
  std::vector<EdgeId> ids;
  for (const auto& [id, e] : b.edges) ids.push_back(id);
  std::map<EdgeId, std::size_t, IdLess> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;
  // neighbour[i][end] = (edge, end) across a subdivision vertex
  std::vector<std::array<std::optional<std::pair<std::size_t, int>>, 2>> next(ids.size());
  for (const auto& [vid, v] : b.vertices) {
    if (v.kind != VertexKind::subdivision || v.ends.size() != 2) continue;
    const auto& x = v.ends[0];
    const auto& y = v.ends[1];
    next[index.at(x.edge)][static_cast<std::size_t>(x.end)] = std::pair{index.at(y.edge), y.end};
    next[index.at(y.edge)][static_cast<std::size_t>(y.end)] = std::pair{index.at(x.edge), x.end};
  }
  std::vector<bool> used(ids.size(), false);
  std::vector<LocusArc> out;
  auto walk = [&](std::size_t start, int leave) {
    LocusArc arc;
    std::size_t cur = start;
    while (true) {
      used[cur] = true;
      arc.edges.push_back(ids[cur]);
      if (b.edges.at(ids[cur]).closed_loop()) {
        arc.closed = true;
        break;
      }
      const auto& nx = next[cur][static_cast<std::size_t>(leave)];
      if (!nx) break;
      if (nx->first == start) {
        arc.closed = true;
        break;
      }
      cur = nx->first;
      leave = 1 - nx->second;
    }
    out.push_back(std::move(arc));
  };
  // open arcs first, from an end that stops at a crossing
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (used[i] || b.edges.at(ids[i]).closed_loop()) continue;
    if (!next[i][0]) walk(i, 1);
    else if (!next[i][1]) walk(i, 0);
  }
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (!used[i]) walk(i, 1);
  return out;
}

}  // namespace

CollarComplex build_collar(const BranchedSurfaceComplex& b) {
  require_valid(b);
  CollarComplex c;
  for (const auto& [id, e] : b.edges)
    c.pieces.push_back({"e:" + id, false, id, {e.sink.sector, e.source_a.sector, e.source_b.sector}, {}});
  for (const auto& [id, v] : b.vertices) {
    if (v.kind != VertexKind::crossing) continue;
    std::set<SectorId, IdLess> sheets;
    std::set<EdgeId, IdLess> incident;
    for (const auto& end : v.ends) {
      incident.insert(end.edge);
      for (const auto& occ : b.occurrences(end.edge)) sheets.insert(occ.sector);
    }
    c.pieces.push_back({"v:" + id, true, id, {sheets.begin(), sheets.end()}, {incident.begin(), incident.end()}});
  }
  c.locus = locus_arcs(b);
  for (const auto& [id, s] : b.sectors) {
    c.component[id] = id + "^B";
    if (s.is_disk() || (!s.circuits.empty() && !s.has_free_boundary())) c.tracks[id] = sector_track(b, id, s);
  }
  return c;
}

std::vector<std::string> collar_problems(const BranchedSurfaceComplex& b, const CollarComplex& c) {
  std::vector<std::string> out;
  std::map<EdgeId, int, IdLess> seen;
  for (const auto& arc : c.locus) {
    std::set<EdgeId> inside(arc.edges.begin(), arc.edges.end());
    if (inside.size() != arc.edges.size()) out.push_back("locus arc repeats an edge");
    for (const auto& e : arc.edges) ++seen[e];
  }
  for (const auto& [id, e] : b.edges)
    if (seen[id] != 1) out.push_back("edge " + id + " lies on " + std::to_string(seen[id]) + " locus arcs");
  std::size_t crossings = 0;
  for (const auto& [id, v] : b.vertices) crossings += v.kind == VertexKind::crossing;
  if (c.pieces.size() != b.edges.size() + crossings) out.push_back("collar piece count differs from edges + crossings");
  std::set<std::string> images;
  for (const auto& [sid, comp] : c.component) {
    if (!b.sectors.count(sid)) out.push_back("component for unknown branch " + sid);
    images.insert(comp);
  }
  if (c.component.size() != b.sectors.size() || images.size() != b.sectors.size())
    out.push_back("branches and components are not in bijection");
  for (const auto& [sid, t] : c.tracks) {
    auto it = b.sectors.find(sid);
    if (it == b.sectors.end()) {
      out.push_back("track for unknown branch " + sid);
      continue;
    }
    const auto& s = it->second;
    if (t.circles.size() != s.circuits.size()) out.push_back("track of " + sid + " has the wrong number of circles");
    std::size_t sinks = 0;
    for (std::size_t ci = 0; ci < s.circuits.size() && ci < t.circles.size(); ++ci) {
      if (t.circles[ci].size() != s.circuits[ci].size()) out.push_back("track circle of " + sid + " has the wrong length");
      for (const auto& e : s.circuits[ci]) sinks += e.edge && e.slot == Slot::sink;
    }
    if (t.tails.size() != sinks) out.push_back("track of " + sid + " has " + std::to_string(t.tails.size()) + " tails, expected " + std::to_string(sinks));
  }
  return out;
}

CollarLamination collar_lamination(const CollarComplex& c) {
  CollarLamination lam;
  for (const auto& p : c.pieces) {
    if (p.at_vertex) continue;
    EdgeGluing g{{kMinusOne, kOne, p.locus + ".a"}, {kMinusOne, kOne, p.locus + ".b"},
                 {kMinusOne, third(-1), p.locus + ".a"}, {third(1), kOne, p.locus + ".b"},
                 standard_push(), invert(standard_push())};
    lam.gluings.emplace(p.locus, std::move(g));
  }
  return lam;
}

std::vector<std::string> fiber_scan(const CollarComplex& c, const CollarLamination& lam) {
  std::vector<std::string> out;
  std::map<std::string, std::set<SectorId>> edge_sheets;
  for (const auto& p : c.pieces) {
    if (p.at_vertex) continue;
    auto it = lam.gluings.find(p.locus);
    if (it == lam.gluings.end()) {
      for (const auto& s : p.sheets) out.push_back(p.id + ":" + s);
      continue;
    }
    const auto& g = it->second;
    if (g.block_a.is_point()) out.push_back(p.id + ":" + p.sheets[1]);
    if (g.block_b.is_point()) out.push_back(p.id + ":" + p.sheets[2]);
    const bool laid_out = g.image_a.lo == kMinusOne && g.image_a.hi < g.image_b.lo && g.image_b.hi == kOne &&
                          !g.image_a.is_point() && !g.image_b.is_point();
    if (!laid_out) out.push_back(p.id + ":" + p.sheets[0]);
    if (!g.glue_a.is_exact() || !g.glue_b.is_exact()) out.push_back(p.id + ": gluing is not exact");
    edge_sheets[p.locus].insert(p.sheets.begin(), p.sheets.end());
  }
  for (const auto& p : c.pieces) {
    if (!p.at_vertex) continue;
    std::set<SectorId> around;
    for (const auto& e : p.incident) {
      auto it = edge_sheets.find(e);
      if (it == edge_sheets.end()) out.push_back(p.id + ": edge " + e + " has no glued blocks");
      else around.insert(it->second.begin(), it->second.end());
    }
    for (const auto& s : p.sheets)
      if (!around.count(s)) out.push_back(p.id + ":" + s);
  }
  return out;
}

HoloMap position_factor(const BranchedSurfaceComplex& b, const CollarLamination& lam, const BoundaryEntry& e,
                        const Occurrence& at) {
  if (e.is_free()) return identity();
  const auto& g = lam.gluings.at(*e.edge);
  if (e.slot == Slot::sink)
    return concatenate({g.glue_a, identity(), g.glue_b}, Partition{{kMinusOne, g.image_a.hi, g.image_b.lo, kOne}});
  return b.edges.at(*e.edge).source_a == at ? g.glue_a : g.glue_b;
}

HoloMap circuit_holonomy(const BranchedSurfaceComplex& b, const CollarLamination& lam, const SectorId& s,
                         std::size_t circuit, std::size_t start) {
  const auto& c = b.sectors.at(s).circuits.at(circuit);
  HoloMap out;
  for (std::size_t k = 1; k <= c.size(); ++k) {
    const std::size_t j = (start + k) % c.size();
    out = compose(position_factor(b, lam, c[j], Occurrence{s, circuit, j}), out);
  }
  return simplify(out);
}

std::vector<BoundaryTrainTrack> core_tracks(const BranchedSurfaceComplex& b, const Cycle& cycle, const CoreAnnulus& core) {
  if (core.kind == CoreKind::unknown) throw LaminationError("core of the cycle through " + cycle.front() + " has unknown kind");
  const std::set<SectorId> members(cycle.begin(), cycle.end());
  // keep: which tails land on this circle
  auto circle_pass = [&](BoundaryTrainTrack& t, bool flipped, const std::function<bool(TailSide)>& keep) {
    if (t.circles.empty()) t.circles.emplace_back();
    auto& circle = t.circles.front();
    for (const auto& st : core.steps) {
      const auto& exit = b.entry(st.exit);
      const auto& tail = b.entry(st.tail);
      const std::size_t pos = circle.size();
      circle.push_back({st.edge, exit.slot, exit.side});
      if (members.count(st.tail.sector)) continue;
      TailSide side = TailSide::unknown;
      if (exit.side != Side::unknown && tail.side != Side::unknown)
        side = (exit.side == tail.side) != flipped ? TailSide::above : TailSide::below;
      if (keep(side)) t.tails.push_back({0, pos, st.edge, pattern_of(b, st.edge), 1, side});
    }
  };
  const std::string name = "core:" + cycle.front();
  if (core.kind == CoreKind::mobius) {
    // The boundary of the band runs twice around the core; the twist swaps the sides.
    BoundaryTrainTrack t;
    t.sector = name;
    circle_pass(t, false, [](TailSide) { return true; });
    circle_pass(t, true, [](TailSide) { return true; });
    t.puncture = TrackSite{0, 0};
    return {t};
  }
  // Circle 1 runs along the upper side, circle 2 along the lower; a tail of
  // unknown side is put on both so callers see it either way.
  std::vector<BoundaryTrainTrack> out;
  for (const TailSide s : {TailSide::above, TailSide::below}) {
    BoundaryTrainTrack t;
    t.sector = name + "/" + std::to_string(out.size() + 1);
    circle_pass(t, false, [s](TailSide x) { return x == s || x == TailSide::unknown; });
    t.puncture = TrackSite{0, 0};
    out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Annulus extension

std::string to_string(AnnulusCase c) {
  switch (c) {
    case AnnulusCase::c1a: return "1a";
    case AnnulusCase::c1b: return "1b";
    case AnnulusCase::c1c: return "1c";
    case AnnulusCase::c2a: return "2a";
    case AnnulusCase::c2b: return "2b";
  }
  return "?";
}

AnnulusCase annulus_case_from_string(const std::string& s) {
  for (auto c : {AnnulusCase::c1a, AnnulusCase::c1b, AnnulusCase::c1c, AnnulusCase::c2a, AnnulusCase::c2b})
    if (to_string(c) == s) return c;
  throw LaminationError("unknown annulus case " + s);
}

AnnulusCase classify_annulus(const LeafProfile& l1, const LeafProfile& l2, bool* swapped) {
  auto disk = [](const LeafProfile& l) {
    return l.compact_planar && !l.meets_own_j && !l.meets_other_j && !l.free_component;
  };
  if (disk(l1) || disk(l2)) throw LaminationError("a compact planar leaf with a single boundary circle is a disk leaf");
  bool swap = false;
  AnnulusCase out;
  if (!l1.compact_planar && !l2.compact_planar) {
    out = AnnulusCase::c1a;
  } else if (!l1.compact_planar || !l2.compact_planar) {
    swap = l1.compact_planar;
    const LeafProfile& planar = swap ? l1 : l2;
    out = planar.meets_other_j ? AnnulusCase::c1c : AnnulusCase::c1b;
  } else {
    auto inside_own = [](const LeafProfile& l) { return l.meets_own_j && !l.meets_other_j && !l.free_component; };
    if (inside_own(l1) && inside_own(l2)) {
      out = AnnulusCase::c2b;
    } else {
      swap = inside_own(l1);  // the leaf with a component off its own J goes first
      out = AnnulusCase::c2a;
    }
  }
  if (swapped) *swapped = swap;
  return out;
}

std::optional<Rational> interior_fixed_point(const HoloMap& f) {
  const auto& xs = f.xs();
  const auto& ys = f.ys();
  for (std::size_t i = 1; i + 1 < xs.size(); ++i)
    if (xs[i] == ys[i]) return xs[i];
  // A crossing between breakpoints.
  for (const auto& m : moved_intervals(f))
    if (m.lo > kMinusOne) return m.lo;
  return std::nullopt;
}

namespace {

const Partition kHalves{{kMinusOne, Rational(0), kOne}};

// Opens J at an interior fixed point when there is one; otherwise the new
// annulus sits against the outer edge and the second piece is absent.
std::pair<HoloMap, std::optional<HoloMap>> open_at(const HoloMap& f, const std::optional<Rational>& z) {
  if (!z) return {f, std::nullopt};
  return {restrict_to(f, kMinusOne, *z), restrict_to(f, *z, kOne)};
}

std::vector<HoloMap> present(std::initializer_list<std::optional<HoloMap>> ms) {
  std::vector<HoloMap> out;
  for (const auto& m : ms)
    if (m) out.push_back(*m);
  return out;
}

}  // namespace

AnnulusWitness annulus_extension(const HoloMap& f1, const HoloMap& f2, AnnulusCase kind) {
  if (!f1.is_exact() || !f2.is_exact()) throw LaminationError("boundary holonomies must be exact");
  AnnulusWitness w;
  w.kind = kind;
  w.f1 = f1;
  w.f2 = f2;
  switch (kind) {
    case AnnulusCase::c1a:
      w.k1 = f2;
      w.k2 = f1;
      w.j1 = f1;
      w.j2 = f2;
      break;
    case AnnulusCase::c1b:
      // The planar leaf's second boundary circle sits in J2 and carries f1^-1.
      w.k2 = f1;
      w.j1 = f1;
      w.j2 = concatenate({f2, invert(f1)}, kHalves);
      w.k1 = w.j2;
      break;
    case AnnulusCase::c1c: {
      w.split1 = interior_fixed_point(f1);
      auto [f, h] = open_at(f1, w.split1);
      const auto sol = solve_concatenation_i(f, h);
      w.g = sol.g;
      w.j1 = concatenate(present({f, sol.g, h}), sol.partition);
      w.k2 = sol.g;
      w.k1 = f2;
      w.j2 = f2;
      break;
    }
    case AnnulusCase::c2a: {
      w.split2 = interior_fixed_point(f2);
      auto [s, t] = open_at(f2, w.split2);
      const auto sol = solve_concatenation_i(s, t);
      w.g = sol.g;
      w.j2 = concatenate(present({s, sol.g, t}), sol.partition);
      w.k1 = sol.g;
      w.k2 = f1;
      w.j1 = f1;
      break;
    }
    case AnnulusCase::c2b: {
      w.split1 = interior_fixed_point(f1);
      w.split2 = interior_fixed_point(f2);
      auto [f, h] = open_at(f1, w.split1);
      auto [s, t] = open_at(f2, w.split2);
      const auto sol = solve_concatenation_ii(f, h, s, t);
      w.g = sol.g;
      w.mu = sol.mu;
      w.k1 = sol.g;
      w.j1 = concatenate(present({f, invert(sol.g), h}), sol.partition_mu);
      w.k2 = sol.mu;
      w.j2 = concatenate(present({s, invert(sol.mu), t}), sol.partition_g);
      break;
    }
  }
  return w;
}

std::vector<Rational> sample_points(int samples) {
  std::vector<Rational> out;
  const long n = std::max(2, samples / 2);
  for (long k = -n; k <= n; ++k) {
    Rational r(k, n);
    r.canonicalize();
    out.push_back(r);
  }
  // odd denominators avoid sitting on dyadic breakpoints
  const long m = std::max(2L, static_cast<long>(samples) - static_cast<long>(out.size()));
  for (long k = 1; k < m; ++k) {
    Rational r(2 * k - m, m + 1);
    r.canonicalize();
    if (r > kMinusOne && r < kOne) out.push_back(r);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Rational max_residual(const HoloMap& f, const HoloMap& g, const std::vector<Rational>& zs, const Rational& eps) {
  Rational worst = 0;
  const Rational tol = eps / 4;
  for (const auto& z : zs) {
    Rational d = evaluate(f, z, tol) - evaluate(g, z, tol);
    if (d < 0) d = -d;
    if (d > worst) worst = d;
  }
  return worst;
}

std::vector<std::string> annulus_witness_problems(const AnnulusWitness& w, const Rational& eps, int samples) {
  std::vector<std::string> out;
  const auto zs = sample_points(samples);
  auto close = [&](const HoloMap& a, const HoloMap& b, const std::string& what) {
    try {
      const Rational r = max_residual(a, b, zs, eps);
      if (r > eps) out.push_back(what + ": residual " + format_rational(r));
    } catch (const HoloError& e) {
      out.push_back(what + ": " + e.what());
    }
  };
  auto exact_eq = [&](const HoloMap& a, const HoloMap& b, const std::string& what) {
    if (!a.is_exact() || !b.is_exact() || !same_function(a, b)) out.push_back(what + " fails");
  };
  if (!w.f1.is_exact() || !w.f2.is_exact()) {
    out.push_back("side holonomies must be exact");
    return out;
  }
  // Both boundary annuli now carry the same holonomy.
  close(concatenate({w.k1, w.j1}, kHalves), concatenate({w.j2, w.k2}, kHalves), "sides disagree");

  auto opened = [&](const HoloMap& f, const std::optional<Rational>& z, const char* name)
      -> std::optional<std::pair<HoloMap, std::optional<HoloMap>>> {
    if (z && (*z <= kMinusOne || *z >= kOne || apply_exact(f, *z) != *z)) {
      out.push_back(std::string(name) + " is opened at a point it moves");
      return std::nullopt;
    }
    return open_at(f, z);
  };
  auto need = [&](const std::optional<HoloMap>& m, const char* name) -> const HoloMap* {
    if (!m) out.push_back(std::string("missing ") + name);
    return m ? &*m : nullptr;
  };
  auto concat_uniform = [](std::vector<HoloMap> ms) {
    const auto n = ms.size();
    return concatenate(std::move(ms), Partition::uniform(n));
  };
  switch (w.kind) {
    case AnnulusCase::c1a:
      if (w.split1 || w.split2 || w.g || w.mu) out.push_back("case 1a carries no extra data");
      exact_eq(w.k1, w.f2, "K1 = f2");
      exact_eq(w.k2, w.f1, "K2 = f1");
      exact_eq(w.j1, w.f1, "J1 = f1");
      exact_eq(w.j2, w.f2, "J2 = f2");
      break;
    case AnnulusCase::c1b:
      if (w.split1 || w.split2 || w.g || w.mu) out.push_back("case 1b carries no extra data");
      exact_eq(w.k2, w.f1, "K2 = f1");
      exact_eq(w.j1, w.f1, "J1 = f1");
      exact_eq(w.j2, concatenate({w.f2, invert(w.f1)}, kHalves), "J2 = f2 then f1^-1");
      exact_eq(w.k1, w.j2, "K1 = J2");
      break;
    case AnnulusCase::c1c: {
      if (w.split2 || w.mu) out.push_back("case 1c opens J1 only");
      exact_eq(w.k1, w.f2, "K1 = f2");
      exact_eq(w.j2, w.f2, "J2 = f2");
      const HoloMap* g = need(w.g, "g");
      auto p = opened(w.f1, w.split1, "J1");
      if (!g || !p) break;
      close(w.k2, *g, "K2 = g");
      close(w.j1, *g, "J1 = g");
      close(concat_uniform(present({p->first, *g, p->second})), *g, "g = [f, g, h]");
      break;
    }
    case AnnulusCase::c2a: {
      if (w.split1 || w.mu) out.push_back("case 2a opens J2 only");
      exact_eq(w.k2, w.f1, "K2 = f1");
      exact_eq(w.j1, w.f1, "J1 = f1");
      const HoloMap* g = need(w.g, "g");
      auto p = opened(w.f2, w.split2, "J2");
      if (!g || !p) break;
      close(w.k1, *g, "K1 = g");
      close(w.j2, *g, "J2 = g");
      close(concat_uniform(present({p->first, *g, p->second})), *g, "g = [sigma, g, tau]");
      break;
    }
    case AnnulusCase::c2b: {
      const HoloMap* g = need(w.g, "g");
      const HoloMap* mu = need(w.mu, "mu");
      auto p1 = opened(w.f1, w.split1, "J1");
      auto p2 = opened(w.f2, w.split2, "J2");
      if (!g || !mu || !p1 || !p2) break;
      close(w.k1, *g, "K1 = g");
      close(w.k2, *mu, "K2 = mu");
      close(w.j1, *mu, "J1 = mu");
      close(w.j2, *g, "J2 = g");
      close(concat_uniform(present({p1->first, invert(*g), p1->second})), *mu, "mu = [f, g^-1, h]");
      close(concat_uniform(present({p2->first, invert(*mu), p2->second})), *g, "g = [sigma, mu^-1, tau]");
      break;
    }
  }
  return out;
}

}  // namespace lamina
