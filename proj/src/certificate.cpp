#include "lamina/certificate.hpp"

#include <algorithm>
#include <functional>

#include "lamina/detect.hpp"
#include "lamina/io.hpp"

namespace lamina {

using nlohmann::json;

namespace {

const Rational kOne(1), kMinusOne(-1);

Rational frac(long a, long b) {
  Rational r(a, b);
  r.canonicalize();
  return r;
}

const char* const kFormat = "lamina-certificate 1";
const char* const kVerdict = "fully-carried lamination certificate, conditional on ledger";

// Malformed or inconsistent certificate data found during replay.
class Reject : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json rat(const Rational& r) { return format_rational(r); }

Rational read_rat(const json& j) {
  if (!j.is_string()) throw Reject("expected a fraction string");
  try {
    return parse_rational(j.get<std::string>());
  } catch (const std::invalid_argument&) {
    throw Reject("bad fraction '" + j.get<std::string>() + "'");
  }
}

const json& at(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Reject(std::string("missing field '") + key + "'");
  return j.at(key);
}

template <class T>
T get(const json& j, const char* key) {
  try {
    return at(j, key).get<T>();
  } catch (const json::exception&) {
    throw Reject(std::string("field '") + key + "' has the wrong type");
  }
}

HoloMap read_map(const json& j) {
  try {
    return holo_from_json(j);
  } catch (const std::exception& e) {
    throw Reject(std::string("bad holonomy map: ") + e.what());
  }
}

HoloMap read_exact(const json& j, const char* what) {
  HoloMap m = read_map(j);
  if (!m.is_exact()) throw Reject(std::string(what) + " must be an exact map");
  return m;
}

json fiber_json(const FiberElement& f) { return {{"lo", rat(f.lo)}, {"hi", rat(f.hi)}, {"label", f.label}}; }

FiberElement read_fiber(const json& j) {
  return {read_rat(at(j, "lo")), read_rat(at(j, "hi")), get<std::string>(j, "label")};
}

// Composition in traversal order: the first factor is applied first.
HoloMap product(const std::vector<HoloMap>& fs) {
  HoloMap out;
  for (const auto& f : fs) out = compose(f, out);
  return simplify(out);
}

HoloMap lazy_product(const std::vector<HoloMap>& fs) {
  HoloMap out;
  for (const auto& f : fs) out = compose(f, out);
  return out;
}

AnnulusLamination single_block(const std::string& label, const HoloMap& f) {
  return make_annulus_lamination({{kMinusOne, kOne, label}}, f);
}

// ---------------------------------------------------------------------------
// Witness serialization

json witness_json(const AnnulusWitness& w) {
  json j = {{"case", to_string(w.kind)}, {"swapped", w.swapped}, {"f1", to_json(w.f1)}, {"f2", to_json(w.f2)},
            {"k1", to_json(w.k1)},       {"k2", to_json(w.k2)},   {"j1", to_json(w.j1)}, {"j2", to_json(w.j2)}};
  j["split1"] = w.split1 ? json(rat(*w.split1)) : json(nullptr);
  j["split2"] = w.split2 ? json(rat(*w.split2)) : json(nullptr);
  j["g"] = w.g ? to_json(*w.g) : json(nullptr);
  j["mu"] = w.mu ? to_json(*w.mu) : json(nullptr);
  return j;
}

AnnulusWitness read_witness(const json& j) {
  AnnulusWitness w;
  try {
    w.kind = annulus_case_from_string(get<std::string>(j, "case"));
  } catch (const LaminationError& e) {
    throw Reject(e.what());
  }
  w.swapped = get<bool>(j, "swapped");
  w.f1 = read_map(at(j, "f1"));
  w.f2 = read_map(at(j, "f2"));
  w.k1 = read_map(at(j, "k1"));
  w.k2 = read_map(at(j, "k2"));
  w.j1 = read_map(at(j, "j1"));
  w.j2 = read_map(at(j, "j2"));
  auto opt_rat = [&](const char* k) -> std::optional<Rational> {
    if (at(j, k).is_null()) return std::nullopt;
    return read_rat(at(j, k));
  };
  auto opt_map = [&](const char* k) -> std::optional<HoloMap> {
    if (at(j, k).is_null()) return std::nullopt;
    return read_map(at(j, k));
  };
  w.split1 = opt_rat("split1");
  w.split2 = opt_rat("split2");
  w.g = opt_map("g");
  w.mu = opt_map("mu");
  return w;
}

json gluing_json(const EdgeId& e, const EdgeGluing& g) {
  return {{"edge", e},
          {"block_a", fiber_json(g.block_a)},
          {"block_b", fiber_json(g.block_b)},
          {"image_a", fiber_json(g.image_a)},
          {"image_b", fiber_json(g.image_b)},
          {"glue_a", to_json(g.glue_a)},
          {"glue_b", to_json(g.glue_b)}};
}

EdgeGluing read_gluing(const json& j) {
  return {read_fiber(at(j, "block_a")),  read_fiber(at(j, "block_b")),
          read_fiber(at(j, "image_a")),  read_fiber(at(j, "image_b")),
          read_exact(at(j, "glue_a"), "glue_a"), read_exact(at(j, "glue_b"), "glue_b")};
}

// ---------------------------------------------------------------------------
// Shared derivations: the builder and the checker both call these, so the
// checker's verdict rests on recomputation rather than on recorded values.

// The occurrence of `d` as a source sheet of `e`.
std::optional<Occurrence> source_occurrence(const BranchedSurfaceComplex& b, const SectorId& d, const EdgeId& e) {
  const auto& edge = b.edges.at(e);
  if (edge.source_a.sector == d) return edge.source_a;
  if (edge.source_b.sector == d) return edge.source_b;
  return std::nullopt;
}

// New gluing of `d`'s sheet at its puncture so that its holonomy closes up.
struct Reglue {
  Occurrence puncture;
  HoloMap before;     // holonomy read at the puncture
  HoloMap new_glue;   // replaces d's gluing at the puncture edge
  bool slot_a = true;
  SectorId touched;   // sink of the puncture edge: the other branch whose boundary changes
};

Reglue plan_reglue(const BranchedSurfaceComplex& b, const CollarLamination& lam, const SectorId& d, const EdgeId& e) {
  const auto occ = source_occurrence(b, d, e);
  if (!occ) throw LaminationError(d + " is not a source sheet of " + e);
  const auto& edge = b.edges.at(e);
  if (edge.sink.sector == d) throw LaminationError("puncture edge " + e + " of " + d + " is self-adjacent");
  Reglue r;
  r.puncture = *occ;
  r.before = circuit_holonomy(b, lam, d, occ->circuit, occ->position);
  r.slot_a = edge.source_a == *occ;
  const auto& g = lam.gluings.at(e);
  r.new_glue = simplify(compose(invert(r.before), r.slot_a ? g.glue_a : g.glue_b));
  r.touched = edge.sink.sector;
  return r;
}

void apply_reglue(CollarLamination& lam, const EdgeId& e, const Reglue& r) {
  auto& g = lam.gluings.at(e);
  (r.slot_a ? g.glue_a : g.glue_b) = r.new_glue;
}

std::vector<HoloMap> boundary_holonomies(const BranchedSurfaceComplex& b, const CollarLamination& lam, const SectorId& s) {
  std::vector<HoloMap> out;
  const auto& sec = b.sectors.at(s);
  for (std::size_t c = 0; c < sec.circuits.size(); ++c) out.push_back(circuit_holonomy(b, lam, s, c, 0));
  return out;
}

// Structural profile of the leaf that starts next to one group of boundary
// circles. Neighbors are the other sheets met along the group's edges.
LeafProfile side_profile(const BranchedSurfaceComplex& b, const SectorId& s, const std::set<EdgeId>& own,
                         const std::set<EdgeId>& other) {
  std::set<SectorId> neighbors;
  for (const auto& e : own)
    for (const auto& occ : b.occurrences(e))
      if (occ.sector != s) neighbors.insert(occ.sector);
  LeafProfile p;
  p.compact_planar = !neighbors.empty() &&
                     std::all_of(neighbors.begin(), neighbors.end(), [&](const SectorId& n) { return b.sectors.at(n).is_disk(); });
  for (const auto& n : neighbors) {
    int on_own = 0;
    for (const auto& circuit : b.sectors.at(n).circuits)
      for (const auto& entry : circuit) {
        if (entry.edge && own.count(*entry.edge)) ++on_own;
        else if (entry.edge && other.count(*entry.edge)) p.meets_other_j = true;
        else if (b.sectors.at(n).is_disk()) p.free_component = true;
      }
    if (b.sectors.at(n).is_disk() && on_own >= 2) p.meets_own_j = true;
  }
  return p;
}

std::set<EdgeId> circuit_edges(const Sector& s, std::size_t from, std::size_t to) {
  std::set<EdgeId> out;
  for (std::size_t c = from; c < to; ++c)
    for (const auto& e : s.circuits[c])
      if (e.edge) out.insert(*e.edge);
  return out;
}

struct Classified {
  AnnulusCase kind;
  bool swapped = false;
};

Classified classify_sides(const BranchedSurfaceComplex& b, const SectorId& s, std::size_t split) {
  const auto& sec = b.sectors.at(s);
  const auto side1 = circuit_edges(sec, 0, split);
  const auto side2 = circuit_edges(sec, split, sec.circuits.size());
  Classified c;
  c.kind = classify_annulus(side_profile(b, s, side1, side2), side_profile(b, s, side2, side1), &c.swapped);
  return c;
}

AnnulusWitness oriented_extension(const HoloMap& f1, const HoloMap& f2, AnnulusCase kind, bool swapped) {
  AnnulusWitness w = swapped ? annulus_extension(f2, f1, kind) : annulus_extension(f1, f2, kind);
  w.swapped = swapped;
  return w;
}

std::pair<HoloMap, HoloMap> halves_at(const HoloMap& f, const std::optional<Rational>& z) {
  if (!z) return {f, HoloMap()};
  return {restrict_to(f, kMinusOne, *z), restrict_to(f, *z, kOne)};
}

struct Topology {
  std::string route;
  int genus = 0;       // orientable routes
  int crosscaps = 0;   // nonorientable route
};

Topology nondisk_topology(const SectorId& id, const Sector& s) {
  const int n = static_cast<int>(s.circuits.size());
  Topology t;
  if (s.orientable == Orientability::unknown) throw LaminationError("orientability of " + id + " is unknown");
  const int deficit = 2 - s.euler_char - n;
  if (s.orientable == Orientability::orientable) {
    if (deficit < 0 || deficit % 2) throw LaminationError(id + " has inconsistent Euler characteristic");
    t.genus = deficit / 2;
  } else {
    if (deficit < 1) throw LaminationError(id + " has inconsistent Euler characteristic");
    t.crosscaps = deficit;
  }
  if (n == 0) t.route = "closed";
  else if (s.has_free_boundary()) t.route = "free_boundary";
  else if (s.orientable == Orientability::nonorientable) t.route = "mobius";
  else if (t.genus >= 1) t.route = "genus";
  else if (n == 2) t.route = "annulus";
  else if (n >= 3) t.route = "planar";
  else throw LaminationError(id + " is a disk");
  return t;
}

// Blocks on the core fiber: spirals from the tails below accumulate on L from
// underneath, those from above on H from overhead; a product block sits between.
struct CoreLamination {
  AnnulusLamination mu;
  std::optional<Rational> h, l;
};

CoreLamination core_lamination(const std::string& name, bool above, bool below) {
  std::vector<FiberElement> fibers;
  std::vector<HoloMap> pieces;
  std::vector<Rational> cuts{kMinusOne};
  CoreLamination out;
  if (below) {
    fibers.push_back({kMinusOne, frac(-1, 3), name + ".below"});
    pieces.push_back(standard_push());
    cuts.push_back(frac(-1, 3));
    out.l = frac(-1, 3);
  }
  fibers.push_back({frac(-1, 5), frac(1, 5), name + ".product"});
  pieces.push_back(HoloMap());
  if (above) {
    fibers.push_back({frac(1, 3), kOne, name + ".above"});
    pieces.push_back(invert(standard_push()));
    cuts.push_back(frac(1, 3));
    out.h = frac(1, 3);
  }
  cuts.push_back(kOne);
  out.mu = make_annulus_lamination(std::move(fibers), simplify(concatenate(pieces, Partition{cuts})));
  return out;
}

struct CyclePlan {
  CoreAnnulus core;
  std::vector<BoundaryTrainTrack> tracks;
  HoloMap f1, f2;
  bool above = false, below = false;
  std::optional<AnnulusWitness> witness;  // absent for a pure product
  std::optional<Rational> split;          // Möbius: where the doubled holonomy was halved
  CoreLamination lamination;
  std::map<SectorId, HoloMap, IdLess> disk_holonomy;
};

CyclePlan plan_cycle(const BranchedSurfaceComplex& b, const CollarLamination& lam, const Cycle& cycle, const CoreAnnulus& core) {
  CyclePlan p;
  p.core = core;
  p.tracks = core_tracks(b, cycle, core);  // throws for an unknown core
  for (const auto& t : p.tracks)
    for (const auto& tail : t.tails) {
      if (tail.side == TailSide::unknown)
        throw LaminationError("tail at " + tail.edge + " of the cycle through " + cycle.front() + " has an unknown side");
      (tail.side == TailSide::above ? p.above : p.below) = true;
    }
  std::vector<HoloMap> exits, enters;
  for (const auto& st : core.steps) {
    exits.push_back(position_factor(b, lam, b.entry(st.exit), st.exit));
    enters.push_back(position_factor(b, lam, b.entry(st.enter), st.enter));
  }
  p.f1 = product(exits);
  p.f2 = product(enters);
  const std::string name = "core:" + cycle.front();
  if (core.kind == CoreKind::mobius) {
    p.split = interior_fixed_point(p.f1);
    auto [lo, hi] = halves_at(p.f1, p.split);
    if (p.above || p.below) p.witness = annulus_extension(lo, hi, AnnulusCase::c2a);
  } else if (p.above && p.below) {
    p.witness = oriented_extension(p.f1, p.f2, AnnulusCase::c2a, false);
  } else if (p.above || p.below) {
    p.witness = oriented_extension(p.f1, p.f2, AnnulusCase::c1c, p.below);
  }
  p.lamination = core_lamination(name, p.above, p.below);
  for (const auto& d : cycle) p.disk_holonomy.emplace(d, circuit_holonomy(b, lam, d, 0, 0));
  return p;
}

json lam_or_null(const std::optional<Rational>& r) { return r ? json(rat(*r)) : json(nullptr); }


json cycle_step_json(const Cycle& cycle, const CyclePlan& p) {
  json tails = json::array();
  for (const auto& t : p.tracks)
    for (const auto& tail : t.tails)
      tails.push_back({{"edge", tail.edge}, {"side", to_string(tail.side)}, {"pattern", to_string(tail.pattern)}});
  json edges = json::array();
  for (const auto& st : p.core.steps) edges.push_back(st.edge);
  json disks = json::object();
  for (const auto& [d, f] : p.disk_holonomy) disks[d] = to_json(f);
  json j = {{"kind", p.core.kind == CoreKind::mobius ? "MOBIUS_EXTEND" : "CYCLE_EXTEND"},
            {"cycle", cycle},
            {"edges", edges},
            {"tails", tails},
            {"f1", to_json(p.f1)},
            {"f2", to_json(p.f2)},
            {"case", p.witness ? to_string(p.witness->kind) : "product"},
            {"witness", p.witness ? witness_json(*p.witness) : json(nullptr)},
            {"core_lamination", to_json(p.lamination.mu)},
            {"H", lam_or_null(p.lamination.h)},
            {"L", lam_or_null(p.lamination.l)},
            {"disk_holonomies", disks}};
  if (p.core.kind == CoreKind::mobius) j["split"] = lam_or_null(p.split);
  return j;
}

json nondisk_step_json(const BranchedSurfaceComplex& b, const CollarLamination& lam, const SectorId& id,
                       const LaminationOptions&) {
  const auto& s = b.sectors.at(id);
  const Topology t = nondisk_topology(id, s);
  const auto fs = boundary_holonomies(b, lam, id);
  json boundary = json::array();
  for (const auto& f : fs) boundary.push_back(to_json(f));
  json j = {{"kind", "NONDISK_EXTEND"}, {"sector", id},        {"route", t.route},
            {"genus", t.genus},         {"crosscaps", t.crosscaps}, {"boundary", boundary}};
  j["factors"] = nullptr;
  j["witness"] = nullptr;
  j["split"] = nullptr;
  if (t.route == "genus") {
    json factors = json::array();
    for (const auto& [a, c] : genus_factorization(product(fs), t.genus)) factors.push_back({to_json(a), to_json(c)});
    j["factors"] = factors;
  } else if (t.route == "annulus" || t.route == "planar") {
    const std::size_t split = s.circuits.size() - 1;
    const auto c = classify_sides(b, id, split);
    const HoloMap f1 = product({fs.begin(), fs.begin() + static_cast<std::ptrdiff_t>(split)});
    j["witness"] = witness_json(oriented_extension(f1, fs.back(), c.kind, c.swapped));
  } else if (t.route == "mobius") {
    // Nonorientable leaves are never compact planar, so the halves are glued as in case 1a.
    const HoloMap f = product(fs);
    const auto z = interior_fixed_point(f);
    auto [lo, hi] = halves_at(f, z);
    j["split"] = lam_or_null(z);
    j["witness"] = witness_json(annulus_extension(lo, hi, AnnulusCase::c1a));
  }
  return j;
}

std::vector<std::size_t> chain_order(const ChainCycleDecomposition& d, bool reverse) {
  // A chain must come before the chain holding its target.
  const std::size_t n = d.chains.size();
  std::vector<std::vector<std::size_t>> waits(n);  // waits[y] = chains that must precede y
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y)
      if (x != y && std::count(d.chains[y].disks.begin(), d.chains[y].disks.end(), d.chains[x].target))
        waits[y].push_back(x);
  std::vector<bool> done(n, false);
  std::vector<std::size_t> out;
  while (out.size() < n) {
    std::optional<std::size_t> pick;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t y = reverse ? n - 1 - k : k;
      if (done[y]) continue;
      if (std::all_of(waits[y].begin(), waits[y].end(), [&](std::size_t x) { return done[x]; })) {
        pick = y;
        break;
      }
    }
    if (!pick) throw LaminationError("chains depend on each other cyclically");
    done[*pick] = true;
    out.push_back(*pick);
  }
  return out;
}

json ledger_json(const BranchedSurfaceComplex& b) {
  json flags = json::object();
  for (const auto& [name, value] : b.assertions.items()) flags[name] = to_string(value);
  json essential = json::array();
  for (const auto& [id, s] : b.sectors)
    if (!s.is_disk()) essential.push_back(id);
  return {{"go_flags", flags},
          {"guarantees",
           {"no_generalized_sink_disk", "no_disk_of_contact", "no_disk_leaf_in_cycle_cores",
            "essential_curve_in_nondisk_branches"}},
          {"essential_curve_asserted", essential},
          {"verdict", kVerdict}};
}

json final_tracks_json(const PipelineState& st) {
  json out = json::array();
  for (const auto& [id, t] : st.collar.tracks) {
    auto pit = st.punctures.find(id);
    const std::size_t start = pit == st.punctures.end() ? 0 : pit->second.position;
    json circles = json::array();
    for (std::size_t c = 0; c < t.circles.size(); ++c)
      circles.push_back(to_json(single_block(id + "^B", circuit_holonomy(st.b, st.lam, id, c, c == 0 ? start : 0))));
    out.push_back({{"track", id}, {"start", start}, {"circles", circles}});
  }
  return out;
}

json step_with_id(json step, std::size_t id, std::optional<std::size_t> parent) {
  step["id"] = id;
  step["parent"] = parent ? json(*parent) : json(nullptr);
  return step;
}

}  // namespace

// ---------------------------------------------------------------------------
// Lamination JSON

json to_json(const AnnulusLamination& mu) {
  json fibers = json::array();
  for (const auto& f : mu.fibers) fibers.push_back(fiber_json(f));
  json spirals = json::array();
  for (const auto& s : mu.spirals)
    spirals.push_back({{"element", s.element}, {"from", rat(s.from)}, {"to", rat(s.to)}, {"direction", s.direction}});
  return {{"fibers", fibers}, {"return_map", to_json(mu.return_map)}, {"spirals", spirals}};
}

AnnulusLamination lamination_from_json(const json& j) {
  AnnulusLamination mu;
  const auto& fibers = at(j, "fibers");
  if (!fibers.is_array()) throw Reject("fibers must be a list");
  for (const auto& f : fibers) mu.fibers.push_back(read_fiber(f));
  mu.return_map = read_map(at(j, "return_map"));
  const auto& spirals = at(j, "spirals");
  if (!spirals.is_array()) throw Reject("spirals must be a list");
  for (const auto& s : spirals)
    mu.spirals.push_back({get<std::size_t>(s, "element"), read_rat(at(s, "from")), read_rat(at(s, "to")), get<int>(s, "direction")});
  return mu;
}

// ---------------------------------------------------------------------------
// Pipeline

PipelineState start_pipeline(const BranchedSurfaceComplex& b, const LaminationOptions& options) {
  PipelineState st;
  st.b = b;
  st.options = options;
  st.collar = build_collar(b);
  st.lam = options.gluing ? *options.gluing : collar_lamination(st.collar);
  if (auto gaps = fiber_scan(st.collar, st.lam); !gaps.empty()) throw LaminationError("collar fiber not met: " + gaps.front());
  json pieces = json::array();
  for (const auto& p : st.collar.pieces) pieces.push_back(p.id);
  json gluings = json::array();
  for (const auto& [e, g] : st.lam.gluings) gluings.push_back(gluing_json(e, g));
  json arcs = json::array();
  for (const auto& a : st.collar.locus) arcs.push_back({{"edges", a.edges}, {"closed", a.closed}});
  st.steps.push_back(step_with_id({{"kind", "COLLAR"}, {"pieces", pieces}, {"locus", arcs}, {"gluings", gluings}}, 0, std::nullopt));
  return st;
}

void run_chain_pipeline(PipelineState& st, const ChainCycleDecomposition& d) {
  for (const std::size_t ci : chain_order(d, st.options.reverse_independent_chains)) {
    const auto& chain = d.chains[ci];
    std::vector<std::pair<SectorId, std::size_t>> reglued;
    for (const auto& disk : chain.disks) {
      const EdgeId& e = d.out_edge.at(disk);
      const Reglue r = plan_reglue(st.b, st.lam, disk, e);
      if (st.finalized.count(r.touched))
        throw LaminationError("chain order violation: regluing " + disk + " along " + e + " changes the settled boundary of " +
                              r.touched);
      auto& track = st.collar.tracks.at(disk);
      track.puncture = TrackSite{r.puncture.circuit, r.puncture.position};
      const AnnulusLamination before = single_block(disk + "^B", r.before);
      auto [after, cut] = reglue_to_circles(before, track);
      apply_reglue(st.lam, e, r);
      st.finalized.insert(disk);
      st.punctures[disk] = r.puncture;
      const std::size_t id = st.steps.size();
      st.steps.push_back(step_with_id({{"kind", "CHAIN_REGLUE"},
                                       {"disk", disk},
                                       {"edge", e},
                                       {"puncture", {{"circle", r.puncture.circuit}, {"position", r.puncture.position}}},
                                       {"slot", r.slot_a ? "source_a" : "source_b"},
                                       {"modified_pieces", {"e:" + e}},
                                       {"touches", {disk, r.touched}},
                                       {"before", to_json(before)},
                                       {"after", to_json(after)},
                                       {"cut", to_json(cut.cut)},
                                       {"new_glue", to_json(r.new_glue)}},
                                      id, 0));
      reglued.emplace_back(disk, id);
    }
    for (const auto& [disk, parent] : reglued) {
      const HoloMap f = circuit_holonomy(st.b, st.lam, disk, st.punctures.at(disk).circuit, st.punctures.at(disk).position);
      if (!same_function(f, HoloMap())) throw LaminationError("boundary of " + disk + " did not close up");
      st.steps.push_back(step_with_id({{"kind", "PRODUCT_EXTEND"}, {"disk", disk}}, st.steps.size(), parent));
    }
  }
}

void run_nondisk_pipeline(PipelineState& st) {
  for (const auto& [id, s] : st.b.sectors) {
    if (s.is_disk()) continue;
    st.steps.push_back(step_with_id(nondisk_step_json(st.b, st.lam, id, st.options), st.steps.size(), 0));
    st.finalized.insert(id);
  }
}

void run_cycle_pipeline(PipelineState& st, const Cycle& cycle, const CoreAnnulus& core) {
  const CyclePlan p = plan_cycle(st.b, st.lam, cycle, core);
  if (p.witness) {
    if (auto bad = annulus_witness_problems(*p.witness, st.options.epsilon, st.options.samples); !bad.empty())
      throw LaminationError("cycle through " + cycle.front() + ": " + bad.front());
  }
  for (const auto& spiral : p.lamination.mu.spirals) {
    const bool toward_l = p.lamination.l && spiral.to == *p.lamination.l && spiral.direction > 0;
    const bool toward_h = p.lamination.h && spiral.from == *p.lamination.h && spiral.direction < 0;
    if (!toward_l && !toward_h) throw LaminationError("incoherent spiral directions on the core of " + cycle.front());
  }
  st.steps.push_back(step_with_id(cycle_step_json(cycle, p), st.steps.size(), 0));
  st.finalized.insert(cycle.begin(), cycle.end());
}

LaminationCertificate build_lamination_certificate(const BranchedSurfaceComplex& input, const LaminationOptions& options) {
  require_valid(input);
  const BranchedSurfaceComplex b = collapse_confirmed_bubbles(input);
  if (auto sinks = find_sink_disks(b); !sinks.empty())
    throw CertificateError("sink disk present", {sinks.begin(), sinks.end()});
  std::vector<std::string> missing;
  for (const auto& [id, s] : b.sectors)
    if (!s.is_disk() && !s.essential_curve) missing.push_back(id);
  if (!missing.empty()) throw CertificateError("essential_curve not asserted for non-disk branches", missing);

  ChainCycleDecomposition d;
  try {
    d = decompose_chains_cycles(b);
  } catch (const DecompositionError& e) {
    throw CertificateError(e.what(), {});
  }
  PipelineState st = start_pipeline(b, options);
  run_chain_pipeline(st, d);
  run_nondisk_pipeline(st);
  for (const auto& c : d.cycles) run_cycle_pipeline(st, c, cycle_core(b, c, d.out_edge));

  json doc = {{"format", kFormat},
              {"complex", serialize_complex(b)},
              {"epsilon", rat(options.epsilon)},
              {"samples", options.samples},
              {"options", {{"reverse_independent_chains", options.reverse_independent_chains}}},
              {"ledger", ledger_json(b)},
              {"steps", st.steps},
              {"final_tracks", final_tracks_json(st)}};
  return {std::move(doc)};
}

// ---------------------------------------------------------------------------
// Checker

namespace {

struct Replay {
  BranchedSurfaceComplex b;
  CollarComplex collar;
  CollarLamination lam;
  Rational eps;
  int samples = 0;
  std::set<SectorId, IdLess> finalized;
  std::map<SectorId, Occurrence, IdLess> punctures;
  std::map<SectorId, int, IdLess> covered;
  std::map<std::size_t, SectorId> reglue_step;
  std::set<SectorId, IdLess> extended;

  void require(bool ok, const std::string& what) const {
    if (!ok) throw Reject(what);
  }

  void same(const HoloMap& recorded, const HoloMap& expected, const std::string& what) const {
    require(recorded.is_exact() && expected.is_exact() && same_function(recorded, expected), what + " does not match");
  }

  void cover(const SectorId& s) {
    require(b.sectors.count(s) > 0, "unknown branch " + s);
    require(++covered[s] == 1, s + " is extended twice");
  }

  void collar_step(const json& step) {
    collar = build_collar(b);
    auto bad = collar_problems(b, collar);
    require(bad.empty(), bad.empty() ? "" : "collar: " + bad.front());
    std::vector<std::string> ids;
    for (const auto& p : collar.pieces) ids.push_back(p.id);
    require(get<std::vector<std::string>>(step, "pieces") == ids, "collar pieces do not match the complex");
    json arcs = json::array();
    for (const auto& a : collar.locus) arcs.push_back({{"edges", a.edges}, {"closed", a.closed}});
    require(at(step, "locus") == arcs, "collar locus does not match the complex");
    const auto& gl = at(step, "gluings");
    require(gl.is_array(), "gluings must be a list");
    for (const auto& gj : gl) {
      const auto e = get<std::string>(gj, "edge");
      require(b.edges.count(e) > 0, "gluing for unknown edge " + e);
      EdgeGluing g = read_gluing(gj);
      require(g.block_a.label == e + ".a" && g.image_a.label == e + ".a" && g.block_b.label == e + ".b" &&
                  g.image_b.label == e + ".b",
              "block labels of " + e + " break the naming convention");
      for (const auto* blk : {&g.block_a, &g.block_b})
        require(blk->lo == kMinusOne && blk->hi == kOne, "source block of " + e + " is not the whole fiber");
      require(lam.gluings.emplace(e, std::move(g)).second, "edge " + e + " glued twice");
    }
    require(lam.gluings.size() == b.edges.size(), "not every edge is glued");
    auto gaps = fiber_scan(collar, lam);
    require(gaps.empty(), gaps.empty() ? "" : "collar fiber not met: " + gaps.front());
  }

  void reglue_step_check(const json& step, std::size_t id) {
    const auto disk = get<std::string>(step, "disk");
    const auto e = get<std::string>(step, "edge");
    require(b.sectors.count(disk) && b.sectors.at(disk).is_disk(), disk + " is not a disk");
    require(b.edges.count(e) > 0, "unknown edge " + e);
    cover(disk);
    const Reglue r = plan_reglue(b, lam, disk, e);
    require(get<std::size_t>(at(step, "puncture"), "circle") == r.puncture.circuit &&
                get<std::size_t>(at(step, "puncture"), "position") == r.puncture.position,
            "puncture is not " + disk + "'s sheet on " + e);
    require(get<std::string>(step, "slot") == (r.slot_a ? "source_a" : "source_b"), "slot does not match");
    require(at(step, "modified_pieces") == json::array({"e:" + e}), "modified pieces do not match");
    require(at(step, "touches") == json::array({disk, r.touched}), "touched branches do not match");
    require(!finalized.count(r.touched), "chain order violation: " + r.touched + " is already settled");

    auto track = collar.tracks.at(disk);
    track.puncture = TrackSite{r.puncture.circuit, r.puncture.position};
    require(fiber_points(track, *track.puncture) == 1, "puncture fiber meets the track more than once");

    const AnnulusLamination before = lamination_from_json(at(step, "before"));
    const AnnulusLamination after = lamination_from_json(at(step, "after"));
    for (const auto* mu : {&before, &after}) {
      auto bad = lamination_problems(*mu);
      require(bad.empty(), bad.empty() ? "" : bad.front());
    }
    require(before.fibers == std::vector<FiberElement>{{kMinusOne, kOne, disk + "^B"}}, "fiber set before does not match");
    same(before.return_map, r.before, "return map before the reglue");
    require(after.fibers == before.fibers, "regluing changed the fiber set");
    require(same_function(after.return_map, HoloMap()) && after.all_circles(), "return map after the reglue is not the identity");
    const HoloMap cut = read_exact(at(step, "cut"), "cut");
    same(cut, before.return_map, "cut record");
    require(same_lamination(unreglue(after, CutRecord{*track.puncture, cut}), before), "cut record does not undo the reglue");
    same(read_exact(at(step, "new_glue"), "new_glue"), r.new_glue, "new gluing");

    apply_reglue(lam, e, r);
    require(same_function(circuit_holonomy(b, lam, disk, r.puncture.circuit, r.puncture.position), HoloMap()),
            "new gluing does not close up the boundary of " + disk);
    finalized.insert(disk);
    punctures[disk] = r.puncture;
    reglue_step[id] = disk;
  }

  void product_step(const json& step) {
    const auto disk = get<std::string>(step, "disk");
    const auto parent = at(step, "parent");
    require(parent.is_number_unsigned() && reglue_step.count(parent.get<std::size_t>()) &&
                reglue_step.at(parent.get<std::size_t>()) == disk,
            "product extension of " + disk + " does not hang below its reglue");
    require(extended.insert(disk).second, disk + " extended twice");
    const auto& p = punctures.at(disk);
    require(same_function(circuit_holonomy(b, lam, disk, p.circuit, p.position), HoloMap()),
            "boundary of " + disk + " is no longer all circles");
  }

  void witness_check(const json& wj, const AnnulusWitness& expected, const std::string& where) {
    const AnnulusWitness w = read_witness(wj);
    require(w.kind == expected.kind && w.swapped == expected.swapped, where + ": case does not match");
    same(w.f1, expected.f1, where + ": f1");
    same(w.f2, expected.f2, where + ": f2");
    auto bad = annulus_witness_problems(w, eps, samples);
    require(bad.empty(), bad.empty() ? "" : where + ": " + bad.front());
  }

  void nondisk_step(const json& step) {
    const auto id = get<std::string>(step, "sector");
    require(b.sectors.count(id) && !b.sectors.at(id).is_disk(), id + " is not a non-disk branch");
    cover(id);
    const auto& s = b.sectors.at(id);
    require(s.essential_curve, "essential_curve not asserted for " + id);
    const Topology t = nondisk_topology(id, s);
    require(get<std::string>(step, "route") == t.route, "route of " + id + " does not match its topology");
    require(get<int>(step, "genus") == t.genus && get<int>(step, "crosscaps") == t.crosscaps, "genus of " + id);
    const auto fs = boundary_holonomies(b, lam, id);
    const auto& bj = at(step, "boundary");
    require(bj.is_array() && bj.size() == fs.size(), "boundary holonomies of " + id);
    for (std::size_t i = 0; i < fs.size(); ++i) same(read_map(bj[i]), fs[i], "boundary holonomy " + std::to_string(i));
    const bool has_factors = !at(step, "factors").is_null();
    const bool has_witness = !at(step, "witness").is_null();
    const bool has_split = !at(step, "split").is_null();
    if (t.route == "genus") {
      require(!has_witness && !has_split, "genus route carries only factors");
      const auto& fj = at(step, "factors");
      require(fj.is_array() && fj.size() == static_cast<std::size_t>(t.genus), "need one commutator per handle");
      std::vector<HoloMap> comms;
      for (const auto& pair : fj) {
        require(pair.is_array() && pair.size() == 2, "factor must be a pair");
        comms.push_back(commutator(read_map(pair[0]), read_map(pair[1])));
      }
      // [a1,b1] ∘ ... ∘ [ag,bg]: the last commutator acts first.
      std::reverse(comms.begin(), comms.end());
      const Rational r = max_residual(lazy_product(comms), product(fs), sample_points(samples), eps);
      require(r <= eps, "commutator product misses the boundary holonomy by " + format_rational(r));
    } else if (t.route == "annulus" || t.route == "planar") {
      require(!has_factors && !has_split && has_witness, "annulus route carries one witness");
      const std::size_t split = s.circuits.size() - 1;
      const auto c = classify_sides(b, id, split);
      const HoloMap f1 = product({fs.begin(), fs.begin() + static_cast<std::ptrdiff_t>(split)});
      AnnulusWitness expected;
      expected.kind = c.kind;
      expected.swapped = c.swapped;
      expected.f1 = c.swapped ? fs.back() : f1;
      expected.f2 = c.swapped ? f1 : fs.back();
      witness_check(at(step, "witness"), expected, id);
    } else if (t.route == "mobius") {
      require(!has_factors && has_witness, "nonorientable route carries one witness");
      const HoloMap f = product(fs);
      std::optional<Rational> z;
      if (has_split) {
        z = read_rat(at(step, "split"));
        require(*z > kMinusOne && *z < kOne && apply_exact(f, *z) == *z, "split point is not an interior fixed point");
      } else {
        require(!interior_fixed_point(f), "holonomy has an interior fixed point but was not split");
      }
      auto [lo, hi] = halves_at(f, z);
      AnnulusWitness expected;
      expected.kind = AnnulusCase::c1a;
      expected.f1 = lo;
      expected.f2 = hi;
      witness_check(at(step, "witness"), expected, id);
    } else {
      require(!has_factors && !has_witness && !has_split, t.route + " route carries no witness");
    }
    finalized.insert(id);
  }

  void cycle_step(const json& step, bool mobius) {
    const auto cycle = get<std::vector<std::string>>(step, "cycle");
    const auto edges = get<std::vector<std::string>>(step, "edges");
    require(!cycle.empty() && cycle.size() == edges.size(), "cycle and edge lists differ in length");
    std::map<SectorId, EdgeId, IdLess> out_edge;
    for (std::size_t i = 0; i < cycle.size(); ++i) {
      require(b.sectors.count(cycle[i]) && b.sectors.at(cycle[i]).is_disk(), cycle[i] + " is not a disk");
      require(b.edges.count(edges[i]) > 0, "unknown edge " + edges[i]);
      cover(cycle[i]);
      out_edge[cycle[i]] = edges[i];
    }
    CoreAnnulus core;
    try {
      core = cycle_core(b, cycle, out_edge);
    } catch (const DecompositionError& e) {
      throw Reject(e.what());
    }
    require((core.kind == CoreKind::mobius) == mobius, "core kind does not match the step kind");
    const CyclePlan p = plan_cycle(b, lam, cycle, core);
    const json expected = cycle_step_json(cycle, p);
    require(at(step, "tails") == expected.at("tails"), "tails do not match the core");
    same(read_map(at(step, "f1")), p.f1, "f1");
    same(read_map(at(step, "f2")), p.f2, "f2");
    require(get<std::string>(step, "case") == expected.at("case").get<std::string>(), "case tag does not match the tails");
    if (p.witness) witness_check(at(step, "witness"), *p.witness, "cycle " + cycle.front());
    else require(at(step, "witness").is_null(), "pure product carries no witness");
    if (mobius) {
      const auto& sj = at(step, "split");
      std::optional<Rational> z;
      if (!sj.is_null()) z = read_rat(sj);
      require(z == p.split, "Möbius split point does not match");
    }
    const AnnulusLamination mu = lamination_from_json(at(step, "core_lamination"));
    auto bad = lamination_problems(mu);
    require(bad.empty(), bad.empty() ? "" : "core lamination: " + bad.front());
    require(same_lamination(mu, p.lamination.mu), "core lamination does not match the tails");
    require(at(step, "H") == expected.at("H") && at(step, "L") == expected.at("L"), "limit circles do not match");
    for (const auto& s : mu.spirals) {
      const bool to_l = p.lamination.l && s.to == *p.lamination.l && s.direction > 0;
      const bool to_h = p.lamination.h && s.from == *p.lamination.h && s.direction < 0;
      require(to_l || to_h, "spiral does not accumulate on H or L");
    }
    const auto& dj = at(step, "disk_holonomies");
    require(dj.is_object() && dj.size() == p.disk_holonomy.size(), "disk holonomies do not match");
    for (const auto& [d, f] : p.disk_holonomy) same(read_map(at(dj, d.c_str())), f, "holonomy of " + d);
    finalized.insert(cycle.begin(), cycle.end());
  }

  void final_check(const json& doc) {
    for (const auto& [id, s] : b.sectors) require(covered[id] == 1, id + " is never extended");
    for (const auto& [id, p] : punctures) require(extended.count(id) > 0, id + " has no product extension");
    const auto& ft = at(doc, "final_tracks");
    require(ft.is_array() && ft.size() == collar.tracks.size(), "final tracks do not match the collar");
    std::size_t k = 0;
    for (const auto& [id, t] : collar.tracks) {
      const auto& entry = ft[k++];
      require(get<std::string>(entry, "track") == id, "final track order");
      auto pit = punctures.find(id);
      const std::size_t start = pit == punctures.end() ? 0 : pit->second.position;
      require(get<std::size_t>(entry, "start") == start, "final track " + id + " is read at the wrong position");
      const auto& circles = at(entry, "circles");
      require(circles.is_array() && circles.size() == t.circles.size(), "final track " + id + " circles");
      for (std::size_t c = 0; c < t.circles.size(); ++c) {
        const AnnulusLamination mu = lamination_from_json(circles[c]);
        auto bad = lamination_problems(mu);
        require(bad.empty(), bad.empty() ? "" : "final track " + id + ": " + bad.front());
        const auto expect = single_block(id + "^B", circuit_holonomy(b, lam, id, c, c == 0 ? start : 0));
        require(same_lamination(mu, expect), "final lamination of " + id + " does not match");
        if (pit != punctures.end()) require(mu.all_circles(), "chain disk " + id + " does not end with circles");
      }
    }
  }
};

void replay(const json& doc, std::vector<std::string>& problems) {
  if (get<std::string>(doc, "format") != kFormat) throw Reject("unknown certificate format");
  Replay r;
  try {
    r.b = parse_complex(get<std::string>(doc, "complex"));
  } catch (const ParseError& e) {
    throw Reject(std::string("embedded complex: ") + e.what());
  }
  if (!validate(r.b).empty()) throw Reject("embedded complex is invalid");
  if (!(collapse_confirmed_bubbles(r.b) == r.b)) throw Reject("embedded complex still holds a confirmed bubble");
  if (!find_sink_disks(r.b).empty()) throw Reject("embedded complex has a sink disk");
  r.eps = read_rat(at(doc, "epsilon"));
  r.samples = get<int>(doc, "samples");
  if (r.eps <= 0 || r.eps > Rational(1, 1000)) throw Reject("epsilon out of range");
  if (r.samples < 8 || r.samples > 4096) throw Reject("sample count out of range");
  if (at(doc, "ledger") != ledger_json(r.b)) throw Reject("ledger does not match the complex");

  const auto& steps = at(doc, "steps");
  if (!steps.is_array() || steps.empty()) throw Reject("no steps");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& step = steps[i];
    std::string kind = "?";
    try {
      kind = get<std::string>(step, "kind");
      r.require(get<std::size_t>(step, "id") == i, "step ids must count up from 0");
      const auto& parent = at(step, "parent");
      if (i == 0) {
        r.require(kind == "COLLAR" && parent.is_null(), "the first step must be the collar root");
        r.collar_step(step);
        continue;
      }
      if (kind != "PRODUCT_EXTEND") r.require(parent == json(0), "step must hang below the collar");
      if (kind == "CHAIN_REGLUE") r.reglue_step_check(step, i);
      else if (kind == "PRODUCT_EXTEND") r.product_step(step);
      else if (kind == "NONDISK_EXTEND") r.nondisk_step(step);
      else if (kind == "CYCLE_EXTEND") r.cycle_step(step, false);
      else if (kind == "MOBIUS_EXTEND") r.cycle_step(step, true);
      else throw Reject("unknown step kind " + kind);
    } catch (const std::exception& e) {
      problems.push_back("step " + std::to_string(i) + " (" + kind + "): " + e.what());
      return;  // later steps depend on this one's gluings
    }
  }
  r.final_check(doc);
}

}  // namespace

CheckReport check_lamination_certificate(const json& doc, bool rebuild) {
  CheckReport out;
  try {
    replay(doc, out.problems);
  } catch (const std::exception& e) {
    out.problems.push_back(e.what());
  }
  if (!out.ok() || !rebuild) return out;
  try {
    LaminationOptions opts;
    opts.epsilon = read_rat(at(doc, "epsilon"));
    opts.samples = get<int>(doc, "samples");
    opts.reverse_independent_chains = get<bool>(at(doc, "options"), "reverse_independent_chains");
    CollarLamination lam;
    for (const auto& gj : at(doc.at("steps")[0], "gluings")) lam.gluings.emplace(get<std::string>(gj, "edge"), read_gluing(gj));
    opts.gluing = lam;
    const json fresh = build_lamination_certificate(parse_complex(get<std::string>(doc, "complex")), opts).document;
    if (fresh != doc) {
      const json patch = json::diff(fresh, doc);
      out.problems.push_back("differs from a fresh build at " + patch.at(0).at("path").get<std::string>());
    }
  } catch (const std::exception& e) {
    out.problems.push_back(std::string("rebuild failed: ") + e.what());
  }
  return out;
}

std::map<std::string, std::vector<AnnulusLamination>> final_track_laminations(const json& doc) {
  std::map<std::string, std::vector<AnnulusLamination>> out;
  for (const auto& entry : at(doc, "final_tracks")) {
    auto& v = out[get<std::string>(entry, "track")];
    for (const auto& c : at(entry, "circles")) v.push_back(lamination_from_json(c));
  }
  return out;
}

}  // namespace lamina
