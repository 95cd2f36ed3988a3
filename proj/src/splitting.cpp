#include "lamina/splitting.hpp"

#include <algorithm>
#include <sstream>

#include "lamina/rewrite.hpp"

namespace lamina {

namespace {

void require_known(const BranchedSurfaceComplex& b, const SafeRegion& region) {
  for (const auto& s : region)
    if (!b.sectors.count(s)) throw SplitError("unknown sector " + s + " in the safe region");
}

bool interior_arc(const LocusEdge& e, const SafeRegion& r) {
  return r.count(e.sink.sector) && (r.count(e.source_a.sector) || r.count(e.source_b.sector));
}

bool points_inward(const BranchedSurfaceComplex& b, const BoundaryEntry& entry, const SafeRegion& r) {
  if (entry.is_free()) return true;
  if (!interior_arc(b.edges.at(*entry.edge), r)) return true;
  return entry.slot == Slot::sink;
}

bool absorbs(const LocusEdge& e, const SafeRegion& r) {
  return r.count(e.sink.sector) && (!r.count(e.source_a.sector) || !r.count(e.source_b.sector));
}

}  // namespace

SafetyReport is_safe_region(const BranchedSurfaceComplex& b, const SafeRegion& region) {
  require_known(b, region);
  SafetyReport out;
  for (const auto& id : region) {
    const Sector& s = b.sectors.at(id);
    bool all_inward = true;
    for (const auto& c : s.circuits)
      for (const auto& entry : c) all_inward = all_inward && points_inward(b, entry, region);
    if (!all_inward) continue;
    if (s.is_disk() || !s.essential_curve) out.violating.push_back(id);
  }
  out.safe = out.violating.empty();
  return out;
}

SafeRegion expand_safe_region(const BranchedSurfaceComplex& b, const SafeRegion& region, bool reverse_order) {
  if (auto r = is_safe_region(b, region); !r.safe) throw SplitError("not a safe region: " + r.violating.front() + " points all inward");
  std::vector<const std::pair<const EdgeId, LocusEdge>*> order;
  for (const auto& kv : b.edges) order.push_back(&kv);
  if (reverse_order) std::reverse(order.begin(), order.end());
  SafeRegion out = region;
  for (;;) {
    auto it = std::find_if(order.begin(), order.end(), [&](const auto* kv) { return absorbs(kv->second, out); });
    if (it == order.end()) break;
    const LocusEdge& e = (*it)->second;
    out.insert(e.source_a.sector);
    out.insert(e.source_b.sector);
  }
  // Absorbed sheets always leave through the absorbing arc, so this cannot fail.
  if (auto r = is_safe_region(b, out); !r.safe) throw std::logic_error("closure lost safety at " + r.violating.front());
  return out;
}

LaminarVerdict certify_laminar(const BranchedSurfaceComplex& b, const SafeRegion& region) {
  LaminarVerdict v;
  v.closure = expand_safe_region(b, region);
  for (const auto& [id, s] : b.sectors)
    if (!v.closure.count(id)) v.uncovered.push_back(id);
  v.missing_assertions = b.assertions.missing();
  for (const auto& p : find_bubble_candidates(b))
    if (!b.is_confirmed_bubble(p.first, p.second)) v.unconfirmed_bubbles.insert(p);
  v.laminar_conditional = v.uncovered.empty() && v.missing_assertions.empty() && v.unconfirmed_bubbles.empty();
  return v;
}

std::string to_string(Necessity n) { return n == Necessity::necessary ? "necessary" : "unnecessary"; }

Necessity necessity(const BranchedSurfaceComplex& b, const SafeRegion& region, const SplitMove& m) {
  auto it = b.edges.find(m.edge);
  if (it == b.edges.end()) throw SplitError("site mismatch: no edge " + m.edge);
  return region.count(it->second.sink.sector) ? Necessity::unnecessary : Necessity::necessary;
}

SplitResult apply_split_move(const BranchedSurfaceComplex& b, const SafeRegion& region, const SplitMove& m) {
  if (auto r = is_safe_region(b, region); !r.safe) throw SplitError("not a safe region: " + r.violating.front() + " points all inward");
  if (m.kind != 1 && m.kind != 2) throw SplitError("site mismatch: splitting kind must be 1 or 2");
  if (necessity(b, region, m) == Necessity::unnecessary)
    throw SplitError("unnecessary splitting: middle sheet " + b.edges.at(m.edge).sink.sector + " of " + m.edge +
                     " is already safe");
  const LocusEdge& e = b.edges.at(m.edge);
  bool s_is_a;
  if (m.orientation) {
    if (*m.orientation != "a" && *m.orientation != "b") throw SplitError("site mismatch: orientation must be a or b");
    s_is_a = *m.orientation == "a";
  } else if (region.count(e.source_b.sector)) {
    s_is_a = true;
  } else if (region.count(e.source_a.sector)) {
    s_is_a = false;
  } else {
    throw SplitError("site mismatch: neither source sheet of " + m.edge + " is in the safe region");
  }
  const Occurrence s = s_is_a ? e.source_a : e.source_b;
  const Occurrence p = s_is_a ? e.source_b : e.source_a;
  const Occurrence mid = e.sink;
  if (!region.count(p.sector))
    throw SplitError("site mismatch: " + p.sector + " at " + m.edge + " is not in the safe region");

  SplitResult out{b, region, s.sector};
  auto slot = [&](const Occurrence& o) -> Slot& {
    return out.complex.sectors.at(o.sector).circuits.at(o.circuit).at(o.position).slot;
  };
  const Slot s_tag = b.entry(s).slot;
  const Slot p_tag = b.entry(p).slot;
  if (m.kind == 1) {
    // Cusp turned to point into P: S and M now feed the region sheet.
    slot(p) = Slot::sink;
    slot(mid) = p_tag;
  } else {
    // S continues smoothly into P; the middle sheet now feeds S.
    slot(s) = Slot::sink;
    slot(mid) = s_tag;
  }
  out.complex.reindex();
  require_valid_after_rewrite(out.complex, "split");

  SafeRegion grown = region;
  grown.insert(s.sector);
  if (m.kind == 1) {
    // S now leaves through an interior arc of the region.
    if (!is_safe_region(out.complex, grown).safe) throw std::logic_error("slide left the region unsafe");
    out.region = grown;
  } else if (is_safe_region(out.complex, grown).safe) {
    out.region = grown;
  }
  if (!is_safe_region(out.complex, out.region).safe) throw std::logic_error("split left the region unsafe");
  return out;
}

std::vector<SplitMove> parse_split_script(const std::string& text) {
  std::vector<SplitMove> out;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream words(line);
    std::vector<std::string> w;
    for (std::string t; words >> t;) w.push_back(t);
    if (w.empty()) continue;
    const std::string where = "script line " + std::to_string(n) + ": ";
    if (w.size() < 4 || w.size() > 5 || w[0] != "split" || w[2] != "@")
      throw SplitError(where + "expected 'split <kind> @ <edge-id> [orientation]'");
    SplitMove m;
    if (w[1] == "1") m.kind = 1;
    else if (w[1] == "2") m.kind = 2;
    else throw SplitError(where + "kind must be 1 or 2");
    m.edge = w[3];
    if (w.size() == 5) {
      if (w[4] != "a" && w[4] != "b") throw SplitError(where + "orientation must be a or b");
      m.orientation = w[4];
    }
    out.push_back(std::move(m));
  }
  return out;
}

SplitTrace run_split_script(const BranchedSurfaceComplex& b, const SafeRegion& region, const std::vector<SplitMove>& moves) {
  SplitTrace t;
  t.entries.push_back({b, expand_safe_region(b, region)});
  for (std::size_t i = 0; i < moves.size(); ++i) {
    const auto& cur = t.entries.back();
    try {
      auto r = apply_split_move(cur.complex, cur.region, moves[i]);
      t.entries.push_back({r.complex, expand_safe_region(r.complex, r.region)});
    } catch (const std::exception& e) {
      t.failed_move = i + 1;
      t.error = e.what();
      break;
    }
  }
  return t;
}

}  // namespace lamina
