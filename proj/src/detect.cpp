#include "lamina/detect.hpp"

#include <algorithm>

namespace lamina {

namespace {

std::vector<EdgeId> edge_sequence(const Circuit& c) {
  std::vector<EdgeId> out;
  for (const auto& en : c) out.push_back(en.edge.value_or(""));
  return out;
}

bool same_cycle_upto_dihedral(std::vector<EdgeId> a, const std::vector<EdgeId>& b) {
  if (a.size() != b.size()) return false;
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t r = 0; r < a.size(); ++r) {
      if (a == b) return true;
      std::rotate(a.begin(), a.begin() + 1, a.end());
    }
    std::reverse(a.begin(), a.end());
  }
  return false;
}

bool all_sources_without_free(const Circuit& c) {
  return std::all_of(c.begin(), c.end(), [](const BoundaryEntry& en) { return !en.is_free() && is_source(en.slot); });
}

}  // namespace

SectorPair make_pair_sorted(const SectorId& a, const SectorId& b) {
  return id_less(b, a) ? SectorPair{b, a} : SectorPair{a, b};
}

SectorSet find_sink_disks(const BranchedSurfaceComplex& b) {
  require_valid(b);
  SectorSet out;
  for (const auto& [sid, s] : b.sectors) {
    if (!s.is_disk()) continue;
    const auto& c = s.circuits.front();
    if (std::all_of(c.begin(), c.end(), [](const BoundaryEntry& en) { return !en.is_free() && en.slot == Slot::sink; }))
      out.insert(sid);
  }
  return out;
}

SectorSet find_removable_disks(const BranchedSurfaceComplex& b) {
  require_valid(b);
  SectorSet out;
  for (const auto& [sid, s] : b.sectors) {
    if (!s.is_disk()) continue;
    const auto& c = s.circuits.front();
    if (!all_sources_without_free(c)) continue;
    std::set<EdgeId, IdLess> seen;
    bool repeated = false;
    for (const auto& en : c) repeated |= !seen.insert(*en.edge).second;
    if (!repeated) out.insert(sid);
  }
  return out;
}

BranchedSurfaceComplex delete_removable(const BranchedSurfaceComplex& b, const SectorId& s) {
  if (!find_removable_disks(b).count(s)) throw RewriteError("sector " + s + " is not a removable disk");
  BranchedSurfaceComplex out = b;
  excise_sector(out, s);
  require_valid_after_rewrite(out, "deleting " + s);
  return out;
}

std::vector<EfficiencyStep> make_efficient(const BranchedSurfaceComplex& b) {
  std::vector<EfficiencyStep> steps{{b, std::nullopt}};
  for (;;) {
    const auto& cur = steps.back().complex;
    bool progressed = false;
    for (const auto& s : find_removable_disks(cur)) {
      try {
        auto next = delete_removable(cur, s);
        steps.push_back({std::move(next), s});
        progressed = true;
        break;
      } catch (const RewriteError&) {
        // deleting this disk would close a sphere; try the next one
      }
    }
    if (!progressed) return steps;
  }
}

std::set<SectorPair> find_bubble_candidates(const BranchedSurfaceComplex& b) {
  require_valid(b);
  std::vector<SectorId> disks;
  for (const auto& [sid, s] : b.sectors)
    if (s.is_disk() && all_sources_without_free(s.circuits.front())) disks.push_back(sid);

  std::set<SectorPair> out;
  for (std::size_t i = 0; i < disks.size(); ++i) {
    const auto seq_i = edge_sequence(b.sectors.at(disks[i]).circuits.front());
    for (std::size_t j = i + 1; j < disks.size(); ++j) {
      const auto seq_j = edge_sequence(b.sectors.at(disks[j]).circuits.front());
      if (!same_cycle_upto_dihedral(seq_i, seq_j)) continue;
      bool both_sources = true;
      for (const auto& e : seq_i) {
        const auto& edge = b.edges.at(e);
        const SectorPair srcs = make_pair_sorted(edge.source_a.sector, edge.source_b.sector);
        both_sources &= srcs == make_pair_sorted(disks[i], disks[j]);
      }
      if (both_sources) out.insert(make_pair_sorted(disks[i], disks[j]));
    }
  }
  return out;
}

BranchedSurfaceComplex collapse_bubble(const BranchedSurfaceComplex& b, const SectorPair& pair,
                                       bool confirmed_trivial) {
  const SectorPair p = make_pair_sorted(pair.first, pair.second);
  if (!find_bubble_candidates(b).count(p))
    throw RewriteError("(" + p.first + ", " + p.second + ") is not a bubble candidate");
  if (!confirmed_trivial)
    throw RewriteError("bubble (" + p.first + ", " + p.second + ") is not confirmed trivial");
  // Removing one disk splices the other onto each shared edge's sink sheet.
  BranchedSurfaceComplex out = b;
  excise_sector(out, p.second);
  require_valid_after_rewrite(out, "collapsing bubble (" + p.first + ", " + p.second + ")");
  return out;
}

BranchedSurfaceComplex collapse_confirmed_bubbles(const BranchedSurfaceComplex& b) {
  BranchedSurfaceComplex cur = b;
  for (;;) {
    const auto cands = find_bubble_candidates(cur);
    auto it = std::find_if(cands.begin(), cands.end(),
                           [&](const SectorPair& p) { return cur.is_confirmed_bubble(p.first, p.second); });
    if (it == cands.end()) return cur;
    cur = collapse_bubble(cur, *it, true);
  }
}

}  // namespace lamina
