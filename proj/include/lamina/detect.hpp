#pragma once

// Detectors and the two deletion-style rewrites (removable disks, bubbles).
// Every entry point requires a valid complex and throws InvalidComplex otherwise.

#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "lamina/complex.hpp"
#include "lamina/rewrite.hpp"

namespace lamina {

using SectorSet = std::set<SectorId, IdLess>;

/// Unordered pair stored with the lower id first.
using SectorPair = std::pair<SectorId, SectorId>;
SectorPair make_pair_sorted(const SectorId& a, const SectorId& b);

SectorSet find_sink_disks(const BranchedSurfaceComplex& b);
SectorSet find_removable_disks(const BranchedSurfaceComplex& b);

/// Throws RewriteError when `s` is not removable or the splice would close up a sphere.
BranchedSurfaceComplex delete_removable(const BranchedSurfaceComplex& b, const SectorId& s);

struct EfficiencyStep {
  BranchedSurfaceComplex complex;
  std::optional<SectorId> deleted;  // the disk removed to reach this complex; empty for the input
};

/// B1 = input; each later entry removes the lowest-id removable disk of its predecessor.
std::vector<EfficiencyStep> make_efficient(const BranchedSurfaceComplex& b);

std::set<SectorPair> find_bubble_candidates(const BranchedSurfaceComplex& b);

/// Identifies the two disks of a candidate pair. Refused unless `confirmed_trivial`.
BranchedSurfaceComplex collapse_bubble(const BranchedSurfaceComplex& b, const SectorPair& pair,
                                       bool confirmed_trivial);

/// Collapses every confirmed bubble that is still a candidate, lowest pair first.
BranchedSurfaceComplex collapse_confirmed_bubbles(const BranchedSurfaceComplex& b);

}  // namespace lamina
