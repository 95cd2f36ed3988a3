#pragma once

// Random annulus laminations and disk tracks for the regluing engine.

#include <random>

#include "holo_gen.hpp"
#include "lamina/lamination.hpp"

namespace lam_gen {

using namespace lamina;

// Fixed points of f split I into blocks; each block becomes a Cantor block
// and each interior fixed point an isolated point, with some dropped at random.
inline AnnulusLamination random_lamination(std::mt19937_64& rng) {
  const std::size_t k = rng() % 4;
  HoloMap f = k == 0 && rng() % 3 == 0 ? HoloMap() : holo_gen::random_with_fixed_points(rng, k);
  std::vector<Rational> fixed{Rational(-1)};
  for (const auto& m : moved_intervals(f)) {
    if (m.lo != fixed.back()) fixed.push_back(m.lo);
    fixed.push_back(m.hi);
  }
  if (fixed.back() != 1) fixed.push_back(1);
  std::vector<FiberElement> fibers;
  for (std::size_t i = 0; i + 1 < fixed.size(); ++i) {
    if (rng() % 4 == 0) continue;
    const bool shrink_lo = i > 0 && rng() % 2;  // start at a fixed point, never inside a moved interval
    if (shrink_lo && (fibers.empty() || fibers.back().hi < fixed[i]))
      fibers.push_back({fixed[i], fixed[i], "p" + std::to_string(i)});
    if (!fibers.empty() && !(fibers.back().hi < fixed[i])) continue;
    fibers.push_back({fixed[i], fixed[i + 1], "c" + std::to_string(i)});
  }
  return make_annulus_lamination(fibers, f);
}

// A disk's track with `n` positions, a random mix of slots, at least one source.
inline BoundaryTrainTrack random_track(std::mt19937_64& rng) {
  BoundaryTrainTrack t;
  t.sector = "D";
  const std::size_t n = 1 + rng() % 5;
  std::vector<TrackPosition> circle;
  for (std::size_t i = 0; i < n; ++i) {
    const Slot s = rng() % 2 ? Slot::sink : Slot::source_through;
    circle.push_back({"e" + std::to_string(i), s, Side::left});
  }
  const std::size_t p = rng() % n;
  circle[p].slot = Slot::source_merge;
  t.circles.push_back(circle);
  t.puncture = TrackSite{0, p};
  return t;
}

}  // namespace lam_gen
